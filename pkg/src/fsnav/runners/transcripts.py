"""Turn an agent's stdout transcript into trajectory events.

Recognised line formats (one JSON object per line, detected per line):

* harness: ``{"kind": "ShellCommand", "payload": ..., "output"?, "usage"?, ...}``
  as written by the bundled mock agent;
* item streams with ``{"type": "item.completed", "item": {"type": "command_execution" | "agent_message" | ...}}``
  and ``{"type": "turn.completed", "usage": {...}}``;
* message streams with ``{"type": "assistant", "message": {"content": [...], "usage": {...}}}``
  and a final ``{"type": "result", "result": ...}``.

Anything else is treated as plain text; if no structured line is seen the whole
stdout becomes the final message.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..gateway.types import TokenUsage
from ..trace import EventKind, script_blocks


@dataclass
class ParsedEvent:
    kind: EventKind
    payload: str
    output: str | None = None
    usage: TokenUsage | None = None
    span: tuple[int, int] | None = None
    timestamp: float | None = None
    meta: dict = field(default_factory=dict)


def _usage(d: dict | None) -> TokenUsage | None:
    if not d:
        return None
    prompt = d.get("prompt_tokens", d.get("input_tokens", 0)) or 0
    completion = d.get("completion_tokens", d.get("output_tokens", 0)) or 0
    return TokenUsage(int(prompt), int(completion))


def _harness(obj: dict) -> list[ParsedEvent]:
    kind = EventKind(obj["kind"]) if obj["kind"] in EventKind._value2member_map_ else EventKind.OTHER
    span = obj.get("span")
    return [
        ParsedEvent(
            kind,
            str(obj.get("payload", "")),
            obj.get("output"),
            _usage(obj.get("usage")),
            (int(span[0]), int(span[1])) if span else None,
            obj.get("timestamp"),
            dict(obj.get("meta") or {}),
        )
    ]


def _item_stream(obj: dict) -> list[ParsedEvent]:
    t = obj.get("type")
    if t == "turn.completed":
        usage = obj.get("usage") or {}
        # Cached input is billed as input; keep prompt_tokens = total input.
        return [ParsedEvent(EventKind.OTHER, "turn.completed", usage=_usage(usage), meta={"raw_kind": t})]
    if t != "item.completed":
        return []
    item = obj.get("item") or {}
    it = item.get("type")
    if it == "command_execution":
        return [ParsedEvent(EventKind.SHELL_COMMAND, item.get("command", ""), item.get("aggregated_output"))]
    if it in ("agent_message", "assistant_message"):
        return [ParsedEvent(EventKind.MODEL_MESSAGE, item.get("text", ""))]
    if it == "file_change":
        return [ParsedEvent(EventKind.OTHER, json.dumps(item.get("changes", []), sort_keys=True), meta={"raw_kind": it})]
    if it == "mcp_tool_call":
        return [ParsedEvent(EventKind.TOOL_CALL, json.dumps(item, sort_keys=True))]
    return []


def _message_stream(obj: dict) -> list[ParsedEvent]:
    t = obj.get("type")
    if t == "result":
        text = obj.get("result")
        return [ParsedEvent(EventKind.MODEL_MESSAGE, text, meta={"final": True})] if isinstance(text, str) else []
    if t != "assistant":
        return []
    msg = obj.get("message") or {}
    events: list[ParsedEvent] = []
    for block in msg.get("content") or []:
        bt = block.get("type")
        if bt == "text":
            events.append(ParsedEvent(EventKind.MODEL_MESSAGE, block.get("text", "")))
        elif bt == "tool_use":
            name = block.get("name", "")
            inp = block.get("input") or {}
            if name == "Bash":
                events.append(ParsedEvent(EventKind.SHELL_COMMAND, inp.get("command", "")))
            elif name == "Read":
                events.append(ParsedEvent(EventKind.FILE_READ, inp.get("file_path", ""), meta={"input": inp}))
            else:
                events.append(ParsedEvent(EventKind.TOOL_CALL, json.dumps({"name": name, "arguments": inp}, sort_keys=True)))
    if events:
        events[0].usage = _usage(msg.get("usage"))
    return events


def parse_transcript(stdout: str) -> list[ParsedEvent]:
    events: list[ParsedEvent] = []
    structured = False
    for line in stdout.splitlines():
        line = line.strip()
        if not line.startswith("{"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        if "kind" in obj and "payload" in obj:
            new = _harness(obj)
        elif str(obj.get("type", "")).startswith(("item.", "turn.", "thread.")):
            new = _item_stream(obj)
        elif obj.get("type") in ("assistant", "result", "user", "system"):
            new = _message_stream(obj)
        else:
            continue
        structured = True
        events.extend(new)
    if not structured and stdout.strip():
        events.append(ParsedEvent(EventKind.MODEL_MESSAGE, stdout.strip(), meta={"plain_text": True}))
    # Python written through shell heredocs counts as script source.
    expanded: list[ParsedEvent] = []
    for ev in events:
        expanded.append(ev)
        if ev.kind is EventKind.SHELL_COMMAND:
            expanded.extend(ParsedEvent(EventKind.SCRIPT_BLOCK, body, meta={"from": "heredoc"}) for body in script_blocks(ev.payload))
    return expanded


_ANSWER = re.compile(r"^\s*(?:\*\*)?(?:final\s+)?answer(?:\*\*)?\s*:\s*(?:\*\*)?\s*(.+?)\s*(?:\*\*)?\s*$", re.IGNORECASE | re.MULTILINE)


def final_message(events: list[ParsedEvent]) -> str:
    finals = [e for e in events if e.kind is EventKind.MODEL_MESSAGE and e.meta.get("final")]
    if finals:
        return finals[-1].payload
    messages = [e for e in events if e.kind is EventKind.MODEL_MESSAGE and e.payload.strip()]
    return messages[-1].payload if messages else ""


def extract_answer(message: str) -> str:
    """The last ``Answer: ...`` line of the final message, else the whole message."""
    found = _ANSWER.findall(message)
    if found:
        return found[-1].strip()
    return message.strip()
