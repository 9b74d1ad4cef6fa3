"""Agent trajectories: JSON-lines log format, shell-command classification and
behavioural analytics (command usage, native search, strategy metrics, cost).

Trajectory line schema (version 1)::

    {"v": 1, "index": 0, "kind": "ShellCommand", "payload": "rg -n foo corpus/",
     "timestamp": 0.0, "usage": {"prompt_tokens": 10, "completion_tokens": 2},
     "output": "...", "span": [0, 400], "meta": {...}}

``usage``, ``output``, ``span`` and ``meta`` are optional. ``kind`` is one of
ShellCommand, ToolCall, ModelMessage, FileRead, ScriptBlock; other kinds are
kept as ``Other``.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import re
import shlex
import threading
import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AllZero, EmptyInput, SchemaError
from .gateway.types import PriceTable, TokenUsage, cost
from .text import DEFAULT_TOKENIZER, Tokenizer

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class EventKind(str, enum.Enum):
    SHELL_COMMAND = "ShellCommand"
    TOOL_CALL = "ToolCall"
    MODEL_MESSAGE = "ModelMessage"
    FILE_READ = "FileRead"
    SCRIPT_BLOCK = "ScriptBlock"
    OTHER = "Other"


@dataclass
class TrajectoryEvent:
    index: int
    kind: EventKind
    payload: str
    timestamp: float = 0.0
    usage: TokenUsage | None = None
    output: str | None = None
    span: tuple[int, int] | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d: dict = {"v": SCHEMA_VERSION, "index": self.index, "kind": self.kind.value, "payload": self.payload,
                   "timestamp": self.timestamp}
        if self.usage is not None:
            d["usage"] = self.usage.to_dict()
        if self.output is not None:
            d["output"] = self.output
        if self.span is not None:
            d["span"] = list(self.span)
        if self.meta:
            d["meta"] = self.meta
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def _event_from_dict(d: dict, line: int) -> TrajectoryEvent:
    if not isinstance(d, dict):
        raise SchemaError(line, "not an object")
    try:
        index = d["index"]
        raw_kind = d["kind"]
        payload = d["payload"]
    except KeyError as e:
        raise SchemaError(line, f"missing field {e.args[0]!r}") from None
    if not isinstance(index, int) or index < 0:
        raise SchemaError(line, "index must be a non-negative integer")
    if not isinstance(payload, str):
        raise SchemaError(line, "payload must be a string")
    meta = dict(d.get("meta") or {})
    try:
        kind = EventKind(raw_kind)
    except ValueError:
        logger.warning("line %d: unknown event kind %r kept as Other", line, raw_kind)
        kind = EventKind.OTHER
        meta["raw_kind"] = raw_kind
    if kind is EventKind.SHELL_COMMAND and not payload.strip():
        raise SchemaError(line, "ShellCommand payload is empty")
    span = d.get("span")
    return TrajectoryEvent(
        index=index,
        kind=kind,
        payload=payload,
        timestamp=float(d.get("timestamp", 0.0)),
        usage=TokenUsage.from_dict(d["usage"]) if d.get("usage") is not None else None,
        output=d.get("output"),
        span=(int(span[0]), int(span[1])) if span else None,
        meta=meta,
    )


def parse_trajectory(path: str | os.PathLike) -> list[TrajectoryEvent]:
    events: list[TrajectoryEvent] = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(line_no, str(e)) from None
            ev = _event_from_dict(obj, line_no)
            if events and ev.index <= events[-1].index:
                raise SchemaError(line_no, f"index {ev.index} does not increase")
            events.append(ev)
    return events


def total_usage(events: Iterable[TrajectoryEvent]) -> TokenUsage:
    usage = TokenUsage()
    for ev in events:
        if ev.usage is not None:
            usage = usage + ev.usage
    return usage


class LogicalClock:
    """Deterministic clock for offline runs: every reading advances by one tick."""

    def __init__(self, tick: float = 1.0):
        self.t = -tick
        self.tick = tick
        self._lock = threading.Lock()

    def __call__(self) -> float:
        with self._lock:
            self.t += self.tick
            return self.t


class TrajectoryRecorder:
    """Append-only writer for one question's trajectory (and raw request log).

    Writes are serialized; each line is flushed as it is produced so partial
    runs remain parseable.
    """

    def __init__(
        self,
        path: str | os.PathLike | None = None,
        request_log: str | os.PathLike | None = None,
        clock: Callable[[], float] | None = None,
    ):
        self.path = Path(path) if path else None
        self.request_log = Path(request_log) if request_log else None
        self.events: list[TrajectoryEvent] = []
        self._lock = threading.Lock()
        if clock is None:
            start = time.monotonic()
            clock = lambda: time.monotonic() - start  # noqa: E731
        self.clock = clock
        for p in (self.path, self.request_log):
            if p is not None:
                p.parent.mkdir(parents=True, exist_ok=True)
                p.write_text("", encoding="utf-8")

    def event(
        self,
        kind: EventKind | str,
        payload: str,
        *,
        usage: TokenUsage | None = None,
        output: str | None = None,
        span: tuple[int, int] | None = None,
        timestamp: float | None = None,
        **meta,
    ) -> TrajectoryEvent:
        kind = EventKind(kind)
        meta = {k: v for k, v in meta.items() if v is not None}
        with self._lock:
            ev = TrajectoryEvent(
                index=len(self.events),
                kind=kind,
                payload=payload,
                timestamp=self.clock() if timestamp is None else timestamp,
                usage=usage,
                output=output,
                span=span,
                meta=meta,
            )
            self.events.append(ev)
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(ev.to_json() + "\n")
        return ev

    def log_request(self, payload: dict, body: dict) -> None:
        if self.request_log is None:
            return
        line = json.dumps({"request": payload, "response": body}, ensure_ascii=False, sort_keys=True)
        with self._lock, open(self.request_log, "a", encoding="utf-8") as f:
            f.write(line + "\n")

    @property
    def usage(self) -> TokenUsage:
        return total_usage(self.events)


# ---------------------------------------------------------------------------
# command classification


class CommandClass(str, enum.Enum):
    RETRIEVER_TOOL = "RetrieverTool"
    SEARCH = "Search"
    EXTRACT = "Extract"
    INDEX = "Index"
    SCRIPT = "Script"
    OTHER = "Other"


# Highest priority first.
PRIORITY = [
    CommandClass.RETRIEVER_TOOL,
    CommandClass.SEARCH,
    CommandClass.EXTRACT,
    CommandClass.INDEX,
    CommandClass.SCRIPT,
    CommandClass.OTHER,
]
_RANK = {c: i for i, c in enumerate(PRIORITY)}

SEARCH_TOOLS = frozenset({"grep", "rg", "ripgrep", "find", "ack", "fgrep", "egrep"})
EXTRACT_TOOLS = frozenset({"sed", "awk", "cut", "head", "tail"})
INDEX_TOOLS = frozenset({"nl", "wc"})
RETRIEVER_MARKERS = frozenset({"retriever.py", "fsnav-retrieve"})
SHELLS = frozenset({"bash", "sh", "zsh", "dash"})
_INTERPRETER = re.compile(r"^(python[0-9.]*|pypy[0-9.]*|node|perl|ruby|Rscript|deno|bun|bash|sh|zsh|dash)$")
WRAPPERS = frozenset({"sudo", "time", "nice", "nohup", "command", "exec", "stdbuf", "timeout", "env", "xargs", "builtin"})
_WRAPPER_ARG_OPTS = {"xargs": {"-I", "-n", "-P", "-L", "-d", "-s", "-E"}, "timeout": {"-s", "-k"}, "nice": {"-n"}, "sudo": {"-u", "-g", "-C", "-h", "-p"}}
_SEPARATORS = frozenset({"|", "||", "&&", ";", "&", "|&", ";;"})
_ASSIGNMENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*=")
_HEREDOC = re.compile(r"<<-?\s*(['\"]?)([A-Za-z_][A-Za-z0-9_]*)\1")


def _strip_heredocs(cmdline: str) -> tuple[str, list[str]]:
    """Drop heredoc bodies from a command; return the remaining text and the bodies."""
    lines = cmdline.split("\n")
    kept: list[str] = []
    bodies: list[str] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        kept.append(line)
        i += 1
        for m in _HEREDOC.finditer(line):
            body = []
            while i < len(lines) and lines[i].strip() != m.group(2):
                body.append(lines[i])
                i += 1
            i += 1  # terminator
            bodies.append("\n".join(body))
    return "\n".join(kept), bodies


def _segments(line: str) -> list[list[str]]:
    try:
        lex = shlex.shlex(line, posix=True, punctuation_chars=True)
        lex.whitespace_split = True
        tokens = list(lex)
    except ValueError:
        tokens = line.replace("&&", " ; ").replace("||", " ; ").replace("|", " ; ").split()
    segs: list[list[str]] = [[]]
    for tok in tokens:
        if tok in _SEPARATORS or (tok and set(tok) <= set("|&;")):
            segs.append([])
        elif tok in ("(", ")", "{", "}", "!", "then", "do", "else", "if", "while", "for"):
            continue
        else:
            segs[-1].append(tok)
    return [s for s in segs if s]


def _strip_prefixes(tokens: list[str]) -> list[str]:
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if _ASSIGNMENT.match(tok):
            i += 1
            continue
        name = os.path.basename(tok)
        if name in WRAPPERS:
            i += 1
            arg_opts = _WRAPPER_ARG_OPTS.get(name, set())
            while i < len(tokens) and (tokens[i].startswith("-") or _ASSIGNMENT.match(tokens[i])):
                i += 2 if tokens[i] in arg_opts else 1
            if name == "timeout" and i < len(tokens) and re.match(r"^\d", tokens[i]):
                i += 1
            continue
        break
    return tokens[i:]


def _classify_segment(tokens: list[str], depth: int) -> CommandClass:
    tokens = _strip_prefixes(tokens)
    if not tokens:
        return CommandClass.OTHER
    if any(os.path.basename(t) in RETRIEVER_MARKERS for t in tokens):
        return CommandClass.RETRIEVER_TOOL
    name = os.path.basename(tokens[0])
    if name == "fsnav" and len(tokens) > 1 and tokens[1] == "retrieve":
        return CommandClass.RETRIEVER_TOOL
    if name in SHELLS and depth < 4:
        for j, tok in enumerate(tokens[1:], start=1):
            if tok.startswith("-") and "c" in tok[1:] and not tok.startswith("--") and j + 1 < len(tokens):
                return _classify(tokens[j + 1], depth + 1)
    if name in SEARCH_TOOLS or (name == "git" and len(tokens) > 1 and tokens[1] == "grep"):
        return CommandClass.SEARCH
    if name in EXTRACT_TOOLS:
        return CommandClass.EXTRACT
    if name in INDEX_TOOLS:
        return CommandClass.INDEX
    if _INTERPRETER.match(name):
        return CommandClass.SCRIPT
    return CommandClass.OTHER


def _classify(cmdline: str, depth: int) -> CommandClass:
    text, _ = _strip_heredocs(cmdline)
    best = CommandClass.OTHER
    for line in text.split("\n"):
        for seg in _segments(line):
            cls = _classify_segment(seg, depth)
            if _RANK[cls] < _RANK[best]:
                best = cls
    return best


def classify_command(cmdline: str) -> CommandClass:
    """Map a shell command line to one class.

    Pipelines and command lists are split; each segment is classified by its
    program name (after env assignments and wrappers such as ``xargs``) and the
    highest-priority class wins. ``bash -c '...'`` is classified by its inner
    command.
    """
    return _classify(cmdline, 0)


_SCRIPT_SINK = re.compile(r"(python[0-9.]*|pypy[0-9.]*)\b|>\s*\S+\.py\b")


def script_blocks(cmdline: str) -> list[str]:
    """Heredoc bodies that are Python source (fed to an interpreter or written to a .py file)."""
    head, bodies = _strip_heredocs(cmdline)
    return bodies if bodies and _SCRIPT_SINK.search(head) else []


# ---------------------------------------------------------------------------
# analytics

Trajectory = Sequence[TrajectoryEvent]


def shell_classes(trajectory: Trajectory) -> list[CommandClass]:
    return [classify_command(ev.payload) for ev in trajectory if ev.kind is EventKind.SHELL_COMMAND]


def native_search_count(trajectory: Trajectory) -> int:
    return sum(1 for c in shell_classes(trajectory) if c is CommandClass.SEARCH)


def command_counts(trajectory: Trajectory) -> dict[CommandClass, int]:
    counts = {c: 0 for c in CommandClass}
    for c in shell_classes(trajectory):
        counts[c] += 1
    return counts


def command_usage_stats(trajectories: Sequence[Trajectory]) -> dict[CommandClass, float]:
    """Mean number of shell commands per trajectory, per class."""
    if not trajectories:
        raise EmptyInput("no trajectories")
    totals = {c: 0 for c in CommandClass}
    for traj in trajectories:
        for c, n in command_counts(traj).items():
            totals[c] += n
    return {c: totals[c] / len(trajectories) for c in CommandClass}


def percent_diff(base: float, variant: float) -> float:
    """Relative change of ``variant`` over ``base`` in percent."""
    if base == 0:
        raise ZeroDivisionError("baseline mean is zero")
    return (variant - base) / base * 100.0


def format_percent_diff(p: float) -> str:
    return f"{p:+.0f}%" if abs(p) >= 100 else f"{p:+.1f}%"


_DEF = re.compile(r"^[ \t]*(?:async[ \t]+)?def[ \t]+[A-Za-z_]\w*[ \t]*\(", re.MULTILINE)


def count_function_defs(source: str) -> int:
    return len(_DEF.findall(source))


@dataclass(frozen=True)
class StrategyStats:
    search_intensity: float = 0.0
    read_volume: float = 0.0
    code_volume: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {"search_intensity": self.search_intensity, "read_volume": self.read_volume,
                "code_volume": self.code_volume}


def _is_retriever_event(ev: TrajectoryEvent) -> bool:
    if ev.kind is EventKind.TOOL_CALL:
        return True
    return ev.kind is EventKind.SHELL_COMMAND and classify_command(ev.payload) is CommandClass.RETRIEVER_TOOL


def read_tokens(trajectory: Trajectory, tokenizer: Tokenizer = DEFAULT_TOKENIZER, include_retriever: bool = False) -> int:
    total = 0
    for ev in trajectory:
        if ev.kind is EventKind.FILE_READ:
            if ev.output is not None:
                total += tokenizer.count(ev.output)
            elif ev.span is not None:
                total += tokenizer.count_chars(max(0, ev.span[1] - ev.span[0]))
        elif ev.kind is EventKind.SHELL_COMMAND and ev.output:
            cls = classify_command(ev.payload)
            if cls is CommandClass.EXTRACT or (include_retriever and cls is CommandClass.RETRIEVER_TOOL):
                total += tokenizer.count(ev.output)
        elif include_retriever and ev.kind is EventKind.TOOL_CALL and ev.output:
            total += tokenizer.count(ev.output)
    return total


def strategy_stats(
    trajectories: Sequence[Trajectory],
    tokenizer: Tokenizer = DEFAULT_TOKENIZER,
    include_retriever: bool = False,
) -> StrategyStats:
    if not trajectories:
        return StrategyStats()
    n = len(trajectories)
    search = sum(native_search_count(t) for t in trajectories)
    read = sum(read_tokens(t, tokenizer, include_retriever) for t in trajectories)
    code = sum(count_function_defs(ev.payload) for t in trajectories for ev in t if ev.kind is EventKind.SCRIPT_BLOCK)
    return StrategyStats(search / n, read / n, code / n)


def normalize_across_datasets(values: dict[str, float]) -> dict[str, float]:
    if any(v < 0 for v in values.values()):
        raise ValueError("values must be non-negative")
    total = sum(values.values())
    if total <= 0:
        raise AllZero("all values are zero")
    return {k: v / total for k, v in values.items()}


def cost_per_query(run_results: Iterable, prices: PriceTable) -> dict[str, float]:
    """Mean USD per question, grouped by method label."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for r in run_results:
        usd = cost(r.usage, r.model, prices)
        sums[r.method] = sums.get(r.method, 0.0) + usd
        counts[r.method] = counts.get(r.method, 0) + 1
    return {m: sums[m] / counts[m] for m in sums}
