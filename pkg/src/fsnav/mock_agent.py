"""Scripted stand-in for a coding agent, for offline end-to-end runs.

    python -m fsnav.mock_agent --workspace W --prompt-file P --script S

Script file (JSON)::

    {"rules": [
       {"match": ["Riot Games"],
        "actions": [
          {"shell": "grep -l Riot corpus/*.txt", "run": true},
          {"read": "corpus/d03.txt", "start": 0, "end": 400},
          {"script": "def count(xs):\\n    return len(xs)\\n"},
          {"message": "d03 names the founder"},
          {"answer": "Brandon Beck"}]}],
     "default": [{"answer": "unknown"}]}

The first rule whose ``match`` substrings all occur in the prompt is played.
Shell actions are executed in the workspace when ``run`` is true (``output``
can be given instead). Every action is printed as one trajectory event line;
``answer`` prints a final message ``Answer: ...``. Timestamps are logical steps
and token usage is a 4-characters-per-token estimate, so output is
deterministic.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys
import tempfile
from pathlib import Path


def _tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


def _python_shims(bin_dir: Path) -> None:
    # Prompts spell the retriever as ``python retriever.py``; make that resolve.
    for name in ("python", "python3"):
        link = bin_dir / name
        if not link.exists():
            os.symlink(sys.executable, link)


def run_shell(cmd: str, workspace: Path, bin_dir: Path, timeout: float = 120.0) -> str:
    env = {**os.environ, "PATH": f"{bin_dir}{os.pathsep}{os.environ.get('PATH', '')}"}
    proc = subprocess.run(
        ["bash", "-c", cmd], cwd=workspace, capture_output=True, text=True, env=env, timeout=timeout
    )
    return proc.stdout + proc.stderr


def play(prompt: str, script: dict, workspace: Path) -> list[dict]:
    actions = script.get("default", [{"answer": ""}])
    for rule in script.get("rules", []):
        if all(s in prompt for s in rule.get("match", [])):
            actions = rule["actions"]
            break
    context = _tokens(prompt)
    events: list[dict] = []
    with tempfile.TemporaryDirectory(prefix="fsnav-agent-bin-") as tmp:
        bin_dir = Path(tmp)
        _python_shims(bin_dir)
        for step, action in enumerate(actions):
            if "shell" in action:
                cmd = action["shell"]
                output = action.get("output")
                if output is None and action.get("run", True):
                    output = run_shell(cmd, workspace, bin_dir)
                ev = {"kind": "ShellCommand", "payload": cmd}
                if output is not None:
                    ev["output"] = output
                produced = cmd
            elif "read" in action:
                path = workspace / action["read"]
                data = path.read_text(encoding="utf-8")
                start = int(action.get("start", 0))
                end = min(int(action.get("end", len(data))), len(data))
                ev = {"kind": "FileRead", "payload": action["read"], "span": [start, end], "output": data[start:end]}
                produced = action["read"]
            elif "script" in action:
                ev = {"kind": "ScriptBlock", "payload": action["script"]}
                produced = action["script"]
            elif "message" in action:
                ev = {"kind": "ModelMessage", "payload": action["message"]}
                produced = action["message"]
            elif "answer" in action:
                ev = {"kind": "ModelMessage", "payload": f"Answer: {action['answer']}", "meta": {"final": True}}
                produced = ev["payload"]
            else:
                raise ValueError(f"unknown mock agent action {action!r}")
            ev["index"] = step
            ev["timestamp"] = float(step)
            ev["usage"] = {"prompt_tokens": context, "completion_tokens": _tokens(produced)}
            # Later turns see earlier outputs.
            context += _tokens(produced) + _tokens(ev.get("output") or "")
            events.append(ev)
    return events


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="fsnav.mock_agent")
    p.add_argument("--workspace", required=True, type=Path)
    p.add_argument("--prompt-file", type=Path, help="prompt file (default: read stdin)")
    p.add_argument("--script", required=True, type=Path)
    args = p.parse_args(argv)
    prompt = args.prompt_file.read_text(encoding="utf-8") if args.prompt_file else sys.stdin.read()
    script = json.loads(args.script.read_text(encoding="utf-8"))
    for ev in play(prompt, script, args.workspace):
        sys.stdout.write(json.dumps(ev, ensure_ascii=False, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
