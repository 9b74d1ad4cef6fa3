"""Coding-agent runner: an external agent process navigating the corpus on disk.

Each question gets a fresh workspace containing only a symlink to the corpus
(folder or file) and, when a retriever is configured, the ``retriever.py``
launcher. The rendered prompt is written to a file outside the workspace and
also fed on stdin; the agent's stdout transcript becomes the trajectory.
"""

from __future__ import annotations

import os
import shutil
import subprocess
from collections.abc import Sequence
from pathlib import Path

from ..datasets import Question
from ..errors import AgentSpawnError, AgentTimeout, AnswerExtractionFailure, ConfigError
from ..retriever.cli import write_shim
from .base import RunEnv, RunResult, question_vars
from .prompts import render_prompt, template_id
from .transcripts import extract_answer, final_message, parse_transcript

METHOD = "coding_agent"
DEFAULT_TIMEOUT_S = 1800.0


def prepare_workspace(env: RunEnv, q: Question, retriever_model: str | None) -> tuple[Path, str]:
    """Create the per-question workspace; returns it and the context location shown to the agent."""
    ws = env.run_dir / "workspaces" / env.file_stem(q.id)
    if ws.exists():
        shutil.rmtree(ws)
    ws.mkdir(parents=True)
    target = env.store.corpus_location(q).resolve()
    link = ws / target.name
    os.symlink(target, link, target_is_directory=target.is_dir())
    if retriever_model is not None:
        if env.data_root is None:
            raise ConfigError("a retriever workspace needs the data directory")
        write_shim(ws, data_dir=env.data_root.path, env=env.extra_env)
    return ws, link.name


def render_agent_prompt(env: RunEnv, q: Question, context_location: str, retriever_model: str | None) -> str:
    family = "coding_agent" if retriever_model is None else "coding_agent_retriever"
    variables = {**question_vars(q), "context_location": context_location}
    if retriever_model is not None:
        variables["embedding_model"] = retriever_model
    return render_prompt(template_id(family, env.dataset.value), variables)


def expand_argv(template: Sequence[str], workspace: Path, prompt_file: Path) -> list[str]:
    return [a.replace("{workspace}", str(workspace)).replace("{prompt_file}", str(prompt_file)) for a in template]


def run_coding_agent(
    q: Question,
    env: RunEnv,
    agent_command: Sequence[str],
    retriever_model: str | None = None,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> RunResult:
    """Run one question through the agent. ``retriever_model`` is ``None``, ``"BM25"`` or an embedding model."""
    if not agent_command:
        raise ConfigError("agent_command is empty")
    elapsed = env.start_timer()
    ws, location = prepare_workspace(env, q, retriever_model)
    prompt = render_agent_prompt(env, q, location, retriever_model)
    prompt_file = env.run_dir / "prompts" / f"{env.file_stem(q.id)}.txt"
    prompt_file.parent.mkdir(parents=True, exist_ok=True)
    prompt_file.write_text(prompt, encoding="utf-8")

    argv = expand_argv(agent_command, ws, prompt_file)
    proc_env = {**os.environ, **env.extra_env}
    try:
        proc = subprocess.Popen(
            argv,
            cwd=ws,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            errors="replace",
            env=proc_env,
        )
    except OSError as e:
        raise AgentSpawnError(f"{q.id}: cannot start {argv[0]!r}: {e}") from e
    try:
        stdout, stderr = proc.communicate(prompt, timeout=timeout_s)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.communicate()
        raise AgentTimeout(f"{q.id}: agent exceeded {timeout_s:.0f}s") from None

    logs = env.run_dir / "agent_logs"
    logs.mkdir(parents=True, exist_ok=True)
    (logs / f"{env.file_stem(q.id)}.stderr").write_text(stderr, encoding="utf-8")

    recorder = env.recorder(q.id)
    events = parse_transcript(stdout)
    for ev in events:
        recorder.event(ev.kind, ev.payload, usage=ev.usage, output=ev.output, span=ev.span, **ev.meta)
    flags = [] if proc.returncode == 0 else [f"agent_exit={proc.returncode}"]
    message = final_message(events)
    answer = extract_answer(message)
    if not answer:
        raise AnswerExtractionFailure(f"{q.id}: agent produced no final message (exit {proc.returncode})")
    return env.result(q, answer, recorder, elapsed(), flags)
