"""Full-context baseline: the whole context in the prompt, windowed when too long."""

from __future__ import annotations

import random

from ..corpus import with_header
from ..datasets import Question
from ..errors import FsnavError, RunError
from ..gateway.types import ChatRequest, Message
from .base import RunEnv, RunResult, format_document, question_vars
from .prompts import OMITTED_CONTEXT, aggregation_prompt, render_prompt, template_id
from .windows import DEFAULT_OVERLAP, DEFAULT_WINDOW, plan_windows

METHOD = "full_context"
DEFAULT_CORPUS_BUDGET = 100_000


def sample_corpus_context(env: RunEnv, q: Question, budget_tokens: int = DEFAULT_CORPUS_BUDGET) -> str:
    """Documents in seeded random order, added while the running total stays within budget."""
    reader = env.store.reader()
    ids = reader.ids()
    random.Random(f"{env.seed}:{q.id}").shuffle(ids)
    parts: list[str] = []
    used = 0
    sep = env.tokenizer.count("\n\n")
    for doc_id in ids:
        block = format_document(doc_id, reader.get(doc_id))
        cost = env.tokenizer.count(block) + (sep if parts else 0)
        if used + cost > budget_tokens:
            break
        parts.append(block)
        used += cost
    return "\n\n".join(parts)


def window_texts(env: RunEnv, context: str, header: str | None, window: int, overlap: int) -> list[str]:
    """Window bodies of ``context``; a description header is repeated at the top of each window."""
    tok = env.tokenizer
    body = context
    if header:
        prefix = with_header("", header)
        if context.startswith(prefix):
            body = context[len(prefix) :]
    if tok.count(context) <= window:
        return [context]
    plan = plan_windows(tok.count(body), window, overlap)
    return [with_header(tok.slice(body, s, e), header) for s, e in plan.spans]


def run_full_context(
    q: Question,
    env: RunEnv,
    context: str | None = None,
    *,
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
    budget_tokens: int = DEFAULT_CORPUS_BUDGET,
) -> RunResult:
    elapsed = env.start_timer()
    recorder = env.recorder(q.id)
    header = None
    if context is None:
        if env.dataset.is_long_doc:
            assert q.datapoint_id is not None
            context = env.store.context(q.datapoint_id)
            header = env.store.header(q.datapoint_id)
        else:
            context = sample_corpus_context(env, q, budget_tokens)
    key = template_id(METHOD, env.dataset.value)
    qvars = question_vars(q)
    tags = env.tags(q, METHOD)

    def ask(prompt: str, turn_tags: dict[str, str]) -> str:
        req = ChatRequest(env.model, [Message("user", prompt)], tags=turn_tags)
        return env.gateway.chat(req, recorder).text

    try:
        windows = window_texts(env, context, header, window, overlap)
        answers = [
            ask(render_prompt(key, {**qvars, "Context": w}), {**tags, "window": str(i)}) for i, w in enumerate(windows)
        ]
        if len(answers) == 1:
            answer = answers[0]
        else:
            task = render_prompt(key, {**qvars, "Context": OMITTED_CONTEXT})
            answer = ask(aggregation_prompt(answers, task), {**tags, "window": "aggregate"})
    except FsnavError as e:
        raise RunError(q.id, e) from e
    flags = [f"windows={len(windows)}"] if len(windows) > 1 else []
    return env.result(q, answer, recorder, elapsed(), flags)
