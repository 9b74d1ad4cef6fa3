"""Retrieval-augmented generation baseline: top-k units pasted into one prompt."""

from __future__ import annotations

from ..datasets import Question
from ..errors import FsnavError, RunError
from ..gateway.types import ChatRequest, Message
from ..retriever.index import open_retriever
from ..trace import EventKind
from .base import RunEnv, RunResult, dump_json, format_units, question_vars
from .prompts import render_prompt, template_id

METHOD = "rag"
DEFAULT_K = 10


def run_rag(q: Question, env: RunEnv, retriever_model: str, k: int = DEFAULT_K) -> RunResult:
    """Retrieve ``k`` documents (corpus datasets) or 300-word chunks (long documents) with the question as query."""
    elapsed = env.start_timer()
    retriever = open_retriever(
        env.store, retriever_model, embedder=env.gateway, datapoint_id=q.datapoint_id if env.dataset.is_long_doc else None
    )
    recorder = env.recorder(q.id)
    try:
        hits = retriever.search(q.text, k)
        recorder.event(
            EventKind.TOOL_CALL,
            dump_json({"name": "retriever", "arguments": {"query": q.text, "k": k}}),
            output=dump_json([h.unit_id for h in hits]),
            tool="retriever",
        )
        prompt = render_prompt(template_id("full_context", env.dataset.value), {**question_vars(q), "Context": format_units(hits)})
        resp = env.gateway.chat(ChatRequest(env.model, [Message("user", prompt)], tags=env.tags(q, METHOD)), recorder)
    except FsnavError as e:
        raise RunError(q.id, e) from e
    return env.result(q, resp.text, recorder, elapsed(), [f"units={len(hits)}"])
