"""ReAct baseline: a tool-calling loop over ``retriever`` and ``get_document``."""

from __future__ import annotations

from ..datasets import Question
from ..errors import FsnavError, RunError, UnknownTool
from ..gateway.types import ChatRequest, Message, ToolCall, ToolSchema
from ..retriever.cli import format_hits
from ..retriever.index import Retriever, open_retriever
from ..trace import EventKind, TrajectoryRecorder
from .base import RunEnv, RunResult, dump_json, question_vars
from .prompts import render_prompt, template_id

METHOD = "react"
DEFAULT_MAX_STEPS = 30
DEFAULT_TOOL_K = 5

RETRIEVER_TOOL = ToolSchema(
    name="retriever",
    description="Search the collection and return the top-k most relevant documents with their ids and scores.",
    parameters={
        "type": "object",
        "properties": {
            "query": {"type": "string", "description": "search query"},
            "k": {"type": "integer", "description": "number of results", "minimum": 1},
        },
        "required": ["query"],
    },
)
GET_DOCUMENT_TOOL = ToolSchema(
    name="get_document",
    description="Return the full text of a document by id.",
    parameters={
        "type": "object",
        "properties": {"doc_id": {"type": "string", "description": "document id from a retriever result"}},
        "required": ["doc_id"],
    },
)
TOOLS = [RETRIEVER_TOOL, GET_DOCUMENT_TOOL]
# Names models commonly emit for the same tools.
ALIASES = {"retrieve": "retriever", "search": "retriever", "get_doc": "get_document", "fetch_document": "get_document"}


class Toolbox:
    def __init__(self, retriever: Retriever, default_k: int = DEFAULT_TOOL_K):
        self.retriever = retriever
        self.default_k = default_k

    def execute(self, call: ToolCall) -> str:
        """Run one tool call; raises UnknownTool, returns error text for bad arguments."""
        name = ALIASES.get(call.name, call.name)
        args = call.arguments
        if name == "retriever":
            query = args.get("query")
            if not isinstance(query, str) or not query.strip():
                return "Error: retriever needs a non-empty string argument 'query'."
            try:
                k = int(args.get("k", args.get("top_k", self.default_k)))
            except (TypeError, ValueError):
                return "Error: 'k' must be an integer."
            hits = self.retriever.search(query, max(1, k))
            return format_hits(hits) if hits else "No results."
        if name == "get_document":
            doc_id = args.get("doc_id", args.get("id", args.get("docid")))
            if doc_id is None:
                return "Error: get_document needs the argument 'doc_id'."
            try:
                return self.retriever.get_document(str(doc_id))
            except KeyError:
                return f"Error: no document with id {doc_id!r}."
        raise UnknownTool(call.name)


def _log_tool(recorder: TrajectoryRecorder, call: ToolCall, output: str, error: str | None = None) -> None:
    recorder.event(
        EventKind.TOOL_CALL,
        dump_json({"name": call.name, "arguments": call.arguments}),
        output=output,
        tool=call.name,
        error=error,
    )


def run_react(
    q: Question,
    env: RunEnv,
    retriever_model: str,
    max_steps: int = DEFAULT_MAX_STEPS,
    retriever: Retriever | None = None,
) -> RunResult:
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    elapsed = env.start_timer()
    if retriever is None:
        retriever = open_retriever(
            env.store,
            retriever_model,
            embedder=env.gateway,
            datapoint_id=q.datapoint_id if env.dataset.is_long_doc else None,
        )
    tools = Toolbox(retriever)
    recorder = env.recorder(q.id)
    prompt = render_prompt(template_id(METHOD, env.dataset.value), question_vars(q))
    messages = [Message("user", prompt)]
    answer = ""
    flags: list[str] = []
    try:
        for step in range(max_steps):
            req = ChatRequest(env.model, list(messages), tool_schemas=TOOLS, tags={**env.tags(q, METHOD), "step": str(step)})
            resp = env.gateway.chat(req, recorder)
            answer = resp.text
            if not resp.tool_calls:
                break
            messages.append(Message("assistant", resp.text, tuple(resp.tool_calls)))
            for call in resp.tool_calls:
                try:
                    output = tools.execute(call)
                    _log_tool(recorder, call, output)
                except UnknownTool as e:
                    output = f"Error: unknown tool {call.name!r}. Available tools: retriever, get_document."
                    _log_tool(recorder, call, output, error=str(e))
                messages.append(Message("tool", output, tool_call_id=call.id))
        else:
            flags.append("truncated")
    except FsnavError as e:
        raise RunError(q.id, e) from e
    return env.result(q, answer, recorder, elapsed(), flags)
