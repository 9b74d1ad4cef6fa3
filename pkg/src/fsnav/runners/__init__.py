"""Method runners: coding agent, ReAct, RAG and full context."""

from .base import RunEnv, RunResult
from .coding_agent import run_coding_agent
from .full_context import run_full_context
from .prompts import TEMPLATES, render_prompt
from .rag import run_rag
from .react import run_react
from .windows import WindowPlan, plan_windows

__all__ = [
    "TEMPLATES",
    "RunEnv",
    "RunResult",
    "WindowPlan",
    "plan_windows",
    "render_prompt",
    "run_coding_agent",
    "run_full_context",
    "run_rag",
    "run_react",
]
