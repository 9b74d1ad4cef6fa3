from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from fsnav.datasets import DataRoot, Dataset
from fsnav.errors import AgentSpawnError, AgentTimeout, AnswerExtractionFailure, RunError
from fsnav.gateway import Gateway, MockTransport
from fsnav.pipeline import index_dataset, ingest_dataset
from fsnav.runners.base import RunEnv
from fsnav.runners.coding_agent import run_coding_agent
from fsnav.runners.full_context import run_full_context, sample_corpus_context
from fsnav.runners.prompts import OMITTED_CONTEXT
from fsnav.runners.rag import run_rag
from fsnav.runners.react import run_react
from fsnav.runners.transcripts import extract_answer, final_message, parse_transcript
from fsnav.trace import EventKind, parse_trajectory

N_DOCS = 12


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


@pytest.fixture
def nq_root(tmp_path) -> DataRoot:
    docs = [{"id": f"d{i:02d}", "text": f"Document body number {i} mentions topic{i} and shared words."} for i in range(N_DOCS)]
    docs[3]["text"] = "The lighthouse on Skarv island was painted red in spring, shared words."
    qs = [{"id": "q1", "question": "What color was the lighthouse on Skarv island painted, in shared words?", "answer": "red"}]
    root = DataRoot(tmp_path / "data")
    ingest_dataset(root, Dataset.NQ, write_jsonl(tmp_path / "q.jsonl", qs), corpus=write_jsonl(tmp_path / "c.jsonl", docs))
    index_dataset(root, Dataset.NQ, "BM25")
    return root


BODY = "".join(f"line {i:04d} user{i % 7} said something notable\n" for i in range(100))
HEADER = "Each line is a chat message from a user."


@pytest.fixture
def oolong_root(tmp_path) -> DataRoot:
    ctx = [{"id": "dp1", "text": BODY, "header": HEADER}]
    qs = [{"id": "o1", "question": "Which user said the most?", "answer": "user0", "datapoint_id": "dp1"}]
    root = DataRoot(tmp_path / "data")
    ingest_dataset(root, Dataset.OOLONG_SYNTHETIC, write_jsonl(tmp_path / "q.jsonl", qs), contexts=write_jsonl(tmp_path / "x.jsonl", ctx))
    index_dataset(root, Dataset.OOLONG_SYNTHETIC, "BM25")
    return root


def make_env(root: DataRoot, dataset: Dataset, tmp_path: Path, fixture: dict, method: str = "m") -> tuple[RunEnv, MockTransport]:
    transport = MockTransport(fixture)
    env = RunEnv(root.store(dataset), "mock-llm", tmp_path / "run", method, Gateway(transport, backoff_base_s=0.0),
                 data_root=root, deterministic=True)
    return env, transport


def user_prompts(transport: MockTransport) -> list[str]:
    return [p["messages"][0]["content"] for path, p, _ in transport.calls if path == "chat/completions"]


# -- full context


def test_full_context_corpus_single_call(nq_root, tmp_path):
    env, t = make_env(nq_root, Dataset.NQ, tmp_path, {"chat": [{"reply": {"text": "red"}}]})
    q = env.store.questions()[0]
    r = run_full_context(q, env)
    assert r.answer_text == "red" and r.flags == [] and t.chat_calls == 1
    prompt = user_prompts(t)[0]
    assert all(f"Document d{i:02d}:" in prompt for i in range(N_DOCS))
    assert prompt.startswith("You are a helpful assistant") or "Question:" in prompt or q.text in prompt
    events = parse_trajectory(env.run_dir / r.trajectory_path)
    assert [e.kind for e in events] == [EventKind.MODEL_MESSAGE]
    assert r.usage.total > 0 and r.wall_time == 0.0


def test_corpus_sampling_is_seeded_and_budgeted(nq_root, tmp_path):
    env, _ = make_env(nq_root, Dataset.NQ, tmp_path, {})
    q = env.store.questions()[0]
    full = sample_corpus_context(env, q, 10**6)
    assert full == sample_corpus_context(env, q, 10**6)
    blocks = full.split("\n\n")
    assert len(blocks) == N_DOCS
    tok = env.tokenizer
    first_two = tok.count(blocks[0]) + tok.count("\n\n") + tok.count(blocks[1])
    partial = sample_corpus_context(env, q, first_two)
    assert partial.split("\n\n") == blocks[:2]
    assert sample_corpus_context(env, q, first_two - 1).split("\n\n") == blocks[:1]
    env.seed = 1
    assert sample_corpus_context(env, q, 10**6) != full


def test_full_context_three_windows(oolong_root, tmp_path):
    fixture = {"chat": [{"match": {"tags": {"window": "aggregate"}}, "reply": {"text": "\\boxed{user0}"}},
                        {"reply": {"text": "partial"}}]}
    env, t = make_env(oolong_root, Dataset.OOLONG_SYNTHETIC, tmp_path, fixture)
    q = env.store.questions()[0]
    body_tokens = env.tokenizer.count(BODY)
    window = body_tokens // 2
    overlap = window // 4
    r = run_full_context(q, env, window=window, overlap=overlap)
    prompts = user_prompts(t)
    assert len(prompts) == 4 and t.chat_calls == 4
    assert r.flags == ["windows=3"] and r.answer_text == "\\boxed{user0}"
    for p in prompts[:3]:
        assert HEADER in p
    assert "line 0000" in prompts[0] and "line 0099" in prompts[2]
    agg = prompts[3]
    assert "Window 3 answer:\npartial" in agg and OMITTED_CONTEXT in agg and "line 0050" not in agg


def test_full_context_fits_in_one_window(oolong_root, tmp_path):
    env, t = make_env(oolong_root, Dataset.OOLONG_SYNTHETIC, tmp_path, {"chat": [{"reply": {"text": "x"}}]})
    r = run_full_context(env.store.questions()[0], env)
    assert t.chat_calls == 1 and r.flags == []
    assert user_prompts(t)[0].count(HEADER) == 1


def test_full_context_wraps_endpoint_errors(nq_root, tmp_path):
    env, _ = make_env(nq_root, Dataset.NQ, tmp_path, {"chat": [{"error": {"status": 400}}]})
    with pytest.raises(RunError):
        run_full_context(env.store.questions()[0], env)


# -- RAG


def test_rag_top_k_documents(nq_root, tmp_path):
    env, t = make_env(nq_root, Dataset.NQ, tmp_path, {"chat": [{"match": {"contains": ["Document d03:"]}, "reply": {"text": "red"}}]})
    q = env.store.questions()[0]
    r = run_rag(q, env, "BM25", k=10)
    prompt = user_prompts(t)[0]
    assert r.answer_text == "red" and t.chat_calls == 1
    assert prompt.count("Document d") == 10 and r.flags == ["units=10"]
    assert prompt.index("Document d03:") < prompt.index("Document d", prompt.index("Document d03:") + 1)
    events = parse_trajectory(env.run_dir / r.trajectory_path)
    assert events[0].kind is EventKind.TOOL_CALL and json.loads(events[0].output)[0] == "d03"


def test_rag_long_doc_uses_chunks(oolong_root, tmp_path):
    env, t = make_env(oolong_root, Dataset.OOLONG_SYNTHETIC, tmp_path, {"chat": [{"reply": {"text": "ok"}}]})
    r = run_rag(env.store.questions()[0], env, "BM25", k=10)
    # 8 header words plus 600 body words, in 300-word chunks -> 3 units.
    assert r.flags == ["units=3"] and "Document dp1#0:" in user_prompts(t)[0]


# -- ReAct


def react_fixture(*replies: dict) -> dict:
    return {"chat": [{"replies": list(replies)}]}


def test_react_scripted_loop(nq_root, tmp_path):
    fixture = react_fixture(
        {"tool_calls": [{"name": "retriever", "arguments": {"query": "lighthouse Skarv shared", "k": 2}}]},
        {"tool_calls": [{"name": "get_document", "arguments": {"doc_id": "d03"}}]},
        {"text": "red"},
    )
    env, t = make_env(nq_root, Dataset.NQ, tmp_path, fixture)
    r = run_react(env.store.questions()[0], env, "BM25")
    assert r.answer_text == "red" and r.flags == [] and t.chat_calls == 3
    events = parse_trajectory(env.run_dir / r.trajectory_path)
    tools = [e for e in events if e.kind is EventKind.TOOL_CALL]
    assert tools[0].output.startswith("[1] id: d03\n") and tools[0].output.count("] id: ") == 2
    assert tools[1].output == "The lighthouse on Skarv island was painted red in spring, shared words."
    last = t.calls[-1][1]["messages"]
    assert [m["role"] for m in last] == ["user", "assistant", "tool", "assistant", "tool"]
    assert [s["function"]["name"] for s in t.calls[0][1]["tools"]] == ["retriever", "get_document"]


def test_react_unknown_tool_reported_to_model(nq_root, tmp_path):
    fixture = react_fixture({"tool_calls": [{"name": "browse", "arguments": {}}]}, {"text": "done"})
    env, t = make_env(nq_root, Dataset.NQ, tmp_path, fixture)
    r = run_react(env.store.questions()[0], env, "BM25")
    assert r.answer_text == "done"
    tool_msg = t.calls[-1][1]["messages"][-1]
    assert tool_msg["role"] == "tool" and "unknown tool 'browse'" in tool_msg["content"]
    events = parse_trajectory(env.run_dir / r.trajectory_path)
    assert any(e.meta.get("error") for e in events if e.kind is EventKind.TOOL_CALL)


def test_react_aliases_and_bad_arguments(nq_root, tmp_path):
    fixture = react_fixture(
        {"tool_calls": [{"name": "retrieve", "arguments": {"query": "Skarv"}}, {"name": "get_document", "arguments": {"doc_id": "nope"}},
                        {"name": "retriever", "arguments": {"query": ""}}]},
        {"text": "ok"},
    )
    env, t = make_env(nq_root, Dataset.NQ, tmp_path, fixture)
    run_react(env.store.questions()[0], env, "BM25")
    outputs = [m["content"] for m in t.calls[-1][1]["messages"] if m["role"] == "tool"]
    assert outputs[0].startswith("[1] id: d03") and outputs[1].startswith("Error: no document") and outputs[2].startswith("Error:")


def test_react_truncates_at_max_steps(nq_root, tmp_path):
    fixture = react_fixture({"text": "thinking", "tool_calls": [{"name": "retriever", "arguments": {"query": "x"}}]})
    env, t = make_env(nq_root, Dataset.NQ, tmp_path, fixture)
    r = run_react(env.store.questions()[0], env, "BM25", max_steps=3)
    assert r.flags == ["truncated"] and t.chat_calls == 3 and r.answer_text == "thinking"


# -- coding agent

MOCK_AGENT = [sys.executable, "-m", "fsnav.mock_agent", "--workspace", "{workspace}", "--prompt-file", "{prompt_file}"]


def agent_script(tmp_path: Path, script: dict) -> list[str]:
    p = tmp_path / "agent.json"
    p.write_text(json.dumps(script))
    return [*MOCK_AGENT, "--script", str(p)]


def test_coding_agent_with_mock_agent(nq_root, tmp_path):
    script = {"rules": [{"match": ["Skarv"], "actions": [
        {"shell": "grep -rl Skarv corpus"},
        {"read": "corpus/d03.txt", "start": 0, "end": 20},
        {"shell": "python3 - <<'EOF'\ndef f():\n    return 1\nEOF"},
        {"answer": "red"}]}]}
    env, _ = make_env(nq_root, Dataset.NQ, tmp_path, {})
    q = env.store.questions()[0]
    r = run_coding_agent(q, env, agent_script(tmp_path, script))
    assert r.answer_text == "red" and r.flags == []
    ws = env.run_dir / "workspaces" / "q1"
    assert sorted(p.name for p in ws.iterdir()) == ["corpus"] and (ws / "corpus").is_symlink()
    prompt = (env.run_dir / "prompts" / "q1.txt").read_text()
    assert "iterating through the corpus corpus\n" in prompt and q.text in prompt
    assert "painted red" not in prompt and "Document body" not in prompt
    events = parse_trajectory(env.run_dir / r.trajectory_path)
    kinds = [e.kind for e in events]
    assert kinds == [EventKind.SHELL_COMMAND, EventKind.FILE_READ, EventKind.SHELL_COMMAND, EventKind.SCRIPT_BLOCK, EventKind.MODEL_MESSAGE]
    assert events[0].output.strip() == "corpus/d03.txt"
    assert events[3].payload == "def f():\n    return 1"
    assert r.usage.total > 0


def test_coding_agent_retriever_shim(nq_root, tmp_path):
    cmd = "python retriever.py --dataset nq --embedding-model BM25 --top-k 3 --query \"Skarv lighthouse shared\""
    script = {"default": [{"shell": cmd}, {"answer": "red"}]}
    env, _ = make_env(nq_root, Dataset.NQ, tmp_path, {})
    r = run_coding_agent(env.store.questions()[0], env, agent_script(tmp_path, script), retriever_model="BM25")
    ws = env.run_dir / "workspaces" / "q1"
    assert sorted(p.name for p in ws.iterdir()) == ["corpus", "retriever.py"]
    assert len((ws / "retriever.py").read_text().splitlines()) == 2
    prompt = (env.run_dir / "prompts" / "q1.txt").read_text()
    assert "--embedding-model BM25 --top-k 5" in prompt
    out = parse_trajectory(env.run_dir / r.trajectory_path)[0].output
    assert out.startswith("[1] id: d03\n") and out.count("] id: ") == 3


def test_coding_agent_nonzero_exit_flagged(nq_root, tmp_path):
    env, _ = make_env(nq_root, Dataset.NQ, tmp_path, {})
    r = run_coding_agent(env.store.questions()[0], env, ["sh", "-c", "cat >/dev/null; echo 'Answer: maybe'; exit 3"])
    assert r.answer_text == "maybe" and r.flags == ["agent_exit=3"]


def test_coding_agent_failures(nq_root, tmp_path):
    env, _ = make_env(nq_root, Dataset.NQ, tmp_path, {})
    q = env.store.questions()[0]
    with pytest.raises(AgentSpawnError):
        run_coding_agent(q, env, [str(tmp_path / "no-such-agent")])
    with pytest.raises(AgentTimeout):
        run_coding_agent(q, env, ["sleep", "5"], timeout_s=0.3)
    with pytest.raises(AnswerExtractionFailure):
        run_coding_agent(q, env, ["sh", "-c", "cat >/dev/null"])


def test_mock_agent_cli(tmp_path):
    (tmp_path / "ws").mkdir()
    (tmp_path / "ws" / "a.txt").write_text("hello\n")
    script = tmp_path / "s.json"
    script.write_text(json.dumps({"default": [{"shell": "cat a.txt"}, {"shell": "rg x", "output": "none"}, {"answer": "42"}]}))
    out = subprocess.run([sys.executable, "-m", "fsnav.mock_agent", "--workspace", str(tmp_path / "ws"), "--script", str(script)],
                         input="prompt text", capture_output=True, text=True, check=True).stdout
    lines = [json.loads(x) for x in out.splitlines()]
    assert lines[0]["output"] == "hello\n" and lines[1]["output"] == "none"
    assert lines[2]["payload"] == "Answer: 42" and lines[2]["meta"] == {"final": True}
    assert [x["timestamp"] for x in lines] == [0.0, 1.0, 2.0]


# -- transcripts


def test_parse_item_stream():
    lines = [
        {"type": "thread.started"},
        {"type": "item.completed", "item": {"type": "command_execution", "command": "bash -lc 'rg x'", "aggregated_output": "a:1"}},
        {"type": "item.completed", "item": {"type": "agent_message", "text": "Answer: Paris"}},
        {"type": "turn.completed", "usage": {"input_tokens": 100, "output_tokens": 7}},
    ]
    events = parse_transcript("\n".join(json.dumps(x) for x in lines))
    assert [e.kind for e in events] == [EventKind.SHELL_COMMAND, EventKind.MODEL_MESSAGE, EventKind.OTHER]
    assert events[0].output == "a:1" and events[2].usage.total == 107
    assert extract_answer(final_message(events)) == "Paris"


def test_parse_message_stream():
    lines = [
        {"type": "system", "subtype": "init"},
        {"type": "assistant", "message": {"content": [{"type": "tool_use", "name": "Bash", "input": {"command": "nl -ba f.txt"}},
                                                      {"type": "tool_use", "name": "Read", "input": {"file_path": "f.txt"}}],
                                          "usage": {"input_tokens": 5, "output_tokens": 1}}},
        {"type": "result", "result": "Reasoning.\nAnswer: **Oslo**"},
    ]
    events = parse_transcript("\n".join(json.dumps(x) for x in lines))
    assert [e.kind for e in events] == [EventKind.SHELL_COMMAND, EventKind.FILE_READ, EventKind.MODEL_MESSAGE]
    assert extract_answer(final_message(events)) == "Oslo"


def test_parse_plain_text_and_heredoc():
    events = parse_transcript("just some text\nAnswer: 7\n")
    assert len(events) == 1 and extract_answer(final_message(events)) == "7"
    line = json.dumps({"kind": "ShellCommand", "payload": "cat > t.py <<'EOF'\ndef g():\n    pass\nEOF"})
    events = parse_transcript(line)
    assert [e.kind for e in events] == [EventKind.SHELL_COMMAND, EventKind.SCRIPT_BLOCK]
    assert parse_transcript("") == []
