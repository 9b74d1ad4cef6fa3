from __future__ import annotations

import pytest

from fsnav.errors import EndpointError, UnknownModel
from fsnav.gateway import ChatRequest, Message, PriceTable, TokenBucket, TokenUsage, ToolSchema, cost
from fsnav.gateway.mock import hash_embedding


def req(text="hi", **kw):
    return ChatRequest("m", [Message("user", text)], **kw)


def test_mock_text_reply(mock_gateway):
    gw, t = mock_gateway({"chat": [{"match": {"contains": ["capital"]}, "reply": {"text": "Paris", "usage": {"prompt_tokens": 7, "completion_tokens": 1}}}]})
    resp = gw.chat(req("capital of France?"))
    assert resp.text == "Paris" and resp.tool_calls == [] and resp.usage == TokenUsage(7, 1)
    assert gw.usage_by_model["m"] == TokenUsage(7, 1)
    assert t.chat_calls == 1


def test_mock_default_usage_is_char_estimate(mock_gateway):
    gw, _ = mock_gateway({"chat": [{"reply": {"text": "abcde"}}]})
    assert gw.chat(req("12345678")).usage == TokenUsage(2, 2)


def test_tool_calls_parsed(mock_gateway):
    gw, t = mock_gateway({"chat": [{"reply": {"tool_calls": [{"name": "retriever", "arguments": {"query": "x", "k": 3}}]}}]})
    schema = ToolSchema("retriever", "search", {"type": "object", "properties": {}})
    resp = gw.chat(req(tool_schemas=[schema]))
    assert resp.text == ""
    assert [(c.name, c.arguments) for c in resp.tool_calls] == [("retriever", {"query": "x", "k": 3})]
    assert t.calls[0][1]["tools"][0]["function"]["name"] == "retriever"


def test_retry_on_server_errors(mock_gateway, no_sleep):
    gw, t = mock_gateway({"chat": [{"error": {"status": 500}, "times": 2}, {"reply": {"text": "ok"}}]})
    resp = gw.chat(req())
    assert resp.text == "ok" and resp.attempts == 3 and t.chat_calls == 3
    assert len(no_sleep) == 2 and no_sleep[1] > no_sleep[0]


def test_client_errors_not_retried(mock_gateway):
    gw, t = mock_gateway({"chat": [{"error": {"status": 400, "body": "bad"}}]})
    with pytest.raises(EndpointError) as e:
        gw.chat(req())
    assert e.value.status == 400 and t.chat_calls == 1


def test_retries_exhausted(mock_gateway):
    gw, t = mock_gateway({"chat": [{"error": {"status": 503}}]}, max_attempts=3)
    with pytest.raises(EndpointError):
        gw.chat(req())
    assert t.chat_calls == 3


def test_no_rule_is_404(mock_gateway):
    gw, _ = mock_gateway({})
    with pytest.raises(EndpointError):
        gw.chat(req())


def test_replies_consumed_in_order_and_turn_match(mock_gateway):
    gw, _ = mock_gateway({"chat": [{"match": {"turn": 1}, "reply": {"text": "second turn"}}, {"replies": [{"text": "one"}, {"text": "two"}]}]})
    assert gw.chat(req()).text == "one"
    assert gw.chat(req()).text == "two"
    assert gw.chat(req()).text == "two"
    convo = ChatRequest("m", [Message("user", "q"), Message("assistant", "a"), Message("user", "q2")])
    assert gw.chat(convo).text == "second turn"


def test_tags_route_but_are_not_sent(mock_gateway):
    gw, t = mock_gateway({"chat": [{"match": {"tags": {"method": "rag"}}, "reply": {"text": "rag"}}, {"reply": {"text": "other"}}]})
    assert gw.chat(req(tags={"method": "rag"})).text == "rag"
    assert gw.chat(req(tags={"method": "react"})).text == "other"
    assert "tags" not in t.calls[0][1]


def test_embedding_batching(mock_gateway):
    gw, t = mock_gateway({"embedding": {"dim": 8}}, embed_batch_size=2)
    vecs = gw.embed(["a", "b", "c", "d", "e"], "emb")
    assert len(vecs) == 5 and t.embedding_calls == 3
    assert vecs[4] == hash_embedding("e", 8)
    with pytest.raises(ValueError):
        gw.embed([], "emb")


def test_fixed_vectors(mock_gateway):
    gw, _ = mock_gateway({"embedding": {"dim": 2, "vectors": {"x": [1.0, 0.0]}}})
    assert gw.embed(["x"], "emb") == [[1.0, 0.0]]


def test_cost():
    prices = PriceTable({"m": (1.25, 10.0)})
    assert cost(TokenUsage(1000, 500), "m", prices) == pytest.approx(0.00625, abs=1e-12)
    with pytest.raises(UnknownModel):
        cost(TokenUsage(1, 1), "other", prices)
    with pytest.raises(ValueError):
        PriceTable({"m": (-1.0, 0.0)})


def test_price_table_load(tmp_path):
    p = tmp_path / "prices.toml"
    p.write_text('[models."gpt-x"]\nprompt_per_million = 2.0\ncompletion_per_million = 8.0\n')
    assert PriceTable.load(p)["gpt-x"] == (2.0, 8.0)


def test_token_bucket_blocks_when_empty():
    now = [0.0]
    waits = []

    def sleep(s):
        waits.append(s)
        now[0] += s

    bucket = TokenBucket(60, clock=lambda: now[0], sleep=sleep)
    for _ in range(60):
        bucket.acquire()
    assert waits == []
    bucket.acquire()
    assert waits == [pytest.approx(1.0)]


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("m", [])
    with pytest.raises(ValueError):
        Message("robot", "x")
    with pytest.raises(ValueError):
        TokenUsage(-1, 0)
    schema = ToolSchema("t", "", {})
    with pytest.raises(ValueError):
        req(tool_schemas=[schema, schema])
