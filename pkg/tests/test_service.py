import json
import random

import pytest
from fastapi.testclient import TestClient

from syllabudget.config import load_settings
from syllabudget.errors import ConfigError, TransientUpstreamError
from syllabudget.quality import CharNgramEmbedder, QualityClients, ScriptedChatClient
from syllabudget.service import RewardItem, create_app, quality_config_from, score_item

SOURCES = ["两人之间的关系越来越亲密", "天命人超度了金池长老的冤魂", "我曾经在这里看到过几艘陌生的船", "今天的天气很好"]
TRANSLATIONS = ["The bond between them is growing closer.", "The Destined One freed the elder's soul.",
                "I once saw a few strange ships here.", "Nice weather today.", "Bond grows tighter."]


def judge(system, user):
    if "FAULT" in user:
        raise TransientUpstreamError("judge unavailable")
    # a deterministic verdict that depends on the item
    return "<<1>>" if len(user) % 2 else "<<0>>"


def make_clients():
    return QualityClients(chat=ScriptedChatClient(judge), embedding=CharNgramEmbedder())


def make_items(n, seed=0):
    rng = random.Random(seed)
    return [{"id": f"item-{i:03d}", "source": rng.choice(SOURCES), "translation": rng.choice(TRANSLATIONS),
             "back_translation": rng.choice(SOURCES)} for i in range(n)]


@pytest.fixture
def settings():
    return load_settings(env={}, corpus_mean=12.0)


@pytest.fixture
def client(settings):
    with TestClient(create_app(settings, make_clients(), workers=8)) as c:
        yield c


def test_batch_matches_library_bit_for_bit(client, settings):
    items = make_items(50)
    resp = client.post("/v1/reward", json={"items": items})
    assert resp.status_code == 200
    results = resp.json()["results"]
    assert [r["id"] for r in results] == [i["id"] for i in items]
    local = make_clients()
    for item, res in zip(items, results):
        expected = score_item(RewardItem(**item), settings, local, quality_config_from(settings)).to_dict()
        assert res["ok"] is True
        # json floats are emitted with repr, so equality here is bit equality
        assert res["result"] == json.loads(json.dumps(expected))


def test_one_fault_gives_one_envelope(client):
    items = make_items(10, seed=1)
    items[4]["translation"] = "FAULT here"
    results = client.post("/v1/reward", json={"items": items}).json()["results"]
    bad = [r for r in results if not r["ok"]]
    assert len(bad) == 1 and bad[0]["id"] == "item-004"
    assert bad[0]["error"]["code"] == 502 and bad[0]["error"]["type"] == "retry_exhausted"


def test_precomputed_quality_and_invalid_item(client):
    items = [{"id": "a", "source": SOURCES[0], "translation": TRANSLATIONS[0], "precomputed_quality": 1.0},
             {"id": "b", "source": SOURCES[0], "translation": TRANSLATIONS[0], "lang_pair": "zh-fr"}]
    results = client.post("/v1/reward", json={"items": items}).json()["results"]
    assert results[0]["result"]["length_reward"] == 1.0 and results[0]["result"]["composite"] == 1.0
    assert results[1]["error"]["code"] == 422 and results[1]["error"]["type"] == "invalid_item"


def test_malformed_body_is_400(client):
    assert client.post("/v1/reward", json={"items": [{"id": "x"}]}).status_code == 400
    assert client.post("/v1/reward", json={"items": [], "extra": 1}).status_code == 400
    assert client.post("/v1/reward", content=b"not json", headers={"content-type": "application/json"}).status_code == 400


def test_empty_batch_and_batch_cap(settings):
    capped = load_settings(env={}, corpus_mean=12.0, max_batch=3)
    with TestClient(create_app(capped, make_clients())) as c:
        assert c.post("/v1/reward", json={"items": []}).json()["results"] == []
        assert c.post("/v1/reward", json={"items": make_items(4)}).status_code == 400


def test_roundtrip_endpoint(client):
    items = [{"id": "x", "source": SOURCES[0], "translation": TRANSLATIONS[0], "back_translation": "两人的关系越来越亲密"},
             {"id": "y", "source": SOURCES[1], "translation": TRANSLATIONS[1], "langs": "zh-en"}]
    body = client.post("/v1/diagnostics/roundtrip", json={"items": items}).json()
    assert body["items"][0] == {"id": "x", "fwd": 10 / 12, "bwd": 1.0, "rtp": 10 / 12}
    assert body["items"][1]["rtp"] is None
    assert body["report"]["n"] == 1 and body["report"]["n_total"] == 2
    assert client.post("/v1/diagnostics/roundtrip", json={"items": []}).status_code == 400
    bad = [{"source": "a", "translation": "b", "langs": "zh-xx"}]
    assert client.post("/v1/diagnostics/roundtrip", json={"items": bad}).status_code == 400


def test_healthz(settings):
    with TestClient(create_app(settings, make_clients())) as c:
        body = c.get("/healthz").json()
        assert body["status"] == "ok" and body["config_hash"] == settings.config_hash
        assert c.get("/healthz").json()["config_hash"] == body["config_hash"]

    class Down:
        def complete(self, system, user, *, temperature=0.0):
            raise TransientUpstreamError("down")

        def ping(self):
            raise TransientUpstreamError("down")

    with TestClient(create_app(settings, QualityClients(chat=Down()), require_upstream=True)) as c:
        assert c.get("/healthz").status_code == 503


def test_bearer_token_and_log(tmp_path):
    secured = load_settings(env={}, corpus_mean=12.0, service_token="s3cret")
    log = tmp_path / "requests.jsonl"
    with TestClient(create_app(secured, make_clients(), log_path=str(log))) as c:
        items = {"items": make_items(1)}
        assert c.post("/v1/reward", json=items).status_code == 401
        assert c.post("/v1/reward", json=items, headers={"Authorization": "Bearer s3cret"}).status_code == 200
        assert c.get("/healthz").status_code == 200
    entries = [json.loads(line) for line in log.read_text().splitlines()]
    assert [e["status"] for e in entries] == [401, 200, 200]
    assert "s3cret" not in log.read_text()


def test_invalid_config_refuses_to_start():
    with pytest.raises(ConfigError):
        create_app(load_settings(env={}), make_clients())  # dynamic without a corpus mean
