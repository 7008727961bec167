"""HTTP reward service for external RL trainers.

Endpoints::

    POST /v1/reward                  {"items": [RewardItem, ...]}     -> {"results": [...], "schema_version": 1}
    POST /v1/diagnostics/roundtrip   {"items": [RoundtripItem, ...]}  -> {"report": ..., "items": [...]}
    GET  /healthz                                                     -> {"status", "config_hash", "uptime_s"}

Each reward result is an envelope: ``{"id", "ok": true, "result": RewardBreakdown}``
or ``{"id", "ok": false, "error": {"code", "type", "message"}}``. A failing item never
fails the batch; a malformed body is rejected with 400.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .config import Settings
from .diagnostics import RatioSample, backward_ratio, corpus_report, forward_ratio, roundtrip_ratio
from .errors import ConfigError, RetryExhaustedError, SyllabudgetError, UpstreamError, ValidationError, VerdictParseError
from .languages import parse_lang_pair
from .quality.clients import (
    FifoLimiter, HTTPChatClient, HTTPEmbeddingClient, ManagedChatClient, ManagedEmbeddingClient, UsageLedger,
)
from .quality.judges import FidelityConfig, QualityClients, QualityConfig, QualityInputs, quality_reward
from .rewards import RewardBreakdown, composite_reward
from .syllables import count_syllables

SCHEMA_VERSION = 1


class RewardItem(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: str
    source: str
    translation: str
    lang_pair: str = "zh-en"
    precomputed_quality: Optional[float] = None
    context: str = ""
    back_translation: Optional[str] = None


class RewardRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    items: list[RewardItem]


class RoundtripItem(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: Optional[str] = None
    source: str
    translation: str
    back_translation: Optional[str] = None
    lang_pair: str = Field(default="zh-en", alias="langs")


class RoundtripRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    items: list[RoundtripItem]


@dataclass
class ServiceState:
    settings: Settings
    clients: QualityClients
    quality_cfg: QualityConfig
    ledger: UsageLedger
    started: float
    require_upstream: bool = False


def build_clients(settings: Settings, ledger: UsageLedger | None = None) -> QualityClients:
    """HTTP clients from the configured endpoints, behind one shared in-flight cap."""
    ledger = ledger or UsageLedger()
    limiter = FifoLimiter(settings["max_in_flight"])
    chat = emb = None
    if settings["chat_url"]:
        chat = ManagedChatClient(
            HTTPChatClient(settings["chat_url"], settings["chat_model"], settings["chat_api_key"], settings["request_timeout_s"]),
            ledger=ledger, limiter=limiter, name="chat",
        )
    if settings["embed_url"]:
        emb = ManagedEmbeddingClient(
            HTTPEmbeddingClient(settings["embed_url"], settings["embed_model"], settings["embed_api_key"], settings["request_timeout_s"]),
            ledger=ledger, limiter=limiter, name="embedding",
        )
    return QualityClients(chat=chat, embedding=emb)


def quality_config_from(settings: Settings) -> QualityConfig:
    return QualityConfig(settings["quality_mode"], settings["combiner"],
                         fidelity=FidelityConfig(settings["tau_min"], settings["tau_max"]))


def score_item(item: RewardItem, settings: Settings, clients: QualityClients, quality_cfg: QualityConfig) -> RewardBreakdown:
    """Score one item with library calls only; shared by the service and its tests."""
    src_lang, tgt_lang = parse_lang_pair(item.lang_pair)
    if item.precomputed_quality is not None:
        quality = float(item.precomputed_quality)
    else:
        quality = quality_reward(
            QualityInputs(item.source, item.translation, src_lang.value, tgt_lang.value, item.context, item.back_translation),
            clients, quality_cfg,
        )
    return composite_reward(
        count_syllables(item.source, src_lang), count_syllables(item.translation, tgt_lang), quality,
        settings.weights(), settings.length_config(tgt_lang),
    )


def _error_envelope(item_id: str, exc: Exception) -> dict:
    if isinstance(exc, (UpstreamError, VerdictParseError)):
        code, kind = 502, "upstream_error" if isinstance(exc, UpstreamError) else "verdict_parse_error"
        if isinstance(exc, RetryExhaustedError):
            kind = "retry_exhausted"
    elif isinstance(exc, (ValidationError, ValueError)):
        code, kind = 422, "invalid_item"
    else:
        code, kind = 500, "internal_error"
    return {"id": item_id, "ok": False, "error": {"code": code, "type": kind, "message": str(exc)}}


class _JsonlLog:
    def __init__(self, path: str | None):
        self.path = path
        self._lock = threading.Lock()

    def write(self, entry: dict):
        if not self.path:
            return
        line = json.dumps(entry, ensure_ascii=False) + "\n"
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line)


def create_app(settings: Settings, clients: QualityClients | None = None, *, require_upstream: bool = False,
               log_path: str | None = None, workers: int | None = None) -> FastAPI:
    """Validate ``settings`` and build the application (raises ConfigError on invalid config)."""
    settings.validate()
    if settings["mode"] == "dynamic" and settings["corpus_mean"] is None:
        raise ConfigError("dynamic mode needs corpus_mean in the service config")
    for lang in settings["bounds"]:
        if lang != "zh":
            settings.length_config(lang)
    ledger = UsageLedger()
    state = ServiceState(settings, clients if clients is not None else build_clients(settings, ledger),
                         quality_config_from(settings), ledger, time.monotonic(), require_upstream)
    max_batch = settings["max_batch"]
    pool = ThreadPoolExecutor(max_workers=workers or settings["max_in_flight"])
    log = _JsonlLog(log_path)
    token = settings["service_token"]

    app = FastAPI(title="syllabudget reward service", version="1")
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        detail = [{"loc": list(e.get("loc", ())), "msg": e.get("msg", "")} for e in exc.errors()]
        return JSONResponse(status_code=400, content={"error": {"code": 400, "type": "bad_request", "detail": detail}})

    @app.middleware("http")
    async def _auth_and_log(request: Request, call_next):
        start = time.monotonic()
        if token and request.url.path != "/healthz":
            if request.headers.get("authorization") != f"Bearer {token}":
                response = JSONResponse(status_code=401, content={"error": {"code": 401, "type": "unauthorized"}})
                log.write({"ts": time.time(), "method": request.method, "path": request.url.path, "status": 401})
                return response
        response = await call_next(request)
        log.write({
            "ts": time.time(), "method": request.method, "path": request.url.path,
            "status": response.status_code, "latency_ms": round((time.monotonic() - start) * 1000, 3),
        })
        return response

    def _bad(detail: str) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": {"code": 400, "type": "bad_request", "detail": detail}})

    @app.post("/v1/reward")
    def reward(req: RewardRequest):
        if len(req.items) > max_batch:
            return _bad(f"batch of {len(req.items)} exceeds the maximum of {max_batch}")

        def run(item: RewardItem) -> dict:
            try:
                breakdown = score_item(item, state.settings, state.clients, state.quality_cfg)
            except (SyllabudgetError, ValueError) as exc:
                return _error_envelope(item.id, exc)
            return {"id": item.id, "ok": True, "result": breakdown.to_dict()}

        results = list(pool.map(run, req.items))
        return {"results": results, "schema_version": SCHEMA_VERSION}

    @app.post("/v1/diagnostics/roundtrip")
    def roundtrip(req: RoundtripRequest):
        if not req.items:
            return _bad("at least one item is required")
        if len(req.items) > max_batch:
            return _bad(f"batch of {len(req.items)} exceeds the maximum of {max_batch}")
        samples = []
        for i, item in enumerate(req.items):
            try:
                src_lang, tgt_lang = parse_lang_pair(item.lang_pair)
            except ValidationError as exc:
                return _bad(f"item {i}: {exc}")
            samples.append(RatioSample(
                count_syllables(item.source, src_lang).value,
                count_syllables(item.translation, tgt_lang).value,
                None if item.back_translation is None else count_syllables(item.back_translation, src_lang).value,
                item.id,
            ))
        per_item = [{
            "id": s.id,
            "fwd": forward_ratio(s),
            "bwd": backward_ratio(s) if s.has_back_translation else None,
            "rtp": roundtrip_ratio(s) if s.has_back_translation else None,
        } for s in samples]
        return {"report": corpus_report(samples).to_dict(), "items": per_item, "schema_version": SCHEMA_VERSION}

    @app.get("/healthz")
    def healthz():
        body = {"status": "ok", "config_hash": state.settings.config_hash,
                "uptime_s": time.monotonic() - state.started}
        if state.require_upstream:
            reachable = []
            for client in (state.clients.chat, state.clients.embedding, state.clients.judge, state.clients.external_rm):
                if client is None:
                    continue
                ping = getattr(client, "ping", None)
                try:
                    reachable.append(bool(ping()) if ping else True)
                except Exception:
                    reachable.append(False)
            if not reachable or not all(reachable):
                body["status"] = "unavailable"
                return JSONResponse(status_code=503, content=body)
        return body

    app.state.pool = pool
    return app
