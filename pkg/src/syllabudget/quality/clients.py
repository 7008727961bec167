"""Chat and embedding clients: HTTP implementations, deterministic fakes, and the
retry / usage-accounting / concurrency-cap wrapper every external call goes through."""

from __future__ import annotations

import hashlib
import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence, runtime_checkable

import httpx

from ..errors import RetryExhaustedError, TransientUpstreamError, UpstreamError


@dataclass(frozen=True)
class ChatResponse:
    text: str
    total_tokens: int = 0
    latency_s: float = 0.0


@runtime_checkable
class ChatClient(Protocol):
    def complete(self, system: str | None, user: str, *, temperature: float = 0.0) -> ChatResponse: ...


@runtime_checkable
class EmbeddingClient(Protocol):
    def embed(self, text: str) -> Sequence[float]: ...


# ------------------------------------------------------------------ HTTP


def _raise_for_status(resp: httpx.Response):
    if resp.status_code == 429 or resp.status_code >= 500:
        raise TransientUpstreamError(f"upstream returned HTTP {resp.status_code}")
    if resp.status_code >= 400:
        raise UpstreamError(f"upstream returned HTTP {resp.status_code}: {resp.text[:200]}")


class _HTTPBase:
    def __init__(self, url: str, model: str, api_key: str | None = None, timeout: float = 30.0,
                 transport: httpx.BaseTransport | None = None):
        self.url = url
        self.model = model
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._http = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def _post(self, payload: dict) -> dict:
        try:
            resp = self._http.post(self.url, json=payload)
        except httpx.TransportError as exc:
            raise TransientUpstreamError(f"transport error: {exc}") from exc
        _raise_for_status(resp)
        try:
            return resp.json()
        except ValueError as exc:
            raise UpstreamError("upstream returned a non-JSON body") from exc

    def ping(self) -> bool:
        try:
            resp = self._http.get(self.url)
        except httpx.TransportError:
            return False
        return resp.status_code < 500

    def close(self):
        self._http.close()


class HTTPChatClient(_HTTPBase):
    """Client for the common ``{model, messages, temperature}`` completions shape."""

    def complete(self, system, user, *, temperature=0.0):
        messages = [{"role": "system", "content": system}] if system else []
        messages.append({"role": "user", "content": user})
        start = time.monotonic()
        body = self._post({"model": self.model, "messages": messages, "temperature": temperature})
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise UpstreamError("malformed completion body") from exc
        tokens = int((body.get("usage") or {}).get("total_tokens", 0))
        return ChatResponse(text or "", tokens, time.monotonic() - start)


class HTTPEmbeddingClient(_HTTPBase):
    def embed(self, text):
        body = self._post({"model": self.model, "input": text})
        try:
            return [float(x) for x in body["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise UpstreamError("malformed embedding body") from exc


# ------------------------------------------------------------------ fakes


class ScriptedChatClient:
    """Replays scripted completions in order.

    ``script`` is a sequence whose items are strings (returned as completions) or
    exception instances (raised), or a callable ``(system, user) -> str``. With a
    sequence, the last item repeats once the script runs out unless ``cycle`` is set.
    """

    def __init__(self, script, tokens_per_call: int = 0, cycle: bool = False):
        self._script = script
        self._tokens = tokens_per_call
        self._cycle = cycle
        self._lock = threading.Lock()
        self.calls: list[tuple[str | None, str]] = []

    def complete(self, system, user, *, temperature=0.0):
        with self._lock:
            index = len(self.calls)
            self.calls.append((system, user))
        if callable(self._script):
            item = self._script(system, user)
        elif self._cycle:
            item = self._script[index % len(self._script)]
        else:
            item = self._script[min(index, len(self._script) - 1)]
        if isinstance(item, BaseException):
            raise item
        return ChatResponse(item, self._tokens, 0.0)

    def ping(self) -> bool:
        return True


class CharNgramEmbedder:
    """Offline embedding: hashed counts of character unigrams and bigrams.

    Identical texts map to identical vectors and texts with no shared characters
    are orthogonal, which makes it a usable lexical stand-in for tests and
    offline runs.
    """

    def __init__(self, dim: int = 256, orders: tuple[int, ...] = (1, 2)):
        self.dim = dim
        self.orders = orders

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def embed(self, text):
        vec = [0.0] * self.dim
        chars = [ch for ch in text if not ch.isspace()]
        for n in self.orders:
            for i in range(len(chars) - n + 1):
                vec[self._bucket("".join(chars[i:i + n]))] += 1.0
        return vec

    def ping(self) -> bool:
        return True


class ScriptedEmbeddingClient:
    """Returns fixed vectors for known texts and defers to ``fallback`` otherwise."""

    def __init__(self, vectors: dict[str, Sequence[float]], fallback: EmbeddingClient | None = None):
        self.vectors = {k: list(v) for k, v in vectors.items()}
        self.fallback = fallback
        self._lock = threading.Lock()
        self.calls: list[str] = []

    def embed(self, text):
        with self._lock:
            self.calls.append(text)
        if text in self.vectors:
            return self.vectors[text]
        if self.fallback is None:
            raise UpstreamError(f"no scripted embedding for {text!r}")
        return self.fallback.embed(text)

    def ping(self) -> bool:
        return True


# ------------------------------------------------------------------ management


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    base_delay_s: float = 0.5
    sleep: Callable[[float], None] = field(default=time.sleep, compare=False)

    def delay(self, attempt: int) -> float:
        return self.base_delay_s * 2 ** (attempt - 1)


class UsageLedger:
    """Thread-safe tally of external requests (every attempt counts)."""

    def __init__(self):
        self._lock = threading.Lock()
        self.requests = 0
        self.failures = 0
        self.total_tokens = 0
        self.latency_s = 0.0
        self.by_client: dict[str, int] = {}

    def record(self, client: str, tokens: int = 0, latency_s: float = 0.0, failed: bool = False):
        with self._lock:
            self.requests += 1
            self.failures += int(failed)
            self.total_tokens += tokens
            self.latency_s += latency_s
            self.by_client[client] = self.by_client.get(client, 0) + 1

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "requests": self.requests,
                "failures": self.failures,
                "total_tokens": self.total_tokens,
                "latency_s": self.latency_s,
                "by_client": dict(self.by_client),
            }


class FifoLimiter:
    """Counting semaphore that admits waiters strictly in arrival order."""

    def __init__(self, capacity: int = 8):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._cond = threading.Condition()
        self._queue: deque = deque()
        self._in_flight = 0
        self.peak = 0

    def acquire(self):
        ticket = object()
        with self._cond:
            self._queue.append(ticket)
            while self._queue[0] is not ticket or self._in_flight >= self.capacity:
                self._cond.wait()
            self._queue.popleft()
            self._in_flight += 1
            self.peak = max(self.peak, self._in_flight)
            self._cond.notify_all()

    def release(self):
        with self._cond:
            self._in_flight -= 1
            self._cond.notify_all()

    def __enter__(self):
        self.acquire()
        return self

    def __exit__(self, *exc):
        self.release()


def _call_managed(name, fn, policy: RetryPolicy, ledger: UsageLedger, limiter: FifoLimiter | None):
    last = None
    for attempt in range(1, policy.attempts + 1):
        start = time.monotonic()
        try:
            if limiter is None:
                result = fn()
            else:
                with limiter:
                    result = fn()
        except TransientUpstreamError as exc:
            ledger.record(name, latency_s=time.monotonic() - start, failed=True)
            last = exc
            if attempt < policy.attempts:
                policy.sleep(policy.delay(attempt))
            continue
        except UpstreamError:
            ledger.record(name, latency_s=time.monotonic() - start, failed=True)
            raise
        return result, time.monotonic() - start
    raise RetryExhaustedError(policy.attempts, last)


class ManagedChatClient:
    """Wraps a ChatClient with bounded retries, usage accounting and an in-flight cap."""

    def __init__(self, inner: ChatClient, policy: RetryPolicy | None = None, ledger: UsageLedger | None = None,
                 limiter: FifoLimiter | None = None, name: str = "chat"):
        self.inner = inner
        self.policy = policy or RetryPolicy()
        self.ledger = ledger or UsageLedger()
        self.limiter = limiter
        self.name = name

    def complete(self, system, user, *, temperature=0.0):
        resp, elapsed = _call_managed(
            self.name, lambda: self.inner.complete(system, user, temperature=temperature),
            self.policy, self.ledger, self.limiter,
        )
        self.ledger.record(self.name, resp.total_tokens, resp.latency_s or elapsed)
        return resp

    def ping(self) -> bool:
        ping = getattr(self.inner, "ping", None)
        return bool(ping()) if ping else True


class ManagedEmbeddingClient:
    def __init__(self, inner: EmbeddingClient, policy: RetryPolicy | None = None, ledger: UsageLedger | None = None,
                 limiter: FifoLimiter | None = None, name: str = "embedding"):
        self.inner = inner
        self.policy = policy or RetryPolicy()
        self.ledger = ledger or UsageLedger()
        self.limiter = limiter
        self.name = name

    def embed(self, text):
        vec, elapsed = _call_managed(self.name, lambda: self.inner.embed(text), self.policy, self.ledger, self.limiter)
        self.ledger.record(self.name, 0, elapsed)
        return vec

    def ping(self) -> bool:
        ping = getattr(self.inner, "ping", None)
        return bool(ping()) if ping else True


def managed_chat(client: ChatClient, **kwargs) -> ManagedChatClient:
    return client if isinstance(client, ManagedChatClient) else ManagedChatClient(client, **kwargs)


def managed_embedding(client: EmbeddingClient, **kwargs) -> ManagedEmbeddingClient:
    return client if isinstance(client, ManagedEmbeddingClient) else ManagedEmbeddingClient(client, **kwargs)


def vector_norm(v: Sequence[float]) -> float:
    return math.sqrt(math.fsum(x * x for x in v))
