"""Benchmark assembly: transcripts in, self-describing records plus a run manifest out.

Record schema (JSONL, one object per line, keys in this order)::

    id            "<video_id>-<segment index, 4 digits>"
    domain        gaming | film_tv | travel | acgn | general
    source_text   cleaned transcript text
    duration_s    end_s - start_s
    syllables     source syllables (zh rule)
    cps           character_count(source_text) / duration_s
    context       10 cleaned neighbouring segments; the record itself at index 5
    core_events   [{"predicate": str, "arguments": [str, ...]}, ...]
    budget_bounds {"en": [lower, upper], "de": [...], "es": [...]}
    quality_score soft score in [0, 1] (hard filters decide membership)
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import EmptyInputError, ValidationError
from ..languages import DEFAULT_BOUNDS, LanguageCode
from ..syllables import count_syllables
from .dedup import lsh_threshold, minhash_dedup, quota_sample
from .events import CoreEvent, Tagger, extract_core_events
from .filters import FilterConfig, character_count, filter_record, quality_score
from .segment import (
    CONTEXT_SIZE, DOMAIN_ORDER, Domain, PreprocessConfig, RawSegment, TimedToken, context_windows, parse_domain,
    preprocess, segment,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BenchRecord:
    id: str
    domain: Domain
    source_text: str
    duration_s: float
    syllables: int
    cps: float
    context: tuple[str, ...]
    core_events: tuple[CoreEvent, ...] = ()
    budget_bounds: dict = field(default_factory=lambda: {c.value: list(b) for c, b in DEFAULT_BOUNDS.items()})
    quality_score: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "domain", parse_domain(self.domain))
        object.__setattr__(self, "context", tuple(self.context))
        object.__setattr__(self, "core_events", tuple(self.core_events))
        if len(self.context) != CONTEXT_SIZE:
            raise ValidationError(f"record {self.id}: context must hold exactly {CONTEXT_SIZE} segments")
        if not self.duration_s > 0:
            raise ValidationError(f"record {self.id}: duration must be > 0")
        if int(self.syllables) < 0:
            raise ValidationError(f"record {self.id}: syllables must be >= 0")
        expected = character_count(self.source_text) / self.duration_s
        if not math.isclose(self.cps, expected, rel_tol=0, abs_tol=1e-9):
            raise ValidationError(f"record {self.id}: cps {self.cps} != {expected}")

    def bounds_for(self, lang) -> tuple[float, float]:
        code = LanguageCode(str(lang)).value
        if code not in self.budget_bounds:
            raise ValidationError(f"record {self.id} has no budget bounds for {code}")
        lower, upper = self.budget_bounds[code]
        return float(lower), float(upper)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain.value,
            "source_text": self.source_text,
            "duration_s": self.duration_s,
            "syllables": int(self.syllables),
            "cps": self.cps,
            "context": list(self.context),
            "core_events": [e.to_dict() for e in self.core_events],
            "budget_bounds": {k: list(v) for k, v in self.budget_bounds.items()},
            "quality_score": self.quality_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchRecord":
        return cls(
            id=str(d["id"]), domain=d["domain"], source_text=d["source_text"], duration_s=float(d["duration_s"]),
            syllables=int(d["syllables"]), cps=float(d["cps"]), context=tuple(d["context"]),
            core_events=tuple(CoreEvent.from_dict(e) for e in d.get("core_events", [])),
            budget_bounds={k: [float(x) for x in v] for k, v in d.get("budget_bounds", {}).items()},
            quality_score=float(d.get("quality_score", 1.0)),
        )


def make_record(seg: RawSegment, context: Sequence[str], tagger: Tagger | None = None,
                filter_cfg: FilterConfig = FilterConfig()) -> BenchRecord:
    text = seg.text
    return BenchRecord(
        id=f"{seg.video_id}-{seg.index:04d}",
        domain=seg.domain,
        source_text=text,
        duration_s=seg.duration_s,
        syllables=count_syllables(text, LanguageCode.ZH).value,
        cps=character_count(text) / seg.duration_s,
        context=tuple(context),
        core_events=tuple(extract_core_events(text, tagger)),
        budget_bounds={c.value: list(b) for c, b in DEFAULT_BOUNDS.items()},
        quality_score=quality_score(text, filter_cfg),
    )


def corpus_mean_syllables(records: Sequence[BenchRecord]) -> float:
    records = list(records)
    if not records:
        raise EmptyInputError("corpus mean needs at least one record")
    return math.fsum(int(r.syllables) for r in records) / len(records)


@dataclass(frozen=True)
class BuildConfig:
    pause_threshold_s: float = 0.8
    preprocess: PreprocessConfig = PreprocessConfig()
    filters: FilterConfig = FilterConfig()
    shingle_k: int = 5
    bands: int = 20
    rows: int = 10
    quotas: dict | None = None  # domain -> count; None keeps everything
    seed: int = 0
    jobs: int = 1

    def public_dict(self) -> dict:
        return {
            "pause_threshold_s": self.pause_threshold_s,
            "marker_patterns": list(self.preprocess.marker_patterns),
            "fillers": list(self.preprocess.fillers),
            "filters": self.filters.public_dict(),
            "shingle_k": self.shingle_k,
            "bands": self.bands,
            "rows": self.rows,
            "quotas": self.quotas,
            "seed": self.seed,
        }

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.public_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class BuildResult:
    records: list[BenchRecord]
    manifest: dict

    def records_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in self.records)


def parse_transcript(row: dict) -> tuple[str, Domain, list[TimedToken]]:
    try:
        tokens = [TimedToken(str(t["text"]), float(t["start_s"]), float(t["end_s"])) for t in row["tokens"]]
        return str(row["video_id"]), parse_domain(row["domain"]), tokens
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed transcript row: {exc}") from exc


def build_bench(transcripts: Iterable[dict], cfg: BuildConfig = BuildConfig(), tagger: Tagger | None = None) -> BuildResult:
    """Segment, clean, window, filter, deduplicate and sample a benchmark.

    Per-transcript work runs on ``cfg.jobs`` threads; deduplication and quota
    sampling are sequential and ordered, so the output depends only on the
    input and ``cfg``.
    """
    rows = list(transcripts)
    parsed = [parse_transcript(r) for r in rows]
    ids = [p[0] for p in parsed]
    if len(set(ids)) != len(ids):
        raise ValidationError("video_id values must be unique")

    def per_video(item):
        video_id, domain, tokens = item
        segs = [preprocess(s, cfg.preprocess) for s in segment(tokens, cfg.pause_threshold_s, domain, video_id)]
        windows = context_windows([s.text for s in segs])
        return [make_record(s, w, tagger, cfg.filters) for s, w in zip(segs, windows)]

    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            per = list(pool.map(per_video, parsed))
    else:
        per = [per_video(p) for p in parsed]
    candidates = [r for recs in per for r in recs]

    rejects = {"min_chars": 0, "cps": 0, "repetition": 0, "script": 0, "scorer": 0}
    kept = []
    for rec in candidates:
        decision = filter_record(rec, cfg.filters)
        if decision.keep:
            kept.append(rec)
        else:
            rejects[decision.reason] += 1
    deduped = minhash_dedup(kept, cfg.shingle_k, cfg.bands, cfg.rows, cfg.seed)
    rejects["duplicate"] = len(kept) - len(deduped)
    if cfg.quotas is not None:
        order = [d.value for d in sorted(Domain, key=DOMAIN_ORDER.get)]
        final = quota_sample(deduped, cfg.quotas, cfg.seed, domain_order=order)
        rejects["quota"] = len(deduped) - len(final)
    else:
        final = sorted(deduped, key=lambda r: (DOMAIN_ORDER[r.domain], r.id))
        rejects["quota"] = 0
    mu = corpus_mean_syllables(final) if final else None
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash,
        "config": cfg.public_dict(),
        "corpus_mean_syllables": mu,
        "lsh_threshold": lsh_threshold(cfg.bands, cfg.rows),
        "n_transcripts": len(rows),
        "n_segments": len(candidates),
        "n_records": len(final),
        "rejects": rejects,
    }
    return BuildResult(final, manifest)


def load_records(lines: Iterable[str]) -> list[BenchRecord]:
    out = []
    for i, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            out.append(BenchRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"line {i}: malformed record: {exc}") from exc
    return out
