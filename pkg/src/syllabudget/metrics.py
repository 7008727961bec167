"""Length-aware evaluation: BLEU, BLEU per unit of syllable ratio, core-event retention."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Literal, Protocol, Sequence, runtime_checkable

from .diagnostics import syllable_ratio
from .errors import ConfigError, EmptyInputError, ValidationError
from .languages import LanguageCode, parse_lang_pair
from .pipeline.build import BenchRecord
from .pipeline.events import Tagger, match_core_events
from .quality.clients import EmbeddingClient
from .syllables import count_syllables

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BleuConfig:
    max_ngram: int = 4
    smoothing: Literal["none", "add_epsilon"] = "add_epsilon"
    epsilon: float = 0.1
    tokenization: Literal["whitespace_punct", "character"] = "whitespace_punct"

    def __post_init__(self):
        if self.max_ngram < 1:
            raise ConfigError("max_ngram must be >= 1")
        if self.smoothing not in ("none", "add_epsilon"):
            raise ConfigError(f"unknown smoothing {self.smoothing!r}")
        if self.tokenization not in ("whitespace_punct", "character"):
            raise ConfigError(f"unknown tokenization {self.tokenization!r}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")

    @classmethod
    def for_lang(cls, lang, **kwargs) -> "BleuConfig":
        """Character tokens for Chinese, word-and-punctuation tokens otherwise."""
        tok = "character" if LanguageCode(str(lang)) is LanguageCode.ZH else "whitespace_punct"
        return cls(tokenization=tok, **kwargs)


_WORD_PUNCT = re.compile(r"\w+|[^\w\s]")


def bleu_tokens(text: str, tokenization: str = "whitespace_punct") -> list[str]:
    if tokenization == "character":
        return [ch for ch in text if not ch.isspace()]
    return _WORD_PUNCT.findall(text)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, cfg: BleuConfig = BleuConfig()) -> float:
    """Sentence BLEU of ``candidate`` against a single ``reference``.

    Conventions: an empty candidate scores 0; n-gram orders longer than the
    candidate are left out of the geometric mean; with ``add_epsilon`` a zero
    match count is replaced by ``epsilon``.
    """
    cand = bleu_tokens(candidate, cfg.tokenization)
    ref = bleu_tokens(reference, cfg.tokenization)
    if not cand:
        return 0.0
    orders = range(1, min(cfg.max_ngram, len(cand)) + 1)
    log_sum = 0.0
    for n in orders:
        c_grams = _ngrams(cand, n)
        r_grams = _ngrams(ref, n)
        matches = sum(min(count, r_grams[g]) for g, count in c_grams.items())
        total = sum(c_grams.values())
        if matches == 0:
            if cfg.smoothing == "none":
                return 0.0
            matches = cfg.epsilon
        log_sum += math.log(matches / total)
    precision = math.exp(log_sum / len(orders))
    c, r = len(cand), len(ref)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return precision * bp


def bleu_rho(source: str, back_translation: str, rho: float, cfg: BleuConfig = BleuConfig()) -> float:
    """BLEU of the back-translation against the source, divided by ``rho``."""
    if not rho > 0:
        raise ValidationError(f"rho must be > 0, got {rho}")
    return bleu(back_translation, source, cfg) / rho


def bt_cerr(record: BenchRecord, back_translation: str, emb: EmbeddingClient, threshold: float = 0.8,
            tagger: Tagger | None = None) -> int:
    """1 when every core event of ``record`` survives in the back-translation (vacuously 1 without events)."""
    if not record.core_events:
        return 1
    return int(all(match_core_events(record.core_events, back_translation, emb, threshold, tagger)))


@runtime_checkable
class ExternalScorer(Protocol):
    """Reference-free quality scorer slot: (source, translation) -> score in [0, 1]."""

    def score(self, source: str, translation: str) -> float: ...


@dataclass(frozen=True)
class EvalRow:
    record_id: str
    lang_pair: str
    rho: float
    bleu: float
    bleu_rho: float
    bt_cerr: int
    in_bounds: bool
    bounds: tuple[float, float]
    output_tokens: int
    external_score: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = list(self.bounds)
        return d


def evaluate_row(record: BenchRecord, translation: str, back_translation: str, lang_pair: str,
                 emb: EmbeddingClient, cfg: BleuConfig | None = None, threshold: float = 0.8,
                 scorer: ExternalScorer | None = None, tagger: Tagger | None = None) -> EvalRow:
    src_lang, tgt_lang = parse_lang_pair(lang_pair)
    cfg = cfg or BleuConfig.for_lang(src_lang)
    rho = syllable_ratio(record.syllables, count_syllables(translation, tgt_lang))
    bounds = record.bounds_for(tgt_lang)
    b = bleu(back_translation, record.source_text, cfg)
    ext = None
    if scorer is not None:
        ext = float(scorer.score(record.source_text, translation))
        if not 0 <= ext <= 1:
            raise ValidationError(f"external scorer returned {ext}, expected a value in [0, 1]")
    return EvalRow(
        record_id=record.id,
        lang_pair=f"{src_lang.value}-{tgt_lang.value}",
        rho=rho,
        bleu=b,
        bleu_rho=b / rho if rho > 0 else 0.0,
        bt_cerr=bt_cerr(record, back_translation, emb, threshold, tagger),
        in_bounds=bounds[0] <= rho <= bounds[1],
        bounds=bounds,
        output_tokens=len(bleu_tokens(translation, "whitespace_punct")),
        external_score=ext,
    )


@dataclass(frozen=True)
class EvalReport:
    n: int
    bleu_rho: float
    bt_cerr: float
    in_bounds_fraction: float
    mean_rho: float
    avg_output_tokens: float
    bounds: tuple[float, float]
    ib: bool
    external_score: float | None = None
    settings: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = list(self.bounds)
        return d


def aggregate_report(rows: Sequence[EvalRow], settings: dict | None = None) -> EvalReport:
    """Corpus means; the corpus is in bounds (IB) when its mean ratio is."""
    rows = list(rows)
    if not rows:
        raise EmptyInputError("aggregate_report needs at least one row")
    bounds = {r.bounds for r in rows}
    if len(bounds) != 1:
        raise ValidationError("rows carry different bounds; aggregate one target language at a time")
    (lower, upper), = bounds
    n = len(rows)
    mean_rho = math.fsum(r.rho for r in rows) / n
    ext = [r.external_score for r in rows if r.external_score is not None]
    return EvalReport(
        n=n,
        bleu_rho=math.fsum(r.bleu_rho for r in rows) / n,
        bt_cerr=math.fsum(r.bt_cerr for r in rows) / n,
        in_bounds_fraction=sum(1 for r in rows if r.in_bounds) / n,
        mean_rho=mean_rho,
        avg_output_tokens=math.fsum(r.output_tokens for r in rows) / n,
        bounds=(lower, upper),
        ib=lower <= mean_rho <= upper,
        external_score=(math.fsum(ext) / len(ext)) if ext else None,
        settings=settings,
    )
