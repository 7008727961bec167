"""Forward, backward and round-trip expansion ratios and corpus-level verbosity reports."""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass, field

from .errors import EmptyInputError, MissingBackTranslationError, ValidationError
from .syllables import count_syllables


def syllable_ratio(src, tgt) -> float:
    """Target over source syllables, with the source floored at 1."""
    return int(tgt) / max(int(src), 1)


@dataclass(frozen=True)
class RatioSample:
    src_syllables: int
    tgt_syllables: int
    bt_syllables: int | None = None
    id: str | None = None

    def __post_init__(self):
        for name in ("src_syllables", "tgt_syllables", "bt_syllables"):
            value = getattr(self, name)
            if value is not None and int(value) < 0:
                raise ValidationError(f"{name} must be non-negative, got {value}")

    @property
    def has_back_translation(self) -> bool:
        return self.bt_syllables is not None


def forward_ratio(sample: RatioSample) -> float:
    return syllable_ratio(sample.src_syllables, sample.tgt_syllables)


def backward_ratio(sample: RatioSample) -> float:
    if sample.bt_syllables is None:
        raise MissingBackTranslationError("backward ratio needs a back-translation count")
    return syllable_ratio(sample.tgt_syllables, sample.bt_syllables)


def roundtrip_ratio(sample: RatioSample) -> float:
    # computed directly; forward * backward would divide by sigma(y) = 0
    if sample.bt_syllables is None:
        raise MissingBackTranslationError("round-trip ratio needs a back-translation count")
    return syllable_ratio(sample.src_syllables, sample.bt_syllables)


def sample_from_texts(src: str, tgt: str, bt: str | None, lang_src, lang_tgt, id=None) -> RatioSample:
    return RatioSample(
        src_syllables=count_syllables(src, lang_src).value,
        tgt_syllables=count_syllables(tgt, lang_tgt).value,
        bt_syllables=None if bt is None else count_syllables(bt, lang_src).value,
        id=id,
    )


@dataclass(frozen=True)
class MetricStats:
    mean: float
    std: float
    median: float
    n: int

    @classmethod
    def of(cls, values):
        values = list(values)
        if not values:
            return cls(float("nan"), float("nan"), float("nan"), 0)
        return cls(statistics.fmean(values), statistics.pstdev(values), statistics.median(values), len(values))


@dataclass(frozen=True)
class CorpusReport:
    fwd: MetricStats
    bwd: MetricStats
    rtp: MetricStats
    frac_rtp_gt_one: float
    n: int  # samples with a back-translation (the round-trip population)
    n_total: int
    schema_version: int = field(default=1)

    def to_dict(self) -> dict:
        return asdict(self)


def corpus_report(samples) -> CorpusReport:
    """Aggregate ratios with population standard deviations.

    Samples without a back-translation contribute to the forward statistics only.
    """
    samples = list(samples)
    if not samples:
        raise EmptyInputError("corpus_report needs at least one sample")
    with_bt = [s for s in samples if s.has_back_translation]
    rtp = [roundtrip_ratio(s) for s in with_bt]
    return CorpusReport(
        fwd=MetricStats.of(forward_ratio(s) for s in samples),
        bwd=MetricStats.of(backward_ratio(s) for s in with_bt),
        rtp=MetricStats.of(rtp),
        frac_rtp_gt_one=(sum(1 for r in rtp if r > 1.0) / len(rtp)) if rtp else 0.0,
        n=len(with_bt),
        n_total=len(samples),
    )


def scatter_points(samples) -> list[dict]:
    """Plot-ready rows (forward vs. backward ratio, coloured by round trip)."""
    points = []
    for s in samples:
        if not s.has_back_translation:
            continue
        points.append({
            "id": s.id,
            "fwd": forward_ratio(s),
            "bwd": backward_ratio(s),
            "rtp": roundtrip_ratio(s),
        })
    return points
