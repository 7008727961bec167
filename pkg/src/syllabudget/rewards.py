"""Sequence-level length rewards and the weighted composite reward.

Three length-reward modes are supported:

``dynamic``
    Interval reward whose lower bound is relaxed for sources shorter than the
    corpus mean syllable count.
``static``
    The same interval reward with fixed bounds.
``autonomous``
    ``min(cos(theta * rho), 0)``: no target interval. The reward is negative where
    ``cos(theta * rho) < 0`` (for ``theta = pi``: ``0.5 < rho < 1.5``) and zero
    elsewhere.

Outside the interval the reward is ``exp(-k * delta**2)`` where ``delta`` is the
distance to the *far* bound. Set ``delta_mode="near"`` for the distance to the
nearest bound instead.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

from .diagnostics import syllable_ratio
from .errors import ConfigError
from .languages import DEFAULT_BOUNDS, parse_lang

LengthMode = Literal["dynamic", "static", "autonomous"]
DeltaMode = Literal["far", "near"]


@dataclass(frozen=True)
class RatioBounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0 < self.lower <= self.upper):
            raise ConfigError(f"bounds must satisfy 0 < lower <= upper, got [{self.lower}, {self.upper}]")

    def contains(self, rho: float) -> bool:
        return self.lower <= rho <= self.upper

    @classmethod
    def for_language(cls, lang) -> "RatioBounds":
        return cls(*DEFAULT_BOUNDS[parse_lang(lang)])

    def as_list(self) -> list[float]:
        return [self.lower, self.upper]


@dataclass(frozen=True)
class DynamicBoundsConfig:
    corpus_mean_syllables: float
    alpha1: float = 0.4
    alpha2: float = 0.5

    def __post_init__(self):
        if not self.corpus_mean_syllables > 0:
            raise ConfigError("corpus_mean_syllables must be > 0")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ConfigError("alpha1 and alpha2 must be non-negative")
        if self.alpha1 + self.alpha2 > 1 + 1e-12:
            raise ConfigError("alpha1 + alpha2 must not exceed 1 (relaxation may only lower L0)")


@dataclass(frozen=True)
class LengthRewardConfig:
    mode: LengthMode = "dynamic"
    k: float = 300.0
    theta: float = math.pi
    bounds: RatioBounds = field(default_factory=lambda: RatioBounds(0.8, 0.9))
    dynamic: DynamicBoundsConfig | None = None
    delta_mode: DeltaMode = "far"

    def __post_init__(self):
        if self.mode not in ("dynamic", "static", "autonomous"):
            raise ConfigError(f"unknown length reward mode {self.mode!r}")
        if not self.k > 0:
            raise ConfigError("k must be > 0")
        if not self.theta > 0:
            raise ConfigError("theta must be > 0")
        if self.mode == "dynamic" and self.dynamic is None:
            raise ConfigError("dynamic mode requires a DynamicBoundsConfig (corpus mean syllables)")
        if self.delta_mode not in ("far", "near"):
            raise ConfigError(f"unknown delta_mode {self.delta_mode!r}")

    def with_bounds(self, bounds: RatioBounds) -> "LengthRewardConfig":
        return replace(self, bounds=bounds)


@dataclass(frozen=True)
class RewardWeights:
    lambda_len: float = 0.5
    lambda_qual: float = 0.5

    def __post_init__(self):
        if self.lambda_len < 0 or self.lambda_qual < 0:
            raise ConfigError("reward weights must be non-negative")


@dataclass(frozen=True)
class RewardBreakdown:
    rho: float
    bounds_used: RatioBounds
    length_reward: float
    quality_reward: float
    composite: float
    mode: str
    lambda_len: float
    lambda_qual: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds_used"] = self.bounds_used.as_list()
        return d


def gamma_factor(src_syllables, cfg: DynamicBoundsConfig) -> float:
    """Lower-bound relaxation factor; 1.0 at or above the corpus mean."""
    s = float(src_syllables)
    mu = cfg.corpus_mean_syllables
    if s >= mu:
        return 1.0
    return cfg.alpha1 + cfg.alpha2 * math.sqrt(s / mu)


def dynamic_bounds(src_syllables, base: RatioBounds, cfg: DynamicBoundsConfig) -> RatioBounds:
    return RatioBounds(base.lower * gamma_factor(src_syllables, cfg), base.upper)


def length_reward_interval(rho: float, bounds: RatioBounds, k: float, delta_mode: DeltaMode = "far") -> float:
    """1 inside the closed interval, otherwise a squared-exponential decay."""
    if bounds.contains(rho):
        return 1.0
    to_lower = abs(rho - bounds.lower)
    to_upper = abs(rho - bounds.upper)
    delta = max(to_lower, to_upper) if delta_mode == "far" else min(to_lower, to_upper)
    return math.exp(-k * delta * delta)


def length_reward_auto(rho: float, theta: float) -> float:
    return min(math.cos(theta * rho), 0.0)


def length_reward(rho: float, src_syllables, cfg: LengthRewardConfig) -> tuple[float, RatioBounds]:
    """Length reward for ``rho`` under ``cfg`` and the bounds that were applied."""
    if cfg.mode == "autonomous":
        return length_reward_auto(rho, cfg.theta), cfg.bounds
    bounds = cfg.bounds
    if cfg.mode == "dynamic":
        bounds = dynamic_bounds(src_syllables, bounds, cfg.dynamic)
    return length_reward_interval(rho, bounds, cfg.k, cfg.delta_mode), bounds


def score_rho(rho: float, src_syllables, quality: float, weights: RewardWeights, cfg: LengthRewardConfig) -> RewardBreakdown:
    """Composite reward for an already computed syllable ratio."""
    if not math.isfinite(quality):
        raise ConfigError(f"quality must be finite, got {quality}")
    r_len, bounds = length_reward(rho, src_syllables, cfg)
    composite = weights.lambda_len * r_len + weights.lambda_qual * quality
    return RewardBreakdown(
        rho=rho,
        bounds_used=bounds,
        length_reward=r_len,
        quality_reward=float(quality),
        composite=composite,
        mode=cfg.mode,
        lambda_len=weights.lambda_len,
        lambda_qual=weights.lambda_qual,
    )


def composite_reward(src_syllables, tgt_syllables, quality: float, weights: RewardWeights, cfg: LengthRewardConfig) -> RewardBreakdown:
    rho = syllable_ratio(src_syllables, tgt_syllables)
    return score_rho(rho, src_syllables, quality, weights, cfg)
