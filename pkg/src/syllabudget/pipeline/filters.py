"""Record-level filters: length, reading speed, repetition and script consistency."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Callable

from ..errors import ConfigError
from ..syllables import is_han


def character_count(text: str) -> int:
    """Characters that are neither whitespace nor punctuation."""
    return sum(1 for ch in text if not ch.isspace() and not unicodedata.category(ch).startswith("P"))


def repetition_ratio(text: str, n: int = 2) -> float:
    """Share of character n-grams that repeat an earlier one (0 for short strings)."""
    chars = [ch for ch in text if not ch.isspace()]
    grams = ["".join(chars[i:i + n]) for i in range(len(chars) - n + 1)]
    if not grams:
        return 0.0
    return 1.0 - len(set(grams)) / len(grams)


def script_fraction(text: str, script: str = "han") -> float:
    """Fraction of letters written in ``script`` (``han`` or ``latin``); 1.0 without letters."""
    letters = [ch for ch in text if ch.isalpha()]
    if not letters:
        return 1.0
    if script == "han":
        hits = sum(1 for ch in letters if is_han(ch))
    elif script == "latin":
        hits = sum(1 for ch in letters if "LATIN" in unicodedata.name(ch, ""))
    else:
        raise ConfigError(f"unknown script {script!r}")
    return hits / len(letters)


@dataclass(frozen=True)
class FilterConfig:
    min_chars: int = 10
    cps_min: float = 2.0
    cps_max: float = 12.0
    max_repetition: float = 0.3
    repetition_n: int = 2
    min_script_fraction: float = 0.9
    script: str = "han"
    # optional extra scorer, e.g. a perplexity model: text -> score, reject when score > max_scorer_value
    scorer: Callable[[str], float] | None = None
    max_scorer_value: float = float("inf")

    def __post_init__(self):
        if self.min_chars < 0 or not 0 <= self.cps_min <= self.cps_max:
            raise ConfigError("filter thresholds are inconsistent")
        if not 0 <= self.max_repetition <= 1 or not 0 <= self.min_script_fraction <= 1:
            raise ConfigError("ratio thresholds must lie in [0, 1]")

    def public_dict(self) -> dict:
        return {
            "min_chars": self.min_chars, "cps_min": self.cps_min, "cps_max": self.cps_max,
            "max_repetition": self.max_repetition, "repetition_n": self.repetition_n,
            "min_script_fraction": self.min_script_fraction, "script": self.script,
            "scorer": None if self.scorer is None else getattr(self.scorer, "__name__", "custom"),
        }


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str | None = None

    def __bool__(self):
        return self.keep


REASONS = ("min_chars", "cps", "repetition", "script", "scorer")


def filter_record(record, cfg: FilterConfig = FilterConfig()) -> FilterDecision:
    """Keep or reject ``record``; the reason names the first failing rule in REASONS order."""
    text = record.source_text
    if character_count(text) < cfg.min_chars:
        return FilterDecision(False, "min_chars")
    if not cfg.cps_min <= record.cps <= cfg.cps_max:
        return FilterDecision(False, "cps")
    if repetition_ratio(text, cfg.repetition_n) > cfg.max_repetition:
        return FilterDecision(False, "repetition")
    if script_fraction(text, cfg.script) < cfg.min_script_fraction:
        return FilterDecision(False, "script")
    if cfg.scorer is not None and cfg.scorer(text) > cfg.max_scorer_value:
        return FilterDecision(False, "scorer")
    return FilterDecision(True)


def quality_score(text: str, cfg: FilterConfig = FilterConfig()) -> float:
    """Soft score in [0, 1] recorded alongside each record (hard filters still apply)."""
    return (1.0 - repetition_ratio(text, cfg.repetition_n)) * script_fraction(text, cfg.script)
