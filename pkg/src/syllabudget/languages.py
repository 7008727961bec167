"""Supported languages and their per-language constants."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import UnsupportedLanguageError


class LanguageCode(str, enum.Enum):
    ZH = "zh"
    EN = "en"
    DE = "de"
    ES = "es"

    def __str__(self):
        return self.value


def parse_lang(code) -> LanguageCode:
    """Coerce a string (or LanguageCode) to a LanguageCode, raising on anything else."""
    if isinstance(code, LanguageCode):
        return code
    try:
        return LanguageCode(str(code).strip().lower())
    except ValueError:
        raise UnsupportedLanguageError(code) from None


def parse_lang_pair(pair: str) -> tuple[LanguageCode, LanguageCode]:
    """Parse ``"zh-en"`` (or ``"zh_en"``, ``"zh>en"``) into (source, target)."""
    for sep in ("-", "_", ">", "2"):
        if sep in pair:
            src, _, tgt = pair.partition(sep)
            return parse_lang(src), parse_lang(tgt)
    raise UnsupportedLanguageError(pair)


@dataclass(frozen=True)
class LanguageProfile:
    code: LanguageCode
    name: str
    syllable_rate: float  # syllables per second
    info_density: float  # normalized, Mandarin = 0.94
    theoretical_expansion_from_zh: float
    llm_baseline_expansion: float | None = None


PROFILES: dict[LanguageCode, LanguageProfile] = {
    LanguageCode.ZH: LanguageProfile(LanguageCode.ZH, "Chinese", 5.18, 0.94, 1.00),
    LanguageCode.EN: LanguageProfile(LanguageCode.EN, "English", 6.19, 0.91, 1.03, 1.35),
    LanguageCode.DE: LanguageProfile(LanguageCode.DE, "German", 5.97, 0.79, 1.19, 1.59),
    LanguageCode.ES: LanguageProfile(LanguageCode.ES, "Spanish", 7.82, 0.63, 1.49, 1.84),
}

# Target syllable-ratio intervals for zh -> X, set below the theoretical expansion.
DEFAULT_BOUNDS: dict[LanguageCode, tuple[float, float]] = {
    LanguageCode.EN: (0.8, 0.9),
    LanguageCode.DE: (0.9, 1.0),
    LanguageCode.ES: (1.0, 1.1),
}


def profile(code) -> LanguageProfile:
    return PROFILES[parse_lang(code)]


def verbosity_bias(code) -> float:
    """Surplus of the observed LLM expansion over the theoretical one."""
    p = profile(code)
    if p.llm_baseline_expansion is None:
        return 0.0
    return round(p.llm_baseline_expansion - p.theoretical_expansion_from_zh, 10)
