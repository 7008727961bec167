"""Pause-based segmentation, artifact stripping and context windows."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from ..errors import ValidationError
from ..syllables import is_han


class Domain(str, enum.Enum):
    GAMING = "gaming"
    FILM_TV = "film_tv"
    TRAVEL = "travel"
    ACGN = "acgn"
    GENERAL = "general"

    def __str__(self):
        return self.value


DOMAIN_ORDER = {d: i for i, d in enumerate(Domain)}


def parse_domain(value) -> Domain:
    try:
        return Domain(str(value))
    except ValueError:
        raise ValidationError(f"unknown domain {value!r}; expected one of {[d.value for d in Domain]}") from None


@dataclass(frozen=True)
class TimedToken:
    text: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class RawSegment:
    text: str
    start_s: float
    end_s: float
    domain: Domain = Domain.GENERAL
    video_id: str = ""
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "domain", parse_domain(self.domain))
        if self.start_s < 0 or not self.end_s > self.start_s:
            raise ValidationError(f"segment times must satisfy 0 <= start < end, got [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def _needs_space(left: str, right: str) -> bool:
    if not left or not right:
        return False
    a, b = left[-1], right[0]
    cjk_or_punct = lambda ch: is_han(ch) or ch in "，。！？；：、“”‘’（）《》【】…"
    return not (cjk_or_punct(a) or cjk_or_punct(b))


def join_tokens(texts: Iterable[str]) -> str:
    """Concatenate ASR tokens: no separator around Han text, one space between Latin words."""
    out = ""
    for t in texts:
        t = t.strip()
        if not t:
            continue
        out = f"{out} {t}" if _needs_space(out, t) else out + t
    return out


def segment(tokens: Sequence[TimedToken], pause_threshold_s: float = 0.8, domain=Domain.GENERAL,
            video_id: str = "") -> list[RawSegment]:
    """Cut the token stream wherever the silence between tokens is at least ``pause_threshold_s``."""
    if not pause_threshold_s > 0:
        raise ValidationError("pause_threshold_s must be > 0")
    tokens = list(tokens)
    for i, tok in enumerate(tokens):
        if tok.end_s < tok.start_s or tok.start_s < 0:
            raise ValidationError(f"token {i} has invalid times [{tok.start_s}, {tok.end_s}]")
        if i and tok.start_s < tokens[i - 1].start_s:
            raise ValidationError(f"timestamps are not monotone at token {i}")
    groups: list[list[TimedToken]] = []
    for i, tok in enumerate(tokens):
        if not groups or tok.start_s - tokens[i - 1].end_s >= pause_threshold_s:
            groups.append([tok])
        else:
            groups[-1].append(tok)
    out = []
    for group in groups:
        start = group[0].start_s
        end = max(t.end_s for t in group)
        if end <= start:
            continue  # zero-length blip
        out.append(RawSegment(join_tokens(t.text for t in group), start, end, domain, video_id, len(out)))
    return out


DEFAULT_MARKER_PATTERNS = (
    r"\[[^\[\]]*\]",
    r"【[^【】]*】",
    r"\((?:music|applause|laughter|noise)[^()]*\)",
    r"（(?:音乐|掌声|笑声|笑|噪音|背景音)[^（）]*）",
    r"[♪♫]+",
)
DEFAULT_FILLERS = ("嗯", "啊", "呃", "额", "唔", "那个", "这个", "就是说", "um", "uh", "erm")


@dataclass(frozen=True)
class PreprocessConfig:
    marker_patterns: tuple[str, ...] = DEFAULT_MARKER_PATTERNS
    fillers: tuple[str, ...] = DEFAULT_FILLERS


def _filler_regex(fillers: Sequence[str]) -> re.Pattern:
    # a filler only counts when it stands alone: delimited by whitespace, punctuation or the string edges
    alts = "|".join(re.escape(f) for f in sorted(fillers, key=len, reverse=True))
    return re.compile(rf"(?:(?<=^)|(?<=[\s，,。.！!？?、…]))(?:{alts})(?:[\s，,、…]+|$)", re.IGNORECASE)


def clean_text(text: str, cfg: PreprocessConfig = PreprocessConfig()) -> str:
    for pattern in cfg.marker_patterns:
        text = re.sub(pattern, " ", text)
    text = re.sub(r"\s+", " ", text).strip()
    if cfg.fillers:
        filler = _filler_regex(cfg.fillers)
        previous = None
        while previous != text:
            previous = text
            text = filler.sub("", text).strip()
    return re.sub(r"\s+", " ", text).strip()


def preprocess(seg: RawSegment, cfg: PreprocessConfig = PreprocessConfig()) -> RawSegment:
    """Strip bracketed markers and stand-alone fillers; timing is left as is."""
    return replace(seg, text=clean_text(seg.text, cfg))


CONTEXT_SIZE = 10
CONTEXT_OFFSET = 5  # index of the segment itself inside its window


def context_windows(texts: Sequence[str], size: int = CONTEXT_SIZE, offset: int = CONTEXT_OFFSET) -> list[list[str]]:
    """Window ``i`` holds ``texts[i - offset : i - offset + size]``, padded with ``""``."""
    out = []
    for i in range(len(texts)):
        window = []
        for j in range(i - offset, i - offset + size):
            window.append(texts[j] if 0 <= j < len(texts) else "")
        out.append(window)
    return out
