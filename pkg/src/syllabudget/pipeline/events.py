"""Core events (a predicate and its content-bearing arguments) and their matching."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Protocol, Sequence, runtime_checkable

from ..errors import TaggerError, ValidationError
from ..quality.clients import EmbeddingClient, managed_embedding
from ..quality.judges import cosine_similarity
from ..syllables import is_han

CONTENT_TAGS = frozenset({"NOUN", "PROPN", "NUM"})
VERB_TAGS = frozenset({"VERB"})
_CLAUSE_SPLIT = re.compile(r"[，,。.！!？?；;：:、…\n]+")


@dataclass(frozen=True)
class CoreEvent:
    predicate: str
    arguments: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.predicate:
            raise ValidationError("a core event needs a non-empty predicate")
        object.__setattr__(self, "arguments", tuple(self.arguments))

    def realization(self) -> str:
        """Text used to embed the event: predicate then arguments, space separated."""
        return " ".join((self.predicate,) + self.arguments)

    def to_dict(self) -> dict:
        return {"predicate": self.predicate, "arguments": list(self.arguments)}

    @classmethod
    def from_dict(cls, d: dict) -> "CoreEvent":
        return cls(d["predicate"], tuple(d.get("arguments", ())))


@runtime_checkable
class Tagger(Protocol):
    def tag(self, text: str) -> list[tuple[str, str]]: ...


@lru_cache(maxsize=1)
def _bundled_lexicon() -> dict[str, str]:
    raw = resources.files("syllabudget").joinpath("data", "zh_lexicon.tsv").read_text(encoding="utf-8")
    lex = {}
    for line in raw.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        word, tag = line.split("\t")
        lex[word] = tag
    return lex


class LexiconTagger:
    """Forward maximum matching over a word -> UPOS lexicon.

    Han characters outside the lexicon become single-character ``X`` tokens,
    Latin words are ``PROPN`` (names and brands in colloquial transcripts) and
    digit runs are ``NUM``.
    """

    def __init__(self, lexicon: dict[str, str] | None = None, extra: dict[str, str] | None = None):
        self.lexicon = dict(_bundled_lexicon() if lexicon is None else lexicon)
        if extra:
            self.lexicon.update(extra)
        self.max_len = max((len(w) for w in self.lexicon), default=1)

    def tag(self, text: str) -> list[tuple[str, str]]:
        out = []
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if is_han(ch):
                for size in range(min(self.max_len, n - i), 0, -1):
                    word = text[i:i + size]
                    if word in self.lexicon:
                        out.append((word, self.lexicon[word]))
                        i += size
                        break
                else:
                    out.append((ch, "X"))
                    i += 1
                continue
            m = re.match(r"\d+(?:\.\d+)?|[^\W\d_]+", text[i:])
            if m and not is_han(m.group()[0]):
                word = m.group()
                # a Latin run stops at the first Han character
                word = re.match(r"[^㐀-鿿豈-﫿]+", word).group()
                tag = "NUM" if word[0].isdigit() else self.lexicon.get(word.lower(), "PROPN")
                out.append((word, tag))
                i += len(word)
                continue
            out.append((ch, "PUNCT"))
            i += 1
        return out


def _safe_tag(tagger: Tagger, text: str) -> list[tuple[str, str]]:
    try:
        tags = tagger.tag(text)
    except TaggerError:
        raise
    except Exception as exc:  # an injected tagger may raise anything
        raise TaggerError(f"tagger failed: {exc}") from exc
    if not isinstance(tags, list) or any(not isinstance(t, tuple) or len(t) != 2 for t in tags):
        raise TaggerError("tagger must return a list of (token, tag) pairs")
    return tags


def extract_core_events(text: str, tagger: Tagger | None = None) -> list[CoreEvent]:
    """One event per clause that has a verb; a verbless clause falls back to its head noun.

    The predicate is the clause's first verb. Arguments are every noun, proper
    noun and numeral in the clause, in order, without duplicates.
    """
    tagger = tagger or default_tagger()
    events = []
    for clause in _CLAUSE_SPLIT.split(text):
        if not clause.strip():
            continue
        tagged = _safe_tag(tagger, clause)
        verbs = [w for w, t in tagged if t in VERB_TAGS]
        content = list(dict.fromkeys(w for w, t in tagged if t in CONTENT_TAGS))
        if verbs:
            events.append(CoreEvent(verbs[0], tuple(content)))
        else:
            nouns = [w for w, t in tagged if t in ("NOUN", "PROPN")]
            if nouns:
                head = nouns[0]
                events.append(CoreEvent(head, tuple(w for w in content if w != head)))
    return events


@lru_cache(maxsize=1)
def default_tagger() -> LexiconTagger:
    return LexiconTagger()


def match_core_events(events: Sequence[CoreEvent], candidate_text: str, emb: EmbeddingClient, threshold: float = 0.8,
                      tagger: Tagger | None = None) -> list[bool]:
    """For each event: does some realization in the candidate reach ``threshold`` cosine?

    Candidate realizations are the events extracted from ``candidate_text`` plus
    the whole candidate text, so a paraphrase the tagger cannot parse can still
    match as a sentence.
    """
    if not 0 < threshold <= 1:
        raise ValidationError("threshold must be in (0, 1]")
    if not events:
        return []
    client = managed_embedding(emb)
    realizations = [e.realization() for e in extract_core_events(candidate_text, tagger)]
    if candidate_text.strip():
        realizations.append(candidate_text)
    cand_vecs = [client.embed(r) for r in dict.fromkeys(realizations)]
    out = []
    for ev in events:
        v = client.embed(ev.realization())
        best = max((cosine_similarity(v, c) for c in cand_vecs if any(c)), default=-1.0) if any(v) else -1.0
        out.append(best >= threshold)
    return out
