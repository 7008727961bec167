"""Rule-based multilingual syllable counting.

Counts are deterministic and depend only on the input string and the language
code: no dictionaries, locale settings or environment lookups are involved.

* ``zh``: one syllable per Han ideograph; Latin-script words inside Chinese text
  are counted with the English rule.
* ``en``: vowel groups with silent final ``e`` (and ``-es``/``-ed``) suppression,
  ``-le`` restoration and a short list of hiatus splits.
* ``de``: vowel nuclei, where the diphthongs ``au ei eu äu ai ie`` and the long
  vowels ``aa ee oo`` count once.
* ``es``: vowel nuclei, where a weak vowel (i, u, ü, final y) next to any vowel
  forms a diphthong unless it carries an accent.

Digit runs are verbalized in the counting language (0-9999, otherwise digit by
digit). Tokens made of letters that no rule covers (Cyrillic in English text,
emoji, ...) contribute 0 and are tallied in an optional diagnostics counter.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

from .languages import LanguageCode, parse_lang, profile
from .numbers import MAX_VERBALIZED, verbalize

_HAN_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
)
_HAN_CLASS = "".join(f"{chr(a)}-{chr(b)}" for a, b in _HAN_RANGES)

_TOKEN_RE = re.compile(
    rf"[{_HAN_CLASS}]"  # one ideograph per token
    rf"|(?:(?![{_HAN_CLASS}])[^\W\d_])+(?:['’](?:(?![{_HAN_CLASS}])[^\W\d_])+)*"  # words
    r"|\d+"
    r"|\S",
)

UNKNOWN_SCRIPT = "unknown_script"
UNKNOWN_SYMBOL = "unknown_symbol"


@dataclass(frozen=True)
class SyllableCount:
    value: int

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __eq__(self, other):
        if isinstance(other, SyllableCount):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __add__(self, other):
        return SyllableCount(self.value + int(other))

    __radd__ = __add__


def is_han(ch: str) -> bool:
    cp = ord(ch)
    return any(a <= cp <= b for a, b in _HAN_RANGES)


def _is_latin_letter(ch: str) -> bool:
    if not ch.isalpha():
        return False
    return "LATIN" in unicodedata.name(ch, "")


def tokenize(text: str, lang=LanguageCode.EN) -> list[str]:
    """Split ``text`` into ideographs, words, digit runs and single punctuation marks.

    >>> tokenize("Bond grows tighter.", "en")
    ['Bond', 'grows', 'tighter', '.']
    """
    parse_lang(lang)
    return _TOKEN_RE.findall(text)


# ---------------------------------------------------------------- English

_EN_VOWELS = "aeiouy"
# vowel pairs that form two nuclei (di-al, vi-de-o, ac-tu-al, po-em, flu-ent, qui-et)
_EN_HIATUS = re.compile(r"ia|io(?!r)|eo|ua|uo|oe(?!s?$)|ue[nlt]|ie[nt]|iers?$|iest$")
# ...except after these (spe-cial, na-tion, re-li-gion, lan-guage, qual-i-ty, peo-ple)
_EN_GLIDE_CONTEXT = re.compile(r"[cgstx]i[aeo](?!t[ei]|s?$)|[gq]u[aeo]|peo")
# silent e kept inside a suffixed word (com-plete-ly, move-ment, hope-ful)
_EN_INNER_SILENT_E = re.compile(r"[aeiouy](?:[^aeiouy]|nc|dg|rs|rc)e(?:ly|ment|ments|ness|ful|fully|less)$")


def _en_is_vowel(w: str, i: int) -> bool:
    ch = w[i]
    if ch in "aeiou":
        return True
    # y is a consonant word-initially and before a vowel (yes, be-yond, play-er)
    return ch == "y" and i > 0 and not (i + 1 < len(w) and w[i + 1] in "aeiou")


def _en_word(word: str) -> int:
    w = "".join(ch for ch in unicodedata.normalize("NFKD", word.lower()) if "a" <= ch <= "z")
    if not w:
        return 1 if any(ch.isalpha() for ch in word) else 0
    if not any(ch in _EN_VOWELS for ch in w):
        # spelled-out acronym (cps, vs, bt); "double-u" has three syllables
        return sum(3 if ch == "w" else 1 for ch in w)
    groups = 0
    prev = False
    for i in range(len(w)):
        vowel = _en_is_vowel(w, i)
        if vowel and not prev:
            groups += 1
        prev = vowel
    if groups > 1:
        if w.endswith("e") and w[-2] not in _EN_VOWELS:
            # silent final e, except consonant + le (ta-ble)
            if not (w.endswith("le") and len(w) > 2 and w[-3] not in _EN_VOWELS):
                groups -= 1
        elif w.endswith("es") and w[-3] not in _EN_VOWELS:
            if not re.search(r"(?:[sxzcg]|ch|sh|[^aeiouy]l)es$", w):
                groups -= 1
        elif w.endswith("ed") and w[-3] not in "aeioutd" and not re.search(r"[bcdfgkptvz]led$", w):
            groups -= 1
        if _EN_INNER_SILENT_E.search(w):
            groups -= 1
        if w.endswith("ically"):
            groups -= 1
    for m in _EN_HIATUS.finditer(w):
        s = m.start()
        if _EN_GLIDE_CONTEXT.match(w, max(0, s - 1)) or (m.group().startswith("io") and w.endswith(("ion", "ions"))):
            continue
        groups += 1
    # -ing after a vowel is its own syllable (be-ing, re-ly-ing), but not after ay/ey/oy
    if len(w) > 4 and w.endswith("ing") and (w[-4] in "aeiou" or (w[-4] == "y" and w[-5] not in "aeiou")):
        if w[-4] != "i":
            groups += 1
    if w.endswith("sm") and len(w) > 3:
        groups += 1
    return max(groups, 1)


# ---------------------------------------------------------------- German

_DE_VOWELS = set("aeiouyäöü")
_DE_NUCLEI = ("äu", "au", "ei", "eu", "ai", "ie", "aa", "ee", "oo")


def _de_word(word: str) -> int:
    w = word.lower()
    count = 0
    i = 0
    while i < len(w):
        if w[i] in _DE_VOWELS:
            count += 1
            i += 2 if w[i:i + 2] in _DE_NUCLEI else 1
        else:
            i += 1
    return count


# ---------------------------------------------------------------- Spanish

_ES_STRONG = set("aeoáéó")
_ES_WEAK = set("iuü")
_ES_ACCENTED_WEAK = set("íú")


def _es_word(word: str) -> int:
    w = word.lower()
    # silent u in que/qui/gue/gui
    w = re.sub(r"(?<=[qg])u(?=[eiéí])", "", w)
    # final y after a vowel is a glide (hoy, muy, rey)
    if len(w) > 1 and w.endswith("y") and w[-2] in _ES_STRONG | _ES_WEAK | _ES_ACCENTED_WEAK:
        w = w[:-1] + "i"
    count = 0
    prev = None  # class of the previous vowel in the current run
    for ch in w:
        if ch in _ES_STRONG:
            cls = "S"
        elif ch in _ES_ACCENTED_WEAK:
            cls = "S"  # accented weak vowels behave as strong: hiatus
        elif ch in _ES_WEAK:
            cls = "W"
        else:
            prev = None
            continue
        if prev is None or (prev == "S" and cls == "S"):
            count += 1
        prev = cls
    return count


# ---------------------------------------------------------------- dispatch

_WORD_RULES = {
    LanguageCode.EN: _en_word,
    LanguageCode.DE: _de_word,
    LanguageCode.ES: _es_word,
}


def _digits_count(token: str, lang: LanguageCode) -> int:
    n = int(token)
    if n <= MAX_VERBALIZED and not (len(token) > 1 and token.startswith("0")):
        words = verbalize(n, lang.value)
    else:
        words = [w for d in token for w in verbalize(int(d), lang.value)]
    if lang is LanguageCode.ZH:
        return len(words)
    rule = _WORD_RULES[lang]
    return sum(rule(w) for w in words)


@lru_cache(maxsize=65536)
def _classify_and_count(token: str, lang: LanguageCode) -> tuple[int, str | None]:
    if not token:
        return 0, None
    if token.isdigit() and token.isascii():
        return _digits_count(token, lang), None
    if len(token) == 1 and is_han(token):
        return 1, None
    if token[0].isalpha():
        letters = [ch for ch in token if ch.isalpha()]
        if not all(_is_latin_letter(ch) for ch in letters):
            return 0, UNKNOWN_SCRIPT
        rule = _WORD_RULES.get(lang, _en_word)  # zh: embedded Latin uses English
        n = rule(token)
        return (n if n >= 1 else 1), None
    if token.isdecimal():
        # non-ASCII decimal digits (e.g. fullwidth) read like their ASCII value
        return _digits_count(str(int(token)), lang), None
    category = unicodedata.category(token[0])
    if category.startswith(("P", "Z", "C")) or category in ("Sm", "Sc", "Sk"):
        return 0, None
    return 0, UNKNOWN_SYMBOL


def count_word_syllables(word: str, lang=LanguageCode.EN, diagnostics: Counter | None = None) -> SyllableCount:
    """Syllables of a single token. Letter tokens count at least 1, punctuation 0."""
    return count_syllables(word, lang, diagnostics)


def count_syllables(text: str, lang=LanguageCode.EN, diagnostics: Counter | None = None) -> SyllableCount:
    """Total syllables of an utterance in ``lang``.

    Pass a ``collections.Counter`` as ``diagnostics`` to collect tallies of tokens
    that no rule could count.
    """
    lang = parse_lang(lang)
    total = 0
    for tok in _TOKEN_RE.findall(text):
        n, warning = _classify_and_count(tok, lang)
        if warning and diagnostics is not None:
            diagnostics[warning] += 1
        total += n
    return SyllableCount(total)


def syllable_duration_s(count, lang) -> float:
    """Expected speaking time of ``count`` syllables at the language's average rate."""
    return int(count) / profile(lang).syllable_rate
