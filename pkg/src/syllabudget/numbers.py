"""Spoken forms of integers 0-9999, used to count syllables of digit tokens."""

from __future__ import annotations

MAX_VERBALIZED = 9999

_EN_ONES = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
    "seventeen", "eighteen", "nineteen",
]
_EN_TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"]


def _en_below_100(n):
    if n < 20:
        return [_EN_ONES[n]]
    tens, ones = divmod(n, 10)
    return [_EN_TENS[tens]] + ([_EN_ONES[ones]] if ones else [])


def _en_below_1000(n):
    hundreds, rest = divmod(n, 100)
    words = [_EN_ONES[hundreds], "hundred"] if hundreds else []
    if rest or not words:
        words += _en_below_100(rest)
    return words


def verbalize_en(n: int) -> list[str]:
    thousands, rest = divmod(n, 1000)
    words = _en_below_100(thousands) + ["thousand"] if thousands else []
    if rest or not words:
        words += _en_below_1000(rest)
    return words


_DE_ONES = [
    "null", "eins", "zwei", "drei", "vier", "fünf", "sechs", "sieben", "acht", "neun",
    "zehn", "elf", "zwölf", "dreizehn", "vierzehn", "fünfzehn", "sechzehn",
    "siebzehn", "achtzehn", "neunzehn",
]
_DE_TENS = ["", "", "zwanzig", "dreißig", "vierzig", "fünfzig", "sechzig", "siebzig", "achtzig", "neunzig"]


def _de_below_100(n, standalone):
    if n == 1 and not standalone:
        return "ein"
    if n < 20:
        return _DE_ONES[n]
    tens, ones = divmod(n, 10)
    if not ones:
        return _DE_TENS[tens]
    unit = "ein" if ones == 1 else _DE_ONES[ones]
    return unit + "und" + _DE_TENS[tens]


def verbalize_de(n: int) -> list[str]:
    if n == 0:
        return ["null"]
    thousands, rest = divmod(n, 1000)
    hundreds, below = divmod(rest, 100)
    word = ""
    if thousands:
        word += ("ein" if thousands == 1 else _de_below_100(thousands, False)) + "tausend"
    if hundreds:
        word += ("ein" if hundreds == 1 else _DE_ONES[hundreds]) + "hundert"
    if below:
        word += _de_below_100(below, standalone=True)
    return [word]


_ES_ONES = [
    "cero", "uno", "dos", "tres", "cuatro", "cinco", "seis", "siete", "ocho", "nueve",
    "diez", "once", "doce", "trece", "catorce", "quince", "dieciséis", "diecisiete",
    "dieciocho", "diecinueve", "veinte", "veintiuno", "veintidós", "veintitrés",
    "veinticuatro", "veinticinco", "veintiséis", "veintisiete", "veintiocho", "veintinueve",
]
_ES_TENS = ["", "", "", "treinta", "cuarenta", "cincuenta", "sesenta", "setenta", "ochenta", "noventa"]
_ES_HUNDREDS = [
    "", "ciento", "doscientos", "trescientos", "cuatrocientos", "quinientos",
    "seiscientos", "setecientos", "ochocientos", "novecientos",
]


def _es_below_100(n):
    if n < 30:
        return [_ES_ONES[n]]
    tens, ones = divmod(n, 10)
    return [_ES_TENS[tens]] + (["y", _ES_ONES[ones]] if ones else [])


def _es_below_1000(n):
    if n == 100:
        return ["cien"]
    hundreds, rest = divmod(n, 100)
    words = [_ES_HUNDREDS[hundreds]] if hundreds else []
    if rest or not words:
        words += _es_below_100(rest)
    return words


def verbalize_es(n: int) -> list[str]:
    thousands, rest = divmod(n, 1000)
    words = []
    if thousands:
        words += (["mil"] if thousands == 1 else _es_below_100(thousands) + ["mil"])
    if rest or not words:
        words += _es_below_1000(rest)
    return words


_ZH_DIGITS = "零一二三四五六七八九"


def verbalize_zh(n: int) -> list[str]:
    """Mandarin reading, one string per ideograph (each ideograph is one syllable)."""
    if n < 10:
        return [_ZH_DIGITS[n]]
    if n < 20:
        return ["十"] + ([_ZH_DIGITS[n - 10]] if n > 10 else [])
    out = []
    digits = [int(d) for d in str(n)]
    units = ["千", "百", "十", ""][-len(digits):]
    pending_zero = False
    for d, unit in zip(digits, units):
        if d == 0:
            pending_zero = bool(out)
            continue
        if pending_zero:
            out.append("零")
            pending_zero = False
        out.append(_ZH_DIGITS[d])
        if unit:
            out.append(unit)
    return out


VERBALIZERS = {
    "en": verbalize_en,
    "de": verbalize_de,
    "es": verbalize_es,
    "zh": verbalize_zh,
}


def verbalize(n: int, lang: str) -> list[str]:
    if not 0 <= n <= MAX_VERBALIZED:
        raise ValueError(f"{n} outside verbalization table 0-{MAX_VERBALIZED}")
    return VERBALIZERS[lang](n)
