"""Quality rewards built on chat and embedding clients.

* fidelity: back-translate, embed both sides, clip the cosine to ``[tau_min, tau_max]``
* fluency: binary judge answering ``<<1>>`` or ``<<0>>``
* GenRM: reasoning judge answering ``{"COT": ..., "score": 0|1}``

Prompt templates live in ``syllabudget/prompts`` and are byte-frozen; their
sha256 digests are pinned in the tests.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Literal, Sequence

from ..errors import ConfigError, EmptyCompletionError, ValidationError, VerdictParseError
from ..languages import parse_lang, profile
from .clients import ChatClient, EmbeddingClient, managed_chat, managed_embedding, vector_norm

FLUENCY_PROMPT = "fluency_v1.txt"
GENRM_PROMPT = "genrm_v1.txt"
BACK_TRANSLATION_PROMPT = "back_translation_v1.txt"


def load_prompt(name: str) -> str:
    return resources.files("syllabudget").joinpath("prompts", name).read_text(encoding="utf-8")


def prompt_sha256(name: str) -> str:
    data = resources.files("syllabudget").joinpath("prompts", name).read_bytes()
    return hashlib.sha256(data).hexdigest()


_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


def render_prompt(template: str, **fields: str) -> str:
    """Substitute ``{name}`` placeholders in one pass.

    Unlike ``str.format`` this leaves literal braces alone (the GenRM template
    shows a JSON object) and never re-expands braces inside substituted values.
    """

    def sub(m):
        key = m.group(1)
        return str(fields[key]) if key in fields else m.group(0)

    return _PLACEHOLDER.sub(sub, template)


# ------------------------------------------------------------------ fidelity


@dataclass(frozen=True)
class FidelityConfig:
    tau_min: float = 0.0
    tau_max: float = 0.8

    def __post_init__(self):
        if self.tau_min > self.tau_max:
            raise ConfigError("tau_min must not exceed tau_max")


def back_translate(hypothesis: str, source_lang, client: ChatClient, target_lang="en") -> str:
    """Translate ``hypothesis`` (in ``target_lang``) back into ``source_lang``."""
    src = profile(source_lang)
    tgt = profile(target_lang)
    prompt = render_prompt(load_prompt(BACK_TRANSLATION_PROMPT), target_lang=tgt.name, source_lang=src.name, text=hypothesis)
    text = managed_chat(client).complete(None, prompt).text.strip()
    if not text:
        raise EmptyCompletionError("back-translation completion was empty")
    return text


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise ValidationError(f"dimension mismatch: {len(u)} vs {len(v)}")
    nu, nv = vector_norm(u), vector_norm(v)
    if nu == 0 or nv == 0:
        raise ValidationError("cosine similarity of a zero vector is undefined")
    dot = math.fsum(a * b for a, b in zip(u, v))
    return max(-1.0, min(1.0, dot / (nu * nv)))


def fidelity_reward(source: str, back_translation: str, emb: EmbeddingClient, cfg: FidelityConfig = FidelityConfig()) -> float:
    client = managed_embedding(emb)
    s = cosine_similarity(client.embed(source), client.embed(back_translation))
    return min(max(s, cfg.tau_min), cfg.tau_max)


# ------------------------------------------------------------------ fluency

_FLUENCY_VERDICT = re.compile(r"\s*<<\s*([01])\s*>>\s*")


def parse_fluency_verdict(text: str) -> int:
    m = _FLUENCY_VERDICT.fullmatch(text)
    if not m:
        raise VerdictParseError(f"fluency verdict must be <<0>> or <<1>>, got {text[:80]!r}")
    return int(m.group(1))


def fluency_prompt(context: str, source: str, translation: str, target_lang) -> str:
    return render_prompt(
        load_prompt(FLUENCY_PROMPT),
        target_lang=profile(target_lang).name, context=context, text=source, translation=translation,
    )


def fluency_reward(context: str, source: str, translation: str, target_lang, client: ChatClient) -> int:
    prompt = fluency_prompt(context, source, translation, target_lang)
    return parse_fluency_verdict(managed_chat(client).complete(None, prompt).text)


# ------------------------------------------------------------------ GenRM


@dataclass(frozen=True)
class GenRMOutput:
    cot: str
    score: int

    def to_json(self) -> str:
        return json.dumps({"COT": self.cot, "score": self.score}, ensure_ascii=False)


def _validate_genrm(obj) -> GenRMOutput:
    if not isinstance(obj, dict):
        raise VerdictParseError("GenRM verdict must be a JSON object")
    if set(obj) != {"COT", "score"}:
        raise VerdictParseError(f"GenRM verdict must have exactly the fields COT and score, got {sorted(obj)}")
    score = obj["score"]
    if type(score) is not int or score not in (0, 1):
        raise VerdictParseError(f"GenRM score must be the integer 0 or 1, got {score!r}")
    if not isinstance(obj["COT"], str):
        raise VerdictParseError("GenRM COT must be a string")
    return GenRMOutput(obj["COT"], score)


def parse_genrm_output(text: str) -> GenRMOutput:
    """Parse a GenRM completion, tolerating prose around the JSON object.

    The first ``{`` that starts a complete JSON object (scanning left to right)
    is taken as the verdict, so nested braces inside the reasoning are fine. The
    object itself is validated strictly.
    """
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\{", text):
        try:
            obj, _ = decoder.raw_decode(text, m.start())
        except json.JSONDecodeError:
            continue
        return _validate_genrm(obj)
    raise VerdictParseError("no JSON object found in GenRM completion")


def genrm_prompt(context: str, source: str, translation: str) -> str:
    return render_prompt(load_prompt(GENRM_PROMPT), context=context, current_text=source, translated_text=translation)


def genrm_reward(context: str, source: str, translation: str, client: ChatClient) -> tuple[GenRMOutput, int]:
    out = parse_genrm_output(managed_chat(client).complete(None, genrm_prompt(context, source, translation)).text)
    return out, out.score


# ------------------------------------------------------------------ dispatch

QualityMode = Literal["rubric", "reason", "external_rm"]
Combiner = Literal["product", "weighted_mean"]


@dataclass(frozen=True)
class QualityConfig:
    mode: QualityMode = "rubric"
    combiner: Combiner = "product"
    fidelity_weight: float = 0.5  # weighted_mean only
    fidelity: FidelityConfig = FidelityConfig()

    def __post_init__(self):
        if self.mode not in ("rubric", "reason", "external_rm"):
            raise ConfigError(f"unknown quality mode {self.mode!r}")
        if self.combiner not in ("product", "weighted_mean"):
            raise ConfigError(f"unknown combiner {self.combiner!r}")
        if not 0 <= self.fidelity_weight <= 1:
            raise ConfigError("fidelity_weight must be in [0, 1]")


@dataclass(frozen=True)
class QualityInputs:
    source: str
    translation: str
    source_lang: str = "zh"
    target_lang: str = "en"
    context: str = ""
    back_translation: str | None = None  # reused instead of calling the chat client


@dataclass(frozen=True)
class QualityClients:
    chat: ChatClient | None = None
    embedding: EmbeddingClient | None = None
    judge: ChatClient | None = None  # fluency / GenRM judge; defaults to ``chat``
    external_rm: ChatClient | None = None  # defaults to ``judge``


def combine_rubric(r_bt: float, r_flu: int, cfg: QualityConfig) -> float:
    if cfg.combiner == "product":
        return r_bt * r_flu
    return cfg.fidelity_weight * r_bt + (1 - cfg.fidelity_weight) * r_flu


def quality_reward(inputs: QualityInputs, clients: QualityClients, cfg: QualityConfig = QualityConfig()) -> float:
    parse_lang(inputs.source_lang)
    parse_lang(inputs.target_lang)
    judge = clients.judge or clients.chat
    if cfg.mode == "rubric":
        if clients.embedding is None or judge is None:
            raise ConfigError("rubric mode needs an embedding client and a chat client")
        bt = inputs.back_translation
        if bt is None:
            if clients.chat is None:
                raise ConfigError("rubric mode without a back-translation needs a chat client")
            bt = back_translate(inputs.translation, inputs.source_lang, clients.chat, inputs.target_lang)
        r_bt = fidelity_reward(inputs.source, bt, clients.embedding, cfg.fidelity)
        r_flu = fluency_reward(inputs.context, inputs.source, inputs.translation, inputs.target_lang, judge)
        return combine_rubric(r_bt, r_flu, cfg)
    client = judge if cfg.mode == "reason" else (clients.external_rm or judge)
    if client is None:
        raise ConfigError(f"{cfg.mode} mode needs a judge client")
    _, score = genrm_reward(inputs.context, inputs.source, inputs.translation, client)
    return float(score)
