"""Run configuration: built-in defaults, an optional JSON file, and environment overrides.

Precedence is environment > file > defaults. Recognised environment variables::

    SYLLABUDGET_MODE            dynamic | static | autonomous
    SYLLABUDGET_K               decay steepness
    SYLLABUDGET_THETA           autonomous-mode scale
    SYLLABUDGET_ALPHA1 / _ALPHA2
    SYLLABUDGET_CORPUS_MEAN     mean source syllables (mu)
    SYLLABUDGET_DELTA_MODE      far | near
    SYLLABUDGET_LAMBDA_LEN / _LAMBDA_QUAL
    SYLLABUDGET_TAU_MIN / _TAU_MAX
    SYLLABUDGET_QUALITY_MODE    rubric | reason | external_rm
    SYLLABUDGET_COMBINER        product | weighted_mean
    SYLLABUDGET_BOUNDS_EN / _DE / _ES    "lower,upper"
    SYLLABUDGET_CHAT_URL / _CHAT_MODEL / _CHAT_API_KEY
    SYLLABUDGET_EMBED_URL / _EMBED_MODEL / _EMBED_API_KEY
    SYLLABUDGET_MAX_IN_FLIGHT
    SYLLABUDGET_MAX_BATCH
    SYLLABUDGET_SERVICE_TOKEN

Secrets (API keys, the service token) never enter ``config_hash``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .languages import DEFAULT_BOUNDS, LanguageCode
from .rewards import DynamicBoundsConfig, LengthRewardConfig, RatioBounds, RewardWeights

SECRET_KEYS = ("chat_api_key", "embed_api_key", "service_token")

DEFAULTS: dict = {
    "mode": "dynamic",
    "k": 300.0,
    "theta": math.pi,
    "alpha1": 0.4,
    "alpha2": 0.5,
    "corpus_mean": None,
    "delta_mode": "far",
    "lambda_len": 0.5,
    "lambda_qual": 0.5,
    "tau_min": 0.0,
    "tau_max": 0.8,
    "quality_mode": "rubric",
    "combiner": "product",
    "bounds": {code.value: list(b) for code, b in DEFAULT_BOUNDS.items()},
    "chat_url": None,
    "chat_model": "default",
    "chat_api_key": None,
    "embed_url": None,
    "embed_model": "default",
    "embed_api_key": None,
    "max_in_flight": 8,
    "max_batch": 256,
    "request_timeout_s": 30.0,
    "service_token": None,
    "match_threshold": 0.8,
}

_FLOAT_KEYS = {"k", "theta", "alpha1", "alpha2", "corpus_mean", "lambda_len", "lambda_qual",
               "tau_min", "tau_max", "request_timeout_s", "match_threshold"}
_INT_KEYS = {"max_in_flight", "max_batch"}
_STR_KEYS = {"mode", "delta_mode", "quality_mode", "combiner", "chat_url", "chat_model", "chat_api_key",
             "embed_url", "embed_model", "embed_api_key", "service_token"}
ENV_PREFIX = "SYLLABUDGET_"


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} expects a number, got {value!r}") from None
    return value


def _parse_bounds(text: str) -> list[float]:
    try:
        lower, upper = (float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"bounds must look like 'lower,upper', got {text!r}") from None
    return [lower, upper]


@dataclass(frozen=True)
class Settings:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def bounds(self, lang) -> RatioBounds:
        code = LanguageCode(str(lang))
        table = self.values["bounds"]
        if code.value not in table:
            raise ConfigError(f"no ratio bounds configured for {code.value}")
        return RatioBounds(*table[code.value])

    def length_config(self, lang="en") -> LengthRewardConfig:
        mode = self.values["mode"]
        dynamic = None
        if mode == "dynamic":
            mu = self.values["corpus_mean"]
            if mu is None:
                raise ConfigError("dynamic mode needs corpus_mean (run build-bench to compute it)")
            dynamic = DynamicBoundsConfig(mu, self.values["alpha1"], self.values["alpha2"])
        return LengthRewardConfig(
            mode=mode, k=self.values["k"], theta=self.values["theta"], bounds=self.bounds(lang),
            dynamic=dynamic, delta_mode=self.values["delta_mode"],
        )

    def weights(self) -> RewardWeights:
        return RewardWeights(self.values["lambda_len"], self.values["lambda_qual"])

    def public_dict(self) -> dict:
        return {k: v for k, v in self.values.items() if k not in SECRET_KEYS}

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.public_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def validate(self) -> "Settings":
        """Build every derived config once so invariant violations surface early."""
        for code in self.values["bounds"]:
            self.bounds(code)
        if self.values["mode"] != "dynamic" or self.values["corpus_mean"] is not None:
            self.length_config(next(iter(self.values["bounds"])))
        self.weights()
        from .quality.judges import FidelityConfig, QualityConfig

        FidelityConfig(self.values["tau_min"], self.values["tau_max"])
        QualityConfig(self.values["quality_mode"], self.values["combiner"])
        if self.values["max_in_flight"] < 1 or self.values["max_batch"] < 0:
            raise ConfigError("max_in_flight must be >= 1 and max_batch >= 0")
        if not 0 < self.values["match_threshold"] <= 1:
            raise ConfigError("match_threshold must be in (0, 1]")
        return self


def load_settings(path: str | os.PathLike | None = None, env: dict | None = None, **overrides) -> Settings:
    """Merge defaults, the JSON file at ``path``, environment and keyword overrides."""
    values = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            if key == "bounds":
                merged = dict(values["bounds"])
                merged.update({str(k): [float(x) for x in v] for k, v in value.items()})
                values["bounds"] = merged
            else:
                values[key] = _coerce(key, value)

    env = os.environ if env is None else env
    for key in DEFAULTS:
        if key == "bounds":
            continue
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            values[key] = _coerce(key, raw)
    for code in ("en", "de", "es", "zh"):
        raw = env.get(f"{ENV_PREFIX}BOUNDS_{code.upper()}")
        if raw is not None:
            values["bounds"] = {**values["bounds"], code: _parse_bounds(raw)}

    for key, value in overrides.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            values[key] = _coerce(key, value) if key != "bounds" else value
    return Settings(values)
