"""Command-line frontend.

Every subcommand reads JSONL (or plain text for ``count``) from a file argument
or standard input and writes JSON/JSONL to standard output or ``--out``.
Exit status: 0 success, 1 validation/usage error, 2 runtime or upstream error.
Errors on nonzero exit are a single JSON object on standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import grpo
from .config import Settings, load_settings
from .diagnostics import RatioSample, corpus_report, scatter_points
from .errors import ConfigError, SyllabudgetError, UpstreamError, ValidationError
from .languages import parse_lang, parse_lang_pair
from .metrics import BleuConfig, aggregate_report, evaluate_row
from .pipeline.build import BuildConfig, build_bench, load_records
from .quality.clients import CharNgramEmbedder
from .rewards import DynamicBoundsConfig, LengthRewardConfig
from .syllables import count_syllables

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ------------------------------------------------------------------ io helpers


def _read_lines(path: str | None) -> list[str]:
    if path in (None, "-"):
        return sys.stdin.read().splitlines()
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def _read_jsonl(path: str | None) -> list[dict]:
    rows = []
    for i, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {i}: invalid JSON: {exc.msg}") from None
        if not isinstance(row, dict):
            raise ValidationError(f"line {i}: expected a JSON object")
        rows.append(row)
    return rows


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc.msg}") from None


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _jsonl(rows) -> str:
    return "".join(_dump(r) + "\n" for r in rows)


def _settings(args) -> Settings:
    return load_settings(args.config)


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ------------------------------------------------------------------ subcommands


def cmd_count(args) -> int:
    default_lang = args.lang or "en"
    if args.text is not None:
        n = count_syllables(args.text, default_lang).value
        _emit(_dump({"schema_version": SCHEMA_VERSION, "lang": str(parse_lang(default_lang)), "syllables": n}) + "\n", args.out)
        return 0
    rows = []
    for line in _read_lines(args.input):
        if not line.strip():
            continue
        text, lang = line, default_lang
        if line.lstrip().startswith("{"):
            try:
                obj = json.loads(line)
                text, lang = obj["text"], obj.get("lang", default_lang)
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ValidationError(f"expected plain text or {{\"text\": ...}}, got {line[:60]!r}") from None
        rows.append({"schema_version": SCHEMA_VERSION, "lang": str(parse_lang(lang)), "text": text,
                     "syllables": count_syllables(text, lang).value})
    _emit(_jsonl(rows), args.out)
    return 0


def cmd_diagnose(args) -> int:
    rows = _read_jsonl(args.input)

    def to_sample(row):
        try:
            src_lang = row.get("lang_src", "zh")
            tgt_lang = row.get("lang_tgt", args.lang or "en")
            bt = row.get("bt")
            return RatioSample(
                count_syllables(row["src"], src_lang).value,
                count_syllables(row["tgt"], tgt_lang).value,
                None if bt is None else count_syllables(bt, src_lang).value,
                row.get("id"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"row {row.get('id')!r}: missing or invalid field {exc}") from None

    samples = _map(to_sample, rows, args.jobs)
    report = corpus_report(samples).to_dict()
    if args.scatter:
        Path(args.scatter).write_text(_dump({"schema_version": SCHEMA_VERSION, "points": scatter_points(samples)}), encoding="utf-8")
    _emit(_dump(report) + "\n", args.out)
    return 0


def cmd_reward(args) -> int:
    from .service import RewardItem, _error_envelope, build_clients, quality_config_from, score_item

    settings = _settings(args)
    settings.validate()
    clients = build_clients(settings)
    qcfg = quality_config_from(settings)
    items = []
    for i, row in enumerate(_read_jsonl(args.input)):
        row = dict(row)
        row.setdefault("id", str(i))
        if args.lang and "lang_pair" not in row:
            row["lang_pair"] = f"zh-{args.lang}"
        try:
            items.append(RewardItem(**row))
        except Exception as exc:  # pydantic validation
            raise ValidationError(f"item {i}: {exc}") from None

    def run(item):
        try:
            return {"id": item.id, "ok": True, "result": score_item(item, settings, clients, qcfg).to_dict()}
        except (SyllabudgetError, ValueError) as exc:
            return _error_envelope(item.id, exc)

    _emit(_jsonl(_map(run, items, args.jobs)), args.out)
    return 0


def _reward_config_for_sim(settings: Settings, pools, lang: str) -> LengthRewardConfig:
    if settings["mode"] == "dynamic" and settings["corpus_mean"] is None:
        mu = sum(p.src_syllables for p in pools) / len(pools)
        return LengthRewardConfig(mode="dynamic", k=settings["k"], theta=settings["theta"], bounds=settings.bounds(lang),
                                  dynamic=DynamicBoundsConfig(mu, settings["alpha1"], settings["alpha2"]),
                                  delta_mode=settings["delta_mode"])
    return settings.length_config(lang)


def cmd_simulate(args) -> int:
    settings = _settings(args)
    grpo_overrides = {}
    if args.pools in ("convergence", "ablation"):
        pools = grpo.convergence_pools() if args.pools == "convergence" else grpo.ablation_pools()[0]
    else:
        spec = _read_json(args.pools)
        pools = grpo.load_pool_spec(spec)
        grpo_overrides = spec.get("grpo", {})
    cfg = grpo.grpo_config_from_dict(grpo_overrides, seed=args.seed, steps=args.steps, kl_beta=args.beta,
                                     group_size=args.group_size)
    reward_cfg = _reward_config_for_sim(settings, pools, args.lang or "en")
    result = grpo.simulate_training(pools, reward_cfg, settings.weights(), cfg)
    _emit(result.to_jsonl(), args.out)
    return 0


def _parse_quotas(text: str | None) -> dict | None:
    if not text:
        return None
    quotas = {}
    for part in text.split(","):
        name, _, count = part.partition("=")
        try:
            quotas[name.strip()] = int(count)
        except ValueError:
            raise ValidationError(f"quota must look like domain=count, got {part!r}") from None
    return quotas


def cmd_build_bench(args) -> int:
    cfg = BuildConfig(pause_threshold_s=args.pause, quotas=_parse_quotas(args.quotas), seed=args.seed or 0,
                      jobs=args.jobs)
    result = build_bench(_read_jsonl(args.input), cfg)
    _emit(result.records_jsonl(), args.out)
    manifest_path = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    manifest = _dump(result.manifest)
    if manifest_path:
        Path(manifest_path).write_text(manifest + "\n", encoding="utf-8")
    else:
        sys.stderr.write(manifest + "\n")
    return 0


def cmd_eval(args) -> int:
    settings = _settings(args)
    if not args.records:
        raise ValidationError("eval needs --records (a benchmark JSONL file)")
    records = {r.id: r for r in load_records(_read_lines(args.records))}
    rows = _read_jsonl(args.input)
    if settings["embed_url"]:
        from .service import build_clients

        emb = build_clients(settings).embedding
    else:
        emb = CharNgramEmbedder()
    threshold = settings["match_threshold"]

    def run(row):
        try:
            rec = records[row["record_id"]]
        except KeyError:
            raise ValidationError(f"unknown or missing record_id {row.get('record_id')!r}") from None
        pair = row.get("lang_pair", f"zh-{args.lang or 'en'}")
        src, _ = parse_lang_pair(pair)
        return evaluate_row(rec, row["translation"], row["back_translation"], pair, emb, BleuConfig.for_lang(src), threshold)

    evaluated = _map(run, rows, args.jobs)
    bleu_settings = {"bleu": "BleuConfig.for_lang(source)", "match_threshold": threshold,
                     "embedding": "http" if settings["embed_url"] else "char_ngram"}
    report = aggregate_report(evaluated, settings=bleu_settings)
    if args.samples:
        Path(args.samples).write_text(_jsonl(r.to_dict() for r in evaluated), encoding="utf-8")
    _emit(_dump(report.to_dict()) + "\n", args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    settings = _settings(args)
    app = create_app(settings, require_upstream=args.require_upstream, log_path=args.log, workers=args.jobs if args.jobs > 1 else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (simulate, build-bench)")
    common.add_argument("--config", default=None, help="JSON config file; SYLLABUDGET_* variables override it")
    common.add_argument("--lang", default=None, help="target language code (zh, en, de, es)")
    common.add_argument("--out", default=None, help="write output here instead of standard output")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for per-row stages")

    parser = _Parser(prog="syllabudget", description="Syllable-budgeted translation rewards and diagnostics.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("count", parents=[common], help="count syllables")
    p.add_argument("text", nargs="?", default=None, help="text to count; omit to read lines from --input/stdin")
    p.add_argument("--input", default=None, help="text or JSONL ({\"text\", \"lang\"}) file; '-' for stdin")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("diagnose", parents=[common], help="corpus expansion report from {id, src, tgt, bt, lang_src, lang_tgt} rows")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--scatter", default=None, help="also write plot-ready points to this JSON file")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("reward", parents=[common], help="score {id, source, translation, lang_pair, precomputed_quality} rows")
    p.add_argument("input", nargs="?", default=None)
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("simulate", parents=[common], help="run the GRPO simulator and write a JSONL trajectory")
    p.add_argument("--pools", default="convergence", help="pool-spec JSON file, or the built-in 'convergence' / 'ablation'")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--beta", type=float, default=None, help="KL penalty coefficient")
    p.add_argument("--group-size", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-bench", parents=[common], help="build benchmark records from {video_id, domain, tokens} transcripts")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--pause", type=float, default=0.8, help="pause threshold in seconds")
    p.add_argument("--quotas", default=None, help="per-domain counts, e.g. gaming=200,film_tv=200")
    p.add_argument("--manifest", default=None, help="run manifest path (default: <out>.manifest.json, else stderr)")
    p.set_defaults(func=cmd_build_bench)

    p = sub.add_parser("eval", parents=[common], help="evaluate {record_id, source, translation, back_translation, lang_pair} rows")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--records", default=None, help="benchmark records JSONL")
    p.add_argument("--samples", default=None, help="also write per-sample JSONL here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP reward service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--log", default=None, help="append JSONL request logs here")
    p.add_argument("--require-upstream", action="store_true", help="healthz returns 503 unless clients answer")
    p.set_defaults(func=cmd_serve)
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(_dump({"error": {"type": kind, "message": message, "exit_code": code}}) + "\n")
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("a subcommand is required")
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(parser.format_usage())
        return _fail(1, "usage_error", str(exc))
    except (ValidationError, ConfigError) as exc:
        return _fail(1, "validation_error", str(exc))
    except UpstreamError as exc:
        return _fail(2, "upstream_error", str(exc))
    except SyllabudgetError as exc:
        return _fail(2, "runtime_error", str(exc))


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
