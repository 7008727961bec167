"""Acceptance criteria 1-12, each reported as one PASS/FAIL line.

The lines are printed as each test runs (visible with ``-s``) and repeated in
the "acceptance criteria" section of the pytest terminal summary.
"""

import json
import math
import random
import time

import numpy as np
from fastapi.testclient import TestClient

import conftest
from conftest import synthetic_transcripts
from syllabudget import grpo
from syllabudget.config import load_settings
from syllabudget.diagnostics import RatioSample, backward_ratio, corpus_report, forward_ratio, roundtrip_ratio, syllable_ratio
from syllabudget.errors import UpstreamError, VerdictParseError
from syllabudget.metrics import bleu, bleu_rho
from syllabudget.pipeline import (
    BenchRecord, BuildConfig, Domain, build_bench, character_count, filter_record, minhash_dedup,
)
from syllabudget.quality import (
    CharNgramEmbedder, QualityClients, ScriptedChatClient, genrm_reward, parse_fluency_verdict, parse_genrm_output,
)
from syllabudget.rewards import (
    DynamicBoundsConfig, LengthRewardConfig, RatioBounds, RewardWeights, dynamic_bounds,
    length_reward_interval, score_rho,
)
from syllabudget.service import RewardItem, create_app, quality_config_from, score_item
from syllabudget.syllables import count_syllables
from test_metrics import oracle_bleu
from test_quality import VERDICTS

SUITE_START = time.monotonic()
EN = RatioBounds(0.8, 0.9)


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def test_criterion_01_syllable_regression():
    rows = [
        ("The relationship between the two is becoming increasingly intimate.", 20),
        ("The relationship between the two grew increasingly intimate.", 17),
        ("The relationship between the two is growing increasingly close.", 17),
        ("Their relationship grows increasingly intimate.", 13),
        ("Their relationship is growing more intimate.", 12),
        ("The two are becoming more and more intimate.", 12),
        ("The relationship between the two is becoming closer.", 15),
        ("The bond between them is growing closer.", 10),
        ("Bond between them grows closer.", 7),
        ("Their bond grows closer.", 6),
        ("Bond grows tighter.", 3),
    ]
    start = time.perf_counter()
    got = [count_syllables(text, "en").value for text, _ in rows]
    zh = count_syllables("两人之间的关系越来越亲密", "zh").value
    elapsed = time.perf_counter() - start
    misses = [f"{text!r} {g}!={want}" for (text, want), g in zip(rows, got) if g != want]
    ok = not misses and zh == 12 and elapsed < 1.0
    report(1, ok, f"{len(rows) - len(misses)}/{len(rows)} rows exact, zh={zh}, {elapsed * 1000:.1f} ms"
                  + (f"; mismatches: {'; '.join(misses)}" if misses else ""))


def test_criterion_02_ratio_arithmetic():
    rng = random.Random(2)
    worst = 0.0
    for _ in range(1000):
        # positive target counts: with a floored zero denominator the product identity cannot hold
        s = RatioSample(rng.randint(1, 60), rng.randint(1, 90), rng.randint(0, 60))
        rtp, prod = roundtrip_ratio(s), forward_ratio(s) * backward_ratio(s)
        if rtp:
            worst = max(worst, abs(rtp - prod) / abs(rtp))
        elif prod:
            worst = math.inf
    rho = syllable_ratio(12, 10)
    ident = corpus_report([RatioSample(n, 3 * n, n) for n in range(1, 50)])
    ok = abs(rho - 0.8333) <= 1e-4 and worst <= 1e-12 and ident.rtp.mean == 1.0 and ident.frac_rtp_gt_one == 0
    report(2, ok, f"rho(12->10)={rho:.6f}, max rel factorization error {worst:.2e}, "
                  f"identity mean={ident.rtp.mean}, frac>1={ident.frac_rtp_gt_one}")


def test_criterion_03_length_reward():
    inside = all(length_reward_interval(r, EN, 300) == 1.0 for r in np.linspace(0.8, 0.9, 101))
    r = length_reward_interval(0.95, EN, 300)
    rel = abs(r - math.exp(-6.75)) / math.exp(-6.75)
    mu = 40.0
    lower = dynamic_bounds(mu / 4, EN, DynamicBoundsConfig(mu, 0.4, 0.5)).lower
    ok = inside and rel <= 1e-9 and abs(lower - 0.65 * EN.lower) <= 1e-12
    report(3, ok, f"in-bounds all 1: {inside}, R(0.95)={r:.10g} (rel err {rel:.1e}), "
                  f"dynamic lower at mu/4={lower!r}")


def test_criterion_04_composite_linearity():
    rng = random.Random(4)
    worst = 0.0
    for _ in range(1000):
        rho, q = rng.uniform(0, 2), rng.random()
        w = RewardWeights(rng.random(), rng.random())
        b = score_rho(rho, rng.randint(1, 60), q, w, LengthRewardConfig(mode="static"))
        worst = max(worst, abs(b.composite - (w.lambda_len * b.length_reward + w.lambda_qual * q)))
    report(4, worst <= 1e-12, f"max |composite - (l_len*R_len + l_qual*R_qual)| = {worst:.1e} over 1000 triples")


def test_criterion_05_grpo_math():
    rng = np.random.default_rng(5)
    sums, std_err = [], 0.0
    for _ in range(10_000):
        g = rng.integers(2, 17)
        batch = grpo.normalize_advantages(rng.normal(size=g) * rng.uniform(0.01, 3))
        adv = np.array(batch.advantages)
        sums.append(abs(adv.sum()))
        std_err = max(std_err, abs(adv.std() - 1.0))
    zeros = all(a == 0.0 for a in grpo.normalize_advantages([0.37] * 8).advantages)
    mismatches = 0
    for _ in range(10_000):
        r, A, eps = float(rng.uniform(0.01, 3)), float(rng.normal()), float(rng.uniform(0, 0.5))
        oracle = min(r * A, min(max(r, 1 - eps), 1 + eps) * A)
        mismatches += grpo.clipped_term(r, A, eps) != oracle
    mean_sum = float(np.mean(sums))
    ok = mean_sum < 1e-9 and std_err <= 1e-9 and zeros and mismatches == 0
    report(5, ok, f"mean |sum A|={mean_sum:.1e}, max |std-1|={std_err:.1e}, zero-variance zeros: {zeros}, "
                  f"clip mismatches {mismatches}/10000")


def _dynamic(pools, mu=None):
    mu = mu if mu is not None else sum(p.src_syllables for p in pools) / len(pools)
    return LengthRewardConfig(mode="dynamic", dynamic=DynamicBoundsConfig(mu))


def test_criterion_06_simulator_convergence():
    pools = grpo.convergence_pools()
    start = time.perf_counter()
    res = grpo.simulate_training(pools, _dynamic(pools), RewardWeights(), grpo.GRPOConfig(steps=500, seed=42))
    elapsed = time.perf_counter() - start
    tail = grpo.tail_mean_rho(res.trajectory, 100)
    report(6, 0.8 <= tail <= 0.9 and elapsed < 60, f"mean rho over final 100 of 500 steps = {tail:.4f}, {elapsed:.2f} s")


def test_criterion_07_dynamic_vs_static():
    pools, mu = grpo.ablation_pools()
    configs = {"dynamic": _dynamic(pools, mu), "static": LengthRewardConfig(mode="static")}
    stats = {}
    for name, cfg in configs.items():
        entries, variances = [], []
        for seed in range(20):
            traj = grpo.simulate_training(pools, cfg, RewardWeights(), grpo.GRPOConfig(seed=seed)).trajectory
            entry = grpo.first_entry_step(traj, 0.8, 0.9)
            entries.append(len(traj) if entry is None else entry)  # a run that never enters counts as censored
            variances.append(grpo.post_entry_variance(traj, 0.8, 0.9) or 0.0)
        stats[name] = (float(np.mean(entries)), float(np.mean(variances)))
    (de, dv), (se, sv) = stats["dynamic"], stats["static"]
    report(7, de < se and dv <= sv, f"mean first entry dynamic {de:.2f} vs static {se:.2f} steps; "
                                    f"post-entry variance {dv:.3e} vs {sv:.3e}")


def test_criterion_08_beta_anchoring():
    pools = grpo.convergence_pools()
    betas = [0.0, 0.01, 0.05, 1.0]
    kls = []
    for beta in betas:
        runs = [grpo.simulate_training(pools, _dynamic(pools), RewardWeights(), grpo.GRPOConfig(kl_beta=beta, seed=s))
                for s in range(10)]
        kls.append(float(np.mean([r.final_kl() for r in runs])))
    ok = all(b <= a for a, b in zip(kls, kls[1:]))
    report(8, ok, "mean final KL " + ", ".join(f"beta={b}: {k:.4f}" for b, k in zip(betas, kls)))


def test_criterion_09_bleu():
    self_ok = bleu("The bond between them is growing closer.", "The bond between them is growing closer.") == 1.0
    rng = random.Random(9)
    vocab = "the a bond ship saw soul freed closer grows them".split()
    worst = 0.0
    for _ in range(20):
        cand = [rng.choice(vocab) for _ in range(rng.randint(1, 10))]
        ref = [rng.choice(vocab) for _ in range(rng.randint(1, 10))]
        want = oracle_bleu(cand, ref)
        worst = max(worst, abs(bleu(" ".join(cand), " ".join(ref)) - want) / want)
    div_ok = bleu_rho("a b c", "a b c", 0.5) == 2.0 and bleu_rho("a b c", "a b c", 1.25) == 0.8
    report(9, self_ok and worst <= 1e-12 and div_ok,
           f"self-BLEU 1.0: {self_ok}, max rel error vs oracle {worst:.1e} on 20 pairs, BLEU-rho division exact: {div_ok}")


def test_criterion_10_verdict_parsing():
    scores = []
    for key in ("example_1", "example_2"):
        ex = VERDICTS[key]
        scores.append(genrm_reward("", ex["source"], ex["translation"], ScriptedChatClient([ex["completion"]]))[1])
    fluency = (parse_fluency_verdict("<<1>>"), parse_fluency_verdict("<<0>>"))
    raised = 0
    malformed = VERDICTS["malformed"]
    for text in malformed:
        try:
            parse_genrm_output(text)
        except VerdictParseError:
            raised += 1
    ok = scores == [1, 0] and fluency == (1, 0) and raised == len(malformed) >= 3
    report(10, ok, f"examples -> {scores}, fluency -> {list(fluency)}, malformed raising {raised}/{len(malformed)}")


def test_criterion_11_pipeline():
    text8 = "天命人超度了冤魂"
    short = BenchRecord("s", "general", text8, 2.0, 8, character_count(text8) / 2.0, [""] * 10)
    reason = filter_record(short).reason
    text = "天命人超度了金池长老的冤魂"
    pair = [BenchRecord(i, "general", text, 2.6, 13, character_count(text) / 2.6, [""] * 10) for i in ("a", "b")]
    collapsed = len(minhash_dedup(pair))
    rows = synthetic_transcripts(per_domain=25, segments_per_video=10, seed=11)
    cfg = BuildConfig(seed=7, quotas={d.value: 200 for d in Domain})
    first = build_bench(rows, cfg)
    second = build_bench(rows, cfg)
    per_domain = [sum(r.domain is d for r in first.records) for d in Domain]
    identical = (first.records_jsonl() == second.records_jsonl()
                 and json.dumps(first.manifest, sort_keys=True) == json.dumps(second.manifest, sort_keys=True))
    ok = reason == "min_chars" and collapsed == 1 and per_domain == [200] * 5 and identical
    report(11, ok, f"8-char reject reason={reason}, duplicate pair -> {collapsed}, per-domain {per_domain} "
                   f"(total {sum(per_domain)}), rerun byte-identical: {identical}")


def _judge(system, user):
    if "FAULT" in user:
        raise UpstreamError("injected upstream fault")
    return "<<1>>" if len(user) % 3 else "<<0>>"


def test_criterion_12_service_equivalence():
    settings = load_settings(env={}, corpus_mean=12.0)
    rng = random.Random(12)
    sources = ["两人之间的关系越来越亲密", "天命人超度了金池长老的冤魂", "我曾经在这里看到过几艘陌生的船"]
    translations = ["The bond between them is growing closer.", "Their bond grows closer.", "I once saw strange ships here."]
    items = [{"id": f"i{k:02d}", "source": rng.choice(sources), "translation": rng.choice(translations),
              "back_translation": rng.choice(sources)} for k in range(50)]

    def clients():
        return QualityClients(chat=ScriptedChatClient(_judge), embedding=CharNgramEmbedder())

    with TestClient(create_app(settings, clients(), workers=8)) as c:
        results = c.post("/v1/reward", json={"items": items}).json()["results"]
        faulty = [dict(item) for item in items]
        faulty[17]["translation"] = "FAULT"
        fault_results = c.post("/v1/reward", json={"items": faulty}).json()["results"]
    local = clients()
    qcfg = quality_config_from(settings)
    identical = all(
        r["ok"] and r["result"] == json.loads(json.dumps(score_item(RewardItem(**it), settings, local, qcfg).to_dict()))
        for it, r in zip(items, results)
    )
    ordered = [r["id"] for r in results] == [it["id"] for it in items]
    errors = [r for r in fault_results if not r["ok"]]
    one_fault = len(errors) == 1 and errors[0]["id"] == "i17" and errors[0]["error"]["code"] == 502
    elapsed = time.monotonic() - SUITE_START
    ok = identical and ordered and one_fault and elapsed < 300
    report(12, ok, f"50 items bit-identical: {identical}, order kept: {ordered}, single fault envelope: {one_fault}, "
                   f"acceptance suite {elapsed:.1f} s")
