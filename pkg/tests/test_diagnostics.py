import math
import random

import pytest
from hypothesis import given, strategies as st

from syllabudget.diagnostics import (
    RatioSample, backward_ratio, corpus_report, forward_ratio, roundtrip_ratio, sample_from_texts, scatter_points,
    syllable_ratio,
)
from syllabudget.errors import EmptyInputError, MissingBackTranslationError, ValidationError


def test_syllable_ratio_examples():
    assert syllable_ratio(12, 10) == pytest.approx(0.8333, abs=1e-4)
    assert syllable_ratio(0, 5) == 5.0
    assert syllable_ratio(12, 12) == 1.0


@pytest.mark.parametrize("src,tgt,bt,expected", [(12, 20, 12, 1.0), (10, 15, 13, 1.3), (10, 15, 8, 0.8)])
def test_roundtrip_examples(src, tgt, bt, expected):
    assert roundtrip_ratio(RatioSample(src, tgt, bt)) == pytest.approx(expected, rel=1e-15)


def test_missing_back_translation():
    with pytest.raises(MissingBackTranslationError):
        roundtrip_ratio(RatioSample(3, 4))
    with pytest.raises(MissingBackTranslationError):
        backward_ratio(RatioSample(3, 4))


def test_negative_counts_rejected():
    with pytest.raises(ValidationError):
        RatioSample(-1, 3)


def test_report_examples():
    identity = corpus_report([RatioSample(n, 2 * n, n) for n in range(1, 20)])
    assert identity.rtp.mean == 1.0
    assert identity.frac_rtp_gt_one == 0.0

    two = corpus_report([RatioSample(10, 10, 12), RatioSample(10, 10, 8)])
    assert two.rtp.mean == pytest.approx(1.0)
    assert two.frac_rtp_gt_one == 0.5
    assert two.rtp.std == pytest.approx(0.2)  # population std

    single = corpus_report([RatioSample(5, 7, 6)])
    assert single.rtp.std == 0.0 and single.fwd.std == 0.0


def test_report_excludes_missing_bt_from_rtp_only():
    rep = corpus_report([RatioSample(10, 12, 11), RatioSample(10, 20)])
    assert rep.n == 1 and rep.n_total == 2
    assert rep.fwd.n == 2 and rep.rtp.n == 1
    assert rep.fwd.mean == pytest.approx(1.6)


def test_empty_report():
    with pytest.raises(EmptyInputError):
        corpus_report([])


def test_scatter_points_and_texts():
    s = sample_from_texts("两人之间的关系越来越亲密", "The bond between them is growing closer.", "两人的关系越来越亲密", "zh", "en", id="x")
    assert (s.src_syllables, s.tgt_syllables, s.bt_syllables) == (12, 10, 10)
    pts = scatter_points([s, RatioSample(1, 2)])
    assert pts == [{"id": "x", "fwd": 10 / 12, "bwd": 1.0, "rtp": 10 / 12}]


counts = st.integers(min_value=0, max_value=500)


@given(counts, st.integers(min_value=1, max_value=500), counts)
def test_factorization(src, tgt, bt):
    s = RatioSample(src, tgt, bt)
    rtp = roundtrip_ratio(s)
    assert math.isclose(rtp, forward_ratio(s) * backward_ratio(s), rel_tol=1e-12, abs_tol=0) or (src == 0 and rtp == bt)


@given(st.integers(min_value=1, max_value=500), st.integers(min_value=1, max_value=500), st.integers(min_value=0, max_value=500))
def test_scale_invariance(src, tgt, bt):
    a, b = RatioSample(src, tgt, bt), RatioSample(2 * src, 2 * tgt, 2 * bt)
    assert forward_ratio(a) == forward_ratio(b)
    assert backward_ratio(a) == backward_ratio(b)
    assert roundtrip_ratio(a) == roundtrip_ratio(b)


def test_frac_consistency_random():
    rng = random.Random(3)
    samples = [RatioSample(rng.randint(1, 30), rng.randint(1, 40), rng.randint(0, 40)) for _ in range(300)]
    rep = corpus_report(samples)
    assert rep.frac_rtp_gt_one == sum(roundtrip_ratio(s) > 1 for s in samples) / len(samples)
