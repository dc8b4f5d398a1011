import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scriptocr.metrics import (
    EmptyTruthError,
    EvalRecord,
    MetricsError,
    TierSummary,
    acc_at_k,
    aggregate_tiers,
    cer,
    cer_best_of_4,
    degradation_drop,
    evaluate,
    failure_rates,
    hint_gain,
    levenshtein,
    mean_across_tiers,
    round_half_up,
)
from scriptocr.scriptid import FailureKind
from scriptocr.tiers import ResourceTier


def _dp(a, b):
    # full-matrix reference, independent of the two-row implementation
    m = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        m[i][0] = i
    for j in range(len(b) + 1):
        m[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            m[i][j] = min(m[i - 1][j] + 1, m[i][j - 1] + 1, m[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return m[-1][-1]


def test_frozen_cer_oracle(oracles):
    for pred, truth, expected in oracles["cer"]:
        assert cer(pred, truth) == pytest.approx(expected, abs=0, rel=0), (pred, truth)


@pytest.mark.parametrize("pred,truth,expected", [
    ("abc", "abc", 0.0),
    ("kitten", "sitting", 3 / 7),
    ("xyz", "a", 1.0),
    ("ab c", "abc", 0.0),
    ("a　b c", "abc", 0.0),
])
def test_cer_examples(pred, truth, expected):
    assert cer(pred, truth) == pytest.approx(expected)


def test_cer_empty_truth():
    with pytest.raises(EmptyTruthError):
        cer("abc", " \t\n")


@given(st.text(alphabet="abcαβ", max_size=20), st.text(alphabet="abcαβ", max_size=20))
def test_levenshtein_matches_matrix(a, b):
    assert levenshtein(a, b) == _dp(a, b)


@given(st.text(max_size=15), st.text(max_size=15))
def test_levenshtein_symmetric(a, b):
    assert levenshtein(a, b) == levenshtein(b, a)


@given(st.text(alphabet="abcABCé́ ", max_size=15), st.text(alphabet="abcé", min_size=1, max_size=15))
def test_best_of_4_never_worse(pred, truth):
    best, cfg = cer_best_of_4(pred, truth)
    assert best <= cer(pred, truth)
    assert 0.0 <= best <= 1.0


def test_best_of_4_unique_winners():
    assert cer_best_of_4("abc", "abc") == (0.0, "original")
    assert cer_best_of_4("cba", "abc") == (0.0, "reversed")
    assert cer_best_of_4("ABC", "abc") == (0.0, "lowercased")
    assert cer_best_of_4("abć", "abc") == (0.0, "marks_removed")


def test_best_of_4_tie_keeps_listed_order():
    # palindrome: original and reversed tie, original is listed first
    assert cer_best_of_4("aba", "abc")[1] == "original"


def test_acc_at_k():
    cers = [0, 0.04, 0.06]
    assert acc_at_k(cers, 5) == pytest.approx(2 / 3)
    assert acc_at_k(cers, 0) == pytest.approx(1 / 3)
    assert acc_at_k([1.0, 1.0], 99) == 0.0
    with pytest.raises(MetricsError):
        acc_at_k([], 5)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(0, 100), st.floats(0, 100))
def test_acc_monotone_in_k(cers, k1, k2):
    lo, hi = sorted((k1, k2))
    assert acc_at_k(cers, lo) <= acc_at_k(cers, hi)


def test_evaluate_record_invariants():
    r = evaluate("नमस्ते", "नमस्ते", "Deva", sample_id="x")
    assert r.acc0 and r.acc5 and r.cer == 0 and r.failure.kind is FailureKind.CORRECT
    r = evaluate("hello", "नमस्ते", "Deva", sample_id="x")
    assert not r.acc5 and r.failure.kind is FailureKind.HALLUCINATION and r.predicted_script == "Latn"
    with pytest.raises(ValueError):
        EvalRecord("x", "m", "clean", 0.0, "original", False, True, r.failure, "Deva", None)
    with pytest.raises(ValueError):
        EvalRecord("x", "m", "clean", 1.5, "original", False, False, r.failure, "Deva", None)


def _rec(sid, script, c, model="m", variant="clean", n_chars=40, pred_script=None):
    from scriptocr.scriptid import FailureMode

    kind = FailureKind.CORRECT if pred_script in (None, script) else FailureKind.HALLUCINATION
    return EvalRecord(sid, model, variant, c, "original", c == 0, c <= 0.05,
                      FailureMode(kind, pred_script or script), script, pred_script or script, n_chars=n_chars)


TIERS = {"Latn": ResourceTier.HIGH, "Deva": ResourceTier.MID, "Hebr": ResourceTier.MID, "Nkoo": ResourceTier.LOW}


def test_aggregate_is_macro_over_scripts():
    recs = [_rec(f"d{i}", "Deva", 0.0) for i in range(9)] + [_rec("h0", "Hebr", 1.0)]
    tiers, mean = aggregate_tiers(recs, TIERS)
    (mid,) = tiers
    # per-script first: Deva 1.0, Hebr 0.0 -> 0.5, not 0.9
    assert mid.acc5_macro == pytest.approx(0.5)
    assert mid.n_scripts == 2
    assert mean.acc5_macro == pytest.approx(0.5)


def test_aggregate_single_script_tier_and_missing_script():
    tiers, _ = aggregate_tiers([_rec("a", "Latn", 0.2), _rec("b", "Latn", 0.0)], TIERS)
    assert tiers[0].cer_macro == pytest.approx(0.1)
    with pytest.raises(MetricsError):
        aggregate_tiers([_rec("a", "Grek", 0.0)], TIERS)


def test_mean_across_tiers_examples():
    t = [TierSummary("High", 0.009, 0, 0.953, 0, 1), TierSummary("Mid", 0.030, 0, 0.827, 0, 9),
         TierSummary("Low", 0.790, 0, 0.077, 0, 148)]
    m = mean_across_tiers(t)
    assert round_half_up(100 * m.acc5_macro, 1) == 61.9
    # 0.9, 3.0, 79.0 average to 27.633..., i.e. 27.6 at one decimal
    assert round_half_up(100 * m.cer_macro, 1) == 27.6


def test_round_half_up():
    assert round_half_up(0.25, 1) == 0.3
    assert round_half_up(27.65, 1) == 27.7
    assert round_half_up(-0.25, 1) == -0.3


def test_degradation_drop():
    clean = [_rec("a", "Latn", 0.0), _rec("b", "Latn", 0.0), _rec("c", "Latn", 0.0), _rec("d", "Latn", 0.0),
             _rec("e", "Latn", 0.5)]
    deg = [_rec(r.sample_id, "Latn", c, variant="degraded") for r, c in zip(clean, [0.0, 0.0, 0.0, 0.5, 0.5])]
    (d,) = degradation_drop(clean, deg, TIERS)
    assert d.clean == pytest.approx(0.8) and d.degraded == pytest.approx(0.6)
    assert d.relative == pytest.approx(0.25)
    (z,) = degradation_drop([_rec("a", "Latn", 1.0)], [_rec("a", "Latn", 1.0, variant="degraded")], TIERS)
    assert z.relative is None
    with pytest.raises(MetricsError):
        degradation_drop(clean, deg[:-1], TIERS)


def test_hint_gain_identical_and_threshold():
    base = [_rec("a", "Latn", 0.0, n_chars=40), _rec("b", "Latn", 1.0, n_chars=9)]
    g = hint_gain(base, base)
    assert g.deltas == {"Latn": 0.0} and g.unchanged == 1 and g.excluded == 1
    hinted = [_rec("a", "Latn", 0.0, n_chars=40)]  # short sample absent on the hinted side
    assert hint_gain(base, hinted).excluded == 1
    with pytest.raises(MetricsError):
        hint_gain(base, [_rec("z", "Latn", 0.0)])


def test_failure_rates_partition():
    recs = [_rec("a", "Latn", 0.0), _rec("b", "Deva", 1.0, pred_script="Latn")]
    fr = failure_rates(recs)
    assert math.isclose(sum(fr.values()), 100.0)
    assert fr["correct"] == pytest.approx(50.0) and fr["hallucination"] == pytest.approx(50.0)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.sampled_from(["Latn", "Deva", "Hebr", "Nkoo"]), st.floats(0, 1)), min_size=1, max_size=40))
def test_tier_values_are_bounded(pairs):
    recs = [_rec(f"s{i}", s, c) for i, (s, c) in enumerate(pairs)]
    tiers, mean = aggregate_tiers(recs, TIERS)
    for t in [*tiers, mean]:
        for v in (t.cer_macro, t.acc0_macro, t.acc5_macro, t.scriptacc_macro):
            assert 0.0 <= v <= 1.0 + 1e-12
