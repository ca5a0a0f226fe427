import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_sampling_error
from srckey import bounds, sampling
from srckey.sampling import SamplingError, SamplingStrategy


def test_relative_weight():
    assert sampling.relative_weight("0000") == 0
    assert sampling.relative_weight([1, 1, 1, 1]) == 1
    assert sampling.relative_weight("01010") == Fraction(2, 5)
    assert sampling.relative_weight("0120") == Fraction(1, 2)
    with pytest.raises(SamplingError):
        sampling.relative_weight("")


def test_in_correct_set_examples():
    st4 = SamplingStrategy(6, 2)
    assert sampling.in_correct_set("000000", [0, 3], 0.01, st4)
    # sample {1, 2} (1-based) reads 11, rest reads 0000
    assert not sampling.in_correct_set("110000", [0, 1], 1.0, st4)
    assert sampling.in_correct_set("110000", [0, 1], 1.01, st4)
    with pytest.raises(SamplingError):
        sampling.in_correct_set("110000", [0, 0], 0.5, st4)
    with pytest.raises(SamplingError):
        sampling.in_correct_set("11000", [0, 1], 0.5, st4)


def _direct_check(bits, gamma, delta):
    rest = [b for i, b in enumerate(bits) if i not in gamma]
    sample = [bits[i] for i in gamma]
    return abs(Fraction(sum(rest), len(rest)) - Fraction(sum(sample), len(sample))) < Fraction(repr(delta))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**12 - 1), st.integers(1, 11), st.sampled_from([0.1, 0.25, 0.4]))
def test_in_correct_set_matches_direct_checker(word, m, delta):
    bits = [(word >> k) & 1 for k in range(12)]
    strat = SamplingStrategy(12, m)
    for gamma in itertools.islice(itertools.combinations(range(12), m), 200):
        assert sampling.in_correct_set(bits, gamma, delta, strat) == _direct_check(bits, set(gamma), delta)


def test_exact_error_small_case():
    # n = m = 2: every weight class enumerated by hand
    strat = SamplingStrategy(4, 2)
    assert sampling.exact_classical_error(strat, 0.3) == brute_force_sampling_error(2, 2, 0.3)
    assert sampling.weight_class_error(strat, 0.3, 0) == 0
    # weight 2 fails only when the sample holds both ones or neither
    assert sampling.weight_class_error(strat, 0.3, 2) == Fraction(2, 6)


def test_delta_above_one_is_error_free():
    for total, m in [(5, 2), (10, 3), (16, 6)]:
        strat = SamplingStrategy(total, m)
        assert sampling.exact_classical_error(strat, 1.5) == 0
        est = sampling.mc_classical_error(strat, 1.5, total // 2, 1000, 3)
        assert est.failures == 0 and est.interval[1] < 0.01


@pytest.mark.parametrize("total", range(3, 9))
def test_weight_classes_match_brute_force(total):
    for m in range(1, total):
        for delta in (0.1, 0.25, 0.4):
            strat = SamplingStrategy(total, m)
            assert sampling.exact_classical_error(strat, delta) == brute_force_sampling_error(total - m, m, delta)


def test_custom_estimator_uses_enumeration():
    strat = SamplingStrategy(6, 2, estimator=lambda g, s: Fraction(0))
    # estimator always says 0: worst case is the string with n ones outside the sample
    assert sampling.exact_classical_error(strat, 0.5) == 1


def test_guard():
    with pytest.raises(SamplingError):
        sampling.exact_classical_error(SamplingStrategy(21, 3), 0.1)
    with pytest.raises(SamplingError):
        sampling.exact_classical_error_enumerated(SamplingStrategy(17, 2), 0.1)
    with pytest.raises(SamplingError):
        SamplingStrategy(5, 5)


def test_mc_within_wilson_interval():
    rng = np.random.default_rng(11)
    hits = 0
    for k in range(30):
        total = int(rng.integers(6, 17))
        m = int(rng.integers(2, min(7, total)))
        delta = float(rng.choice([0.1, 0.2, 0.3]))
        w = int(rng.integers(0, total + 1))
        strat = SamplingStrategy(total, m)
        exact = float(sampling.weight_class_error(strat, delta, w))
        est = sampling.mc_classical_error(strat, delta, w, 4000, 1000 + k)
        hits += est.interval[0] <= exact <= est.interval[1]
    assert hits >= 29


def test_mc_reproducible_and_interval_scaling():
    strat = SamplingStrategy(14, 4)
    a = sampling.mc_classical_error(strat, 0.2, 7, 5000, 9)
    b = sampling.mc_classical_error(strat, 0.2, 7, 5000, 9)
    assert a == b
    big = sampling.mc_classical_error(strat, 0.2, 7, 20000, 9)
    ratio = (a.interval[1] - a.interval[0]) / (big.interval[1] - big.interval[0])
    assert ratio == pytest.approx(2.0, rel=0.15)


def test_random_subset_uniform():
    rng = np.random.default_rng(0)
    counts = {}
    for _ in range(6000):
        key = tuple(sampling.random_subset(4, 2, rng).tolist())
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    assert all(abs(c - 1000) < 150 for c in counts.values())


def test_hoeffding_rows():
    check = sampling.check_hoeffding(SamplingStrategy(12, 4), 0.2)
    assert check.passed
    row = check.to_row()
    assert set(row) == {"n", "m", "delta", "exact", "bound_base2", "bound_basee", "pass"}
    assert row["bound_base2"] == pytest.approx(bounds.eps_cl(8, 4, 0.2), abs=1e-12)
    assert check.margin_base2 >= 0 and check.margin_basee >= 0


def test_hoeffding_delta_point_nine():
    for total, m in [(8, 2), (12, 5), (16, 6)]:
        check = sampling.check_hoeffding(SamplingStrategy(total, m), 0.9)
        assert check.passed
        assert check.exact < check.bound_base2


def test_projector_inequality_small():
    for n in range(1, 9):
        for w in (0.1, 0.2, 0.3):
            res = sampling.projector_inequality(n, w)
            assert res.passed
    res = sampling.projector_inequality(5, 0.3)
    # strings with fewer than 1.5 ones: the minimum has exactly one 1
    assert res.min_diagonal == Fraction(3, 10) * Fraction(7, 10) ** 4
