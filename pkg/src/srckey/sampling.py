"""Classical sampling strategies: relative weights, correctness sets and error probabilities.

A strategy picks a uniformly random ``m``-subset of ``n + m`` positions and
estimates the relative weight of the unsampled positions from the sampled
ones. The worst-case probability that the estimate is off by ``delta`` or
more is computed exactly (by weight class or by brute force) and compared
against the Hoeffding-type closed form used by the key-rate analysis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import mpmath
import numpy as np
from scipy.stats import binomtest

from . import bounds

MAX_TOTAL = 20
MAX_SUBSETS = 2_000_000
MAX_ENUMERATED_TOTAL = 16


class SamplingError(ValueError):
    pass


def _as_fraction(x) -> Fraction:
    # decimal reading so that 0.1 means 1/10 and ties are decided exactly
    return x if isinstance(x, Fraction) else Fraction(repr(float(x)))


def _nonzero(symbols) -> list[bool]:
    if isinstance(symbols, str):
        return [c != "0" for c in symbols]
    return [bool(v) for v in symbols]


def relative_weight(s) -> Fraction:
    """Fraction of non-zero symbols, as an exact rational."""
    flags = _nonzero(s)
    if not flags:
        raise SamplingError("relative weight of an empty string")
    return Fraction(sum(flags), len(flags))


@dataclass(frozen=True)
class SamplingStrategy:
    """Uniform ``sample_size``-subset of ``total`` positions plus an estimator.

    The estimator maps ``(subset, sampled symbols)`` to an estimate of the
    relative weight of the rest; the default is the sample's own relative
    weight.
    """

    total: int
    sample_size: int
    estimator: Optional[Callable] = None

    def __post_init__(self):
        if not 1 <= self.sample_size < self.total:
            raise SamplingError("need 1 <= m < n + m")

    @property
    def n(self) -> int:
        return self.total - self.sample_size

    @property
    def m(self) -> int:
        return self.sample_size

    def estimate(self, gamma: Sequence[int], sampled) -> Fraction:
        if self.estimator is None:
            return relative_weight(sampled)
        return self.estimator(gamma, sampled)


def in_correct_set(s, gamma: Iterable[int], delta, strategy: SamplingStrategy) -> bool:
    """Whether ``|w(s_rest) - f(gamma, s_gamma)| < delta`` (strict), ``gamma`` 0-based."""
    flags = _nonzero(s)
    if len(flags) != strategy.total:
        raise SamplingError("string length does not match the strategy")
    gamma = sorted(gamma)
    if len(set(gamma)) != strategy.m or any(not 0 <= i < strategy.total for i in gamma):
        raise SamplingError("malformed subset")
    chosen = set(gamma)
    sampled = [flags[i] for i in gamma]
    rest = [flags[i] for i in range(strategy.total) if i not in chosen]
    return abs(relative_weight(rest) - strategy.estimate(gamma, sampled)) < _as_fraction(delta)


def _guard(strategy: SamplingStrategy) -> None:
    if strategy.total > MAX_TOTAL or math.comb(strategy.total, strategy.m) > MAX_SUBSETS:
        raise SamplingError(f"n+m={strategy.total}, m={strategy.m} exceeds the enumeration guard")


def weight_class_error(strategy: SamplingStrategy, delta, weight: int) -> Fraction:
    """Exact failure probability for any string with ``weight`` ones (default estimator)."""
    N, n, m = strategy.total, strategy.n, strategy.m
    d = _as_fraction(delta)
    bad = 0
    for j in range(max(0, weight - n), min(m, weight) + 1):
        # j ones land in the sample
        if not abs(Fraction(weight - j, n) - Fraction(j, m)) < d:
            bad += math.comb(weight, j) * math.comb(N - weight, m - j)
    return Fraction(bad, math.comb(N, m))


def exact_classical_error(strategy: SamplingStrategy, delta) -> Fraction:
    """Worst-case probability over strings of an estimate off by ``delta`` or more.

    Under uniform subsets with the default estimator the failure probability
    depends only on the string's weight, so the maximum runs over the
    ``n + m + 1`` weight classes. Custom estimators fall back to brute force.
    """
    _guard(strategy)
    if strategy.estimator is not None:
        return exact_classical_error_enumerated(strategy, delta)
    return max(weight_class_error(strategy, delta, k) for k in range(strategy.total + 1))


def exact_classical_error_enumerated(strategy: SamplingStrategy, delta) -> Fraction:
    """Brute force over all ``2**(n+m)`` binary strings and all subsets."""
    N, n, m = strategy.total, strategy.n, strategy.m
    if N > MAX_ENUMERATED_TOTAL:
        raise SamplingError(f"n+m={N} too large for full enumeration")
    _guard(strategy)
    subsets = list(itertools.combinations(range(N), m))
    strings = ((np.arange(2**N)[:, None] >> np.arange(N)) & 1).astype(np.int64)
    if strategy.estimator is not None:
        worst = 0
        for row in strings:
            bad = sum(not in_correct_set(row, g, delta, strategy) for g in subsets)
            worst = max(worst, bad)
        return Fraction(worst, len(subsets))
    masks = np.zeros((len(subsets), N), dtype=np.int64)
    for r, g in enumerate(subsets):
        masks[r, list(g)] = 1
    d = _as_fraction(delta)
    ones_in = strings @ masks.T
    ones_out = strings.sum(axis=1, keepdims=True) - ones_in
    # |out/n - in/m| < p/q  <=>  q |out*m - in*n| < p n m
    gap = np.abs(ones_out * m - ones_in * n) * d.denominator
    bad = (gap >= d.numerator * n * m).sum(axis=1)
    return Fraction(int(bad.max()), len(subsets))


def random_subset(total: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted uniform ``size``-subset of ``range(total)`` by partial Fisher-Yates."""
    idx = np.arange(total)
    for i in range(size):
        j = int(rng.integers(i, total))
        idx[i], idx[j] = idx[j], idx[i]
    return np.sort(idx[:size])


def _random_subsets(total: int, size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    # row-wise partial Fisher-Yates
    idx = np.tile(np.arange(total), (count, 1))
    rows = np.arange(count)
    for i in range(size):
        j = rng.integers(i, total, size=count)
        a, b = idx[rows, i].copy(), idx[rows, j].copy()
        idx[rows, i], idx[rows, j] = b, a
    return idx[:, :size]


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    interval: tuple
    failures: int
    trials: int


def mc_classical_error(strategy: SamplingStrategy, delta, weight_class: int, trials: int,
                       rng_seed: int) -> MonteCarloEstimate:
    """Monte Carlo failure probability for a string of the given weight, with a 99% Wilson interval."""
    if trials < 1:
        raise SamplingError("trials must be positive")
    if not 0 <= weight_class <= strategy.total:
        raise SamplingError("weight class out of range")
    rng = np.random.default_rng(rng_seed)
    s = np.zeros(strategy.total, dtype=np.int64)
    s[:weight_class] = 1
    subsets = _random_subsets(strategy.total, strategy.m, trials, rng)
    ones_in = s[subsets].sum(axis=1)
    ones_out = weight_class - ones_in
    d = _as_fraction(delta)
    gap = np.abs(ones_out * strategy.m - ones_in * strategy.n) * d.denominator
    failures = int((gap >= d.numerator * strategy.n * strategy.m).sum())
    return MonteCarloEstimate(failures / trials, wilson_interval(failures, trials), failures, trials)


@dataclass(frozen=True)
class HoeffdingCheck:
    n: int
    m: int
    delta: float
    exact: float
    bound_base2: float
    bound_basee: float
    passed: bool

    @property
    def margin_base2(self) -> float:
        return self.bound_base2 - self.exact

    @property
    def margin_basee(self) -> float:
        return self.bound_basee - self.exact

    def to_row(self) -> dict:
        row = asdict(self)
        row["pass"] = row.pop("passed")
        return row


def check_hoeffding(strategy: SamplingStrategy, delta: float) -> HoeffdingCheck:
    """Compare the exact worst-case error with ``2 b**(-n delta^2 m/(n+2))`` for ``b`` in {2, e}."""
    exact = exact_classical_error(strategy, delta)
    b2 = bounds.eps_cl(strategy.n, strategy.m, delta, base="2")
    be = bounds.eps_cl(strategy.n, strategy.m, delta, base="e")
    ok = exact <= _as_fraction(b2) and exact <= _as_fraction(be)
    return HoeffdingCheck(strategy.n, strategy.m, float(delta), float(exact), b2, be, bool(ok))


def default_suite(max_total: int = 16, sample_sizes: Iterable[int] = range(2, 7),
                  deltas: Iterable[float] = (0.1, 0.2, 0.3)) -> list[tuple[int, int, float]]:
    """``(total, m, delta)`` triples with ``n >= 1``."""
    return [(N, m, d) for N in range(2, max_total + 1) for m in sample_sizes if 1 <= m < N for d in deltas]


def run_suite(configs: Iterable[tuple[int, int, float]]) -> list[HoeffdingCheck]:
    return [check_hoeffding(SamplingStrategy(N, m), d) for N, m, d in configs]


# ---------------------------------------------------------------------------
# diagonal projector inequality for the depolarised reference state


@dataclass(frozen=True)
class ProjectorCheck:
    n: int
    w: float
    min_diagonal: Fraction
    bound: float
    passed: bool


def projector_inequality(n: int, w) -> ProjectorCheck:
    """Check ``min_{z: w(z) < w} <z|eta^{(x)n}|z> >= 2**(-n h(w))`` by enumeration.

    ``eta`` is the classical bit that is 1 with probability ``w``. The
    diagonal entries are exact rationals; the right-hand side is evaluated at
    50 significant digits.
    """
    if n < 1 or n > MAX_ENUMERATED_TOTAL:
        raise SamplingError("n outside the enumeration range")
    wf = _as_fraction(w)
    if not 0 < wf < Fraction(1, 2):
        raise SamplingError("w must lie in (0, 1/2)")
    smallest = None
    for bits in itertools.product((0, 1), repeat=n):
        ones = sum(bits)
        if not Fraction(ones, n) < wf:
            continue
        entry = Fraction(1)
        for b in bits:
            entry *= wf if b else 1 - wf
        if smallest is None or entry < smallest:
            smallest = entry
    with mpmath.workdps(50):
        wm = mpmath.mpf(wf.numerator) / wf.denominator
        h = -wm * mpmath.log(wm, 2) - (1 - wm) * mpmath.log(1 - wm, 2)
        rhs = mpmath.power(2, -n * h)
        ok = mpmath.mpf(smallest.numerator) / smallest.denominator >= rhs
    return ProjectorCheck(n, float(w), smallest, float(rhs), bool(ok))
