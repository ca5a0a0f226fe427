"""Derivative-free search over protocol parameters for the finite-key rate."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import bounds
from .bounds import EventProbs, ProtocolParams, SecurityReport

AXES = ("mu", "delta", "e", "m_ratio")


class OptimizerError(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    """Ranges for the free parameters plus the fixed inputs of the bound.

    A range given as ``(lo, hi)`` with ``lo == hi`` pins that axis. ``qber``
    is the channel error assumed by the leakage model, ``probs`` the event
    probabilities held fixed during the search.
    """

    n: int
    eps_src: float
    qber: float
    probs: EventProbs
    mu: tuple = (0.05, 0.5)
    delta: tuple = (1e-4, 0.05)
    e: tuple = (0.01, 0.11)
    m_ratio: tuple = (0.01, 0.5)
    resolution: int = 6
    eps_prime: float = 1e-6
    eps_sec: float = 1e-10
    f_ec: float = bounds.DEFAULT_F_EC
    alphabet_size: int = 2
    refine_rounds: int = 3
    shrink: float = 0.25
    hoeffding_base: str = "2"

    def __post_init__(self):
        if self.resolution < 2:
            raise OptimizerError("need at least 2 grid points per axis")
        for axis in AXES:
            lo, hi = getattr(self, axis)
            if lo > hi:
                raise OptimizerError(f"empty range for {axis}")
        if not (0 < self.mu[0] and self.mu[1] < 1 and 0 < self.e[0] and self.e[1] < 0.5
                and 0 < self.delta[0] and self.delta[1] < 1 and self.m_ratio[0] > 0):
            raise OptimizerError("ranges leave the parameter domain")

    def free_axes(self) -> list[str]:
        return [a for a in AXES if getattr(self, a)[0] < getattr(self, a)[1]]

    def grid(self, axis: str) -> np.ndarray:
        lo, hi = getattr(self, axis)
        return np.array([lo]) if lo == hi else np.linspace(lo, hi, self.resolution)

    def clip(self, axis: str, value: float) -> float:
        lo, hi = getattr(self, axis)
        return min(hi, max(lo, value))

    def with_n(self, n: int) -> "SearchSpace":
        return replace(self, n=n)


@dataclass
class Evaluation:
    point: dict
    objective: float
    valid: bool
    stage: str


@dataclass
class OptimizationResult:
    best_params: Optional[ProtocolParams]
    best_report: Optional[SecurityReport]
    best_point: Optional[dict]
    trace: list = field(default_factory=list)
    round_best: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.best_params is not None


def make_params(space: SearchSpace, point: dict) -> ProtocolParams:
    m = max(1, int(round(point["m_ratio"] * space.n)))
    return ProtocolParams(n=space.n, m=m, mu=point["mu"], e=point["e"], eps_src=space.eps_src,
                          delta=point["delta"], eps_prime=space.eps_prime, alphabet_size=space.alphabet_size)


def evaluate(space: SearchSpace, point: dict) -> tuple[float, SecurityReport, ProtocolParams]:
    """Objective is the per-round bound after the privacy-amplification deduction.

    Returns ``-inf`` for points violating a precondition.
    """
    params = make_params(space, point)
    log_t = bounds.leakage_bits(space.n, space.qber, space.f_ec)
    report = bounds.hmin_lower_bound(params, space.probs, log_t=log_t, eps_sec=space.eps_sec,
                                     hoeffding_base=space.hoeffding_base)
    if not report.valid or not math.isfinite(report.raw_rate):
        return float("-inf"), report, params
    return report.raw_rate, report, params


def optimize_rate(space: SearchSpace, seeds: Sequence[dict] = ()) -> OptimizationResult:
    """Coarse grid search, then coordinate descent with shrinking steps.

    Refinement round ``k`` (1-based) uses ``spacing * shrink**k`` as its step
    and walks each free axis in either direction for as long as the objective
    improves. ``seeds`` are extra starting points evaluated after the grid,
    e.g. the optimum found at a neighbouring block length. Every evaluated
    point is recorded in the trace.
    """
    trace: list[Evaluation] = []
    best = (float("-inf"), None, None, None)

    def visit(point, stage):
        nonlocal best
        obj, report, params = evaluate(space, point)
        trace.append(Evaluation(dict(point), obj, report.valid, stage))
        if obj > best[0]:
            best = (obj, report, params, dict(point))
        return obj

    axes = list(AXES)
    for combo in itertools.product(*(space.grid(a) for a in axes)):
        visit({a: float(v) for a, v in zip(axes, combo)}, "grid")
    for seed in seeds:
        visit({a: space.clip(a, float(seed[a])) for a in axes}, "seed")

    result = OptimizationResult(None, None, None, trace)
    if best[1] is None:
        return result
    result.round_best.append(best[0])

    free = space.free_axes()
    spacing = {a: (getattr(space, a)[1] - getattr(space, a)[0]) / (space.resolution - 1) for a in free}
    for r in range(1, space.refine_rounds + 1):
        step = {a: d * space.shrink**r for a, d in spacing.items()}
        for a in free:
            for direction in (1.0, -1.0):
                while True:
                    current, before = best[3], best[0]
                    cand = dict(current, **{a: space.clip(a, current[a] + direction * step[a])})
                    if cand[a] == current[a]:
                        break
                    visit(cand, f"refine{r}")
                    if not best[0] > before:
                        break
        result.round_best.append(best[0])

    result.best_params, result.best_report, result.best_point = best[2], best[1], best[3]
    return result


@dataclass(frozen=True)
class CurveRow:
    n: int
    best_rate: float
    key_length: int
    dominant_penalty: str
    mu: float
    e: float
    delta: float
    m: int

    def to_row(self) -> dict:
        return dict(self.__dict__)


def rate_curve(space: SearchSpace, n_values: Sequence[int]) -> list[CurveRow]:
    """Optimise at each block length, warm-started from the previous optimum.

    Rows with no feasible point are omitted.
    """
    if list(n_values) != sorted(n_values):
        raise OptimizerError("n_values must be ascending")
    rows = []
    seeds: list[dict] = []
    for n in n_values:
        # the previous optimum stays a candidate, so the curve cannot dip
        res = optimize_rate(space.with_n(int(n)), seeds)
        if not res.feasible:
            continue
        seeds = [res.best_point]
        rep, par = res.best_report, res.best_params
        rows.append(CurveRow(int(n), rep.raw_rate, rep.key_length, rep.dominant_penalty(), par.mu, par.e,
                             par.delta, par.m))
    return rows
