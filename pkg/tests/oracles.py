"""Independent reference implementations used by the tests.

None of these import the code under test; they recompute the same quantity
by a different route (enumeration, bisection, arbitrary precision).
"""

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np


def random_state(dim, rng, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_dist(size, rng, zeros=0):
    p = rng.random(size) + 1e-3
    if zeros:
        p[rng.choice(size, zeros, replace=False)] = 0.0
    return p / p.sum()


def dmax_bisection(p, q, lo=-60.0, hi=60.0, iters=200):
    """Smallest lambda with 2**lambda Q - P PSD, by bisection on the minimum eigenvalue.

    Works inside the support of Q; weight of P outside it means no finite lambda.
    """
    w, v = np.linalg.eigh(q)
    u = v[:, w > 1e-10]
    outside = p - u @ (u.conj().T @ p @ u) @ u.conj().T
    if np.abs(outside).max() > 1e-9:
        return math.inf
    qs, ps = u.conj().T @ q @ u, u.conj().T @ p @ u

    def feasible(lam):
        return np.linalg.eigvalsh(2.0**lam * qs - ps).min() >= -1e-12

    if not feasible(hi):
        return math.inf
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if feasible(mid) else (mid, hi)
    return hi


def dh_vertices(p, q, mu):
    """Minimise q.Q over 0 <= Q <= 1/mu, p.Q >= 1 by enumerating LP vertices.

    A vertex has every coordinate at a bound except at most one, which is
    then fixed by the active constraint p.Q = 1.
    """
    p, q = np.asarray(p, float), np.asarray(q, float)
    cap = 1.0 / mu
    k = len(p)
    best = math.inf
    for free in [None] + list(range(k)):
        others = [i for i in range(k) if i != free]
        for assign in itertools.product((0.0, cap), repeat=len(others)):
            Q = np.zeros(k)
            Q[others] = assign
            if free is not None:
                if p[free] == 0:
                    continue
                Q[free] = (1.0 - p @ Q) / p[free]
                if not -1e-12 <= Q[free] <= cap + 1e-12:
                    continue
            if p @ Q >= 1.0 - 1e-12:
                best = min(best, float(q @ Q))
    return math.inf if best == 0 else -math.log2(best)


def classical_renyi(p, q, alpha):
    p, q = np.asarray(p, float), np.asarray(q, float)
    if alpha == math.inf:
        mask = p > 0
        return math.log2(np.max(p[mask] / q[mask]))
    mask = p > 0
    return math.log2(np.sum(p[mask] ** alpha * q[mask] ** (1 - alpha))) / (alpha - 1)


def brute_force_sampling_error(n, m, delta):
    """Worst-case failure probability by iterating over every string and subset with Fractions."""
    total = n + m
    d = Fraction(repr(float(delta)))
    subsets = list(itertools.combinations(range(total), m))
    worst = Fraction(0)
    for bits in itertools.product((0, 1), repeat=total):
        bad = 0
        for g in subsets:
            inside = sum(bits[i] for i in g)
            outside = sum(bits) - inside
            if not abs(Fraction(outside, n) - Fraction(inside, m)) < d:
                bad += 1
        worst = max(worst, Fraction(bad, len(subsets)))
    return worst


def _h(x):
    return -x * mpmath.log(x, 2) - (1 - x) * mpmath.log(1 - x, 2)


def _g0(x):
    return -mpmath.log(1 - mpmath.sqrt(1 - x * x), 2)


def hmin_bound_mp(n, m, mu, e, eps, delta, eps_prime, p_joint, log_t, dps=60, alphabet=2):
    """High-precision evaluation of the assembled min-entropy bound, written out term by term."""
    with mpmath.workdps(dps):
        mpf = mpmath.mpf
        n, m, mu, e, eps, delta = mpf(n), mpf(m), mpf(mu), mpf(e), mpf(eps), mpf(delta)
        eps_prime, P, log_t = mpf(eps_prime), mpf(p_joint), mpf(log_t)
        ecl = min(mpf(1), 2 * mpmath.power(2, -n * delta**2 * m / (n + 2)))
        equ = mpmath.sqrt(ecl)
        eps_pa = 2 * mpmath.sqrt(2 * equ / P)
        V = 2 / mu**2 * mpmath.log((1 - e) / e, 2) + 2 * mpmath.log(1 + 2 * alphabet**2, 2)
        hs = _h(eps + delta)
        r = mpmath.sqrt(2 * hs)
        e1, e2, e3 = eps_prime / 2, eps_prime / 8, eps_prime / 8
        g1 = _g0(e1) - mpmath.log(1 - eps_pa**2, 2)
        total = (n * (1 - 2 * mu - _h(e)) - n * V * r
                 - mpmath.sqrt(n) * (mu**2 * mpmath.log(2) + 2 * mpmath.log(1 / P, 2) + _g0(e2))
                 - V / r * (mpmath.log(1 / (P - 2 * equ), 2) + 1)
                 - g1 * V / (2 * r)
                 - log_t - 3 * _g0(e3))
        return total
