"""Finite-key security bounds for BB84 run on the output of a source test.

All logarithms and exponentials are base 2 unless a function says otherwise.
Probabilities of the protocol events are inputs here; they come either from
assumptions or from :mod:`srckey.protocol`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

LN2 = math.log(2.0)
INV_SQRT2 = 1.0 / math.sqrt(2.0)

DEFAULT_F_EC = 1.16
DEFAULT_VERIFY_BITS = 64


class BoundsError(ValueError):
    """Raised for arguments outside a formula's domain."""


@dataclass(frozen=True)
class ProtocolParams:
    """Protocol and analysis parameters.

    ``eps_src`` is the source-test threshold, ``eps_prime`` the total smoothing
    budget split among the chain-rule terms, and ``eps_m``/``xi`` describe
    imperfect source-test measurements.
    """

    n: int
    m: int
    mu: float
    e: float
    eps_src: float
    delta: float
    eps_prime: float = 1e-6
    eps_m: float = 0.0
    xi: float = 0.0
    alphabet_size: int = 2
    key_rate: float = 0.1

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise BoundsError("need n >= 1 and m >= 0")
        if not 0.0 < self.mu < 1.0:
            raise BoundsError(f"mu={self.mu} outside (0, 1)")
        if not 0.0 < self.e < 0.5:
            raise BoundsError(f"e={self.e} outside (0, 1/2)")
        if not 0.0 <= self.eps_src < 1.0:
            raise BoundsError(f"eps_src={self.eps_src} outside [0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise BoundsError(f"delta={self.delta} outside (0, 1)")
        if self.eps_prime <= 0.0:
            raise BoundsError("eps_prime must be positive")
        if self.eps_m < 0.0 or not 0.0 <= self.xi < 1.0:
            raise BoundsError("need eps_m >= 0 and xi in [0, 1)")
        if not 0.0 < self.key_rate < 1.0:
            raise BoundsError(f"key_rate={self.key_rate} outside (0, 1)")

    @property
    def source_error(self) -> float:
        """``eps_src + delta``, the depolarising weight scale of the ideal source."""
        return self.eps_src + self.delta

    def preconditions(self) -> list[str]:
        """Violated parameter-level preconditions of the min-entropy bound."""
        reasons = []
        s = self.source_error
        if s >= 1.0 or binary_entropy(min(s, 1.0)) >= INV_SQRT2:
            reasons.append("h(eps+delta) >= 1/sqrt(2)")
        return reasons

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EventProbs:
    """Probabilities of source-test pass and of passing with low true X-basis error."""

    p_omega: float
    p_omega_and_upsilon2: float
    p_omega_im: Optional[float] = None

    def __post_init__(self):
        for name in ("p_omega", "p_omega_and_upsilon2", "p_omega_im"):
            val = getattr(self, name)
            if val is not None and not 0.0 <= val <= 1.0:
                raise BoundsError(f"{name}={val} outside [0, 1]")
        if self.p_omega_and_upsilon2 > self.p_omega + 1e-15:
            raise BoundsError("Pr(Omega and Upsilon'') exceeds Pr(Omega)")

    def to_dict(self) -> dict:
        return asdict(self)


class DmaxBound(NamedTuple):
    bound: float
    eps_f: float
    valid: bool
    reasons: tuple = ()
    notes: tuple = ()


@dataclass
class SecurityReport:
    """Every quantity entering the smooth min-entropy bound.

    ``terms`` holds the signed contributions of the bound so that the
    dominant penalty can be named; ``hmin_bound`` is their sum.
    """

    eps_cl: float
    eps_qu: float
    eps_pa: float
    eps_splits: tuple
    alpha: float
    beta: float
    V: float
    eat_term: float
    hmax_term: float
    hmin_bound: float
    log_t: float
    smoothing: float
    terms: dict = field(default_factory=dict)
    key_length: int = 0
    rate: float = 0.0
    raw_rate: float = float("nan")
    eps_sec: float = 1e-10
    valid: bool = True
    reasons: list = field(default_factory=list)
    imperfect: Optional[dict] = None

    @property
    def reason(self) -> str:
        return "; ".join(self.reasons)

    def dominant_penalty(self) -> str:
        penalties = {k: v for k, v in self.terms.items() if k != "leading" and v < 0}
        if not penalties:
            return "none"
        return min(penalties, key=penalties.get)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eps_splits"] = list(self.eps_splits)
        out["reason"] = self.reason
        out["dominant_penalty"] = self.dominant_penalty()
        return out


# ---------------------------------------------------------------------------
# scalar building blocks


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise BoundsError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def g0(x: float) -> float:
    """``-log2(1 - sqrt(1 - x**2))``; diverges at ``x = 0``."""
    if not 0.0 < x <= 1.0:
        raise BoundsError(f"g0 argument {x} outside (0, 1]")
    # 1 - sqrt(1 - x^2) written to avoid cancellation for small x
    return -math.log2(x * x / (1.0 + math.sqrt(1.0 - x * x)))


def g1(x: float, y: float) -> float:
    if not 0.0 <= y < 1.0:
        raise BoundsError(f"g1 second argument {y} outside [0, 1)")
    return g0(x) - math.log2(1.0 - y * y)


def _hoeffding_exponent(n: int, m: int, delta: float) -> float:
    return n * delta * delta * m / (n + 2)


def eps_cl(n: int, m: int, delta: float, base: str = "2") -> float:
    """Classical sampling error ``2 * base**(-n delta^2 m / (n+2))``, clamped to 1.

    ``base`` is ``"2"`` (default) or ``"e"``.
    """
    if n < 1 or m < 0 or not delta > 0.0:
        raise BoundsError("need n >= 1, m >= 0, delta > 0")
    x = _hoeffding_exponent(n, m, delta)
    raw = 2.0 * (2.0 ** (-x) if base == "2" else math.exp(-x))
    return min(1.0, raw)


def eps_qu(n: int, m: int, delta: float, base: str = "2") -> float:
    """Quantum sampling error, the square root of :func:`eps_cl`.

    Evaluated as ``sqrt(2) * base**(-x/2)`` so that it stays accurate where
    ``eps_cl`` itself is subnormal.
    """
    if n < 1 or m < 0 or not delta > 0.0:
        raise BoundsError("need n >= 1, m >= 0, delta > 0")
    x = _hoeffding_exponent(n, m, delta) / 2.0
    raw = math.sqrt(2.0) * (2.0 ** (-x) if base == "2" else math.exp(-x))
    return min(1.0, raw)


def v_const(mu: float, e: float, alphabet_size: int = 2) -> float:
    """Second-order coefficient ``(2/mu^2) log((1-e)/e) + 2 log(1 + 2|X|^2)``."""
    if not 0.0 < mu <= 1.0 or not 0.0 < e < 0.5:
        raise BoundsError("need mu in (0, 1] and e in (0, 1/2)")
    return 2.0 / mu**2 * math.log2((1.0 - e) / e) + 2.0 * math.log2(1.0 + 2.0 * alphabet_size**2)


def alpha_choice(eps: float, delta: float, V: float) -> float:
    h = binary_entropy(eps + delta)
    if h <= 0.0:
        raise BoundsError("h(eps+delta) must be positive")
    if h >= INV_SQRT2:
        raise BoundsError("h(eps+delta) >= 1/sqrt(2)")
    alpha = 1.0 + 2.0 * math.sqrt(2.0 * h) / V
    if not 1.0 < alpha < 1.0 + 2.0 / V:
        raise BoundsError(f"alpha={alpha} outside (1, 1 + 2/V)")
    return alpha


def eat_alpha_bound(n: int, mu: float, e: float, alpha: float, V: float, p_sigma_upsilon2: float = 1.0) -> float:
    """Rényi entropy accumulated over ``n`` rounds of the noisy ideal protocol."""
    if not 1.0 < alpha < 1.0 + 2.0 / V:
        raise BoundsError(f"alpha={alpha} outside (1, 1 + 2/V)")
    if not 0.0 < p_sigma_upsilon2 <= 1.0:
        raise BoundsError("p_sigma_upsilon2 outside (0, 1]")
    first = n * (1.0 - 2.0 * mu + mu * mu - binary_entropy(e))
    second = n * (alpha - 1.0) * V * V / 4.0
    return first - second - alpha / (alpha - 1.0) * math.log2(1.0 / p_sigma_upsilon2)


def hmax_bound(n: int, mu: float, eps2: float, p_joint: float) -> float:
    """Max-entropy of Bob's X-basis outcomes with ``beta = 1 + 1/sqrt(n)``.

    ``ln 2`` in the ``sqrt(n)`` term is the natural log of two.
    """
    if n < 1 or not 0.0 < eps2 < 1.0 or not 0.0 < p_joint <= 1.0:
        raise BoundsError("need n >= 1, eps2 in (0, 1), p_joint in (0, 1]")
    root = math.sqrt(n)
    return n * mu * mu + root * (mu * mu * LN2 + 2.0 * math.log2(1.0 / p_joint) + g0(eps2))


def leakage_bits(sifted: int, qber: float, f_ec: float = DEFAULT_F_EC, verify_bits: int = DEFAULT_VERIFY_BITS) -> int:
    """Modelled error-correction transcript length ``ceil(f |S| h(qber)) + verify``."""
    return int(math.ceil(f_ec * sifted * binary_entropy(qber))) + verify_bits


# ---------------------------------------------------------------------------
# smooth D_max bounds for the source test


def dmax_bound_perfect(params: ProtocolParams, probs: EventProbs, *, eps_qu_value: Optional[float] = None,
                       hoeffding_base: str = "2") -> DmaxBound:
    """Smooth max-relative entropy between the tested source and the depolarised ideal source."""
    eq = eps_qu(params.n, params.m, params.delta, hoeffding_base) if eps_qu_value is None else eps_qu_value
    p = probs.p_omega
    if p <= eq:
        return DmaxBound(float("inf"), float("nan"), False, ("Pr(Omega) <= eps_qu",))
    s = params.source_error
    if s >= 1.0:
        return DmaxBound(float("inf"), float("nan"), False, ("eps+delta >= 1",))
    bound = params.n * binary_entropy(s) + math.log2(1.0 / (p - eq))
    eps_f = 2.0 * math.sqrt(eq / p)
    return DmaxBound(bound, eps_f, True)


def dmax_bound_imperfect(params: ProtocolParams, probs: EventProbs, *, eps_qu_value: Optional[float] = None,
                         hoeffding_base: str = "2") -> DmaxBound:
    """As :func:`dmax_bound_perfect` for source-test measurements with error ``(eps_m, xi)``.

    Uses ``probs.p_omega_im`` when given, otherwise ``probs.p_omega``.
    """
    eq = eps_qu(params.n, params.m, params.delta, hoeffding_base) if eps_qu_value is None else eps_qu_value
    p = probs.p_omega if probs.p_omega_im is None else probs.p_omega_im
    xi = params.xi
    reasons = []
    if xi <= 0.0:
        reasons.append("xi must be positive")
    if p <= eq + 4.0 * xi:
        reasons.append("Pr(Omega_im) <= eps_qu + 4 xi")
    s = params.source_error + params.eps_m
    if s >= 1.0:
        reasons.append("eps+eps_m+delta >= 1")
    if reasons:
        return DmaxBound(float("inf"), float("nan"), False, tuple(reasons))
    slack = p - eq
    bound = (params.n * binary_entropy(s) + 2.0 + math.log2(1.0 / slack)
             + math.log2(1.0 / (4.0 * xi * (slack - 4.0 * xi))))
    eps_f = 2.0 * math.sqrt(xi) / math.sqrt(slack) + 2.0 * math.sqrt(eq / p)
    notes = ()
    if xi < 2.0 ** (-params.m / 16.0):
        notes = ("xi exponentially small in m: the xi term adds O(m) bits",)
    return DmaxBound(bound, eps_f, True, (), notes)


# ---------------------------------------------------------------------------
# assembled min-entropy bound


def hmin_lower_bound(params: ProtocolParams, probs: EventProbs, *, log_t: Optional[float] = None,
                     eps_splits: Optional[tuple] = None, eps_sec: float = 1e-10,
                     hoeffding_base: str = "2", imperfect: bool = False) -> SecurityReport:
    """Lower bound on the smooth min-entropy of the raw key conditioned on passing.

    Parameters
    ----------
    log_t : float, optional
        Error-correction transcript length in bits. Defaults to the leakage
        model on ``n`` sifted bits at QBER ``e``.
    eps_splits : (eps1, eps2, eps3), optional
        Smoothing budget split; defaults to ``(eps'/2, eps'/8, eps'/8)``.
    imperfect : bool
        Also evaluate the imperfect-measurement D_max bound and attach it.

    Returns
    -------
    SecurityReport
        ``valid`` is False, with reasons, whenever a precondition fails; the
        bound is still evaluated where its terms are defined and is NaN
        otherwise.
    """
    n, mu, e = params.n, params.mu, params.e
    ep = params.eps_prime
    if eps_splits is None:
        eps_splits = (ep / 2.0, ep / 8.0, ep / 8.0)
    e1, e2, e3 = eps_splits
    if log_t is None:
        log_t = float(leakage_bits(n, e))
    p = probs.p_omega_and_upsilon2
    reasons = list(params.preconditions())

    ecl = eps_cl(n, params.m, params.delta, hoeffding_base)
    equ = eps_qu(n, params.m, params.delta, hoeffding_base)
    if p <= 2.0 * equ:
        reasons.append("Pr(Omega and Upsilon'') <= 2 eps_qu")

    V = v_const(mu, e, params.alphabet_size)
    s = params.source_error
    h_s = binary_entropy(min(s, 1.0))
    root_h = math.sqrt(2.0 * h_s)
    eps_pa = 2.0 * math.sqrt(2.0 * equ / p) if p > 0 else float("inf")
    if eps_pa >= 1.0:
        reasons.append("eps_pa >= 1")
    if h_s <= 0.0:
        reasons.append("h(eps+delta) = 0")

    alpha = 1.0 + 2.0 * root_h / V
    if not reasons and not 1.0 < alpha < 1.0 + 2.0 / V:
        reasons.append("alpha outside (1, 1 + 2/V)")
    beta = 1.0 + 1.0 / math.sqrt(n)

    nan = float("nan")
    terms = {
        "leading": n * (1.0 - 2.0 * mu - binary_entropy(e)),
        "source_linear": -n * V * root_h,
        "sqrt_n": -math.sqrt(n) * (mu * mu * LN2 + (2.0 * math.log2(1.0 / p) if p > 0 else math.inf) + g0(e2)),
        "event_prob": (-V / root_h * (math.log2(1.0 / (p - 2.0 * equ)) + 1.0)
                       if p > 2.0 * equ and root_h > 0 else nan),
        "smoothing": (-g1(e1, eps_pa) * V / (2.0 * root_h)
                      if eps_pa < 1.0 and root_h > 0 else nan),
        "transcript": -float(log_t),
        "chain_rule": -3.0 * g0(e3),
    }
    hmin = math.fsum(terms.values()) if all(math.isfinite(v) for v in terms.values()) else nan

    eat = eat_alpha_bound(n, mu, e, alpha, V) if 1.0 < alpha < 1.0 + 2.0 / V else nan
    hmax = hmax_bound(n, mu, e2, p) if p > 0 else nan

    report = SecurityReport(
        eps_cl=ecl, eps_qu=equ, eps_pa=eps_pa, eps_splits=(e1, e2, e3), alpha=alpha, beta=beta, V=V,
        eat_term=eat, hmax_term=hmax, hmin_bound=hmin, log_t=float(log_t),
        smoothing=eps_pa + e1 + 2.0 * (e2 + e3), terms=terms, eps_sec=eps_sec,
        valid=not reasons, reasons=reasons,
    )
    if imperfect:
        im = dmax_bound_imperfect(params, probs, hoeffding_base=hoeffding_base)
        report.imperfect = {"dmax_bound": im.bound, "eps_f": im.eps_f, "valid": im.valid,
                            "reasons": list(im.reasons), "notes": list(im.notes),
                            "eps_m": params.eps_m, "xi": params.xi}
        if not im.valid:
            report.valid = False
            report.reasons.extend(f"imperfect measurements: {r}" for r in im.reasons)
    if report.valid:
        report.key_length = key_length(report, eps_sec)
        report.raw_rate = (hmin - 2.0 * math.log2(1.0 / eps_sec)) / n
        report.rate = report.key_length / n
    return report


def key_length(report: SecurityReport, eps_sec_target: float) -> int:
    """``max(0, floor(hmin - 2 log2(1/eps_sec)))`` for a valid report."""
    if not report.valid:
        raise BoundsError(f"invalid report: {report.reason}")
    if not 0.0 < eps_sec_target < 1.0:
        raise BoundsError("eps_sec_target outside (0, 1)")
    return max(0, math.floor(report.hmin_bound - 2.0 * math.log2(1.0 / eps_sec_target)))


def asymptotic_rate(mu: float, e: float, eps: float, delta: float, alphabet_size: int = 2) -> float:
    """Per-round rate as ``n`` grows: ``1 - 2 mu - h(e) - V sqrt(2 h(eps+delta))``."""
    V = v_const(mu, e, alphabet_size)
    return 1.0 - 2.0 * mu - binary_entropy(e) - V * math.sqrt(2.0 * binary_entropy(eps + delta))
