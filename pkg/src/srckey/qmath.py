"""Small-dimension quantum states, channels and divergences.

Everything here works on dense numpy matrices and is meant for qubits and a
handful of tensored qubits. Logarithms are base 2 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-12
# eigenvalues below this are treated as zero when deciding supports
SUPPORT_TOL = 1e-10
MAX_TENSOR_DIM = 2**14

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


class QMathError(ValueError):
    """Raised for malformed operators or out-of-range parameters."""


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, (DensityOp, Observable)):
        return op.matrix
    mat = np.asarray(op, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise QMathError(f"expected a square matrix, got shape {mat.shape}")
    return mat


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian matrix with no positivity requirement (projectors, POVM elements)."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = _as_matrix(self.matrix)
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise QMathError("observable is not Hermitian")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class DensityOp:
    """A (possibly subnormalised) density operator.

    The matrix must be Hermitian, positive semidefinite and have trace in
    ``(0, 1]``; violations raise :class:`QMathError`.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = _as_matrix(self.matrix)
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise QMathError("density operator is not Hermitian")
        mat = (mat + mat.conj().T) / 2
        if np.linalg.eigvalsh(mat)[0] < -PSD_TOL:
            raise QMathError("density operator is not positive semidefinite")
        tr = float(np.real(np.trace(mat)))
        if not 0.0 < tr <= 1.0 + TRACE_TOL:
            raise QMathError(f"trace {tr} outside (0, 1]")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return np.allclose(self.matrix, _as_matrix(other), atol=atol, rtol=0)


@dataclass(frozen=True, eq=False)
class ClassicalDist:
    """Non-negative probability vector with total mass in ``(0, 1]``.

    ``probs`` may be any shape; joint distributions are stored as 2-D arrays
    indexed ``[a, b]``.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0):
            raise QMathError("negative probability")
        total = float(p.sum())
        if not 0.0 < total <= 1.0 + TRACE_TOL:
            raise QMathError(f"total probability {total} outside (0, 1]")
        object.__setattr__(self, "probs", p)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)


StateLike = Union[DensityOp, np.ndarray, Sequence[Sequence[complex]]]


def as_density(op: StateLike) -> DensityOp:
    return op if isinstance(op, DensityOp) else DensityOp(op)


# ---------------------------------------------------------------------------
# BB84 encodings and channels


def bb84_unitary(x: int, theta: int) -> np.ndarray:
    """The encoding unitary ``H^theta X^x``; it maps ``|0>`` to the BB84 state."""
    if x not in (0, 1) or theta not in (0, 1):
        raise QMathError("x and theta must be bits")
    u = np.eye(2, dtype=complex)
    if x:
        u = _PAULI_X @ u
    if theta:
        u = _HADAMARD @ u
    return u


def bb84_state(x: int, theta: int) -> DensityOp:
    """Pure BB84 state ``H^theta |x><x| H^theta``."""
    if x not in (0, 1) or theta not in (0, 1):
        raise QMathError("x and theta must be bits")
    ket = np.zeros(2, dtype=complex)
    ket[x] = 1.0
    if theta:
        ket = _HADAMARD @ ket
    return DensityOp(np.outer(ket, ket.conj()))


def maximally_mixed(dim: int) -> DensityOp:
    return DensityOp(np.eye(dim, dtype=complex) / dim)


def depolarize(rho: StateLike, p: float) -> DensityOp:
    """Depolarising channel ``(1 - p) rho + p tr(rho) I/d``."""
    if not 0.0 <= p <= 1.0:
        raise QMathError(f"depolarising probability {p} outside [0, 1]")
    rho = as_density(rho)
    tau = np.eye(rho.dim, dtype=complex) / rho.dim
    return DensityOp((1.0 - p) * rho.matrix + p * rho.trace * tau)


def measure(rho: StateLike, basis: int) -> ClassicalDist:
    """Outcome distribution of a qubit measured in Z (``basis=0``) or X (``basis=1``).

    Outcome 0 corresponds to ``|0>`` or ``|+>``.
    """
    rho = as_density(rho)
    if rho.dim != 2:
        raise QMathError("measure expects a qubit state")
    probs = [np.real(bb84_state(b, basis).matrix.conj().ravel() @ rho.matrix.ravel()) for b in (0, 1)]
    return ClassicalDist(np.clip(probs, 0.0, None))


def tensor(ops: Iterable[StateLike]) -> DensityOp:
    """Kronecker product of density operators (total dimension at most ``2**14``)."""
    mats = [_as_matrix(op) for op in ops]
    if not mats:
        raise QMathError("tensor of an empty list")
    total = int(np.prod([m.shape[0] for m in mats]))
    if total > MAX_TENSOR_DIM:
        raise QMathError(f"tensor dimension {total} exceeds {MAX_TENSOR_DIM}")
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return DensityOp(out)


# ---------------------------------------------------------------------------
# distances


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise QMathError(f"dimension mismatch {a.shape} vs {b.shape}")


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def trace_norm(mat) -> float:
    """Sum of singular values."""
    return float(np.sum(np.linalg.svd(_as_matrix(mat), compute_uv=False)))


def trace_distance(rho: StateLike, sigma: StateLike) -> float:
    a, b = _as_matrix(rho), _as_matrix(sigma)
    _check_dims(a, b)
    diff = a - b
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def fidelity(p: StateLike, q: StateLike) -> float:
    """Squared fidelity ``||sqrt(P) sqrt(Q)||_1 ** 2``."""
    a, b = _as_matrix(p), _as_matrix(q)
    _check_dims(a, b)
    return trace_norm(_psd_sqrt(a) @ _psd_sqrt(b)) ** 2


def generalized_fidelity(rho: StateLike, sigma: StateLike) -> float:
    a, b = as_density(rho), as_density(sigma)
    _check_dims(a.matrix, b.matrix)
    slack = np.sqrt(max(0.0, 1.0 - a.trace) * max(0.0, 1.0 - b.trace))
    return (np.sqrt(fidelity(a, b)) + slack) ** 2


def purified_distance(rho: StateLike, sigma: StateLike) -> float:
    return float(np.sqrt(max(0.0, 1.0 - generalized_fidelity(rho, sigma))))


# ---------------------------------------------------------------------------
# divergences


def _support_split(q: np.ndarray):
    """Eigen-decomposition of ``q`` split into support and kernel parts."""
    w, v = np.linalg.eigh(q)
    keep = w > SUPPORT_TOL
    return w[keep], v[:, keep], v[:, ~keep]


def _outside_support(p: np.ndarray, kernel: np.ndarray) -> bool:
    if kernel.shape[1] == 0:
        return False
    leak = kernel.conj().T @ p @ kernel
    return np.max(np.abs(leak)) > SUPPORT_TOL


def dmax(p: StateLike, q: StateLike) -> float:
    """Max-relative entropy ``inf{lam : P <= 2**lam Q}``; ``inf`` if supp P is not in supp Q."""
    a, b = _as_matrix(p), _as_matrix(q)
    _check_dims(a, b)
    w, v, kernel = _support_split(b)
    if _outside_support(a, kernel) or w.size == 0:
        return float("inf")
    inv_sqrt = v / np.sqrt(w)
    sandwiched = inv_sqrt.conj().T @ a @ inv_sqrt
    top = np.linalg.eigvalsh((sandwiched + sandwiched.conj().T) / 2)[-1]
    if top <= 0:
        return float("-inf")
    return float(np.log2(top))


def _herm_power(mat: np.ndarray, power: float) -> np.ndarray:
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    wp = np.zeros_like(w)
    pos = w > SUPPORT_TOL
    wp[pos] = w[pos] ** power
    return (v * wp) @ v.conj().T


def sandwiched_div(p: StateLike, q: StateLike, alpha: float) -> float:
    """Sandwiched Rényi divergence for ``alpha`` in ``[1/2, 1) U (1, inf]``.

    Normalised by ``tr P``. ``alpha = inf`` gives :func:`dmax`.
    """
    if alpha == float("inf"):
        return dmax(p, q)
    if not (0.5 <= alpha < 1.0 or alpha > 1.0):
        raise QMathError(f"alpha={alpha} outside [1/2, 1) U (1, inf]")
    a, b = _as_matrix(p), _as_matrix(q)
    _check_dims(a, b)
    w, v, kernel = _support_split(b)
    if alpha > 1.0 and (_outside_support(a, kernel) or w.size == 0):
        return float("inf")
    # Q^{-alpha'/2} restricted to the support of Q
    exponent = -(alpha - 1.0) / (2.0 * alpha)
    q_pow = (v * w**exponent) @ v.conj().T if w.size else np.zeros_like(b)
    inner = q_pow @ a @ q_pow
    value = float(np.real(np.trace(_herm_power(inner, alpha))))
    if value <= 0.0:
        # only reachable for alpha < 1 when P is orthogonal to Q
        return float("inf")
    tr_p = float(np.real(np.trace(a)))
    return float(np.log2(value / tr_p) / (alpha - 1.0))


def relative_entropy(p: StateLike, q: StateLike) -> float:
    """Umegaki relative entropy normalised by ``tr P``; ``inf`` unless P << Q."""
    a, b = _as_matrix(p), _as_matrix(q)
    _check_dims(a, b)
    w, v, kernel = _support_split(b)
    if _outside_support(a, kernel):
        return float("inf")
    wa, va = np.linalg.eigh((a + a.conj().T) / 2)
    pos = wa > SUPPORT_TOL
    p_log_p = float(np.sum(wa[pos] * np.log2(wa[pos])))
    log_q = (v * np.log2(w)) @ v.conj().T
    p_log_q = float(np.real(np.trace(a @ log_q)))
    return (p_log_p - p_log_q) / float(np.real(np.trace(a)))


# ---------------------------------------------------------------------------
# classical entropies


def hmin_cq(joint) -> float:
    """Classical conditional min-entropy ``-log2 sum_b max_a p(a, b)``.

    ``joint`` is a 2-D array indexed ``[a, b]``, a :class:`ClassicalDist`
    holding one, or a mapping ``{(a, b): p}``.
    """
    if isinstance(joint, Mapping):
        a_vals = sorted({a for a, _ in joint})
        b_vals = sorted({b for _, b in joint})
        table = np.zeros((len(a_vals), len(b_vals)))
        for (a, b), val in joint.items():
            table[a_vals.index(a), b_vals.index(b)] = val
    else:
        table = np.asarray(joint, dtype=float)
    if table.ndim != 2:
        raise QMathError("joint distribution must be two-dimensional")
    dist = ClassicalDist(table)
    if abs(dist.total - 1.0) > 1e-9:
        raise QMathError(f"joint distribution is not normalised (sum={dist.total})")
    return float(-np.log2(np.sum(np.max(dist.probs, axis=0))))


def dh_classical(p, q, mu: float) -> float:
    """Hypothesis-testing relative entropy ``D_h^mu(p || q)`` for commuting inputs.

    Minimises ``sum q*Q`` over tests ``0 <= Q <= 1/mu`` with ``sum p*Q >= 1``.
    The optimum is the Neyman-Pearson test: fill outcomes in decreasing order of
    ``p/q`` up to the cap, with one fractional entry.
    """
    if not 0.0 < mu < 1.0:
        raise QMathError(f"mu={mu} outside (0, 1)")
    p = np.asarray(ClassicalDist(p).probs, dtype=float).ravel()
    q = np.asarray(ClassicalDist(q).probs, dtype=float).ravel()
    if p.shape != q.shape:
        raise QMathError("p and q live on different alphabets")
    if abs(p.sum() - 1.0) > 1e-9:
        raise QMathError("p must be normalised")
    cap = 1.0 / mu
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), np.inf)
    ratio[p == 0] = -np.inf
    order = np.argsort(-ratio, kind="stable")
    need, cost = 1.0, 0.0
    for i in order:
        if need <= 0 or p[i] == 0:
            break
        take = min(cap, need / p[i])
        need -= take * p[i]
        cost += take * q[i]
    if need > 1e-12:
        raise QMathError("infeasible test constraint")
    if cost <= 0.0:
        return float("inf")
    return float(-np.log2(cost))
