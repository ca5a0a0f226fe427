"""Executable BB84 with a source test in front of it.

Qubits are carried as Bloch vectors so that whole protocol runs are
vectorised; :meth:`SourceRounds.states` converts back to :class:`DensityOp`
when exact density-matrix checks are wanted.

A run draws ``n + m`` rounds from a source, tests a uniformly random
``m``-subset of them in their preparation bases, and forwards the remaining
``n`` rounds (in order) to BB84: basis choice, transmission through a
channel, sifting, modelled error correction, parameter estimation and
Toeplitz privacy amplification.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import bounds
from .bounds import EventProbs, ProtocolParams
from .qmath import DensityOp
from .sampling import wilson_interval

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class ProtocolError(ValueError):
    pass


def bloch_to_density(r) -> DensityOp:
    r = np.asarray(r, dtype=float)
    mat = np.eye(2, dtype=complex) / 2 + sum(r[k] * _PAULI[k] for k in range(3)) / 2
    return DensityOp(mat)


def density_to_bloch(rho) -> np.ndarray:
    mat = np.asarray(rho, dtype=complex)
    return np.array([np.real(np.trace(mat @ p)) for p in _PAULI])


def ideal_bloch(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Bloch vectors of the BB84 states: ``+-z`` for Z encodings, ``+-x`` for X."""
    x = np.asarray(x)
    theta = np.asarray(theta)
    sign = 1.0 - 2.0 * x
    r = np.zeros(x.shape + (3,))
    r[..., 0] = np.where(theta == 1, sign, 0.0)
    r[..., 2] = np.where(theta == 0, sign, 0.0)
    return r


def measure_bloch(r: np.ndarray, basis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample outcomes (0 for ``|0>``/``|+>``) of Z or X measurements."""
    component = np.where(basis == 1, r[:, 0], r[:, 2])
    p_zero = np.clip((1.0 + component) / 2.0, 0.0, 1.0)
    return (rng.random(len(r)) >= p_zero).astype(np.uint8)


# ---------------------------------------------------------------------------
# sources


class SourceModel:
    """Emits the qubit for each round given Alice's bit and basis.

    :meth:`fresh` returns an instance ready for a new protocol run, with any
    per-run randomness (e.g. a latched coin) drawn from ``rng``.
    :meth:`emit` is the round-by-round (streaming) interface and
    :meth:`emit_batch` its vectorised equivalent.
    """

    kind = "perfect"

    def fresh(self, rng: np.random.Generator) -> "SourceModel":
        src = copy.copy(self)
        src._prev = None
        return src

    def emit(self, x: int, theta: int) -> np.ndarray:
        r = self.emit_batch(np.array([x]), np.array([theta]), previous=getattr(self, "_prev", None))[0]
        self._prev = (x, theta)
        return r

    def emit_batch(self, x: np.ndarray, theta: np.ndarray, previous=None) -> np.ndarray:
        return ideal_bloch(x, theta)

    def spec(self) -> str:
        return self.kind


class PerfectSource(SourceModel):
    kind = "perfect"


class DepolarizedSource(SourceModel):
    """Ideal states sent through a depolarising channel of strength ``p``."""

    kind = "depolarized"

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ProtocolError("depolarising strength outside [0, 1]")
        self.p = p

    def emit_batch(self, x, theta, previous=None):
        return (1.0 - self.p) * ideal_bloch(x, theta)

    def spec(self):
        return f"{self.kind}:{self.p!r}"


class TiltMemorySource(SourceModel):
    """Polariser inertia: after a basis switch the state is rotated by ``kappa``
    radians toward the previous round's ideal state."""

    kind = "tilt"

    def __init__(self, kappa: float):
        self.kappa = kappa

    def emit_batch(self, x, theta, previous=None):
        r = ideal_bloch(x, theta)
        if self.kappa == 0.0 or len(x) == 0:
            return r
        prev = np.empty((len(x), 3))
        prev[1:] = r[:-1]
        switched = np.zeros(len(x), dtype=bool)
        switched[1:] = theta[1:] != theta[:-1]
        if previous is not None:
            prev[0] = ideal_bloch(np.array([previous[0]]), np.array([previous[1]]))[0]
            switched[0] = theta[0] != previous[1]
        # the two ideal states are orthogonal on the sphere after a basis switch
        tilted = math.cos(self.kappa) * r + math.sin(self.kappa) * prev
        return np.where(switched[:, None], tilted, r)

    def spec(self):
        return f"{self.kind}:{self.kappa!r}"


class CoinFlipSource(SourceModel):
    """Flips one coin per run; with probability ``eps_s`` every Z-basis round emits ``|0>``."""

    kind = "coinflip"

    def __init__(self, eps_s: float):
        if not 0.0 <= eps_s <= 1.0:
            raise ProtocolError("coin bias outside [0, 1]")
        self.eps_s = eps_s
        self.bad: Optional[bool] = None

    def fresh(self, rng):
        src = super().fresh(rng)
        src.bad = bool(rng.random() < self.eps_s)
        return src

    def emit_batch(self, x, theta, previous=None):
        if self.bad is None:
            raise ProtocolError("call fresh() before emitting")
        r = ideal_bloch(x, theta)
        if self.bad:
            r[theta == 0] = (0.0, 0.0, 1.0)
        return r

    def spec(self):
        return f"{self.kind}:{self.eps_s!r}"


_SOURCES = {"perfect": PerfectSource, "depolarized": DepolarizedSource, "tilt": TiltMemorySource,
            "coinflip": CoinFlipSource}


def parse_source(text: str) -> SourceModel:
    """Build a source from ``kind`` or ``kind:param`` (e.g. ``coinflip:0.1``)."""
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    if kind not in _SOURCES:
        raise ProtocolError(f"unknown source {kind!r}")
    if kind == "perfect":
        return PerfectSource()
    if not arg:
        raise ProtocolError(f"source {kind!r} needs a parameter")
    return _SOURCES[kind](float(arg))


# ---------------------------------------------------------------------------
# channels


class ChannelModel:
    """Per-round qubit channel between Alice and Bob."""

    kind = "identity"

    def apply(self, r: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return r

    def apply_density(self, rho) -> DensityOp:
        """Average action on a single density operator."""
        return DensityOp(np.asarray(rho, dtype=complex))

    def spec(self) -> str:
        return self.kind


class IdentityChannel(ChannelModel):
    kind = "identity"


class BitFlipChannel(ChannelModel):
    """Flips the encoded bit in both bases with probability ``p``.

    Realised as the Pauli-Y channel, the qubit map that flips Z and X
    eigenstates alike.
    """

    kind = "bitflip"

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ProtocolError("flip probability outside [0, 1]")
        self.p = p

    def apply(self, r, rng):
        out = r.copy()
        out[:, 0] *= 1.0 - 2.0 * self.p
        out[:, 2] *= 1.0 - 2.0 * self.p
        return out

    def apply_density(self, rho):
        m = np.asarray(rho, dtype=complex)
        return DensityOp((1 - self.p) * m + self.p * _PAULI[1] @ m @ _PAULI[1])

    def spec(self):
        return f"{self.kind}:{self.p!r}"


class DepolarizingChannel(ChannelModel):
    kind = "depolarizing"

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ProtocolError("depolarising strength outside [0, 1]")
        self.p = p

    def apply(self, r, rng):
        return (1.0 - self.p) * r

    def apply_density(self, rho):
        m = np.asarray(rho, dtype=complex)
        return DensityOp((1 - self.p) * m + self.p * np.trace(m) * np.eye(2) / 2)

    def spec(self):
        return f"{self.kind}:{self.p!r}"


class InterceptResendChannel(ChannelModel):
    """Eve measures a ``fraction`` of rounds in a random basis and re-prepares the outcome."""

    kind = "intercept"

    def __init__(self, fraction: float):
        if not 0.0 <= fraction <= 1.0:
            raise ProtocolError("intercept fraction outside [0, 1]")
        self.fraction = fraction

    def apply(self, r, rng):
        k = len(r)
        hit = rng.random(k) < self.fraction
        basis = (rng.random(k) < 0.5).astype(np.uint8)
        outcome = measure_bloch(r, basis, rng)
        resent = ideal_bloch(outcome, basis)
        return np.where(hit[:, None], resent, r)

    def apply_density(self, rho):
        from .qmath import bb84_state, measure

        m = np.asarray(rho, dtype=complex)
        eve = np.zeros((2, 2), dtype=complex)
        for basis in (0, 1):
            probs = measure(DensityOp(m), basis).probs
            for k in (0, 1):
                eve += 0.5 * probs[k] * bb84_state(k, basis).matrix
        return DensityOp((1 - self.fraction) * m + self.fraction * eve)

    def spec(self):
        return f"{self.kind}:{self.fraction!r}"


_CHANNELS = {"identity": IdentityChannel, "bitflip": BitFlipChannel, "depolarizing": DepolarizingChannel,
             "intercept": InterceptResendChannel}


def parse_channel(text: str) -> ChannelModel:
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    if kind not in _CHANNELS:
        raise ProtocolError(f"unknown channel {kind!r}")
    if kind == "identity":
        return IdentityChannel()
    if not arg:
        raise ProtocolError(f"channel {kind!r} needs a parameter")
    return _CHANNELS[kind](float(arg))


# ---------------------------------------------------------------------------
# source-test measurement devices


@dataclass(frozen=True)
class MeasurementModel:
    """Source-test measurement: perfect, or flipping each outcome independently.

    For ``IndepError`` the analysis pair is ``eps_m = error + delta_prime`` and
    ``xi = exp(-2 m delta_prime**2)``.
    """

    error: float = 0.0
    delta_prime: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.error < 0.5 or self.delta_prime < 0.0:
            raise ProtocolError("need error in [0, 1/2) and delta_prime >= 0")

    @property
    def perfect(self) -> bool:
        return self.error == 0.0

    def flip(self, outcomes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.perfect:
            return outcomes
        return outcomes ^ (rng.random(len(outcomes)) < self.error).astype(np.uint8)

    def analysis_params(self, m: int) -> tuple[float, float]:
        return self.error + self.delta_prime, math.exp(-2.0 * m * self.delta_prime**2)

    def spec(self) -> str:
        return "perfect" if self.perfect else f"indep:{self.error!r}:{self.delta_prime!r}"


PerfectTest = MeasurementModel()


def IndepError(error: float, delta_prime: float = 0.0) -> MeasurementModel:
    return MeasurementModel(error, delta_prime)


def parse_measurement(text: str) -> MeasurementModel:
    parts = text.strip().split(":")
    if parts[0] == "perfect":
        return PerfectTest
    if parts[0] == "indep" and len(parts) in (2, 3):
        return MeasurementModel(float(parts[1]), float(parts[2]) if len(parts) == 3 else 0.0)
    raise ProtocolError(f"unknown measurement model {text!r}")


# ---------------------------------------------------------------------------
# source test


@dataclass
class SourceRounds:
    """Rounds forwarded by the source test: bits, bases and Bloch vectors."""

    x: np.ndarray
    theta: np.ndarray
    bloch: np.ndarray

    def __len__(self):
        return len(self.x)

    def __iter__(self) -> Iterator[tuple[int, int, DensityOp]]:
        for k in range(len(self)):
            yield int(self.x[k]), int(self.theta[k]), bloch_to_density(self.bloch[k])

    def states(self) -> list[DensityOp]:
        return [bloch_to_density(r) for r in self.bloch]


@dataclass
class SourceTestResult:
    passed: bool
    surviving: SourceRounds
    observed_error: float
    tested: np.ndarray

    def __iter__(self):
        # unpacks as (passed, surviving_rounds, observed_error)
        return iter((self.passed, self.surviving, self.observed_error))


def _draw_subset(total: int, size: int, rng: np.random.Generator) -> np.ndarray:
    # partial Fisher-Yates with all swap targets drawn up front
    targets = rng.integers(np.arange(size), total) if size else np.empty(0, dtype=np.int64)
    idx = list(range(total))
    for i, j in enumerate(targets.tolist()):
        idx[i], idx[j] = idx[j], idx[i]
    return np.sort(np.array(idx[:size], dtype=np.int64))


def run_source_test(source: SourceModel, n: int, m: int, eps: float, meas_model: MeasurementModel,
                    rng: np.random.Generator, mu: float = 0.5, streaming: bool = False) -> SourceTestResult:
    """Test ``m`` of ``n + m`` emitted rounds; abort if the error fraction exceeds ``eps``.

    Alice's bits are uniform and her basis is X with probability ``mu``. The
    subset is drawn first so that, in streaming mode, each round is either
    measured or forwarded as it is emitted.
    """
    if n < 1 or m < 1:
        raise ProtocolError("need n >= 1 and m >= 1")
    total = n + m
    src = source.fresh(rng)
    gamma = _draw_subset(total, m, rng)
    x = rng.integers(0, 2, size=total, dtype=np.uint8)
    theta = (rng.random(total) < mu).astype(np.uint8)
    if streaming:
        bloch = np.array([src.emit(int(x[i]), int(theta[i])) for i in range(total)])
    else:
        bloch = src.emit_batch(x, theta)
    tested = np.zeros(total, dtype=bool)
    tested[gamma] = True
    outcomes = meas_model.flip(measure_bloch(bloch[tested], theta[tested], rng), rng)
    observed = float(np.count_nonzero(outcomes != x[tested])) / m
    keep = ~tested
    surviving = SourceRounds(x[keep], theta[keep], bloch[keep])
    return SourceTestResult(observed <= eps, surviving, observed, gamma)


# ---------------------------------------------------------------------------
# error correction and privacy amplification


def verification_hash(bits: np.ndarray, seed: int) -> bytes:
    """Keyed 64-bit BLAKE2b tag of a bit string."""
    key = int(seed).to_bytes(8, "little")
    payload = np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes() + len(bits).to_bytes(8, "little")
    return hashlib.blake2b(payload, digest_size=8, key=key).digest()


@dataclass(frozen=True)
class ECResult:
    guess: np.ndarray
    transcript_bits: int
    verified: bool

    def __iter__(self):
        return iter((self.guess, self.transcript_bits, self.verified))


def error_correct(x_s: np.ndarray, y_s: np.ndarray, f_ec: float = bounds.DEFAULT_F_EC,
                  verify_bits: int = bounds.DEFAULT_VERIFY_BITS, hash_seed: int = 0) -> ECResult:
    """Modelled error correction: Bob recovers ``x_s`` and pays the leakage-model cost."""
    x_s = np.asarray(x_s, dtype=np.uint8)
    y_s = np.asarray(y_s, dtype=np.uint8)
    if x_s.shape != y_s.shape:
        raise ProtocolError("x_S and y_S differ in length")
    raw = float(np.count_nonzero(x_s != y_s)) / len(x_s) if len(x_s) else 0.0
    guess = x_s.copy()
    bits = bounds.leakage_bits(len(x_s), raw, f_ec, verify_bits)
    verified = verification_hash(x_s, hash_seed) == verification_hash(guess, hash_seed)
    return ECResult(guess, bits, verified)


def toeplitz_seed_bits(length: int, out_len: int, seed) -> np.ndarray:
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(int(seed)).integers(0, 2, size=out_len + length - 1, dtype=np.uint8)
    bits = np.asarray(seed, dtype=np.uint8)
    if bits.shape != (out_len + length - 1,):
        raise ProtocolError("Toeplitz seed must have out_len + len(x) - 1 bits")
    return bits


def privacy_amplify(x_s: np.ndarray, length: int, seed) -> np.ndarray:
    """Toeplitz hash over GF(2): ``T x`` with ``T[i, j] = s[i - j + len(x) - 1]``.

    ``seed`` is either an integer (expanded into seed bits with a PCG64
    stream) or the ``length + len(x_s) - 1`` seed bits themselves.
    """
    x_s = np.asarray(x_s, dtype=np.uint8)
    if not 0 <= length <= len(x_s):
        raise ProtocolError(f"key length {length} outside [0, {len(x_s)}]")
    if length == 0:
        return np.zeros(0, dtype=np.uint8)
    s = toeplitz_seed_bits(len(x_s), length, seed)
    matrix = sliding_window_view(s[::-1], len(x_s))[::-1]
    # float sums are exact below 2**24 (float32) or 2**53 (float64)
    dtype = np.float32 if len(x_s) < 2**24 else np.float64
    return (matrix.astype(dtype) @ x_s.astype(dtype)).astype(np.int64).astype(np.uint8) & 1


# ---------------------------------------------------------------------------
# BB84


@dataclass
class TrialRecord:
    """Classical registers of one protocol run plus its abort flags."""

    x: np.ndarray
    theta: np.ndarray
    theta_hat: np.ndarray
    y: np.ndarray
    sifted: np.ndarray
    sifted_x: np.ndarray
    qber: float
    true_error: float
    source_test_error: float
    aborted_source_test: bool
    aborted_pe: bool
    ec_verified: bool
    transcript_bits: int
    key_alice: np.ndarray
    key_bob: np.ndarray
    tested: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    upsilon2: bool = False

    @property
    def aborted(self) -> bool:
        return self.aborted_source_test or self.aborted_pe or not self.ec_verified

    def to_dict(self) -> dict:
        def bits(a):
            return "".join(map(str, np.asarray(a, dtype=np.uint8).tolist()))

        return {
            "x": bits(self.x), "theta": bits(self.theta), "theta_hat": bits(self.theta_hat), "y": bits(self.y),
            "sifted": self.sifted.tolist(), "sifted_x": self.sifted_x.tolist(), "tested": self.tested.tolist(),
            "qber": self.qber, "true_error": self.true_error, "source_test_error": self.source_test_error,
            "aborted_source_test": self.aborted_source_test, "aborted_pe": self.aborted_pe,
            "ec_verified": self.ec_verified, "upsilon2": self.upsilon2, "transcript_bits": self.transcript_bits,
            "key_alice": bits(self.key_alice), "key_bob": bits(self.key_bob),
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def _empty_record(result: SourceTestResult) -> TrialRecord:
    e = np.zeros(0, dtype=np.uint8)
    i = np.zeros(0, dtype=np.int64)
    return TrialRecord(e, e, e, e, i, i, float("nan"), float("nan"), result.observed_error, True, False, False, 0,
                       e, e, tested=result.tested)


def run_bb84(rounds: SourceRounds, channel: ChannelModel, params: ProtocolParams, rng: np.random.Generator,
             f_ec: float = bounds.DEFAULT_F_EC, verify_bits: int = bounds.DEFAULT_VERIFY_BITS) -> TrialRecord:
    """One BB84 run on the forwarded rounds.

    Bob measures in X with probability ``mu``. Sifting keeps rounds with
    matching bases; ``qber`` is measured on the X-basis sifted rounds from
    Bob's corrected guess, ``true_error`` from Alice's actual bits. The run
    aborts when ``qber > e``; with no X-basis round after sifting both rates
    are 0 (nothing was observed) and the run continues. The key is
    the Toeplitz hash of all sifted bits to ``min(floor(r n), |S|)`` bits.
    """
    n = len(rounds)
    if n != params.n:
        raise ProtocolError(f"expected {params.n} rounds, got {n}")
    theta_hat = (rng.random(n) < params.mu).astype(np.uint8)
    received = channel.apply(rounds.bloch, rng)
    y = measure_bloch(received, theta_hat, rng)
    x, theta = rounds.x, rounds.theta
    sifted = np.flatnonzero(theta == theta_hat)
    sifted_x = sifted[theta[sifted] == 1]

    hash_seed = int(rng.integers(0, 2**63))
    guess, transcript, verified = error_correct(x[sifted], y[sifted], f_ec, verify_bits, hash_seed)
    x_hat = np.zeros(n, dtype=np.uint8)
    x_hat[sifted] = guess
    if len(sifted_x):
        qber = float(np.count_nonzero(x_hat[sifted_x] != y[sifted_x])) / len(sifted_x)
        true_error = float(np.count_nonzero(x[sifted_x] != y[sifted_x])) / len(sifted_x)
    else:
        qber = true_error = 0.0
    aborted_pe = qber > params.e
    upsilon2 = true_error <= params.e

    pa_seed = int(rng.integers(0, 2**63))
    if aborted_pe or not verified:
        key_a = key_b = np.zeros(0, dtype=np.uint8)
    else:
        length = min(math.floor(params.key_rate * n), len(sifted))
        key_a = privacy_amplify(x[sifted], length, pa_seed)
        key_b = privacy_amplify(x_hat[sifted], length, pa_seed)
    return TrialRecord(x, theta, theta_hat, y, sifted, sifted_x, qber, true_error, float("nan"), False, aborted_pe,
                       verified, transcript, key_a, key_b, upsilon2=upsilon2)


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Independent per-trial stream derived from a 64-bit master seed."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed) % 2**64, spawn_key=(trial,)))


def run_protocol(source: SourceModel, channel: ChannelModel, params: ProtocolParams, rng: np.random.Generator,
                 meas_model: MeasurementModel = PerfectTest, streaming: bool = False) -> TrialRecord:
    """Source test followed, if it passes, by BB84 on the surviving rounds."""
    result = run_source_test(source, params.n, params.m, params.eps_src, meas_model, rng, params.mu, streaming)
    if not result.passed:
        return _empty_record(result)
    record = run_bb84(result.surviving, channel, params, rng)
    record.source_test_error = result.observed_error
    record.tested = result.tested
    return record


# ---------------------------------------------------------------------------
# Monte Carlo estimation of the event probabilities


@dataclass
class Counters:
    trials: int = 0
    omega: int = 0
    omega_upsilon2: int = 0
    pe_aborts: int = 0
    ec_failures: int = 0
    keys_produced: int = 0
    keys_match: int = 0
    # exact rationals so that merging blocks in any order gives identical sums
    qber_sum: Fraction = Fraction(0)
    qber_count: int = 0
    test_error_sum: Fraction = Fraction(0)

    def add(self, rec: TrialRecord) -> None:
        self.trials += 1
        self.test_error_sum += Fraction(rec.source_test_error)
        if rec.aborted_source_test:
            return
        self.omega += 1
        self.omega_upsilon2 += rec.upsilon2
        self.pe_aborts += rec.aborted_pe
        self.ec_failures += not rec.ec_verified
        if len(rec.sifted_x):
            self.qber_sum += Fraction(rec.qber)
            self.qber_count += 1
        if not rec.aborted:
            self.keys_produced += 1
            self.keys_match += bool(np.array_equal(rec.key_alice, rec.key_bob))

    def merge(self, other: "Counters") -> "Counters":
        out = Counters()
        for k in out.__dict__:
            setattr(out, k, getattr(self, k) + getattr(other, k))
        return out


@dataclass
class EventEstimate:
    probs: EventProbs
    intervals: dict
    counters: Counters
    master_seed: int

    @property
    def mean_qber(self) -> float:
        c = self.counters
        return float(c.qber_sum / c.qber_count) if c.qber_count else float("nan")

    def summary(self) -> dict:
        c = self.counters
        return {
            "trials": c.trials,
            "source_test_aborts": c.trials - c.omega,
            "source_test_abort_frequency": (c.trials - c.omega) / c.trials,
            "pe_aborts": c.pe_aborts,
            "ec_failures": c.ec_failures,
            "keys_produced": c.keys_produced,
            "keys_match": c.keys_match,
            "mean_qber": self.mean_qber,
            "mean_source_test_error": float(c.test_error_sum / c.trials),
            "p_omega": self.probs.p_omega,
            "p_omega_and_upsilon2": self.probs.p_omega_and_upsilon2,
            "p_omega_im": self.probs.p_omega_im,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
            "master_seed": self.master_seed,
        }


def _run_block(source, channel, params, meas_model, master_seed, trials) -> Counters:
    c = Counters()
    for t in trials:
        c.add(run_protocol(source, channel, params, trial_rng(master_seed, t), meas_model))
    return c


def estimate_event_probs(source: SourceModel, channel: ChannelModel, params: ProtocolParams, trials: int,
                         rng_seed: int, meas_model: MeasurementModel = PerfectTest,
                         workers: int = 1) -> EventEstimate:
    """Frequencies of the source test passing and of passing with true X-basis error at most ``e``.

    Trial ``t`` always uses stream ``t`` of the master seed, so results do not
    depend on ``workers``.
    """
    if trials < 1:
        raise ProtocolError("trials must be positive")
    workers = max(1, int(workers))
    blocks = [range(k, trials, workers) for k in range(workers)]
    if workers == 1:
        parts = [_run_block(source, channel, params, meas_model, rng_seed, blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_block(source, channel, params, meas_model, rng_seed, b), blocks))
    total = Counters()
    for part in parts:
        total = total.merge(part)
    p_omega = total.omega / total.trials
    probs = EventProbs(p_omega, total.omega_upsilon2 / total.trials,
                       None if meas_model.perfect else p_omega)
    intervals = {"p_omega": wilson_interval(total.omega, total.trials),
                 "p_omega_and_upsilon2": wilson_interval(total.omega_upsilon2, total.trials)}
    return EventEstimate(probs, intervals, total, int(rng_seed))
