import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from srckey import bounds, protocol, qmath
from srckey.bounds import ProtocolParams
from srckey.protocol import ProtocolError


def params(**kw):
    base = dict(n=2000, m=200, mu=0.5, e=0.05, eps_src=0.01, delta=0.01)
    base.update(kw)
    return ProtocolParams(**base)


def test_bloch_roundtrip_matches_bb84_states():
    for x in (0, 1):
        for theta in (0, 1):
            r = protocol.ideal_bloch(np.array([x]), np.array([theta]))[0]
            assert np.allclose(protocol.bloch_to_density(r).matrix, qmath.bb84_state(x, theta).matrix)
            assert np.allclose(protocol.density_to_bloch(qmath.bb84_state(x, theta)), r)


def test_depolarized_source_matches_qmath():
    src = protocol.DepolarizedSource(0.3).fresh(np.random.default_rng(0))
    r = src.emit_batch(np.array([1]), np.array([1]))[0]
    expected = qmath.depolarize(qmath.bb84_state(1, 1), 0.3)
    assert np.allclose(protocol.bloch_to_density(r).matrix, expected.matrix)


def test_zero_parameter_sources_equal_perfect():
    rng_args = dict(n=500, m=50, eps=0.0, meas_model=protocol.PerfectTest)
    ref = protocol.run_source_test(protocol.PerfectSource(), rng=np.random.default_rng(3), **rng_args)
    for src in (protocol.TiltMemorySource(0.0), protocol.DepolarizedSource(0.0)):
        out = protocol.run_source_test(src, rng=np.random.default_rng(3), **rng_args)
        assert np.array_equal(out.surviving.bloch, ref.surviving.bloch)
        assert np.array_equal(out.tested, ref.tested)


def test_tilt_source_rotates_after_switch():
    src = protocol.TiltMemorySource(0.2).fresh(np.random.default_rng(0))
    r = src.emit_batch(np.array([0, 0, 1]), np.array([0, 1, 1]))
    assert np.allclose(r[0], [0, 0, 1])
    assert np.allclose(r[1], [math.cos(0.2), 0, math.sin(0.2)])
    assert np.allclose(r[2], [-1, 0, 0])
    assert np.allclose(np.linalg.norm(r, axis=1), 1.0)


def test_streaming_equals_batch():
    for src in (protocol.PerfectSource(), protocol.TiltMemorySource(0.3), protocol.CoinFlipSource(0.5)):
        a = protocol.run_source_test(src, 300, 40, 0.1, protocol.PerfectTest, np.random.default_rng(8))
        b = protocol.run_source_test(src, 300, 40, 0.1, protocol.PerfectTest, np.random.default_rng(8),
                                     streaming=True)
        assert np.array_equal(a.surviving.bloch, b.surviving.bloch)
        assert a.observed_error == b.observed_error


def test_coinflip_latches_one_coin():
    src = protocol.CoinFlipSource(1.0).fresh(np.random.default_rng(1))
    r = src.emit_batch(np.array([1, 1, 0]), np.array([0, 1, 0]))
    assert np.allclose(r[0], [0, 0, 1]) and np.allclose(r[2], [0, 0, 1])
    assert np.allclose(r[1], [-1, 0, 0])
    with pytest.raises(ProtocolError):
        protocol.CoinFlipSource(0.5).emit_batch(np.array([0]), np.array([0]))


def test_parsers():
    assert protocol.parse_source("coinflip:0.25").eps_s == 0.25
    assert protocol.parse_channel("bitflip:0.05").p == 0.05
    assert protocol.parse_measurement("indep:0.01:0.02").analysis_params(100) == pytest.approx(
        (0.03, math.exp(-2 * 100 * 0.02**2)))
    for bad in ("nope", "depolarized"):
        with pytest.raises(ProtocolError):
            protocol.parse_source(bad)
    with pytest.raises(ProtocolError):
        protocol.parse_channel("wormhole:1")
    with pytest.raises(ProtocolError):
        protocol.parse_measurement("indep")


def test_source_test_accounting():
    rng = np.random.default_rng(4)
    res = protocol.run_source_test(protocol.PerfectSource(), 1000, 123, 0.0, protocol.PerfectTest, rng)
    passed, surviving, err = res
    assert passed and err == 0.0
    assert len(surviving) == 1000 and len(res.tested) == 123
    assert len(set(res.tested.tolist())) == 123
    # survivors keep their original order
    keep = np.setdiff1d(np.arange(1123), res.tested)
    assert np.all(np.diff(keep) > 0)


def test_source_test_strict_threshold():
    # CoinFlip bad branch with mu=0 and all-Z tests: error equals the fraction of x=1 among tested
    rng = np.random.default_rng(5)
    res = protocol.run_source_test(protocol.CoinFlipSource(1.0), 100, 50, 1.0, protocol.PerfectTest, rng, mu=0.0)
    assert res.passed
    again = protocol.run_source_test(protocol.CoinFlipSource(1.0), 100, 50, res.observed_error,
                                     protocol.PerfectTest, np.random.default_rng(5), mu=0.0)
    assert again.passed  # a tie with eps passes


def test_depolarized_source_test_error():
    errs = [protocol.run_source_test(protocol.DepolarizedSource(0.1), 100, 200, 1.0, protocol.PerfectTest,
                                     protocol.trial_rng(17, t)).observed_error for t in range(1000)]
    sigma = math.sqrt(0.05 * 0.95 / (200 * 1000))
    assert abs(np.mean(errs) - 0.05) < 3 * sigma


def test_indep_error_measurements_raise_test_error():
    meas = protocol.IndepError(0.1)
    errs = [protocol.run_source_test(protocol.PerfectSource(), 100, 400, 1.0, meas,
                                     protocol.trial_rng(3, t)).observed_error for t in range(200)]
    assert abs(np.mean(errs) - 0.1) < 3 * math.sqrt(0.09 / (400 * 200))


def test_noiseless_bb84():
    rec = protocol.run_protocol(protocol.PerfectSource(), protocol.IdentityChannel(), params(),
                                np.random.default_rng(1))
    assert not rec.aborted
    assert rec.qber == 0.0
    assert np.array_equal(rec.key_alice, rec.key_bob)
    assert len(rec.key_alice) == 200
    assert np.array_equal(rec.sifted, np.flatnonzero(rec.theta == rec.theta_hat))
    assert set(rec.sifted_x.tolist()) <= set(rec.sifted.tolist())
    assert np.all(rec.theta[rec.sifted_x] == 1)
    assert rec.transcript_bits == 64


def test_run_bb84_checks_round_count():
    res = protocol.run_source_test(protocol.PerfectSource(), 100, 10, 0.0, protocol.PerfectTest,
                                   np.random.default_rng(0))
    with pytest.raises(ProtocolError):
        protocol.run_bb84(res.surviving, protocol.IdentityChannel(), params(n=99), np.random.default_rng(0))


def test_channel_density_actions():
    plus = qmath.bb84_state(0, 1)
    flipped = protocol.BitFlipChannel(1.0).apply_density(plus)
    assert np.allclose(flipped.matrix, qmath.bb84_state(1, 1).matrix)
    zero = qmath.bb84_state(0, 0)
    assert np.allclose(protocol.BitFlipChannel(1.0).apply_density(zero).matrix, qmath.bb84_state(1, 0).matrix)
    # Bloch action agrees with the density action
    rng = np.random.default_rng(0)
    for ch in (protocol.BitFlipChannel(0.3), protocol.DepolarizingChannel(0.4)):
        r = protocol.ideal_bloch(np.array([0, 1]), np.array([1, 0]))
        for k in range(2):
            rho = protocol.bloch_to_density(r[k])
            assert np.allclose(protocol.density_to_bloch(ch.apply_density(rho)), ch.apply(r, rng)[k])


def test_intercept_resend_disturbance_from_qmath():
    # error on a matched-basis round = 1/2 (Eve's basis wrong) * 1/2
    ch = protocol.InterceptResendChannel(1.0)
    for basis in (0, 1):
        out = ch.apply_density(qmath.bb84_state(0, basis))
        assert qmath.measure(out, basis).probs[1] == pytest.approx(0.25)
    est = protocol.estimate_event_probs(protocol.PerfectSource(), ch, params(n=1000, m=100, e=0.49), 200, 7)
    assert abs(est.mean_qber - 0.25) < 0.03


def test_bitflip_is_seen_in_both_bases():
    r = protocol.ideal_bloch(np.array([0, 0]), np.array([0, 1]))
    out = protocol.BitFlipChannel(1.0).apply(r, np.random.default_rng(0))
    assert np.allclose(out, -r)


def test_error_correct():
    x = np.array([0, 1, 1, 0, 1], dtype=np.uint8)
    guess, bits, ok = protocol.error_correct(x, x.copy())
    assert ok and bits == 64 and np.array_equal(guess, x)
    y = np.zeros(1000, dtype=np.uint8)
    xs = y.copy()
    xs[:50] = 1
    _, bits, _ = protocol.error_correct(xs, y)
    assert bits == math.ceil(1.16 * 1000 * bounds.binary_entropy(0.05)) + 64
    assert bits == 333 + 64
    with pytest.raises(ProtocolError):
        protocol.error_correct(x, x[:3])


def test_verification_hash_keyed():
    bits = np.array([1, 0, 1], dtype=np.uint8)
    assert protocol.verification_hash(bits, 1) != protocol.verification_hash(bits, 2)
    assert len(protocol.verification_hash(bits, 1)) == 8


def _toeplitz_reference(x, length, seed_bits):
    n = len(x)
    T = np.array([[seed_bits[i - j + n - 1] for j in range(n)] for i in range(length)], dtype=np.int64)
    return (T @ x.astype(np.int64)) % 2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.data())
def test_toeplitz_matches_reference(n, data):
    length = data.draw(st.integers(0, n))
    x = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), dtype=np.uint8)
    seed = np.array(data.draw(st.lists(st.integers(0, 1), min_size=length + n - 1, max_size=length + n - 1)),
                    dtype=np.uint8) if length else np.zeros(0, dtype=np.uint8)
    got = protocol.privacy_amplify(x, length, seed if length else 0)
    assert np.array_equal(got, _toeplitz_reference(x, length, seed) if length else np.zeros(0))


def test_privacy_amplify_basics():
    assert len(protocol.privacy_amplify(np.ones(10, dtype=np.uint8), 0, 5)) == 0
    assert not protocol.privacy_amplify(np.zeros(40, dtype=np.uint8), 16, 123).any()
    x = np.random.default_rng(0).integers(0, 2, 40).astype(np.uint8)
    assert np.array_equal(protocol.privacy_amplify(x, 16, 9), protocol.privacy_amplify(x, 16, 9))
    with pytest.raises(ProtocolError):
        protocol.privacy_amplify(x, 41, 1)


def test_trial_records_deterministic():
    a = protocol.run_protocol(protocol.TiltMemorySource(0.1), protocol.BitFlipChannel(0.02), params(),
                              protocol.trial_rng(99, 3))
    b = protocol.run_protocol(protocol.TiltMemorySource(0.1), protocol.BitFlipChannel(0.02), params(),
                              protocol.trial_rng(99, 3))
    assert a.to_bytes() == b.to_bytes()


def test_estimates_independent_of_workers():
    args = (protocol.CoinFlipSource(0.3), protocol.BitFlipChannel(0.03), params(n=500, m=100), 60, 5)
    one = protocol.estimate_event_probs(*args, workers=1)
    four = protocol.estimate_event_probs(*args, workers=4)
    assert one.summary() == four.summary()


def test_perfect_estimates():
    est = protocol.estimate_event_probs(protocol.PerfectSource(), protocol.IdentityChannel(), params(), 50, 1)
    assert est.probs.p_omega == 1.0 and est.probs.p_omega_and_upsilon2 == 1.0


def test_coinflip_mixture_probability():
    p = params(n=500, m=500, mu=0.05, eps_src=0.05)
    est = protocol.estimate_event_probs(protocol.CoinFlipSource(0.1), protocol.IdentityChannel(), p, 1000, 21)
    lo, hi = est.intervals["p_omega"]
    assert lo <= 0.9 <= hi


def test_upsilon2_approaches_one_for_low_noise():
    p = params(n=5000, m=500, mu=0.5, e=0.05)
    est = protocol.estimate_event_probs(protocol.PerfectSource(), protocol.BitFlipChannel(0.02), p, 200, 4)
    # tail bound: the X-sifted set has ~1250 rounds, so Pr(true error > 0.05) is negligible
    assert binom.sf(int(0.05 * 1250), 1250, 0.02) < 1e-6
    assert est.probs.p_omega_and_upsilon2 == 1.0


def test_empty_x_basis_set_does_not_abort():
    # mu tiny: almost surely no X-basis sifted round
    rec = protocol.run_protocol(protocol.PerfectSource(), protocol.IdentityChannel(), params(n=50, m=5, mu=1e-9),
                                np.random.default_rng(0))
    assert len(rec.sifted_x) == 0
    assert not rec.aborted_pe and rec.upsilon2
