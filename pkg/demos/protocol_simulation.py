"""Monte Carlo runs of the source test followed by BB84.

Estimates the probability that the source test passes and that the true
X-basis error stays below threshold, for a clean setup, a noisy channel and
an adversarial source. Run with ``python3 demos/protocol_simulation.py``.
"""

from srckey import protocol
from srckey.bounds import ProtocolParams

params = ProtocolParams(n=2000, m=200, mu=0.5, e=0.08, eps_src=0.05, delta=0.01)

setups = {
    "perfect source, identity channel": (protocol.PerfectSource(), protocol.IdentityChannel()),
    "perfect source, 5% bit flips": (protocol.PerfectSource(), protocol.BitFlipChannel(0.05)),
    "depolarised source (p=0.02)": (protocol.DepolarizedSource(0.02), protocol.IdentityChannel()),
    "coin-flip source, eps_s=0.3": (protocol.CoinFlipSource(0.3), protocol.IdentityChannel()),
}

for name, (source, channel) in setups.items():
    est = protocol.estimate_event_probs(source, channel, params, trials=200, rng_seed=2024)
    s = est.summary()
    print(f"{name}")
    print(f"  Pr(test passes)             {est.probs.p_omega:.3f}  {tuple(round(v, 3) for v in est.intervals['p_omega'])}")
    print(f"  Pr(passes, true error <= e) {est.probs.p_omega_and_upsilon2:.3f}")
    print(f"  mean QBER {s['mean_qber']:.4f}, keys produced {s['keys_produced']}, matching {s['keys_match']}")

# A single trial, inspected directly. Each trial has its own seeded stream.
rec = protocol.run_protocol(protocol.PerfectSource(), protocol.BitFlipChannel(0.03), params,
                            protocol.trial_rng(2024, 0))
print(f"\ntrial 0: |S|={len(rec.sifted)}, |S_X|={len(rec.sifted_x)}, qber={rec.qber:.4f}, "
      f"EC leaked {rec.transcript_bits} bits, key {len(rec.key_alice)} bits, keys equal: "
      f"{bool((rec.key_alice == rec.key_bob).all())}")
