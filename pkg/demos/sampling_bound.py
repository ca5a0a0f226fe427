"""How often does a random sample misjudge the rest of a bit string?

The source test measures a random subset of ``m`` out of ``n + m`` emitted
rounds and uses its error fraction as an estimate for the unmeasured ``n``.
This script computes the worst-case failure probability exactly (over every
string) and compares it with the exponential tail bound used by the key-rate
analysis. Run with ``python3 demos/sampling_bound.py``.
"""

from srckey import bounds, sampling
from srckey.sampling import SamplingStrategy

print(" n+m  m  delta   exact      bound(2^-x)  bound(e^-x)")
for total, m, delta in [(10, 3, 0.3), (12, 4, 0.2), (16, 6, 0.3), (16, 6, 0.1)]:
    check = sampling.check_hoeffding(SamplingStrategy(total, m), delta)
    print(f"{total:4d} {m:2d}  {delta:4.1f}  {float(check.exact):.3e}   {check.bound_base2:.3e}    "
          f"{check.bound_basee:.3e}")

# Small configurations make the bound loose (often above 1), but it is never violated.
checks = sampling.run_suite(sampling.default_suite(16))
print(f"\n{len(checks)} configurations, {sum(not c.passed for c in checks)} violations")

# Monte Carlo agrees with the exact value inside its Wilson interval.
strat = SamplingStrategy(14, 4)
exact = sampling.weight_class_error(strat, 0.2, 7)
est = sampling.mc_classical_error(strat, 0.2, 7, 20000, rng_seed=1)
print(f"\nweight-7 strings, n+m=14, m=4: exact {float(exact):.4f}, MC {est.estimate:.4f} "
      f"in [{est.interval[0]:.4f}, {est.interval[1]:.4f}]")

# For large blocks the failure probability is astronomically small.
print("\neps_cl at n=1e9, m=1e8, delta=1e-3:", bounds.eps_cl(10**9, 10**8, 1e-3))
