"""Distances and divergences between qubit states.

Builds the four BB84 states, mixes them with noise and compares them with
the trace distance, fidelity, max-relative entropy and sandwiched Renyi
divergences. Run with ``python3 demos/quantum_toolkit.py``.
"""

import math

from srckey import qmath

# The four BB84 states: bit x encoded in the Z (theta=0) or X (theta=1) basis.
for theta in (0, 1):
    for x in (0, 1):
        probs = qmath.measure(qmath.bb84_state(x, theta), theta).probs
        print(f"x={x} theta={theta}: measured in its own basis -> {probs.round(3)}")

# A realistic source emits slightly depolarised states.
ideal = qmath.bb84_state(0, 0)
noisy = qmath.depolarize(ideal, 0.1)
print("\ntrace distance ideal vs noisy :", round(qmath.trace_distance(ideal, noisy), 6))
print("fidelity                      :", round(qmath.fidelity(ideal, noisy), 6))
print("purified distance             :", round(qmath.purified_distance(ideal, noisy), 6))

# D_max(ideal || noisy) is finite because the noisy state has full support.
print("D_max(ideal || noisy)         :", round(qmath.dmax(ideal, noisy), 6))
print("D_max(noisy || ideal)         :", qmath.dmax(noisy, ideal))

# Sandwiched Renyi divergences grow with alpha and reach D_max at infinity.
# Two non-commuting mixed states: a noisy |+> against a noisy |0>.
plus = qmath.depolarize(qmath.bb84_state(0, 1), 0.3)
for alpha in (0.5, 1.5, 2.0, math.inf):
    print(f"D_{alpha}(noisy + || noisy 0) = {qmath.sandwiched_div(plus, noisy, alpha):.6f}")
print("relative entropy            =", round(qmath.relative_entropy(plus, noisy), 6))

# Hypothesis-testing divergence of two classical distributions.
print("\nD_H^0.5([0.9, 0.1] || [0.5, 0.5]) =", round(qmath.dh_classical([0.9, 0.1], [0.5, 0.5], 0.5), 6))
