"""Measured light cones and Lieb-Robinson constants.

The front where amplitudes first exceed a small threshold moves at a speed
that shrinks with the coupling.  A linear program then fits the smallest
exponential bound that covers every sampled amplitude; its velocity
constant should hardly move as mu changes.
"""
from blochlab import build_model
from blochlab.evolve import lr_constant_stability, vlr_exponent_fit

for values in ((0, 1), (0, 1, 2)):
    chain = build_model(1, (len(values),), values)
    fit = vlr_exponent_fit(chain, [10, 20, 40, 80])
    speeds = ", ".join(f"{v:.3e}" for v in fit.velocities)
    print(f"period {chain.P}: front speeds {speeds}")
    print(f"  exponent {fit.exponent:+.3f} (expected {fit.predicted:+.0f})")

    reports, ratio = lr_constant_stability(chain, [40, 80, 160], 0.5)
    for rep in reports:
        print(f"  mu={rep.mu:5.0f}: C={rep.C:.3f}  C1={rep.C1:.3f}  ({rep.used} samples)")
    print(f"  C1 spread across couplings: {ratio:.3f}")
