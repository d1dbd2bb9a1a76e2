"""Band velocities of a period-three chain as the potential gets stronger.

With potential values 0, 1, 2 the hopping has to climb three distinct
levels before it closes a loop around the cell, so the group velocity falls
like mu^-2.  The sweep below measures the exponent and compares the prefactor
with the straight-loop prediction.
"""
import numpy as np

from blochlab import build_model, predicted_leading_constant, sweep_and_fit

chain = build_model(1, (3,), (0, 1, 2))
result = sweep_and_fit(chain, np.geomspace(10, 1000, 8))

print(f"{'mu':>10} {'v_asy':>14} {'mu^2 v_asy':>12}")
for rep in result.reports:
    print(f"{rep.mu:10.2f} {rep.v_asy:14.6e} {rep.mu**2 * rep.v_asy:12.6f}")

C, c = predicted_leading_constant(chain)
print(f"\nfitted exponent   {result.fit.slope:+.4f}  (expected {result.predicted_slope:+.0f})")
print(f"fitted prefactor  {result.fit.prefactor:.4f}  (straight-loop value {C:g})")
print(f"delta_0 prefactor {result.fit_delta0.prefactor:.4f}  (straight-loop value {c:.4f})")

# A 2-D cell of shape 2 x 3 is slowed differently in each direction.
plane = build_model(2, (2, 3), range(6))
aniso = sweep_and_fit(plane, [30, 60, 120, 250, 500, 1000])
for i, fit in enumerate(aniso.fit_directions, start=1):
    print(f"direction {i}: |G_{i}| ~ mu^{fit.slope:+.3f}")
