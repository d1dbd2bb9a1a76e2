"""Free and periodic wave packets: Bessel amplitudes, box checks, spreading.

A particle started on one site of the free chain has amplitudes given by
Bessel functions.  On the period-two chain the torus quadrature and a
finite box give the same amplitudes, and the packet width grows at the
rate predicted by the band velocities.
"""
import numpy as np
from scipy.special import jv

from blochlab import build_model
from blochlab.evolve import amplitude_field, wavepacket_spread
from blochlab.velocity import v_asy_delta0

free = build_model(1, (1,), (0,))
fld = amplitude_field(free, 1.0, 3.0, window=15)
bessel = np.array([(-1j) ** abs(n) * jv(abs(n), 6.0) for n in range(-15, 16)])
print(f"free chain, t=3: max deviation from Bessel {np.max(np.abs(fld.values - bessel)):.2e}")

chain = build_model(1, (2,), (0, 1))
quad = amplitude_field(chain, 20.0, 10.0, window=12)
box = amplitude_field(chain, 20.0, 10.0, window=12, method="box")
print(f"period two, mu=20, t=10: quadrature vs box {np.max(np.abs(quad.values - box.values)):.2e}")
print(f"  box certificate {box.certified_error:.2e}, window mass {quad.mass():.12f}")

target = v_asy_delta0(chain, 20.0)
for t in (25.0, 100.0, 200.0):
    print(f"  spread/t at t={t:5.0f}: {wavepacket_spread(chain, 20.0, t):.6f}  (limit {target:.6f})")
