"""Approximate factorization of a regular harmonic function.

For boundary data supported far from a half-space boundary point, the
induced harmonic function approximately factors into a local mean exit
time and a nonlocal boundary integral of the data; the ratio
rho(x) = h(x) / (E_x[tau] * integral) should stay within a fixed band
over interior grid points.
"""

import numpy as np

from bhplab import (HalfSpace, IsotropicStable, RngStream,
                    factorization_check, far_field_indicator)

model = IsotropicStable(alpha=1.5, dim=2)
D = HalfSpace([0.0, 1.0], 0.0)
xi = np.array([0.0, 0.0])
r = 0.5

g = far_field_indicator(xi, 2.0 * r, lambda y: y[:, 0] > 0.0)
rep = factorization_check(model, D, xi, r, c1=0.5, c2=1.5, c3=2.0 / 3.0,
                          g=g, grid_size=6, n=4096, rng=RngStream(4),
                          cap=200_000)

print(f"boundary integral:    {rep['integral']:.4f}")
for x, rho, ok in zip(rep["grid"], rep["rho"], rep["powered"]):
    tag = "" if ok else "  (underpowered)"
    print(f"  x = ({x[0]:+.3f}, {x[1]:+.3f})  rho = {rho:8.4f}{tag}")
print(f"band max/min:         {rep['band_ratio']:.3f}")
