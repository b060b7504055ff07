"""Exact exit sampling of the unit interval for the Cauchy process.

Draws a large batch of exit positions of (-1, 1) from the origin via the
walk on balls and compares the empirical far/near bin probabilities with
the closed forms P(|Y| > 2) = 1/3 and P(Y > 1) = 1/2.
"""

import numpy as np

from bhplab import Ball, IsotropicStable, RngStream, sample_exits

model = IsotropicStable(alpha=1.0, dim=1)
D = Ball([0.0], 1.0)
n = 200_000

batch = sample_exits(model, D, [0.0], n, RngStream(1), rho=1.0)
y = batch.y[:, 0]

print(f"samples:          {n}")
print(f"P(|Y| > 2):       {(np.abs(y) > 2).mean():.4f}   (exact 1/3)")
print(f"P(Y > 1):         {(y > 1).mean():.4f}   (exact 1/2)")
print(f"mean time weight: {batch.w.mean():.4f}   (exact E_0[tau] = 1)")
