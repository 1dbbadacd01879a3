"""
Speeds of late potential survivors
==================================

A bullet is a potential survivor when nothing fired before it catches it
and it catches nothing.  Among bullets in the second half of a long run,
the fastest potential survivor sits close to the critical speed, and the
histogram of their speeds drops off there.
"""

import numpy as np

from ricochet import PointMass, Uniform
from ricochet.estimators import vhat_hat

n = 2_000_000
for seed in range(3):
    est = vhat_hat(Uniform(0, 1), PointMass(1.0), n, bucket_width=0.001, master_seed=seed)
    print(f"seed {seed}: {est.count} potential survivors in ({n // 2}, {n}], "
          f"fastest {est.max_ps_velocity:.4f}")

# coarse view of the last histogram: density per 0.05 band
hist = np.array([(lo, h) for lo, _, _, h in est.histogram])
for lo in np.arange(0.0, 0.8, 0.05):
    sel = (hist[:, 0] >= lo - 1e-12) & (hist[:, 0] < lo + 0.05 - 1e-12)
    dens = hist[sel, 1].mean() if sel.any() else 0.0
    print(f"{lo:4.2f}-{lo + 0.05:4.2f}  {dens:6.3f}  " + "*" * int(dens * 40))
