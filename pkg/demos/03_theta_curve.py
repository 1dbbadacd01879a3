"""
Survival probability of the first bullet
========================================

Speeds Uniform(0, 1), unit delays.  Bullet 0 is given speed v and we count
how often it survives the next n bullets.  The same random streams are
reused for every v, so each replica's outcome can only switch from death
to survival as v grows.

The sizes here are small enough to run in well under a minute; raise
``n`` and ``N`` to sharpen the estimate of the critical speed.
"""

from pathlib import Path

from ricochet import PointMass, Uniform
from ricochet.estimators import ThetaEstimate, default_grid, theta_curve, vc_from_curve
from ricochet.io import write_csv

n, N = 10_000, 100
curve = theta_curve(default_grid(0.5, 1.0, 0.02), Uniform(0, 1), PointMass(1.0), n, N,
                    master_seed=0)

for est in curve:
    bar = "#" * int(round(40 * est.point))
    print(f"v={est.v:4.2f}  theta={est.point:5.3f}  [{est.ci_lo:5.3f}, {est.ci_hi:5.3f}]  {bar}")

print(f"smallest speed with a surviving replica: {vc_from_curve(curve)}")
Path("demo_output").mkdir(exist_ok=True)
write_csv("demo_output/theta.csv", ThetaEstimate.HEADER, (e.row() for e in curve))
