"""
Survivors with twenty possible speeds
=====================================

Speeds are drawn from {0.05, 0.10, ..., 1.00}, each value jittered once by
a tiny Gaussian offset so that no two speed levels coincide exactly.
With finitely many speeds the survivor set keeps growing, and almost all
survivors share one speed near 0.75.
"""

from ricochet import FiniteSupport, PointMass
from ricochet.estimators import census

mu = FiniteSupport(tuple(round(0.05 * i, 2) for i in range(1, 21)), 0.0002)
res = census(mu, PointMass(1.0), 3_000_000, master_seed=1,
             checkpoints=(10_000, 100_000, 1_000_000, 3_000_000))

for k, size in sorted(res.checkpoints.items()):
    print(f"|S_{k}| = {size}")
print(f"{res.total_survivors} survivors; {res.modal_share:.0%} at speed {res.modal_value}")
for v, s, p in res.rows():
    if s:
        print(f"  v={v:4.2f}: {s:4d} survivors, {p} potential survivors along the way")
print("first survivor at the modal speed:", res.first_modal_index)
