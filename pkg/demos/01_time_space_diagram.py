"""
Time-space diagram of a sample path
===================================

Bullets leave the origin at speeds drawn from Uniform(0.5, 1.5), one per
unit of time.  Each line is one bullet; a line stops where that bullet
meets another one.  Red lines are still moving at the right edge.
"""

from pathlib import Path

from ricochet import ProcessConfig, Uniform, PointMass, generate_sequence, resolve_truncation
from ricochet.diagram import render_svg

cfg = ProcessConfig(Uniform(0.5, 1.5), PointMass(1.0), seed=1)
bullets = generate_sequence(cfg, 21)

# who hits whom, and when
res = resolve_truncation(bullets)
for c in res.collisions:
    print(f"b{c.back_index:<2d} hits b{c.front_index:<2d} at t={c.time:7.3f}, x={c.position:7.3f}")
print("survivors of B_20:", res.survivors)

out = Path("demo_output")
out.mkdir(exist_ok=True)
(out / "time_space.svg").write_text(render_svg(bullets, tmax=20.0))
print("wrote", out / "time_space.svg")
