"""Time-space diagram of a sample path as plain SVG.

Time runs left to right and distance from the origin upwards.  Each bullet
is a straight segment from its firing to its annihilation (or the right
edge of the plot).
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from .core import Bullet
from .engine import resolve_truncation

MAX_LINES = 5000


def trajectories(bullets: Sequence[Bullet], tmax: float, max_lines: int = MAX_LINES):
    """Segments ``(index, t0, x0, t1, x1, survives)`` clipped to ``[0, tmax]``.

    Bullets fired after ``tmax`` are dropped; beyond ``max_lines`` the rest
    are subsampled evenly by index.
    """
    shown = [b for b in bullets if b.fire_time <= tmax]
    if not shown:
        return []
    res = resolve_truncation(shown)
    death = {}
    for c in res.collisions:
        death[c.back_index] = death[c.front_index] = c.time
    if len(shown) > max_lines:
        pick = np.unique(np.linspace(0, len(shown) - 1, max_lines).round().astype(int))
        shown = [shown[i] for i in pick]
    segs = []
    for b in shown:
        t1 = min(death.get(b.index, np.inf), tmax)
        segs.append((b.index, b.fire_time, 0.0, t1, b.velocity * (t1 - b.fire_time),
                     b.index not in death))
    return segs


def render_svg(bullets: Sequence[Bullet], tmax: float, width: int = 800, height: int = 500,
               max_lines: int = MAX_LINES, title: Optional[str] = None) -> str:
    segs = trajectories(bullets, tmax, max_lines)
    pad = 40
    xmax = max([s[4] for s in segs] + [1e-9])
    sx = (width - 2 * pad) / tmax
    sy = (height - 2 * pad) / xmax

    def px(t, x):
        return f"{pad + t * sx:.2f},{height - pad - x * sy:.2f}"

    out: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width - pad}" y="{height - pad + 25}" text-anchor="end" font-size="12">time</text>',
        f'<text x="{pad - 8}" y="{pad - 10}" font-size="12">distance</text>',
    ]
    if title:
        out.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    for idx, t0, x0, t1, x1, alive in segs:
        colour = "#c0392b" if alive else "#1f4e79"
        out.append(f'<polyline data-bullet="{idx}" fill="none" stroke="{colour}" stroke-width="1" '
                   f'points="{px(t0, x0)} {px(t1, x1)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
