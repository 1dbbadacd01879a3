"""Reference resolver: direct event simulation of the dynamics.

Active bullets are kept in firing order.  The candidate events are the next
firing and the catch of each adjacent active pair; the earliest one is
applied and the catch of the newly adjacent pair is scheduled.  Nothing is
shared with the engine except the result types.
"""

from __future__ import annotations

import heapq
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import Bullet, NonMonotoneFireTime, TripleCollision
from .engine import EPS_ABS, EPS_REL, Collision, Resolution


def catch_time(front: Tuple[float, float], back: Tuple[float, float]) -> Optional[Tuple[float, float]]:
    """When and where a back bullet catches a front one.

    Both arguments are ``(velocity, fire_time)`` with the back bullet fired
    later.  A speed-0 front bullet sits at the origin and is hit the moment
    the back bullet is fired.
    """
    vf, tf = front
    vb, tb = back
    if vf == 0.0:
        return tb, 0.0
    if vb <= vf:
        return None
    dt = vf * (tb - tf) / (vb - vf)
    return tb + dt, vb * dt


class _Sim:
    """Mutable event-driven state over a fixed bullet list."""

    def __init__(self, bullets: Sequence[Bullet], eps_abs: float, eps_rel: float):
        n = len(bullets)
        self.bullets = bullets
        self.vt = [(b.velocity, b.fire_time) for b in bullets]
        self.eps_abs = eps_abs
        self.eps_rel = eps_rel
        self.prev = [-1] * n
        self.nxt = [-1] * n
        self.alive = [False] * n
        self.rear = -1
        self.heap: list = []
        self.seq = 0
        self.events: List[Tuple[float, int, int, float]] = []  # (t, back, front, x)

    def copy(self) -> "_Sim":
        c = object.__new__(_Sim)
        c.bullets, c.vt, c.eps_abs, c.eps_rel = self.bullets, self.vt, self.eps_abs, self.eps_rel
        c.prev, c.nxt, c.alive = self.prev[:], self.nxt[:], self.alive[:]
        c.rear, c.seq = self.rear, self.seq
        c.heap = [e for e in self.heap if self._current(e)]
        heapq.heapify(c.heap)
        c.events = []
        return c

    def _current(self, entry) -> bool:
        f, b = entry[2], entry[3]
        return self.alive[f] and self.alive[b] and self.nxt[f] == b

    def _pending(self, f: int, b: int) -> Optional[float]:
        if f < 0 or b < 0:
            return None
        hit = catch_time(self.vt[f], self.vt[b])
        return None if hit is None else hit[0]

    def schedule(self, f: int, b: int):
        hit = catch_time(self.vt[f], self.vt[b])
        if hit is not None:
            heapq.heappush(self.heap, (hit[0], self.seq, f, b, hit[1]))
            self.seq += 1

    def fire(self, k: int):
        self.alive[k] = True
        self.prev[k] = self.rear
        self.nxt[k] = -1
        if self.rear >= 0:
            self.nxt[self.rear] = k
            self.schedule(self.rear, k)
        self.rear = k

    def run_until(self, limit: float):
        """Apply every collision strictly before ``limit``."""
        heap = self.heap
        while heap:
            if not self._current(heap[0]):
                heapq.heappop(heap)
                continue
            if not heap[0][0] < limit:
                return
            t, _, f, b, x = heapq.heappop(heap)
            tol = max(self.eps_abs, self.eps_rel * abs(t))
            p, q = self.prev[f], self.nxt[b]
            for other in (self._pending(p, f), self._pending(b, q)):
                if other is not None and abs(other - t) <= tol:
                    ids = {self.bullets[i].index for i in (p, f, b, q) if i >= 0}
                    raise TripleCollision(t, sorted(ids))
            self.alive[f] = self.alive[b] = False
            if p >= 0:
                self.nxt[p] = q
            if q >= 0:
                self.prev[q] = p
            else:
                self.rear = p
            self.events.append((t, b, f, x))
            if p >= 0 and q >= 0:
                self.schedule(p, q)


def brute_resolve(bullets: Sequence[Bullet], *, prefixes: bool = True,
                  eps_abs: float = EPS_ABS, eps_rel: float = EPS_REL) -> Resolution:
    """Resolve a truncation by direct simulation; same contract as the engine.

    With ``prefixes`` the per-prefix fields are filled as well: ``B_k``
    agrees with the full run up to the firing of bullet ``k``, so a copy of
    the state at that moment is drained to completion.
    """
    n = len(bullets)
    for a, b in zip(bullets, bullets[1:]):
        if not b.fire_time > a.fire_time:
            raise NonMonotoneFireTime(f"bullet {b.index} fired at {b.fire_time!r}")
    first = bullets[0].index if n else 0
    sim = _Sim(bullets, eps_abs, eps_rel)
    sn = np.zeros(n, np.int64)
    ps = np.zeros(n, bool)
    partner = np.full(n, -1, np.int64)
    for k in range(n):
        sim.run_until(bullets[k].fire_time)
        sim.fire(k)
        if prefixes:
            branch = sim.copy()
            branch.run_until(math.inf)
            sn[k] = sum(branch.alive)
            ps[k] = branch.alive[k]
            if not ps[k]:
                # bullet k is the rear bullet, so it can only have caught someone
                partner[k] = next(bullets[f].index for _, bk, f, _ in branch.events if bk == k)
    sim.run_until(math.inf)

    idx = [b.index for b in bullets]
    collisions = [Collision(idx[b], idx[f], t, x) for t, b, f, x in sim.events]
    collisions.sort(key=lambda c: (c.time, c.front_index))
    survivors = [idx[i] for i in range(n) if sim.alive[i]]
    return Resolution(list(bullets), collisions, survivors, sn, ps, partner, first)
