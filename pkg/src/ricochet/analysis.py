"""Finite-scale diagnostics: threats, settling of survivor membership,
front and back insertion checks, shift reindexing and the shield fixture."""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import Bullet, ProcessConfig
from .engine import Resolution, resolve_truncation, simulate
from .oracle import brute_resolve


@dataclass
class Verdict:
    ok: bool
    message: str = ""
    details: Dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class ThreatRecord:
    target_index: int
    threat_indices: tuple


def threats_from_resolution(res: Resolution, i: int) -> ThreatRecord:
    # b_j threatens b_i exactly when b_i is b_j's partner in B_j
    js = np.nonzero(res.insertion_partner == i)[0] + res.first_index
    return ThreatRecord(i, tuple(int(j) for j in js))


def threats_of(bullets: Sequence[Bullet], i: int) -> ThreatRecord:
    if not bullets[0].index <= i <= bullets[-1].index:
        raise IndexError(f"bullet {i} not in sequence")
    return threats_from_resolution(resolve_truncation(bullets), i)


def threat_census(config: ProcessConfig, n: int, i: int, stream_id: int = 0) -> ThreatRecord:
    """Threats to bullet ``i`` among bullets ``0..n`` of a streamed realization."""
    found: List[int] = []

    def grab(first, v, t, sn, ps, partner, changed):
        hit = np.nonzero(partner == i)[0]
        found.extend(int(first + h) for h in hit)

    simulate(config, n + 1, stream_id, on_chunk=grab)
    return ThreatRecord(i, tuple(found))


def settling_from_changes(changes: np.ndarray, first_index: int = 0) -> np.ndarray:
    """Last step at which each bullet entered or left the survivor set.

    A bullet that never flips after being fired reports its own index.
    This is only a lower bound on the true settling time: later bullets
    may still flip it.
    """
    n = len(changes)
    last = np.arange(first_index, first_index + n, dtype=np.int64)
    for k, c in enumerate(changes):
        last[c - first_index] = first_index + k
    return last


def settling_indices(bullets: Sequence[Bullet]) -> np.ndarray:
    res = resolve_truncation(bullets)
    return settling_from_changes(res.changes, res.first_index)


def check_front_addition(bullets: Sequence[Bullet]) -> Verdict:
    """Adding ``b_0`` in front changes the survivors by one bullet, as follows.

    With ``s_1`` the first survivor of ``B_[1,n]``, the survivors of ``B_n``
    are either those of ``B_[1,n]`` without ``s_1`` or those plus one bullet
    fired before ``s_1``; an empty ``B_[1,n]`` leaves exactly one survivor.
    """
    if len(bullets) < 2:
        raise ValueError("need at least two bullets")
    full = set(brute_resolve(bullets, prefixes=False).survivors)
    tail = set(brute_resolve(bullets[1:], prefixes=False).survivors)
    details = {"S_full": sorted(full), "S_tail": sorted(tail)}
    if not tail:
        return Verdict(len(full) == 1, "empty tail leaves one survivor", details)
    s1 = min(tail)
    if full == tail - {s1}:
        return Verdict(True, "first tail survivor removed", details)
    extra = full - tail
    if tail <= full and len(extra) == 1 and min(extra) < s1:
        return Verdict(True, "one earlier survivor added", details)
    return Verdict(False, "survivor sets differ by more than one front change", details)


def shift_reindex_check(bullets: Sequence[Bullet], k: int) -> Verdict:
    """Compare ``B_[k,n]`` with the process built from the shifted sequence.

    One side resolves bullets ``k..n`` with fire times re-based to start at
    0; the other renumbers them from 0 and rebuilds fire times from the
    successive delays.  Matchings (after reindexing) and survivor speeds
    must coincide exactly.
    """
    if not 0 <= k < len(bullets):
        raise ValueError("k out of range")
    tail = bullets[k:]
    t0 = tail[0].fire_time
    rebased = [Bullet(b.index, b.velocity, b.fire_time - t0) for b in tail]
    delays = np.diff([b.fire_time for b in tail])
    times = np.concatenate(([0.0], np.cumsum(delays)))
    shifted = [Bullet(j, b.velocity, float(times[j])) for j, b in enumerate(tail)]
    a = resolve_truncation(rebased)
    b = resolve_truncation(shifted)
    base = tail[0].index
    match_a = {(x - base, y - base) for x, y in a.matching}
    vel_a = [bullets[s - bullets[0].index].velocity for s in a.survivors]
    vel_b = [shifted[s].velocity for s in b.survivors]
    ok = match_a == set(b.matching) and vel_a == vel_b
    return Verdict(ok, "shift agrees" if ok else "shift mismatch",
                   {"survivors_suffix": a.survivors, "survivors_shifted": b.survivors})


def shield_scenario(v: float, m: int, v_slow: float, v_fast: float,
                    delays: Sequence[float]) -> Verdict:
    """Bullet 0 at speed ``v`` followed by ``m`` (slow, fast) pairs.

    Each fast bullet ``2k`` should annihilate the slow bullet ``2k-1`` in
    front of it, leaving bullet 0 untouched.
    """
    if len(delays) != 2 * m or any(d <= 0 for d in delays):
        raise ValueError("need 2m strictly positive delays")
    times = np.concatenate(([0.0], np.cumsum(delays)))
    speeds = [v] + [v_slow, v_fast] * m
    bullets = [Bullet(i, float(s), float(t)) for i, (s, t) in enumerate(zip(speeds, times))]
    res = resolve_truncation(bullets)
    details = {"resolution": res}
    if not (v_fast > v and v_slow <= v and v_fast > v_slow):
        return Verdict(False, "non-shield configuration", details)
    expected = {(2 * k, 2 * k - 1) for k in range(1, m + 1)}
    if res.matching != expected:
        return Verdict(False, "pairs did not annihilate as (2k, 2k-1)", details)
    if 0 not in res.survivors:
        return Verdict(False, "bullet 0 was annihilated", details)
    return Verdict(True, "shield holds", details)


def check_invariants(res: Resolution, velocities: Optional[Sequence[float]] = None) -> List[str]:
    """Return the violated structural invariants of a resolution (empty if none)."""
    bad: List[str] = []
    first = res.first_index
    if velocities is None:
        velocities = [b.velocity for b in res.bullets]
    vel = np.asarray(velocities, dtype=float)
    n = len(vel)
    if 2 * len(res.collisions) + len(res.survivors) != n:
        bad.append("conservation")
    sn = np.asarray(res.sn_sizes)
    if len(sn) and np.any(sn % 2 != (np.arange(len(sn)) + 1) % 2):
        bad.append("parity")
    if len(sn) > 1 and np.any(np.abs(np.diff(sn)) != 1):
        bad.append("unit steps")
    if len(sn) and sn[-1] != len(res.survivors):
        bad.append("final size")
    if res.changes is not None:
        current: List[int] = []
        for k, c in enumerate(res.changes):
            grew = k == 0 or sn[k] > sn[k - 1]
            if grew:
                if current and c <= current[-1]:
                    bad.append("added survivor not at the back")
                    break
                insort(current, int(c))
            else:
                if not current or c != current[-1]:
                    bad.append("removed survivor was not the last")
                    break
                current.pop()
        if current != list(res.survivors):
            bad.append("replayed survivors")
    pairs = sorted((c.front_index, c.back_index) for c in res.collisions)
    stack: List[int] = []
    ends = {f: b for f, b in pairs}
    open_pairs: List[int] = []
    for i in range(first, first + n):
        while open_pairs and open_pairs[-1] < i:
            open_pairs.pop()
        if i in ends:
            b = ends[i]
            if open_pairs and b > open_pairs[-1]:
                bad.append("crossing pairs")
                break
            open_pairs.append(b)
    surv_set = set(res.survivors)
    for f, b in pairs:
        if any(j in surv_set for j in range(f + 1, b)):
            bad.append("survivor inside a pair")
            break
    for c in res.collisions:
        vb, vf = vel[c.back_index - first], vel[c.front_index - first]
        if not c.back_index > c.front_index:
            bad.append("collision order")
            break
        if not (vb > vf or vf == 0.0):
            bad.append("collision speeds")
            break
    sv = vel[[s - first for s in res.survivors]]
    if len(sv) > 1 and np.any(np.diff(sv) > 0):
        bad.append("survivor speeds increase")
    partner = np.asarray(res.insertion_partner)
    for j in np.nonzero(partner >= 0)[0]:
        if not (vel[j] > vel[partner[j] - first] or vel[partner[j] - first] == 0.0):
            bad.append("threat not faster than target")
            break
    return bad
