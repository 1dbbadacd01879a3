"""Incremental resolver for truncated bullet processes.

The engine keeps the complete future of the current truncation ``B_n`` as a
stack of bullets in firing order.  Every entry is either unpaired (a
survivor of ``B_n``) or paired with the partner it will annihilate with,
together with the scheduled time and place.  Pairs never cross, so the
top-level elements seen from the back of the stack are survivors and
outermost pairs, and skipping a pair is a single jump to the entry in front
of its front member.

Ingesting a bullet walks this rear boundary.  The new bullet is compared
with the rearmost element still alive at the current time; if it catches
that element's rear bullet before the scheduled death, the two annihilate
and the old partner is freed and walked forward in the same way, starting
from its cancelled death time.  The walk ends with either one survivor
removed (the last one) or one survivor added at the back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from numba import njit

from .core import (
    Bullet,
    NonMonotoneFireTime,
    ProcessConfig,
    RngStream,
    TripleCollision,
    as_arrays,
    iter_chunks,
)

EPS_ABS = 1e-12
EPS_REL = 1e-12

# kernel status codes
OK = 0
TRIPLE = 1
NONMONO = 2
STOPPED = 3

# integer metadata slots
M_TOP = 0
M_SURV = 1
M_INGESTED = 2
M_COMPACT_AT = 3
M_NLOG = 4
M_TRIPLE = 5  # 5, 6, 7 hold the three bullet indices
M_PAIRS = 8
M_CHAIN = 9
M_EVICTED = 10
M_STOPPED = 11
N_IMETA = 12

MIN_COMPACT = 1024


@dataclass(frozen=True)
class Collision:
    back_index: int
    front_index: int
    time: float
    position: float


@dataclass(frozen=True)
class InsertionOutcome:
    size: int
    potential_survivor: bool
    partner: Optional[int]
    chain: tuple = ()
    changed: int = -1  # survivor added (size went up) or removed (size went down)


@njit(cache=True, nogil=True)
def _catch(vf, tf, vb, tb):
    # catch of a back bullet (vb, tb) on a front bullet (vf, tf), tf < tb;
    # the time is returned as tb + offset
    if vf == 0.0:
        return True, 0.0, 0.0
    if vb > vf:
        dt = vf * (tb - tf) / (vb - vf)
        return True, dt, vb * dt
    return False, math.inf, math.inf


@njit(cache=True, nogil=True)
def _gap(b1, o1, b2, o2):
    # (b1 + o1) - (b2 + o2) without forming the large absolute times; the
    # fire-time difference is exact when both are within a factor of two
    return (b1 - b2) + (o1 - o2)


@njit(cache=True, nogil=True)
def _tie(b1, o1, b2, o2, eps_abs, eps_rel):
    scale = max(abs(o1), abs(o2), abs(b1 - b2))
    return abs(_gap(b1, o1, b2, o2)) <= max(eps_abs, eps_rel * scale)


@njit(cache=True, nogil=True)
def _compact(s_idx, s_v, s_t, s_par, s_db, s_do, s_x, imeta, now,
             log_back, log_front, log_time, log_pos, log_on):
    top = imeta[M_TOP]
    newpos = np.empty(top, np.int64)
    j = 0
    nlog = imeta[M_NLOG]
    for r in range(top):
        q = s_par[r]
        if q < 0 or _gap(s_db[r], s_do[r], now, 0.0) > 0.0:
            newpos[r] = j
            j += 1
        else:
            newpos[r] = -1
            if q > r:
                if log_on:
                    log_back[nlog] = s_idx[q]
                    log_front[nlog] = s_idx[r]
                    log_time[nlog] = s_db[r] + s_do[r]
                    log_pos[nlog] = s_x[r]
                    nlog += 1
                imeta[M_EVICTED] += 1
    for r in range(top):
        k = newpos[r]
        if k >= 0:
            q = s_par[r]
            s_idx[k] = s_idx[r]
            s_v[k] = s_v[r]
            s_t[k] = s_t[r]
            s_db[k] = s_db[r]
            s_do[k] = s_do[r]
            s_x[k] = s_x[r]
            s_par[k] = newpos[q] if q >= 0 else -1
    imeta[M_NLOG] = nlog
    imeta[M_TOP] = j
    imeta[M_COMPACT_AT] = max(2 * j, MIN_COMPACT)


@njit(cache=True, nogil=True)
def _pair(s_par, s_db, s_do, s_x, front, back, base, off, x):
    s_par[front] = back
    s_par[back] = front
    s_db[front] = base
    s_db[back] = base
    s_do[front] = off
    s_do[back] = off
    s_x[front] = x
    s_x[back] = x


@njit(cache=True, nogil=True)
def _ingest_block(v_in, t_in, idx0,
                  s_idx, s_v, s_t, s_par, s_db, s_do, s_x, imeta, fmeta,
                  rec_sn, rec_ps, rec_partner, rec_changed, chain,
                  log_back, log_front, log_time, log_pos, log_on,
                  evict, eps_abs, eps_rel, stop_index):
    for i in range(v_in.shape[0]):
        tn = t_in[i]
        if not tn > fmeta[0]:
            return NONMONO, i
        top = imeta[M_TOP]
        if stop_index >= 0 and imeta[M_INGESTED] > 0 and (top == 0 or s_idx[0] != stop_index or (
                s_par[0] >= 0 and _gap(s_db[0], s_do[0], tn, 0.0) <= 0.0)):
            # the watched (first) bullet died no later than this firing, so
            # its death is final and nothing after it can matter
            imeta[M_STOPPED] = 1
            return STOPPED, i
        if evict:
            # outermost pairs at the top of the stack that are already over
            while top > 0:
                p = top - 1
                q = s_par[p]
                if q >= 0 and _gap(s_db[p], s_do[p], tn, 0.0) <= 0.0:
                    for r in range(q, p + 1):
                        rr = s_par[r]
                        if rr > r:
                            if log_on:
                                nl = imeta[M_NLOG]
                                log_back[nl] = s_idx[rr]
                                log_front[nl] = s_idx[r]
                                log_time[nl] = s_db[r] + s_do[r]
                                log_pos[nl] = s_x[r]
                                imeta[M_NLOG] = nl + 1
                            imeta[M_EVICTED] += 1
                    top = q
                else:
                    break
            imeta[M_TOP] = top
            if top >= imeta[M_COMPACT_AT]:
                _compact(s_idx, s_v, s_t, s_par, s_db, s_do, s_x, imeta, tn,
                         log_back, log_front, log_time, log_pos, log_on)
                top = imeta[M_TOP]
        pos = top
        s_idx[pos] = idx0 + i
        s_v[pos] = v_in[i]
        s_t[pos] = tn
        s_par[pos] = -1
        s_db[pos] = math.inf
        s_do[pos] = 0.0
        s_x[pos] = math.inf
        imeta[M_TOP] = top + 1
        fmeta[0] = tn
        imeta[M_INGESTED] += 1

        cur = pos
        # current time as base + offset
        tau_b = tn
        tau_o = 0.0
        from_death = False
        p = pos - 1
        partner = -1
        nchain = 0
        changed = -1
        while True:
            while p >= 0 and s_par[p] >= 0 and _gap(s_db[p], s_do[p], tau_b, tau_o) <= 0.0:
                p = s_par[p] - 1
            if p < 0:
                has = False
                dt = math.inf
                xc = math.inf
            else:
                has, dt, xc = _catch(s_v[p], s_t[p], s_v[cur], s_t[cur])
            tb = s_t[cur]
            if has and from_death and _tie(tb, dt, tau_b, tau_o, eps_abs, eps_rel):
                fmeta[1] = tau_b + tau_o
                imeta[M_TRIPLE] = s_idx[cur]
                imeta[M_TRIPLE + 1] = s_idx[p]
                imeta[M_TRIPLE + 2] = -1
                return TRIPLE, i
            if p < 0 or (not has and s_par[p] < 0):
                # nothing left to catch: cur joins as the rearmost survivor
                imeta[M_SURV] += 1
                changed = s_idx[cur]
                break
            if s_par[p] < 0:
                # cur annihilates the last survivor
                _pair(s_par, s_db, s_do, s_x, p, cur, tb, dt, xc)
                imeta[M_SURV] -= 1
                imeta[M_PAIRS] += 1
                chain[nchain] = cur
                nchain += 1
                if cur == pos:
                    partner = s_idx[p]
                changed = s_idx[p]
                break
            k = s_par[p]
            d_b = s_db[p]
            d_o = s_do[p]
            if has and _tie(tb, dt, d_b, d_o, eps_abs, eps_rel):
                fmeta[1] = d_b + d_o
                imeta[M_TRIPLE] = s_idx[cur]
                imeta[M_TRIPLE + 1] = s_idx[p]
                imeta[M_TRIPLE + 2] = s_idx[k]
                return TRIPLE, i
            if has and _gap(tb, dt, d_b, d_o) < 0.0:
                # cur pre-empts the scheduled collision of p with k
                _pair(s_par, s_db, s_do, s_x, p, cur, tb, dt, xc)
                chain[nchain] = cur
                nchain += 1
                if cur == pos:
                    partner = s_idx[p]
                s_par[k] = -1
                s_db[k] = math.inf
                s_do[k] = 0.0
                s_x[k] = math.inf
                cur = k
            tau_b = d_b
            tau_o = d_o
            from_death = True
            p = k - 1
        rec_sn[i] = imeta[M_SURV]
        rec_ps[i] = partner < 0
        rec_partner[i] = partner
        rec_changed[i] = changed
        imeta[M_CHAIN] = nchain
    return OK, v_in.shape[0]


class Engine:
    """Streaming resolver state for ``B_n``.

    ``keep_records`` retains the per-bullet ``|S_k|``, potential-survivor
    flags, insertion partners and survivor changes.  With ``evict=True``
    pairs whose collision time is not after the latest fire time are
    dropped from the stack (optionally appended to ``collision_log`` or
    passed to ``collision_sink``), keeping memory proportional to the
    survivors plus pending pairs.
    """

    def __init__(self, *, keep_records: bool = True, evict: bool = False,
                 log_collisions: Optional[bool] = None,
                 collision_sink: Optional[Callable[[List[Collision]], None]] = None,
                 eps_abs: float = EPS_ABS, eps_rel: float = EPS_REL,
                 stop_index: int = -1, capacity: int = 1024):
        self.keep_records = keep_records
        self.evict = evict
        self.collision_sink = collision_sink
        self.log_collisions = (not evict) if log_collisions is None else log_collisions
        if evict and collision_sink is not None:
            self.log_collisions = True
        self.eps_abs = float(eps_abs)
        self.eps_rel = float(eps_rel)
        self.stop_index = int(stop_index)
        cap = max(16, int(capacity))
        self._s_idx = np.empty(cap, np.int64)
        self._s_v = np.empty(cap, np.float64)
        self._s_t = np.empty(cap, np.float64)
        self._s_par = np.empty(cap, np.int64)
        self._s_db = np.empty(cap, np.float64)
        self._s_do = np.empty(cap, np.float64)
        self._s_x = np.empty(cap, np.float64)
        self._chain = np.empty(cap, np.int64)
        self._imeta = np.zeros(N_IMETA, np.int64)
        self._imeta[M_COMPACT_AT] = MIN_COMPACT
        self._fmeta = np.array([-math.inf, math.nan])
        self._first_index: Optional[int] = None
        self._records: List[tuple] = []
        self._records_cache = None
        self.collision_log: List[Collision] = []
        self._log = tuple(np.empty(0, dt) for dt in (np.int64, np.int64, np.float64, np.float64))

    # -- bookkeeping ------------------------------------------------------
    @property
    def ingested(self) -> int:
        return int(self._imeta[M_INGESTED])

    @property
    def size(self) -> int:
        """Current ``|S_n|``."""
        return int(self._imeta[M_SURV])

    @property
    def collisions_scheduled(self) -> int:
        return int(self._imeta[M_PAIRS])

    @property
    def evicted(self) -> int:
        return int(self._imeta[M_EVICTED])

    @property
    def last_fire_time(self) -> float:
        return float(self._fmeta[0])

    @property
    def stack_size(self) -> int:
        return int(self._imeta[M_TOP])

    @property
    def stopped(self) -> bool:
        return bool(self._imeta[M_STOPPED])

    @property
    def next_index(self) -> int:
        return (self._first_index or 0) + self.ingested

    def _ensure_capacity(self, extra: int):
        need = int(self._imeta[M_TOP]) + extra
        cap = self._s_idx.shape[0]
        if need > cap:
            new = max(need, 2 * cap)
            for name in ("_s_idx", "_s_v", "_s_t", "_s_par", "_s_db", "_s_do", "_s_x", "_chain"):
                old = getattr(self, name)
                arr = np.empty(new, old.dtype)
                arr[:cap] = old
                setattr(self, name, arr)
        if self.log_collisions:
            logcap = need // 2 + 1
            if self._log[0].shape[0] < logcap:
                self._log = tuple(np.empty(2 * logcap, dt)
                                  for dt in (np.int64, np.int64, np.float64, np.float64))

    def _drain_log(self):
        n = int(self._imeta[M_NLOG])
        if n == 0:
            return
        b, f, t, x = (a[:n] for a in self._log)
        batch = [Collision(int(b[i]), int(f[i]), float(t[i]), float(x[i])) for i in range(n)]
        if self.collision_sink is not None:
            self.collision_sink(batch)
        else:
            self.collision_log.extend(batch)
        self._imeta[M_NLOG] = 0

    # -- ingestion --------------------------------------------------------
    def ingest_arrays(self, velocities, fire_times, first_index: Optional[int] = None):
        """Ingest a block of bullets; returns ``(sn, ps, partner, changed)`` arrays for the block."""
        v = np.ascontiguousarray(velocities, dtype=np.float64)
        t = np.ascontiguousarray(fire_times, dtype=np.float64)
        if v.shape != t.shape:
            raise ValueError("velocities and fire_times differ in length")
        if np.any(v < 0) or not np.all(np.isfinite(v)) or not np.all(np.isfinite(t)):
            raise ValueError("velocities must be finite and >= 0; fire times finite")
        if self._first_index is None:
            self._first_index = 0 if first_index is None else int(first_index)
            if self.stop_index >= 0 and self.stop_index != self._first_index:
                raise ValueError("stop_index must be the first ingested bullet")
        elif first_index is not None and first_index != self.next_index:
            raise ValueError(f"expected bullet index {self.next_index}, got {first_index}")
        m = v.shape[0]
        self._ensure_capacity(m)
        sn = np.empty(m, np.int64)
        ps = np.empty(m, np.bool_)
        partner = np.empty(m, np.int64)
        changed = np.empty(m, np.int64)
        idx0 = self.next_index
        status, done = _ingest_block(
            v, t, idx0,
            self._s_idx, self._s_v, self._s_t, self._s_par, self._s_db, self._s_do, self._s_x,
            self._imeta, self._fmeta, sn, ps, partner, changed, self._chain,
            self._log[0], self._log[1], self._log[2], self._log[3], self.log_collisions,
            self.evict, self.eps_abs, self.eps_rel, self.stop_index)
        if self.log_collisions:
            self._drain_log()
        if status == TRIPLE:
            raise TripleCollision(self._fmeta[1], [i for i in self._imeta[M_TRIPLE:M_TRIPLE + 3] if i >= 0])
        if status == NONMONO:
            raise NonMonotoneFireTime(
                f"bullet {idx0 + done} fired at {t[done]!r}, not after {self._fmeta[0]!r}")
        out = (sn[:done], ps[:done], partner[:done], changed[:done])
        if self.keep_records:
            self._records.append(out)
            self._records_cache = None
        return out

    def ingest(self, bullet: Bullet) -> InsertionOutcome:
        sn, ps, partner, changed = self.ingest_arrays([bullet.velocity], [bullet.fire_time],
                                                      bullet.index)
        nchain = int(self._imeta[M_CHAIN])
        chain = []
        for c in self._chain[:nchain]:
            f = self._s_par[c]
            chain.append(Collision(int(self._s_idx[c]), int(self._s_idx[f]),
                                   float(self._s_db[c] + self._s_do[c]), float(self._s_x[c])))
        p = int(partner[0])
        return InsertionOutcome(int(sn[0]), bool(ps[0]), None if p < 0 else p,
                                tuple(chain), int(changed[0]))

    def ingest_all(self, bullets: Sequence[Bullet]):
        if not bullets:
            return
        idx, v, t = as_arrays(bullets)
        if np.any(np.diff(idx) != 1):
            raise ValueError("bullet indices must be consecutive")
        self.ingest_arrays(v, t, int(idx[0]))

    # -- queries ----------------------------------------------------------
    def _live(self):
        top = self.stack_size
        return (self._s_idx[:top], self._s_v[:top], self._s_t[:top],
                self._s_par[:top], self._s_db[:top] + self._s_do[:top], self._s_x[:top])

    def survivors(self) -> List[int]:
        idx, _, _, par, _, _ = self._live()
        return [int(i) for i in idx[par < 0]]

    def survivor_velocities(self) -> np.ndarray:
        _, v, _, par, _, _ = self._live()
        return v[par < 0].copy()

    def scheduled_collisions(self) -> List[Collision]:
        """Pairs still held on the stack (confirmed or pending)."""
        idx, _, _, par, death, x = self._live()
        fronts = np.nonzero(par > np.arange(len(par)))[0]
        return [Collision(int(idx[par[r]]), int(idx[r]), float(death[r]), float(x[r]))
                for r in fronts]

    def collisions(self) -> List[Collision]:
        """Every collision of the current truncation, ordered by time."""
        out = list(self.collision_log) + self.scheduled_collisions()
        out.sort(key=lambda c: (c.time, c.front_index))
        return out

    def confirmed_collisions(self) -> List[Collision]:
        """Collisions no later than the latest fire time; these are final."""
        now = self.last_fire_time
        out = [c for c in self.collision_log] + [
            c for c in self.scheduled_collisions() if c.time <= now]
        out.sort(key=lambda c: (c.time, c.front_index))
        return out

    def _record_arrays(self):
        if not self.keep_records:
            raise RuntimeError("engine was created with keep_records=False")
        if self._records_cache is None:
            if self._records:
                self._records_cache = tuple(np.concatenate(a) for a in zip(*self._records))
            else:
                self._records_cache = tuple(np.empty(0, dt) for dt in (np.int64, np.bool_, np.int64, np.int64))
            self._records = [self._records_cache] if self._records else []
        return self._records_cache

    @property
    def sn_sizes(self) -> np.ndarray:
        return self._record_arrays()[0]

    @property
    def ps_flags(self) -> np.ndarray:
        return self._record_arrays()[1]

    @property
    def insertion_partner(self) -> np.ndarray:
        return self._record_arrays()[2]

    @property
    def survivor_changes(self) -> np.ndarray:
        return self._record_arrays()[3]

    def is_potential_survivor(self, k: int) -> bool:
        first = self._first_index or 0
        if not first <= k < self.next_index:
            raise IndexError(f"bullet {k} has not been ingested")
        return bool(self.ps_flags[k - first])

    def resolution(self, bullets: Optional[Sequence[Bullet]] = None) -> "Resolution":
        if not self.log_collisions and self.evicted:
            raise RuntimeError("evicted collisions were not logged")
        sn, ps, partner, changed = self._record_arrays()
        return Resolution(
            bullets=list(bullets) if bullets is not None else None,
            collisions=self.collisions(),
            survivors=self.survivors(),
            sn_sizes=sn.copy(),
            ps_flags=ps.copy(),
            insertion_partner=partner.copy(),
            first_index=self._first_index or 0,
            changes=changed.copy(),
        )


@dataclass
class Resolution:
    """Complete outcome of a finite truncation.

    ``sn_sizes``, ``ps_flags`` and ``insertion_partner`` are indexed by
    position in the input (entry ``k`` belongs to ``first_index + k``).
    ``insertion_partner`` is -1 for potential survivors.  ``changes[k]``
    is the bullet that entered or left the survivor set at step ``k``
    (engine only).
    """

    bullets: Optional[List[Bullet]]
    collisions: List[Collision]
    survivors: List[int]
    sn_sizes: np.ndarray
    ps_flags: np.ndarray
    insertion_partner: np.ndarray
    first_index: int = 0
    changes: Optional[np.ndarray] = None

    @property
    def matching(self) -> frozenset:
        return frozenset((c.back_index, c.front_index) for c in self.collisions)

    def partner_of(self) -> dict:
        out = {}
        for c in self.collisions:
            out[c.back_index] = c.front_index
            out[c.front_index] = c.back_index
        return out


def resolve_truncation(bullets: Sequence[Bullet], *, eps_abs: float = EPS_ABS,
                       eps_rel: float = EPS_REL) -> Resolution:
    """Resolve ``B_I`` for a list of consecutively indexed bullets."""
    eng = Engine(eps_abs=eps_abs, eps_rel=eps_rel, capacity=len(bullets) + 1)
    eng.ingest_all(bullets)
    return eng.resolution(bullets)


def resolve_arrays(velocities, fire_times, first_index: int = 0, **kw) -> Resolution:
    eng = Engine(capacity=len(velocities) + 1, **kw)
    eng.ingest_arrays(velocities, fire_times, first_index)
    return eng.resolution()


def survivors_snapshot(state: Engine) -> List[int]:
    return state.survivors()


def confirmed_collisions(state: Engine) -> List[Collision]:
    return state.confirmed_collisions()


def is_potential_survivor(state: Engine, k: int) -> bool:
    return state.is_potential_survivor(k)


def simulate(config: ProcessConfig, count: int, stream_id: int = 0, *,
             keep_records: bool = False, evict: bool = True,
             stop_when_first_dies: bool = False,
             on_chunk: Optional[Callable] = None,
             collision_sink: Optional[Callable[[List[Collision]], None]] = None,
             eps_abs: float = EPS_ABS, eps_rel: float = EPS_REL) -> Engine:
    """Stream ``count`` bullets of one realization through a fresh engine.

    ``on_chunk(first_index, v, t, sn, ps, partner, changed)`` sees every
    block as it is ingested.  With ``stop_when_first_dies`` the run ends
    once bullet 0 has been hit at or before the latest firing.  Leaving
    some ``S_k`` is not enough: a later bullet can still destroy bullet 0's
    killer first.  A confirmed hit is final.
    """
    eng = Engine(keep_records=keep_records, evict=evict, collision_sink=collision_sink,
                 eps_abs=eps_abs, eps_rel=eps_rel, stop_index=0 if stop_when_first_dies else -1)
    stream = RngStream(config.seed, stream_id)
    eng.rng_stream = stream
    try:
        for first, v, t in iter_chunks(config, count, stream=stream):
            sn, ps, partner, changed = eng.ingest_arrays(v, t, first)
            if on_chunk is not None:
                k = len(sn)
                on_chunk(first, v[:k], t[:k], sn, ps, partner, changed)
            if eng.stopped:
                break
    except TripleCollision as exc:
        raise exc.with_seed(config.seed, stream_id) from None
    return eng
