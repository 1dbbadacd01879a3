"""Monte Carlo estimators: survival of the first bullet, critical speed,
potential-survivor speeds, and survivor censuses for finite speed sets."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import ConfigurationError, DistributionSpec, FiniteSupport, ProcessConfig
from .engine import simulate

Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    # clamp so the interval always brackets the point estimate
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


@dataclass(frozen=True)
class ThetaEstimate:
    v: float
    n: int
    N: int
    successes: int
    point: float
    ci_lo: float
    ci_hi: float

    def row(self):
        return (self.v, self.n, self.N, self.successes, self.point, self.ci_lo, self.ci_hi)

    HEADER = ("v", "n", "N", "successes", "theta_hat", "ci_lo", "ci_hi")


def first_survives(v: float, mu: DistributionSpec, nu: DistributionSpec, n: int,
                   master_seed: int, replica: int, force: bool = False) -> bool:
    """Whether bullet 0, forced to speed ``v``, survives ``B_n`` in one replica.

    ``n`` counts the bullets fired after bullet 0.
    """
    if n == 0:
        return True
    cfg = ProcessConfig(mu, nu, master_seed, fixed_v0=v, force=force)
    eng = simulate(cfg, n + 1, replica, stop_when_first_dies=True)
    if eng.stopped:
        return False
    surv = eng.survivors()
    return bool(surv) and surv[0] == 0


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def survival_indicators(vs: Sequence[float], mu, nu, n: int, N: int, master_seed: int,
                        workers: int = 1, force: bool = False) -> np.ndarray:
    """Boolean matrix ``[replica, v]`` of survival indicators under common random numbers."""
    vs = list(vs)

    def one(r):
        return [first_survives(v, mu, nu, n, master_seed, r, force) for v in vs]

    return np.array(_map(one, range(N), workers), dtype=bool).reshape(N, len(vs))


def _estimate(v, n, N, successes) -> ThetaEstimate:
    lo, hi = wilson_interval(successes, N)
    return ThetaEstimate(float(v), n, N, successes, successes / N, lo, hi)


def theta_hat(v: float, mu: DistributionSpec, nu: DistributionSpec, n: int, N: int,
              master_seed: int, workers: int = 1, force: bool = False) -> ThetaEstimate:
    """Fraction of ``N`` replicas in which bullet 0 at speed ``v`` survives ``B_n``.

    Replica ``r`` draws from stream ``r``; the result does not depend on
    ``workers``.
    """
    if n < 0 or N < 1:
        raise ValueError("need n >= 0 and N >= 1")
    ind = survival_indicators([v], mu, nu, n, N, master_seed, workers, force)
    return _estimate(v, n, N, int(ind.sum()))


def theta_curve(grid: Sequence[float], mu, nu, n: int, N: int, master_seed: int,
                workers: int = 1, force: bool = False) -> List[ThetaEstimate]:
    ind = survival_indicators(grid, mu, nu, n, N, master_seed, workers, force)
    return [_estimate(v, n, N, int(s)) for v, s in zip(grid, ind.sum(axis=0))]


def vc_from_curve(curve: Sequence[ThetaEstimate]) -> float:
    for est in curve:
        if est.successes >= 1:
            return est.v
    return math.inf


def default_grid(lo: float = 0.0, hi: float = 1.0, step: float = 0.01) -> List[float]:
    k = int(round((hi - lo) / step))
    return [round(lo + i * step, 12) for i in range(k + 1)]


def vc_hat(grid: Sequence[float], mu, nu, n: int, N: int, master_seed: int,
           workers: int = 1, force: bool = False) -> float:
    """Smallest grid speed at which some replica's first bullet survives, else ``inf``.

    Scans upward and stops at the first hit; equals ``vc_from_curve`` of the
    full curve.
    """
    grid = list(grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be sorted ascending")
    for v in grid:
        hits = _map(lambda r: first_survives(v, mu, nu, n, master_seed, r, force),
                    range(N), workers)
        if any(hits):
            return float(v)
    return math.inf


@dataclass(frozen=True)
class VhatEstimate:
    n: int
    window: Tuple[int, int]  # indices in (window[0], window[1]]
    count: int
    max_ps_velocity: float
    histogram: List[Tuple[float, float, int, float]]
    bucket_width: float

    HEADER = ("bucket_lo", "bucket_hi", "count", "height")


def histogram_rows(values: np.ndarray, bucket_width: float, normaliser: float):
    if len(values) == 0:
        return []
    keys = np.floor(values / bucket_width).astype(np.int64)
    lo, hi = int(keys.min()), int(keys.max())
    counts = np.bincount(keys - lo, minlength=hi - lo + 1)
    return [((lo + j) * bucket_width, (lo + j + 1) * bucket_width, int(c),
             float(c) / (bucket_width * normaliser))
            for j, c in enumerate(counts)]


def vhat_hat(mu, nu, n: int, bucket_width: float = 0.001, master_seed: int = 0,
             stream_id: int = 0, force: bool = False) -> VhatEstimate:
    """Speeds of the potential survivors with index in ``(n/2, n]`` in one realization."""
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    if not bucket_width > 0:
        raise ValueError("bucket width must be positive")
    half = n // 2
    picked: List[np.ndarray] = []

    def grab(first, v, t, sn, ps, partner, changed):
        idx = np.arange(first, first + len(v))
        sel = ps & (idx > half)
        if sel.any():
            picked.append(v[sel])

    cfg = ProcessConfig(mu, nu, master_seed, force=force)
    simulate(cfg, n + 1, stream_id, on_chunk=grab)
    vals = np.concatenate(picked) if picked else np.empty(0)
    return VhatEstimate(n, (half, n), len(vals),
                        float(vals.max()) if len(vals) else math.nan,
                        histogram_rows(vals, bucket_width, half), bucket_width)


@dataclass(frozen=True)
class CensusResult:
    values: Tuple[float, ...]
    survivors: Tuple[int, ...]
    potential_survivors: Tuple[int, ...]
    total_survivors: int
    total_potential: int
    modal_value: float
    first_modal_index: int
    survivor_indices: Tuple[int, ...]
    checkpoints: Dict[int, int]

    HEADER = ("velocity", "survivors", "potential_survivors")

    def rows(self):
        return list(zip(self.values, self.survivors, self.potential_survivors))

    @property
    def modal_share(self) -> float:
        return max(self.survivors) / self.total_survivors if self.total_survivors else 0.0


def census(mu: FiniteSupport, nu, n: int, master_seed: int = 0, stream_id: int = 0,
           checkpoints: Sequence[int] = (), force: bool = False) -> CensusResult:
    """Tally survivors of ``B_n`` and all potential survivors by nearest support value."""
    if not isinstance(mu, FiniteSupport):
        raise ConfigurationError("census needs a finite-support speed distribution")
    K = len(mu.values)
    ps_counts = np.zeros(K, np.int64)
    marks = sorted(set(int(c) for c in checkpoints if 0 <= c <= n))
    seen: Dict[int, int] = {}

    def tally(first, v, t, sn, ps, partner, changed):
        if ps.any():
            ps_counts[:] += np.bincount(mu.nearest(v[ps]), minlength=K)
        for c in marks:
            if first <= c < first + len(sn):
                seen[c] = int(sn[c - first])

    cfg = ProcessConfig(mu, nu, master_seed, force=force)
    eng = simulate(cfg, n + 1, stream_id, on_chunk=tally)
    surv_idx = eng.survivors()
    surv_bins = mu.nearest(eng.survivor_velocities()) if surv_idx else np.empty(0, np.int64)
    s_counts = np.bincount(surv_bins, minlength=K)
    if surv_idx:
        mode = int(np.argmax(s_counts))
        first_modal = int(surv_idx[int(np.argmax(surv_bins == mode))])
        modal_value = mu.values[mode]
    else:
        first_modal, modal_value = -1, math.nan
    return CensusResult(tuple(mu.values), tuple(int(c) for c in s_counts),
                        tuple(int(c) for c in ps_counts), len(surv_idx), int(ps_counts.sum()),
                        modal_value, first_modal, tuple(surv_idx), seen)


def sn_trajectory(mu, nu, n: int, master_seed: int = 0, stream_id: int = 0,
                  force: bool = False) -> np.ndarray:
    """``|S_0|, ..., |S_n|`` along one realization."""
    cfg = ProcessConfig(mu, nu, master_seed, force=force)
    eng = simulate(cfg, n + 1, stream_id, keep_records=True)
    return eng.sn_sizes.copy()


def sn_records(mu, nu, n: int, master_seed: int = 0, stream_id: int = 0, force: bool = False):
    """``(sn, ps)`` arrays along one realization."""
    cfg = ProcessConfig(mu, nu, master_seed, force=force)
    eng = simulate(cfg, n + 1, stream_id, keep_records=True)
    return eng.sn_sizes.copy(), eng.ps_flags.copy()
