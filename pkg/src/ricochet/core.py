"""Domain types, distributions, process configuration and random streams.

All reals are IEEE-754 binary64.  Random numbers come from numpy's PCG64;
each (master_seed, stream_id) pair is mixed with SplitMix64 into a seed
which is then expanded by numpy's SeedSequence into four independent
substreams (velocity choice, velocity noise, delay choice, delay noise).
Keeping the four sources separate makes every draw independent of how the
sequence is chunked, so a prefix of a long realization is bit-identical to
a short realization with the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

MASK64 = (1 << 64) - 1

# chunk schedule used when streaming a realization
FIRST_CHUNK = 256
MAX_CHUNK = 1 << 16


class ConfigurationError(ValueError):
    """Invalid distribution or process configuration."""


class TripleCollision(RuntimeError):
    """Two interacting collision events coincide within tolerance."""

    def __init__(self, time: float, indices: Sequence[int], seed: Optional[int] = None,
                 stream_id: Optional[int] = None):
        self.time = float(time)
        self.indices = tuple(int(i) for i in indices)
        self.seed = seed
        self.stream_id = stream_id
        super().__init__(self._message())

    def _message(self) -> str:
        msg = f"simultaneous collision of bullets {list(self.indices)} at t={self.time!r}"
        if self.seed is not None:
            msg += f" (seed={self.seed}, stream={self.stream_id})"
        return msg

    def with_seed(self, seed: int, stream_id: int) -> "TripleCollision":
        return TripleCollision(self.time, self.indices, seed, stream_id)


class NonMonotoneFireTime(ValueError):
    """A bullet was ingested with a fire time not after the previous one."""


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

def splitmix64(x: int) -> int:
    """SplitMix64 finalizer (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix_seed(master_seed: int, stream_id: int) -> int:
    return splitmix64(splitmix64(master_seed & MASK64) ^ (stream_id & MASK64))


class RngStream:
    """Reproducible random source for one replica.

    ``velocity``/``velocity_noise`` feed the speed distribution and
    ``delay``/``delay_noise`` the delay distribution.  ``clamped`` counts
    jittered speed values that fell below zero and were clamped.
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        if not (0 <= master_seed <= MASK64 and 0 <= stream_id <= MASK64):
            raise ConfigurationError("seeds must be unsigned 64-bit integers")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        children = np.random.SeedSequence(mix_seed(master_seed, stream_id)).spawn(4)
        self.velocity, self.velocity_noise, self.delay, self.delay_noise = (
            np.random.Generator(np.random.PCG64(c)) for c in children
        )
        self.clamped = 0
        self._tables = {}

    def support_table(self, spec: "FiniteSupport", role: str) -> np.ndarray:
        """Perturbed support of ``spec`` for this realization, drawn on first use."""
        key = (role, spec)
        if key not in self._tables:
            rng = self.velocity_noise if role == "velocity" else self.delay_noise
            table = spec.perturbed(rng)
            if role == "velocity" and np.any(table < 0):
                self.clamped += int(np.sum(table < 0))
                table = np.maximum(table, 0.0)
            self._tables[key] = table
        return self._tables[key]

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not 0 <= self.lo < self.hi:
            raise ConfigurationError(f"uniform needs 0 <= lo < hi, got ({self.lo}, {self.hi})")

    atomic = False

    def _draw(self, rng, noise_rng, size):
        return self.lo + (self.hi - self.lo) * rng.random(size)

    def check_delay(self):
        if self.lo <= 0:
            raise ConfigurationError("uniform delay distribution needs lo > 0")

    def grammar(self) -> str:
        return f"uniform:{self.lo!r},{self.hi!r}"

    @property
    def sup(self) -> float:
        return self.hi


@dataclass(frozen=True)
class PointMass:
    c: float

    def __post_init__(self):
        if not math.isfinite(self.c) or self.c < 0:
            raise ConfigurationError(f"point mass needs c >= 0, got {self.c}")

    atomic = True

    def _draw(self, rng, noise_rng, size):
        return np.full(size, float(self.c))

    def check_delay(self):
        if self.c <= 0:
            raise ConfigurationError("point mass delay needs c > 0")

    def grammar(self) -> str:
        return f"point:{self.c!r}"

    @property
    def sup(self) -> float:
        return self.c


@dataclass(frozen=True)
class FiniteSupport:
    """Equal-weight finite support, optionally jittered by Gaussian noise.

    With ``noise_sigma > 0`` every support value is shifted once per
    realization by an independent N(0, noise_sigma**2) offset; the law of a
    single realization stays atomic but exact coincidences between speeds
    (and hence simultaneous triple collisions) are avoided.
    """

    values: Tuple[float, ...]
    noise_sigma: float = 0.0

    def __post_init__(self):
        vals = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ConfigurationError("finite support needs at least one value")
        if any(not math.isfinite(x) or x < 0 for x in vals):
            raise ConfigurationError("finite support values must be >= 0")
        if len(set(vals)) != len(vals):
            raise ConfigurationError("finite support values must be distinct")
        if not math.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            raise ConfigurationError("noise sigma must be >= 0")

    @property
    def atomic(self) -> bool:
        # jittered values rule out exact speed coincidences, which is what
        # the pair check cares about
        return self.noise_sigma == 0

    def perturbed(self, noise_rng) -> np.ndarray:
        """Support values, each shifted once by its own Gaussian offset."""
        table = np.asarray(self.values)
        if self.noise_sigma > 0:
            table = table + self.noise_sigma * noise_rng.standard_normal(len(table))
        return table

    def _draw(self, rng, noise_rng, size, table=None):
        if table is None:
            table = self.perturbed(noise_rng)
        # floor(u*K) rather than rng.integers: integers() buffers 32-bit halves,
        # which would make draws depend on chunking
        k = np.minimum((rng.random(size) * len(table)).astype(np.int64), len(table) - 1)
        return table[k]

    def check_delay(self):
        if min(self.values) <= 10 * self.noise_sigma:
            raise ConfigurationError("finite delay values must exceed 10*sigma")

    def grammar(self) -> str:
        body = ",".join(repr(v) for v in self.values)
        if self.noise_sigma:
            body += f";{self.noise_sigma!r}"
        return f"finite:{body}"

    @property
    def sup(self) -> float:
        return max(self.values) if self.noise_sigma == 0 else math.inf

    def nearest(self, x):
        """Index of the nearest support value, ties toward the lower value."""
        order = np.argsort(self.values)
        grid = np.asarray(self.values)[order]
        x = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(grid, x), 1, len(grid) - 1) if len(grid) > 1 else np.zeros(x.shape, int)
        if len(grid) > 1:
            lower = grid[j - 1]
            upper = grid[j]
            j = np.where(x - lower <= upper - x, j - 1, j)
        return order[j]


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not math.isfinite(self.rate) or self.rate <= 0:
            raise ConfigurationError(f"exponential needs rate > 0, got {self.rate}")

    atomic = False

    def _draw(self, rng, noise_rng, size):
        return rng.standard_exponential(size) / self.rate

    def check_delay(self):
        pass

    def grammar(self) -> str:
        return f"exp:{self.rate!r}"

    @property
    def sup(self) -> float:
        return math.inf


DistributionSpec = Union[Uniform, PointMass, FiniteSupport, Exponential]


def parse_distribution(text: str) -> DistributionSpec:
    """Parse ``uniform:LO,HI``, ``point:C``, ``exp:RATE`` or ``finite:V1,...,VK[;SIGMA]``."""
    kind, sep, body = text.strip().partition(":")
    if not sep:
        raise ConfigurationError(f"malformed distribution {text!r}")
    kind = kind.lower()
    try:
        if kind == "uniform":
            lo, hi = (float(x) for x in body.split(","))
            return Uniform(lo, hi)
        if kind == "point":
            return PointMass(float(body))
        if kind == "exp":
            return Exponential(float(body))
        if kind == "finite":
            vals, _, sigma = body.partition(";")
            return FiniteSupport(tuple(float(x) for x in vals.split(",")),
                                 float(sigma) if sigma else 0.0)
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed distribution {text!r}: {exc}") from None
    raise ConfigurationError(f"unknown distribution kind {kind!r}")


def sample_velocity(spec: DistributionSpec, stream: RngStream, size: Optional[int] = None):
    """Draw from the speed distribution; jitter that pushes a speed below 0 is clamped to 0."""
    n = 1 if size is None else size
    if isinstance(spec, FiniteSupport):
        out = spec._draw(stream.velocity, None, n, stream.support_table(spec, "velocity"))
    else:
        out = spec._draw(stream.velocity, stream.velocity_noise, n)
    neg = out < 0
    if neg.any():
        stream.clamped += int(neg.sum())
        out[neg] = 0.0
    return float(out[0]) if size is None else out


def sample_delay(spec: DistributionSpec, stream: RngStream, size: Optional[int] = None):
    spec.check_delay()
    n = 1 if size is None else size
    if isinstance(spec, FiniteSupport):
        out = spec._draw(stream.delay, None, n, stream.support_table(spec, "delay"))
    else:
        out = spec._draw(stream.delay, stream.delay_noise, n)
    return float(out[0]) if size is None else out


@dataclass(frozen=True)
class PairVerdict:
    valid: bool
    reason: str

    def __bool__(self) -> bool:
        return self.valid


def validate_pair(mu: DistributionSpec, nu: DistributionSpec) -> PairVerdict:
    """A pair is accepted when at least one member is non-atomic."""
    if isinstance(mu, FiniteSupport) and mu.noise_sigma > 0:
        return PairVerdict(True, "speed values are jittered by independent noise")
    if not mu.atomic:
        return PairVerdict(True, "velocity distribution is non-atomic")
    if not nu.atomic:
        return PairVerdict(True, "delay distribution is non-atomic")
    return PairVerdict(False, "both distributions are atomic; simultaneous triple "
                              "collisions are not ruled out (override required)")


# ---------------------------------------------------------------------------
# Bullets and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bullet:
    index: int
    velocity: float
    fire_time: float


@dataclass(frozen=True)
class ProcessConfig:
    mu: DistributionSpec
    nu: DistributionSpec
    seed: int = 0
    fixed_v0: Optional[float] = None
    force: bool = False
    pair_verdict: PairVerdict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.nu.check_delay()
        if self.fixed_v0 is not None and (not math.isfinite(self.fixed_v0) or self.fixed_v0 < 0):
            raise ConfigurationError("fixed_v0 must be a finite real >= 0")
        if not 0 <= self.seed <= MASK64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        verdict = validate_pair(self.mu, self.nu)
        object.__setattr__(self, "pair_verdict", verdict)
        if not verdict.valid and not self.force:
            raise ConfigurationError(verdict.reason)

    def with_v0(self, v: Optional[float]) -> "ProcessConfig":
        return ProcessConfig(self.mu, self.nu, self.seed, v, self.force)


def iter_chunks(config: ProcessConfig, count: int, stream_id: int = 0,
                stream: Optional[RngStream] = None) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
    """Yield ``(first_index, velocities, fire_times)`` blocks covering bullets 0..count-1.

    Chunk sizes grow geometrically; the concatenated output does not depend
    on the schedule.  Fire times that fail to increase in floating point
    (a delay below one ulp of the clock) are nudged to the next float.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    if stream is None:
        stream = RngStream(config.seed, stream_id)
    start = 0
    clock = 0.0
    size = FIRST_CHUNK
    while start < count:
        m = min(size, count - start)
        v = sample_velocity(config.mu, stream, m)
        d = sample_delay(config.nu, stream, m)
        if start == 0:
            if config.fixed_v0 is not None:
                v[0] = config.fixed_v0
            d[0] = 0.0
            t = np.cumsum(d)
        else:
            t = np.cumsum(np.concatenate(([clock], d)))[1:]
        if start > 0 and t[0] <= clock or np.any(t[1:] <= t[:-1]):
            t = _force_increasing(t, clock if start > 0 else -math.inf)
        clock = float(t[-1])
        yield start, v, t
        start += m
        size = min(2 * size, MAX_CHUNK)


def _force_increasing(t: np.ndarray, prev: float) -> np.ndarray:
    t = t.copy()
    for i in range(len(t)):
        if t[i] <= prev:
            t[i] = np.nextafter(prev, np.inf)
        prev = t[i]
    return t


def generate_arrays(config: ProcessConfig, count: int, stream_id: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Velocities and fire times of bullets 0..count-1 as arrays."""
    vs, ts = [], []
    for _, v, t in iter_chunks(config, count, stream_id):
        vs.append(v)
        ts.append(t)
    return np.concatenate(vs), np.concatenate(ts)


def generate_sequence(config: ProcessConfig, count: int, stream_id: int = 0) -> List[Bullet]:
    v, t = generate_arrays(config, count, stream_id)
    return [Bullet(i, float(v[i]), float(t[i])) for i in range(count)]


def bullets_from_arrays(velocities: Sequence[float], fire_times: Sequence[float],
                        first_index: int = 0) -> List[Bullet]:
    return [Bullet(first_index + i, float(v), float(t))
            for i, (v, t) in enumerate(zip(velocities, fire_times))]


def as_arrays(bullets: Sequence[Bullet]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a bullet list into (indices, velocities, fire_times)."""
    idx = np.fromiter((b.index for b in bullets), dtype=np.int64, count=len(bullets))
    v = np.fromiter((b.velocity for b in bullets), dtype=np.float64, count=len(bullets))
    t = np.fromiter((b.fire_time for b in bullets), dtype=np.float64, count=len(bullets))
    return idx, v, t
