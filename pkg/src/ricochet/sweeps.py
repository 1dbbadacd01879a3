"""Randomized cross-checks: engine against the reference resolver, and the
finite-scale lemma verdicts, over instances drawn from every family."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .analysis import check_front_addition, check_invariants, shift_reindex_check
from .core import (Exponential, FiniteSupport, PointMass, ProcessConfig, TripleCollision,
                   Uniform, generate_sequence)
from .engine import resolve_truncation
from .oracle import brute_resolve

SPEED_FAMILIES = (
    Uniform(0.0, 1.0),
    Uniform(0.5, 1.5),
    Exponential(1.0),
    PointMass(0.5),
    PointMass(0.0),
    FiniteSupport((0.1, 0.5, 0.9), 0.001),
    FiniteSupport((0.0, 0.3, 0.7, 1.0)),
    FiniteSupport((0.5, 1.0, 2.0)),
    FiniteSupport((1.0, 2.0, 3.0, 4.0)),
)
DELAY_FAMILIES = (PointMass(1.0), Exponential(2.0), Uniform(0.5, 1.5))


def random_instance(rng: np.random.Generator, n_lo: int = 2, n_hi: int = 200):
    """A bullet sequence of random family, length and seed, plus its config."""
    mu = SPEED_FAMILIES[rng.integers(len(SPEED_FAMILIES))]
    nu = DELAY_FAMILIES[rng.integers(len(DELAY_FAMILIES))]
    cfg = ProcessConfig(mu, nu, seed=int(rng.integers(2**63)), force=True)
    n = int(rng.integers(n_lo, n_hi + 1))
    return cfg, generate_sequence(cfg, n)


@dataclass
class SweepReport:
    cases: int = 0
    triples: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        return (f"{self.cases} cases, {self.triples} triple collisions, "
                f"{len(self.failures)} failures")


def _compare(a, b, rtol: float) -> Optional[str]:
    if a.matching != b.matching:
        return "matching"
    if a.survivors != b.survivors:
        return "survivors"
    for name in ("sn_sizes", "ps_flags", "insertion_partner"):
        if not np.array_equal(getattr(a, name), getattr(b, name)):
            return name
    tb = {(c.back_index, c.front_index): c.time for c in b.collisions}
    for c in a.collisions:
        ref = tb[(c.back_index, c.front_index)]
        if abs(c.time - ref) > rtol * max(abs(ref), 1.0):
            return "collision time"
    return None


def oracle_sweep(cases: int, seed: int = 0, rtol: float = 1e-9, invariants: bool = True) -> SweepReport:
    """Engine and reference resolver on ``cases`` random instances.

    A triple collision must be reported by both or neither.
    """
    rng = np.random.default_rng(seed)
    rep = SweepReport()
    for i in range(cases):
        cfg, bullets = random_instance(rng)
        rep.cases += 1
        outcome = []
        for fn in (resolve_truncation, brute_resolve):
            try:
                outcome.append(fn(bullets))
            except TripleCollision:
                outcome.append(None)
        a, b = outcome
        if a is None or b is None:
            rep.triples += 1
            if (a is None) != (b is None):
                rep.failures.append(f"case {i}: triple collision seen by one resolver only ({cfg})")
            continue
        what = _compare(a, b, rtol)
        if what:
            rep.failures.append(f"case {i}: {what} differs ({cfg}, n={len(bullets)})")
        if invariants:
            for v in check_invariants(a):
                rep.failures.append(f"case {i}: invariant '{v}' violated ({cfg})")
    return rep


def lemma_sweep(cases: int, seed: int = 0) -> SweepReport:
    """Front-addition and shift-reindex verdicts on random instances."""
    rng = np.random.default_rng(seed)
    rep = SweepReport()
    for i in range(cases):
        cfg, bullets = random_instance(rng)
        rep.cases += 1
        k = int(rng.integers(1, len(bullets)))
        try:
            verdicts = [check_front_addition(bullets), shift_reindex_check(bullets, k)]
        except TripleCollision:
            rep.triples += 1
            continue
        for name, v in zip(("front addition", "shift reindex"), verdicts):
            if not v.ok:
                rep.failures.append(f"case {i}: {name}: {v.message} {v.details}")
    return rep
