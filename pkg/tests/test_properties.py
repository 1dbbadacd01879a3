"""Property tests: engine against the reference resolver and the structural invariants."""

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from ricochet.analysis import (check_front_addition, check_invariants, settling_from_changes,
                               shift_reindex_check, threats_from_resolution)
from ricochet.core import Bullet, FiniteSupport, ProcessConfig, TripleCollision, Uniform
from ricochet.engine import resolve_truncation
from ricochet.estimators import first_survives, wilson_interval
from ricochet.core import PointMass
from ricochet.oracle import brute_resolve

speeds = st.one_of(
    st.floats(0.0, 5.0, allow_nan=False),
    st.sampled_from([0.0, 0.25, 0.5, 1.0, 2.0]),
)
delays = st.one_of(st.floats(1e-3, 3.0, allow_nan=False), st.sampled_from([0.5, 1.0]))


@st.composite
def sequences(draw, max_size=40):
    n = draw(st.integers(1, max_size))
    vs = draw(st.lists(speeds, min_size=n, max_size=n))
    ds = draw(st.lists(delays, min_size=n - 1, max_size=n - 1))
    t = np.concatenate(([0.0], np.cumsum(ds)))
    assume(np.all(np.diff(t) > 0))
    return [Bullet(i, float(v), float(x)) for i, (v, x) in enumerate(zip(vs, t))]


def resolve_both(bullets):
    out = []
    for fn in (resolve_truncation, brute_resolve):
        try:
            out.append(fn(bullets))
        except TripleCollision:
            out.append(None)
    return out


PROFILE = settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@PROFILE
@given(sequences())
def test_engine_matches_oracle(bullets):
    a, b = resolve_both(bullets)
    assert (a is None) == (b is None)
    if a is None:
        return
    assert a.matching == b.matching
    assert a.survivors == b.survivors
    assert np.array_equal(a.sn_sizes, b.sn_sizes)
    assert np.array_equal(a.ps_flags, b.ps_flags)
    assert np.array_equal(a.insertion_partner, b.insertion_partner)
    ref = {(c.back_index, c.front_index): c.time for c in b.collisions}
    for c in a.collisions:
        assert abs(c.time - ref[(c.back_index, c.front_index)]) <= 1e-9 * max(1.0, abs(c.time))


@PROFILE
@given(sequences())
def test_structural_invariants(bullets):
    try:
        res = resolve_truncation(bullets)
    except TripleCollision:
        return
    assert check_invariants(res) == []


@PROFILE
@given(sequences())
def test_ps_flag_means_survives_own_truncation(bullets):
    try:
        res = resolve_truncation(bullets)
    except TripleCollision:
        return
    k = len(bullets) - 1
    assert res.ps_flags[k] == (k in res.survivors)


@PROFILE
@given(sequences(max_size=25))
def test_back_addition_changes_size_by_one(bullets):
    try:
        full = brute_resolve(bullets, prefixes=False)
        head = brute_resolve(bullets[:-1], prefixes=False) if len(bullets) > 1 else None
    except TripleCollision:
        return
    if head is not None:
        assert abs(len(full.survivors) - len(head.survivors)) == 1


@PROFILE
@given(sequences(), st.data())
def test_lemma_verdicts(bullets, data):
    assume(len(bullets) >= 2)
    k = data.draw(st.integers(0, len(bullets) - 1))
    try:
        assert check_front_addition(bullets).ok
        assert shift_reindex_check(bullets, k).ok
    except TripleCollision:
        pass


@PROFILE
@given(sequences())
def test_threats_are_faster(bullets):
    try:
        res = resolve_truncation(bullets)
    except TripleCollision:
        return
    for i in range(len(bullets)):
        rec = threats_from_resolution(res, i)
        assert list(rec.threat_indices) == sorted(rec.threat_indices)
        for j in rec.threat_indices:
            assert j > i
            assert bullets[j].velocity > bullets[i].velocity or bullets[i].velocity == 0.0


@PROFILE
@given(sequences(max_size=25))
def test_settling_matches_prefix_membership(bullets):
    try:
        res = resolve_truncation(bullets)
        prefixes = [set(brute_resolve(bullets[:k + 1], prefixes=False).survivors)
                    for k in range(len(bullets))]
    except TripleCollision:
        return
    settle = settling_from_changes(res.changes)
    for i in range(len(bullets)):
        flips = [k for k in range(i + 1, len(bullets))
                 if (i in prefixes[k]) != (i in prefixes[k - 1])]
        assert settle[i] == (flips[-1] if flips else i)


@PROFILE
@given(sequences(max_size=30))
def test_confirmed_death_is_final(bullets):
    # once bullet 0 is hit no later than some firing, it stays dead
    try:
        res = brute_resolve(bullets)
    except TripleCollision:
        return
    hit = [c.time for c in res.collisions if c.front_index == 0]
    if not hit:
        return
    for k, b in enumerate(bullets):
        if b.fire_time >= hit[0]:
            later = brute_resolve(bullets[:k + 1], prefixes=False)
            assert 0 not in later.survivors


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 20), st.floats(0.0, 1.0), st.integers(0, 400))
def test_early_stop_agrees_with_full_run(seed, replica, v, n):
    mu, nu = Uniform(0, 1), PointMass(1.0)
    cfg = ProcessConfig(mu, nu, seed, fixed_v0=v)
    from ricochet.core import generate_sequence
    full = resolve_truncation(generate_sequence(cfg, n + 1, replica))
    assert first_survives(v, mu, nu, n, seed, replica) == (0 in full.survivors)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 50), st.floats(0.0, 1.0))
def test_survival_monotone_in_speed(seed, replica, v):
    mu, nu = Uniform(0, 1), PointMass(1.0)
    lo = first_survives(v, mu, nu, 300, seed, replica)
    hi = first_survives(min(1.0, v + 0.1), mu, nu, 300, seed, replica)
    assert hi or not lo


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5000), st.data())
def test_wilson_brackets_point(trials, data):
    s = data.draw(st.integers(0, trials))
    lo, hi = wilson_interval(s, trials)
    assert 0.0 <= lo <= s / trials <= hi <= 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 400))
def test_jittered_finite_support_has_no_triples(seed, n):
    cfg = ProcessConfig(FiniteSupport(tuple(0.05 * i for i in range(1, 21)), 0.0002),
                        PointMass(1.0), seed=seed)
    from ricochet.core import generate_sequence
    res = resolve_truncation(generate_sequence(cfg, n))
    assert check_invariants(res) == []
