import numpy as np
import pytest

from conftest import make_bullets
from ricochet.core import (Exponential, FiniteSupport, NonMonotoneFireTime, PointMass,
                           ProcessConfig, TripleCollision, Uniform, generate_arrays,
                           generate_sequence)
from ricochet.engine import (Engine, confirmed_collisions, is_potential_survivor, resolve_arrays,
                             resolve_truncation, simulate, survivors_snapshot)


def pairs(res):
    return sorted((c.back_index, c.front_index) for c in res.collisions)


def test_three_bullet_fixture(three):
    res = resolve_truncation(three)
    assert pairs(res) == [(1, 0)]
    c = res.collisions[0]
    assert c.time == pytest.approx(1.5, abs=1e-15)
    assert c.position == pytest.approx(1.5, abs=1e-15)
    assert res.survivors == [2]
    assert list(res.sn_sizes) == [1, 0, 1]
    assert list(res.ps_flags) == [True, False, True]
    assert list(res.insertion_partner) == [-1, 0, -1]


def test_cascade_fixture(cascade):
    eng = Engine()
    out = [eng.ingest(b) for b in cascade[:3]]
    assert out[2].partner == 1
    (sched,) = eng.scheduled_collisions()
    assert (sched.back_index, sched.front_index) == (2, 1)
    assert sched.time == pytest.approx(2.25, abs=1e-15)
    assert sched.position == pytest.approx(0.25, abs=1e-15)

    last = eng.ingest(cascade[3])
    assert last.partner == 2 and not last.potential_survivor
    assert last.size == 2 and last.changed == 1
    res = eng.resolution()
    assert pairs(res) == [(3, 2)]
    c = res.collisions[0]
    assert c.time == pytest.approx(19 / 9, rel=1e-15)
    assert c.position == pytest.approx(1 / 9, rel=1e-14)
    assert res.survivors == [0, 1]
    assert list(res.sn_sizes) == [1, 2, 1, 2]
    assert list(res.ps_flags) == [True, True, False, False]
    assert survivors_snapshot(eng) == [0, 1]


def test_cascade_confirmation(cascade):
    eng = Engine()
    eng.ingest_all(cascade)
    assert confirmed_collisions(eng) == []
    eng.ingest(make_bullets((0.1,), (3.0,), first=4)[0])
    conf = confirmed_collisions(eng)
    assert [(c.back_index, c.front_index) for c in conf] == [(3, 2)]
    assert conf[0].time == pytest.approx(2.1111111, rel=1e-7)


def test_is_potential_survivor(cascade, three):
    eng = Engine()
    eng.ingest_all(cascade)
    assert is_potential_survivor(eng, 0)
    assert not is_potential_survivor(eng, 3)
    with pytest.raises(IndexError):
        is_potential_survivor(eng, 4)
    with pytest.raises(IndexError):
        eng.is_potential_survivor(-1)
    e2 = Engine()
    e2.ingest_all(three)
    assert e2.is_potential_survivor(2)


def test_triple_collision(triple):
    with pytest.raises(TripleCollision) as info:
        resolve_truncation(triple)
    assert info.value.time == pytest.approx(3.0)
    assert set(info.value.indices) >= {0, 1, 2}


def test_triple_collision_carries_seed():
    cfg = ProcessConfig(FiniteSupport((1.0, 2.0, 3.0, 4.0)), PointMass(1.0), seed=0, force=True)
    with pytest.raises(TripleCollision) as info:
        simulate(cfg, 2000)
    assert info.value.seed == 0 and info.value.stream_id == 0


def test_non_monotone_rejected():
    with pytest.raises(NonMonotoneFireTime):
        resolve_truncation(make_bullets((1, 2), (0, 0)))
    eng = Engine()
    eng.ingest_all(make_bullets((1, 2), (0, 1)))
    with pytest.raises(NonMonotoneFireTime):
        eng.ingest(make_bullets((1,), (0.5,), first=2)[0])


def test_single_bullet():
    res = resolve_truncation(make_bullets((0.3,), (0,)))
    assert res.survivors == [0] and res.collisions == []


def test_point_mass_all_survive():
    cfg = ProcessConfig(PointMass(0.5), Exponential(1.0))
    res = resolve_truncation(generate_sequence(cfg, 500))
    assert res.survivors == list(range(500))
    assert list(res.sn_sizes) == list(range(1, 501))
    assert res.collisions == []


def test_speed_zero_hit_at_next_fire_time():
    res = resolve_truncation(make_bullets((0.0, 0.5, 0.0, 0.0), (0, 1, 2, 3.5)))
    got = {(c.back_index, c.front_index): (c.time, c.position) for c in res.collisions}
    assert got == {(1, 0): (1.0, 0.0), (3, 2): (3.5, 0.0)}
    assert res.survivors == []


def test_zero_speed_rear_is_caught_by_slower_mover():
    # any moving bullet hits a stopped one at the origin immediately
    res = resolve_truncation(make_bullets((1.0, 0.0, 0.1), (0, 1, 2)))
    assert pairs(res) == [(2, 1)]
    assert res.survivors == [0]


def test_first_index_offset(cascade):
    shifted = make_bullets([b.velocity for b in cascade], [b.fire_time + 10 for b in cascade], first=7)
    res = resolve_truncation(shifted)
    assert res.survivors == [7, 8]
    assert pairs(res) == [(10, 9)]
    assert list(res.insertion_partner) == [-1, -1, 8, 9]


def test_eviction_agrees_with_full_state():
    cfg = ProcessConfig(Uniform(0, 1), PointMass(1), seed=9)
    v, t = generate_arrays(cfg, 50000)
    full = resolve_arrays(v, t)
    eng = Engine(evict=True, log_collisions=True, capacity=16)
    for lo in range(0, 50000, 777):
        eng.ingest_arrays(v[lo:lo + 777], t[lo:lo + 777], lo)
    ev = eng.resolution()
    assert eng.evicted > 0
    assert ev.survivors == full.survivors
    assert ev.matching == full.matching
    assert np.array_equal(ev.sn_sizes, full.sn_sizes)
    assert np.array_equal(ev.insertion_partner, full.insertion_partner)
    assert eng.stack_size < 5000


def test_collision_sink_receives_everything():
    cfg = ProcessConfig(Uniform(0, 1), PointMass(1), seed=1)
    got = []
    eng = simulate(cfg, 20001, collision_sink=got.extend)
    got.extend(eng.scheduled_collisions())
    assert 2 * len(got) + eng.size == 20001
    assert len({c.front_index for c in got} | {c.back_index for c in got}) == 2 * len(got)


def test_simulate_chunks_match_one_shot():
    cfg = ProcessConfig(Uniform(0, 1), Exponential(1.0), seed=4)
    eng = simulate(cfg, 100000, keep_records=True)
    v, t = generate_arrays(cfg, 100000)
    ref = resolve_arrays(v, t)
    assert eng.survivors() == ref.survivors
    assert np.array_equal(eng.sn_sizes, ref.sn_sizes)
    assert np.array_equal(eng.ps_flags, ref.ps_flags)


def test_stop_when_first_dies():
    cfg = ProcessConfig(Uniform(0, 1), PointMass(1), seed=2, fixed_v0=0.1)
    eng = simulate(cfg, 10**5, keep_records=True, stop_when_first_dies=True)
    assert eng.stopped
    assert eng.ingested < 10**5
    # the hit on bullet 0 is no later than the firing that was withheld
    # (unit delays: bullet k fires at time k)
    hit = [c for c in eng.collisions() if c.front_index == 0]
    assert hit and eng.last_fire_time < hit[0].time <= eng.ingested
    full = simulate(cfg, 10**5, keep_records=True)
    assert 0 not in full.survivors()


def test_first_bullet_can_reenter():
    # b_1 would catch b_0 at t=2, but b_2 destroys b_1 at t=1.5 first
    bs = make_bullets((0.25, 0.5, 1.0), (0, 1, 1.25))
    res = resolve_truncation(bs)
    assert list(res.sn_sizes) == [1, 0, 1]
    assert res.survivors == [0]
    eng = Engine(stop_index=0)
    eng.ingest_all(bs)
    assert not eng.stopped


def test_stop_index_must_be_first():
    eng = Engine(stop_index=0)
    with pytest.raises(ValueError):
        eng.ingest_arrays([1.0], [0.0], first_index=3)


def test_engine_collision_geometry():
    cfg = ProcessConfig(Uniform(0, 1), Exponential(1.0), seed=8)
    bs = generate_sequence(cfg, 3000)
    res = resolve_truncation(bs)
    for c in res.collisions:
        b, f = bs[c.back_index], bs[c.front_index]
        assert c.time >= b.fire_time
        assert c.position == pytest.approx(b.velocity * (c.time - b.fire_time), rel=1e-9, abs=1e-12)
        assert c.position == pytest.approx(f.velocity * (c.time - f.fire_time), rel=1e-9, abs=1e-12)


def test_long_run_stays_small():
    cfg = ProcessConfig(Uniform(0, 1), PointMass(1), seed=0)
    eng = simulate(cfg, 2 * 10**6)
    assert eng.ingested == 2 * 10**6
    assert eng.stack_size < 10**5
