import numpy as np
import pytest

from conftest import make_bullets
from ricochet.analysis import (check_front_addition, check_invariants, settling_indices,
                               shield_scenario, shift_reindex_check, threat_census, threats_of)
from ricochet.core import Exponential, PointMass, ProcessConfig, Uniform, generate_sequence
from ricochet.engine import resolve_truncation
from ricochet.sweeps import lemma_sweep, oracle_sweep


def test_threats_three(three):
    assert threats_of(three, 0).threat_indices == (1,)


def test_threats_cascade(cascade):
    assert threats_of(cascade, 1).threat_indices == (2,)
    assert threats_of(cascade, 2).threat_indices == (3,)
    with pytest.raises(IndexError):
        threats_of(cascade, 4)


def test_threats_point_mass():
    bs = generate_sequence(ProcessConfig(PointMass(0.5), Exponential(1.0)), 50)
    assert all(threats_of(bs, i).threat_indices == () for i in range(50))


def test_threat_census_matches_small_resolution():
    cfg = ProcessConfig(Uniform(0, 1), PointMass(1), seed=4)
    bs = generate_sequence(cfg, 2001)
    for i in (0, 3, 17):
        assert threat_census(cfg, 2000, i) == threats_of(bs, i)


def test_settling_cascade(cascade):
    assert tuple(settling_indices(cascade)) == (0, 3, 2, 3)


def test_settling_point_mass():
    bs = generate_sequence(ProcessConfig(PointMass(0.5), Exponential(1.0)), 30)
    assert list(settling_indices(bs)) == list(range(30))


def test_settling_fast_first():
    cfg = ProcessConfig(Uniform(0, 1), PointMass(1), seed=1, fixed_v0=1.5)
    assert settling_indices(generate_sequence(cfg, 500))[0] == 0


def test_front_addition_cascade(cascade):
    v = check_front_addition(cascade)
    assert v.ok
    assert v.details == {"S_full": [0, 1], "S_tail": [1]}


def test_front_addition_two_bullets():
    v = check_front_addition(make_bullets((1.0, 2.0), (0, 1)))
    assert v.ok and v.details["S_full"] == [] and v.details["S_tail"] == [1]
    with pytest.raises(ValueError):
        check_front_addition(make_bullets((1.0,), (0,)))


def test_shift_reindex(cascade):
    assert shift_reindex_check(cascade, 0).ok
    v = shift_reindex_check(cascade, 1)
    assert v.ok and v.details["survivors_suffix"] == [1]
    with pytest.raises(ValueError):
        shift_reindex_check(cascade, 4)


def test_shield():
    v = shield_scenario(1.0, 2, 0.5, 5.0, [1, 1, 1, 1])
    assert v.ok
    res = v.details["resolution"]
    got = sorted((c.back_index, c.front_index, c.time) for c in res.collisions)
    assert [g[:2] for g in got] == [(2, 1), (4, 3)]
    assert got[0][2] == pytest.approx(9.5 / 4.5, rel=1e-14)
    assert got[1][2] == pytest.approx(18.5 / 4.5, rel=1e-14)
    assert 0 in res.survivors


def test_shield_empty():
    v = shield_scenario(1.0, 0, 0.5, 5.0, [])
    assert v.ok and v.details["resolution"].survivors == [0]


def test_shield_equal_speeds():
    v = shield_scenario(1.0, 1, 1.0, 1.0, [1, 1])
    assert not v.ok and v.message == "non-shield configuration"
    assert v.details["resolution"].collisions == []


def test_shield_bad_delays():
    with pytest.raises(ValueError):
        shield_scenario(1.0, 1, 0.5, 5.0, [1])
    with pytest.raises(ValueError):
        shield_scenario(1.0, 1, 0.5, 5.0, [1, 0])


def test_invariants_detect_damage(cascade):
    res = resolve_truncation(cascade)
    assert check_invariants(res) == []
    res.sn_sizes[2] = 2
    bad = check_invariants(res)
    assert "unit steps" in bad and "parity" in bad


def test_sweeps_small():
    assert oracle_sweep(150, seed=5).ok
    assert lemma_sweep(150, seed=6).ok
