import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from affine_harmonic.line import (
    UNIT,
    LineError,
    LineLemmaConfig,
    StepDistribution,
    exact_exit_right,
    exact_exit_time,
    exact_msep_unit,
    line_batch,
    line_walk_reference,
    sup_exit_right_unit,
    verify_big_jump,
    verify_exit_time,
    verify_green_function,
    verify_msep,
    verify_occupation_time,
)
from affine_harmonic.walk import max_separated


def test_exact_oracles():
    assert exact_exit_time(UNIT, 0, -4, 4) == 25
    assert exact_exit_right(UNIT, 2, -8, 8) == Fraction(11, 18)
    assert exact_exit_right(UNIT, 0, -8, 8) == Fraction(1, 2)
    vals = [exact_exit_right(UNIT, y, -8, 8) for y in range(-8, 9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert sup_exit_right_unit(32, 2) == exact_exit_right(UNIT, 2, 0, 32)


def test_exact_msep_matches_formula():
    for r in (16, 32):
        for n in (0, 1, 2):
            assert exact_msep_unit(0, 1.0, r, n) == Fraction(n + 2, r + n + 3)


def test_uniform_oracle_against_banded_solve_symmetry():
    d = StepDistribution.parse("uniform:2")
    assert exact_exit_right(d, 0, -10, 10) == Fraction(1, 2)
    assert exact_exit_time(d, 3, -10, 10) == exact_exit_time(d, -3, -10, 10)


@pytest.mark.parametrize("spec", ["unit", "uniform:3", "symgeom:0.5"])
def test_kernel_matches_reference(spec):
    d = StepDistribution.parse(spec)
    b = line_batch(d, 1, -6, 6, 200, 4, 10_000, occ_m=2, ms_q=1.0)
    for i in range(200):
        ref = line_walk_reference(d, 1, -6, 6, 4, i, 10_000, occ_m=2, ms_q=1.0)
        assert ref["stop_time"] == b.stop_time[i]
        assert ref["exit_side"] == b.exit_side[i]
        assert ref["max_jump"] == b.max_jump[i]
        assert ref["occupation"] == b.occupation[i]
        assert ref["ms"] == b.ms[i]


def test_started_outside():
    b = line_batch(UNIT, 9, -8, 8, 50, 1, 1000)
    assert np.all(b.stop_time == 0)


def test_exit_time_lemma():
    v = verify_exit_time(LineLemmaConfig(UNIT, r=(4, 8), n_samples=20_000, seed=2))
    assert v.passed
    assert v.values["rows"][0]["exact_mean"] == 25


def test_big_jump_examples():
    v = verify_big_jump(LineLemmaConfig(UNIT, r=(16,), z=(1, 2), n_samples=5000))
    assert all(row["p"] == 0 for row in v.values["rows"]) and v.passed
    v = verify_big_jump(LineLemmaConfig(StepDistribution.parse("symgeom:0.5"), r=(16,), z=(4, 8, 12),
                                        n_samples=50_000, seed=3))
    assert v.passed and v.fitted["fit"]["slope"] < 0
    # away from saturation the per-step tail 2^-z sets the rate
    p8, p12 = (row["p"] for row in v.values["rows"][1:])
    assert abs(np.log(p12 / p8) / 4 + np.log(2)) < 0.1
    v = verify_big_jump(LineLemmaConfig(StepDistribution.parse("symgeom:0.5"), r=(16,), z=(200,), n_samples=2000))
    assert v.values["rows"][0]["p"] == 0


def test_green_function():
    v = verify_green_function(LineLemmaConfig(UNIT, r=(8,), y=2, n_samples=50_000, seed=1))
    row = v.values["rows"][0]
    assert row["exact"] == Fraction(11, 18) and row["agrees_with_exact"]
    with pytest.raises(LineError):
        verify_green_function(LineLemmaConfig(UNIT, r=(8,), y=9))


def test_occupation_time():
    v = verify_occupation_time(LineLemmaConfig(UNIT, r=(32,), m=(2,), y=1, n_samples=50_000, seed=1))
    row = v.values["rows"][0]
    assert row["slope"] < 0 and 0.1 <= row["scaled"] <= 10
    b = line_batch(UNIT, 1, 0, 32, 2000, 1, 200_000, occ_m=2)
    assert np.all(b.occupation <= b.stop_time)


def test_msep_examples():
    v = verify_msep(LineLemmaConfig(UNIT, r=(16, 32, 64), y=0, q=1.0, n=(2,), n_samples=50_000, seed=5))
    ps = [row["p"] for row in v.values["rows"] if row["n"] == 2]
    assert ps[0] > ps[1] > ps[2]
    # start below -q: MS >= 1 so MS <= 0 never happens
    v = verify_msep(LineLemmaConfig(UNIT, r=(16,), y=-3, q=1.0, n=(0,), n_samples=2000))
    assert [row["p"] for row in v.values["rows"] if row["n"] == 0] == [0.0]


def _brute(points):
    best = 0
    for k in range(len(points) + 1):
        for sub in itertools.combinations(points, k):
            s = sorted(sub)
            if all(b - a >= 1 for a, b in zip(s, s[1:])):
                best = max(best, k)
    return best


def test_max_separated_greedy_is_optimal_small():
    rng = random.Random(0)
    for _ in range(100):
        pts = [round(rng.uniform(0, 6), 2) for _ in range(rng.randint(0, 9))]
        assert max_separated(pts) == _brute(pts)
    pts = [0.0, 0.3, 1.2, 2.0, 2.4]
    assert max_separated(pts + [5.0]) >= max_separated(pts)
