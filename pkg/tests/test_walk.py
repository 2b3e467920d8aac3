import math
from fractions import Fraction

import numpy as np
import pytest

from affine_harmonic.groups import AffineElement
from affine_harmonic.walk import (
    CensoringError,
    WalkConfig,
    WalkError,
    martingale_check,
    max_separated,
    moment_bound_check,
    run_ensemble,
    sample_batch,
    sample_stopped_walk,
    walk_positions,
)

FIELDS = ("stop_time", "censored", "exit_side", "small", "drift")


def test_start_outside_stops_at_zero(g_bs12):
    x = g_bs12.special["x"] ** 5  # rho = -5 log 2 < -3
    s = sample_stopped_walk(WalkConfig(g_bs12, x, 1, r=3))
    assert s.stop_kind == "sigma_r" and s.stop_time == 0 and s.exit_side == -1


def test_sigma_invariants(g_bs12):
    cfg = WalkConfig(g_bs12, g_bs12.identity(), 4, r=4)
    for i in range(30):
        s = sample_stopped_walk(cfg, i, record=True)
        assert all(-4 <= v <= 4 for v in s.rho_path)
        assert abs(float(s.final_rho)) > 4
        assert len(s.rho_path) == s.stop_time


def test_zline_exit_time(g_zline):
    rep = run_ensemble(WalkConfig(g_zline, g_zline.identity(), 11, r=4), 100_000, "stop_time")
    assert abs(rep.estimate - 25) <= 3 * rep.std_error


def test_bs12_first_step_changes_rho_half_the_time(g_bs12):
    # only a^{+-1} move rho: Pr[rho(X_1) != 0] = 1/2, and tau_(0,inf) = 1 needs A: 1/4
    n = 8000
    moved = np.mean([float(walk_positions(g_bs12, 2, i, [1])[0].rho()) != 0 for i in range(n)])
    assert abs(moved - 0.5) <= 4 * math.sqrt(0.25 / n)
    cfg = WalkConfig(g_bs12, g_bs12.identity(), 2, intervals=((0.0, math.inf),), max_steps=1)
    rep = run_ensemble(cfg, n, "stopped")
    assert abs(rep.estimate - 0.25) <= 4 * rep.std_error


def test_stopped_indicator_tends_to_one(g_bs12):
    rep = run_ensemble(WalkConfig(g_bs12, g_bs12.identity(), 3, r=8), 2000, "stopped")
    assert rep.estimate == 1.0 and rep.n_censored == 0


def test_zline_r8_and_worker_invariance(g_zline):
    cfg = WalkConfig(g_zline, g_zline.identity(), 5, r=8)
    a = run_ensemble(cfg, 10_000, "stop_time", workers=1)
    b = run_ensemble(cfg, 10_000, "stop_time", workers=8)
    assert abs(a.estimate - 81) <= 3 * a.std_error
    assert a == b and a.to_dict() == b.to_dict()


def test_moment_bounds(g_zline):
    rows1 = moment_bound_check(g_zline, [0, 4, 16, 36], 1, 400, 1)
    assert rows1[0]["skipped"]
    assert all(r["ratio"] <= 1 for r in rows1[1:])
    rows2 = moment_bound_check(g_zline, [4, 16, 36], 2, 4000, 1)
    for r in rows2:
        assert abs(r["ratio"] - 1 / r["t"]) <= 4 * r["std_error"]


def test_martingale(g_bs12):
    res = martingale_check(g_bs12, g_bs12.evaluate("a b"), 20, 3000, 9)
    assert res["pass"]


@pytest.mark.parametrize("name,start", [("bs12", "a^-2 b"), ("lamplighter:2", "t l"), ("lamplighter:3", "l T")])
def test_compiled_sampler_matches_exact_engine(name, start):
    from affine_harmonic.groups import builtin_group

    g = builtin_group(name)
    cfg = WalkConfig(g, g.evaluate(start), 17, r=6)
    fast = sample_batch(cfg, 150, threshold=3, drift_threshold=2, sampler="steps")
    slow = sample_batch(cfg, 150, threshold=3, drift_threshold=2, sampler="exact")
    for f in FIELDS:
        assert np.array_equal(getattr(fast, f), getattr(slow, f)), f


def test_split_sampler_agrees_in_law(g_bs12):
    cfg = WalkConfig(g_bs12, g_bs12.identity(), 21, r=16)
    a = sample_batch(cfg, 100_000, sampler="split")
    b = sample_batch(cfg, 100_000, sampler="steps")
    pa, pb = a.small.mean(), b.small.mean()
    se = math.sqrt(pa * (1 - pa) / 1e5 + pb * (1 - pb) / 1e5)
    assert abs(pa - pb) <= 4 * se
    ta, tb = a.stop_time.mean(), b.stop_time.mean()
    assert abs(ta - tb) <= 4 * math.hypot(a.stop_time.std(), b.stop_time.std()) / math.sqrt(1e5)


def test_sigma_monotone_in_r(g_bs12):
    for sampler in ("split", "steps"):
        small = sample_batch(WalkConfig(g_bs12, g_bs12.identity(), 8, r=8), 3000, sampler=sampler)
        big = sample_batch(WalkConfig(g_bs12, g_bs12.identity(), 8, r=16), 3000, sampler=sampler)
        assert np.all(big.stop_time >= small.stop_time)


def test_lower_window(g_bs12):
    x = g_bs12.special["x"] ** (-3)
    cfg = WalkConfig(g_bs12, x, 3, r=16, lower=0)
    s = sample_stopped_walk(cfg, 0, record=True)
    assert all(0 <= v <= 16 for v in s.rho_path)
    with pytest.raises(WalkError):
        WalkConfig(g_bs12, x, 3, r=16, lower=20)


def test_censoring_reported(g_bs12):
    cfg = WalkConfig(g_bs12, g_bs12.identity(), 1, r=30, max_steps=5)
    b = sample_batch(cfg, 100)
    assert b.n_censored == 100 and np.all(b.exit_side == 0)
    assert issubclass(CensoringError, WalkError)


def test_censor_safety_default_cap(g_bs12):
    b = sample_batch(WalkConfig(g_bs12, g_bs12.identity(), 1, r=8), 20_000)
    assert b.n_censored < 1e-3 * 20_000


def test_zline_uses_c_coordinate(g_zline):
    cfg = WalkConfig(g_zline, AffineElement.of(Fraction(2), 1), 1, r=4)
    assert cfg.coord == "c"
    with pytest.raises(WalkError):
        WalkConfig(g_zline, g_zline.identity(), 1)


def test_max_separated_examples():
    assert max_separated([]) == 0
    assert max_separated([0, 0.5, 1.5, 3.0]) == 3
    assert max_separated([0, 1, 2, 3]) == 4
