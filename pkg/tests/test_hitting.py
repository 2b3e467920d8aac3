from fractions import Fraction

import pytest

from affine_harmonic.groups import AffineElement, bs12, lamplighter
from affine_harmonic.hitting import (
    CosetLabeling,
    HittingError,
    compare_exact_mc,
    hitting_measure_exact,
    hitting_measure_mc,
    hitting_time_stats,
    parse_labeling,
)


def el(c, lam=1):
    return AffineElement.of(Fraction(c), Fraction(lam))


def test_zline_parity_exact(g_zline):
    h = hitting_measure_exact(g_zline, parse_labeling("parity", g_zline))
    assert h.probability(el(0)) == Fraction(1, 2)
    assert h.probability(el(2)) == Fraction(1, 4)
    assert h.probability(el(-2)) == Fraction(1, 4)
    assert h.expected_tau == 2 and h.residual == 0
    assert sum(p for _, p, _ in h.support) == 1


def test_index_one_labeling(g_bs12):
    lab = parse_labeling("trivial", g_bs12)
    h = hitting_measure_exact(g_bs12, lab)
    assert h.expected_tau == 1
    assert {x for x, _, _ in h.support} == set(g_bs12.elements)
    st = hitting_time_stats(g_bs12, lab, 500, 1)
    assert st["report"]["estimate"] == 1.0 and st["passed"]


def test_zline_tau_is_two(g_zline):
    st = hitting_time_stats(g_zline, parse_labeling("parity", g_zline), 2000, 1)
    assert st["report"]["estimate"] == 2.0 and st["report"]["std_error"] == 0.0
    assert st["tail"]["degenerate"] and st["passed"]


@pytest.mark.parametrize("g,spec,index", [(bs12(), "lam-mod:2", 2), (lamplighter(2), "lam-mod:2", 2),
                                          (lamplighter(3), "lam-mod:3", 3)])
def test_expected_tau_equals_index(g, spec, index):
    h = hitting_measure_exact(g, parse_labeling(spec, g))
    assert abs(h.expected_tau - index) <= Fraction(1, 10**9)
    assert 1 - sum(p for _, p, _ in h.support) == h.residual
    assert h.residual <= Fraction(1, 10**12)


def test_hitting_measure_symmetric_up_to_leak(g_bs12):
    # truncated probabilities are lower bounds whose total deficit is the leak
    h = hitting_measure_exact(g_bs12, parse_labeling("lam-mod:2", g_bs12))
    probs = {x: p for x, p, _ in h.support}
    for x, p in probs.items():
        assert abs(p - probs.get(x.inverse(), 0)) <= h.residual


def test_mc_support_in_subgroup_and_smooth(g_bs12):
    lab = parse_labeling("lam-mod:2", g_bs12)
    mc = hitting_measure_mc(g_bs12, lab, 5000, 3)
    assert all(lab.label(x) == 0 for x in mc.frequencies)
    exact = hitting_measure_exact(g_bs12, lab)
    assert compare_exact_mc(exact, mc)["passed"]


def test_zline_mc_agrees(g_zline):
    lab = parse_labeling("parity", g_zline)
    mc = hitting_measure_mc(g_zline, lab, 20_000, 4)
    cmp = compare_exact_mc(hitting_measure_exact(g_zline, lab), mc, sigmas=3)
    assert cmp["passed"]


def test_labeling_validation(g_bs12):
    with pytest.raises(HittingError):
        parse_labeling("parity", g_bs12)
    with pytest.raises(HittingError):
        parse_labeling("cosets", g_bs12)
    bad = CosetLabeling("bad", 2, lambda x: 0, {(i, s): 0 for i in range(2) for s in g_bs12.labels})
    with pytest.raises(HittingError):
        bad.validate(g_bs12)
    # consistent labels but the action claims a generator moves cosets that it does not
    lab = parse_labeling("lam-mod:2", g_bs12)
    action = dict(lab.action)
    action[(0, "b")], action[(1, "b")] = 1, 0
    wrong = CosetLabeling("wrong", 2, lab.label_fn, action)
    with pytest.raises(HittingError):
        wrong.validate(g_bs12)
