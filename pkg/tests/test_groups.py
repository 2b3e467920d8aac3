import random
from fractions import Fraction

import pytest

from affine_harmonic.fields import ARCH, LaurentRational, LogAbs, Place, ValuedScalar
from affine_harmonic.groups import (
    AffineElement,
    GroupSpecError,
    MeasuredGroup,
    NonPrimeError,
    VirtuallyAbelianError,
    WordBall,
    WordError,
    alpha_distance_constants,
    builtin_group,
    normalize_presentation,
    parse_word,
    word_length,
)


def el(c, lam):
    return AffineElement.of(Fraction(c), Fraction(lam))


def test_affine_mul_examples():
    assert el(0, 1) * el(3, 5) == el(3, 5)
    assert el(0, 2) * el(1, 1) == el(2, 2)
    assert el(1, 2) * el(Fraction(-1, 2), Fraction(1, 2)) == el(0, 1)
    assert el(1, 2).inverse() == el(Fraction(-1, 2), Fraction(1, 2))


def test_rho_examples(g_lamp2):
    assert el(0, 1).rho() == LogAbs()
    assert el(0, 2).rho() == LogAbs.exact(-1, 2)
    t = g_lamp2.generator("t")
    assert t.rho() == LogAbs.exact(-1, 2)


def test_word_length_examples(g_bs12, g_lamp2):
    assert word_length(g_bs12, g_bs12.identity(), 3) == 0
    for s in g_bs12.elements:
        assert word_length(g_bs12, s, 3) == 1
    # lamps at 0 and 1, head at 0: c = 1 + x, lam = 1; witness l t l T
    place = g_lamp2.place
    x = AffineElement(ValuedScalar(LaurentRational.from_terms(2, {0: 1, 1: 1}), place), ValuedScalar.one(place))
    assert g_lamp2.evaluate("l t l T") == x
    assert word_length(g_lamp2, x, 6) == 4


def test_normalize_presentation(g_bs12, g_zline):
    assert normalize_presentation(g_bs12) is g_bs12
    s = el(1, 2)
    g = MeasuredGroup("affine12", ARCH, (("s", s), ("S", s.inverse())), (Fraction(1, 2),) * 2,
                      {"s": "S", "S": "s"})
    h = normalize_presentation(g)
    assert h.special["x"] == el(0, 2)
    assert h.generator("s") == el(0, 2)
    with pytest.raises(VirtuallyAbelianError):
        normalize_presentation(g_zline)


def test_builtins(g_bs12, g_lamp2):
    z, x = g_bs12.special["z"], g_bs12.special["x"]
    assert z == el(1, 1) and x == el(0, 2)
    lamp = g_lamp2.generator("l")
    assert (lamp * lamp).is_identity()
    assert g_lamp2.inverse["l"] == "l" and len(g_lamp2.generators) == 3
    assert sum(g_lamp2.weights) == 1
    assert builtin_group("lamplighter:3").labels == ["t", "T", "l", "L"]
    with pytest.raises(NonPrimeError):
        builtin_group("lamplighter:4")
    with pytest.raises(GroupSpecError):
        builtin_group("heisenberg")


def test_word_grammar(g_bs12):
    assert parse_word("a^-2 b") == [("a", -2), ("b", 1)]
    assert g_bs12.evaluate("a^-2 b") == el(Fraction(1, 4), Fraction(1, 4))
    with pytest.raises(WordError):
        parse_word("a^^2")
    with pytest.raises(WordError):
        g_bs12.evaluate("q")


def _random_elements(g, k, length, seed):
    rng = random.Random(seed)
    out = []
    for _ in range(k):
        x = g.identity()
        for _ in range(length):
            x = x * rng.choice(g.elements)
        out.append(x)
    return out


@pytest.mark.parametrize("name", ["bs12", "lamplighter:2", "lamplighter:3"])
def test_group_axioms_and_rho_homomorphism(name):
    g = builtin_group(name)
    xs = _random_elements(g, 30, 8, 1)
    e = g.identity()
    for x, y, z in zip(xs, xs[1:], xs[2:]):
        assert (x * y) * z == x * (y * z)
        assert x * e == x and e * x == x
        assert (x * x.inverse()).is_identity()
        assert (x * y).rho() == x.rho() + y.rho()


def test_alpha_distance_constants(g_bs12):
    k = alpha_distance_constants(g_bs12, radius=7)
    assert 0 < k["K_rho"] <= 0.7 and k["K"] < 5


def test_word_metric_left_invariant(g_bs12):
    ball = WordBall(g_bs12)
    ball.grow_to(6)
    pts = sorted(ball.ball(3), key=str)
    rng = random.Random(3)
    for _ in range(40):
        x, y = rng.choice(pts), rng.choice(pts)
        d = ball.length(x.inverse() * y, 6)
        # left translation by x^-1 maps the pair (x, y) to (e, x^-1 y)
        z = rng.choice(pts)
        assert ball.length((z * x).inverse() * (z * y), 6) == d
    assert ball.sphere_sizes()[:3] == [1, 4, 12]
