from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from affine_harmonic.fields import (
    ARCH,
    FieldError,
    LaurentRational,
    LogAbs,
    Place,
    ValuedScalar,
    abs_value,
    field_arith,
    padic_valuation,
    parse_scalar,
)

F2 = Place("laurent", 2)
P3 = Place("padic", 3)


def laurent(p, terms):
    return ValuedScalar(LaurentRational.from_terms(p, terms), Place("laurent", p))


def test_field_arith_examples():
    half = ValuedScalar.of(Fraction(1, 2))
    assert field_arith(half, half, "add") == ValuedScalar.of(1)
    x = laurent(2, {1: 1})
    x2 = laurent(2, {2: 1})
    assert field_arith(x, x2, "mul") == laurent(2, {3: 1})
    with pytest.raises(FieldError):
        field_arith(ValuedScalar.zero(ARCH), None, "inv")


def test_abs_value_examples():
    assert abs_value(ValuedScalar.of(2)) == LogAbs.exact(1, 2)
    assert abs_value(laurent(2, {3: 1})) == LogAbs.exact(3, 2)
    assert abs_value(ValuedScalar.of(8, Place("padic", 2))) == LogAbs.exact(-3, 2)
    assert padic_valuation(Fraction(8), 2) == 3
    assert abs_value(ValuedScalar.zero(ARCH)).neg_inf


def test_place_validation():
    with pytest.raises(FieldError):
        Place("padic", 4)
    with pytest.raises(FieldError):
        Place("laurent", None)
    with pytest.raises(FieldError):
        Place("arch", 2)
    assert Place.parse("laurent:5") == Place("laurent", 5)


def test_place_mismatch():
    with pytest.raises(FieldError):
        ValuedScalar.of(1) + ValuedScalar.of(1, P3)


def test_laurent_normal_form():
    # (x^2 + x) / (x + 1) = x over F_2 after gcd reduction
    p = 2
    v = LaurentRational.make(p, (0, 1, 1), (1, 1))
    assert v == LaurentRational.monomial(p, 1, 1)
    w = LaurentRational.make(3, (1,), (2,))  # 1/2 = 2 in F_3, denominator monic
    assert w.den == (1,) and w.num == (2,)


def test_parse_scalar():
    assert parse_scalar("3/6", ARCH) == ValuedScalar.of(Fraction(1, 2))
    assert parse_scalar("x^2 + 1", F2) == laurent(2, {2: 1, 0: 1})
    with pytest.raises(FieldError):
        parse_scalar("1/0", ARCH)


rationals = st.fractions(min_value=-50, max_value=50, max_denominator=50).filter(lambda q: q != 0)
polys = st.dictionaries(st.integers(-3, 3), st.integers(1, 4), min_size=1, max_size=4)


@settings(max_examples=60, deadline=None)
@given(rationals, rationals)
def test_log_abs_additive_padic(a, b):
    x, y = ValuedScalar.of(a, P3), ValuedScalar.of(b, P3)
    assert abs_value(x * y) == abs_value(x) + abs_value(y)


@settings(max_examples=60, deadline=None)
@given(rationals, rationals)
def test_log_abs_additive_arch(a, b):
    x, y = ValuedScalar.of(a), ValuedScalar.of(b)
    lhs, rhs = abs_value(x * y), abs_value(x) + abs_value(y)
    if lhs.is_exact and rhs.is_exact:
        assert lhs == rhs
    else:
        assert abs(float(lhs) - float(rhs)) <= 1e-12 * max(1.0, abs(float(lhs)))


@settings(max_examples=60, deadline=None)
@given(polys, polys)
def test_laurent_multiplicative_and_ultrametric(s, t):
    x, y = laurent(5, s), laurent(5, t)
    if x.is_zero() or y.is_zero():
        return
    assert abs_value(x * y) == abs_value(x) + abs_value(y)
    z = x + y
    if not z.is_zero():
        assert float(abs_value(z)) <= max(float(abs_value(x)), float(abs_value(y))) + 1e-12


@settings(max_examples=60, deadline=None)
@given(rationals, rationals)
def test_padic_ultrametric(a, b):
    x, y = ValuedScalar.of(a, P3), ValuedScalar.of(b, P3)
    if (x + y).is_zero():
        return
    assert float(abs_value(x + y)) <= max(float(abs_value(x)), float(abs_value(y))) + 1e-12


@settings(max_examples=40, deadline=None)
@given(polys)
def test_canonical_zero(s):
    x = laurent(3, s)
    assert x - x == ValuedScalar.zero(Place("laurent", 3))
    assert (x - x).is_zero()
