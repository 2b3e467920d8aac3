"""Exact valued fields: rationals at a chosen place and Laurent rationals over F_p.

Two concrete representations are supported:

* ``Fraction`` values with either the archimedean place or a p-adic place;
* :class:`LaurentRational` values ``x^k f/g`` over ``F_p`` with the degree
  valuation at infinity, ``|f/g| = p^(deg f - deg g)``.

Absolute values are returned in logarithmic form as :class:`LogAbs`, which
stays exact (``k * log(base)``) whenever the absolute value is a power of a
fixed integer base.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import gmpy2


class FieldError(ValueError):
    """Raised on place mismatch, division by zero or malformed literals."""


class PlaceMismatch(FieldError):
    pass


def is_prime(p: int) -> bool:
    return p >= 2 and bool(gmpy2.is_prime(p))


@dataclass(frozen=True)
class Place:
    kind: str  # "arch", "padic" or "laurent"
    p: int | None = None

    def __post_init__(self):
        if self.kind == "arch":
            if self.p is not None:
                raise FieldError("the archimedean place takes no prime")
        elif self.kind in ("padic", "laurent"):
            if self.p is None or not is_prime(self.p):
                raise FieldError(f"{self.p} is not prime")
            if self.kind == "laurent" and self.p >= 2**31:
                raise FieldError("laurent coefficients require p < 2^31")
        else:
            raise FieldError(f"unknown place kind {self.kind!r}")

    @property
    def exact_base(self) -> int | None:
        """Integer base of |.| when every nonzero absolute value is a power of it."""
        return None if self.kind == "arch" else self.p

    def __str__(self) -> str:
        return "arch" if self.kind == "arch" else f"{self.kind}:{self.p}"

    @classmethod
    def parse(cls, text: str) -> "Place":
        text = text.strip()
        if text == "arch":
            return cls("arch")
        m = re.fullmatch(r"(padic|laurent):(\d+)", text)
        if not m:
            raise FieldError(f"malformed place {text!r}")
        return cls(m.group(1), int(m.group(2)))


ARCH = Place("arch")


# ---------------------------------------------------------------------------
# Logarithmic absolute values


def _perfect_power(n: int) -> tuple[int, int]:
    """Return (b, e) with n = b**e and b minimal (n >= 2)."""
    for e in range(n.bit_length(), 1, -1):
        root, exact = gmpy2.iroot(n, e)
        if exact:
            return int(root), e
    return n, 1


@dataclass(frozen=True)
class LogAbs:
    """log of an absolute value.

    Exact values are ``k * log(base)`` with ``base`` minimal (``base == 1``
    encodes zero).  Inexact values carry ``real``.  ``neg_inf`` is the sentinel
    for ``log |0|``.
    """

    k: Union[int, Fraction] = 0
    base: int = 1
    real: float | None = None
    neg_inf: bool = False

    @classmethod
    def exact(cls, k, base: int) -> "LogAbs":
        if k == 0 or base == 1:
            return cls()
        if base < 2:
            raise FieldError("log base must be >= 2")
        b, e = _perfect_power(base)
        k = k * e
        if isinstance(k, Fraction) and k.denominator == 1:
            k = int(k)
        return cls(k, b)

    @classmethod
    def from_float(cls, value: float) -> "LogAbs":
        return cls(real=float(value))

    @classmethod
    def minus_infinity(cls) -> "LogAbs":
        return cls(neg_inf=True)

    @property
    def is_exact(self) -> bool:
        return self.real is None and not self.neg_inf

    def __float__(self) -> float:
        if self.neg_inf:
            return -math.inf
        if self.real is not None:
            return self.real
        if self.base == 1:
            return 0.0
        return float(self.k) * math.log(self.base)

    def __neg__(self) -> "LogAbs":
        if self.neg_inf:
            raise FieldError("cannot negate log|0|")
        if self.real is not None:
            return LogAbs(real=-self.real)
        return LogAbs.exact(-self.k, self.base)

    def __add__(self, other: "LogAbs") -> "LogAbs":
        if not isinstance(other, LogAbs):
            return NotImplemented
        if self.neg_inf or other.neg_inf:
            return LogAbs.minus_infinity()
        if self.is_exact and other.is_exact:
            if other.base == 1:
                return self
            if self.base == 1:
                return other
            if self.base == other.base:
                return LogAbs.exact(self.k + other.k, self.base)
        return LogAbs(real=float(self) + float(other))

    def __sub__(self, other: "LogAbs") -> "LogAbs":
        return self + (-other)

    def scale(self, w) -> "LogAbs":
        """Multiply by a rational (exact) or a float."""
        if self.neg_inf:
            raise FieldError("cannot scale log|0|")
        if self.is_exact and isinstance(w, (int, Fraction)):
            return LogAbs.exact(Fraction(self.k) * w, self.base)
        return LogAbs(real=float(self) * float(w))

    def is_zero(self) -> bool:
        if self.neg_inf:
            return False
        if self.real is not None:
            return self.real == 0.0
        return self.base == 1

    def compare(self, r: float, tol: float = 1e-9) -> int:
        """Sign of (self - r), with |self - r| <= tol counted as equal."""
        v = float(self)
        if v == r:
            return 0
        if math.isinf(v):
            return -1 if v < 0 else 1
        d = v - r
        if abs(d) <= tol:
            return 0
        return 1 if d > 0 else -1

    def __str__(self) -> str:
        if self.neg_inf:
            return "-inf"
        if self.real is not None:
            return repr(self.real)
        if self.base == 1:
            return "0"
        return f"{self.k}*log({self.base})"


# ---------------------------------------------------------------------------
# Polynomials over F_p (coefficient tuples, lowest degree first, no trailing 0)


def _trim(c: list[int]) -> tuple[int, ...]:
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_add(a, b, p):
    n = max(len(a), len(b))
    return _trim([((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)) % p for i in range(n)])


def poly_mul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim([v % p for v in out])


def poly_scale(a, s, p):
    return _trim([(x * s) % p for x in a])


def poly_divmod(a, b, p):
    if not b:
        raise FieldError("polynomial division by zero")
    a = list(a)
    inv = pow(b[-1], -1, p)
    q = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        coef = (a[-1] * inv) % p
        q[shift] = coef
        for i, y in enumerate(b):
            a[i + shift] = (a[i + shift] - coef * y) % p
        a = list(_trim(a))
    return _trim(q), tuple(a)


def poly_gcd(a, b, p):
    while b:
        a, b = b, poly_divmod(a, b, p)[1]
    if not a:
        return ()
    return poly_scale(a, pow(a[-1], -1, p), p)


def _strip_x(c: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    k = 0
    while k < len(c) and c[k] == 0:
        k += 1
    return k, c[k:]


@dataclass(frozen=True)
class LaurentRational:
    """``x**shift * num / den`` over F_p in normal form.

    ``num`` and ``den`` are coprime, neither divisible by x, and ``den`` is
    monic.  Zero is ``num == ()`` with ``shift == 0`` and ``den == (1,)``.
    """

    p: int
    num: tuple[int, ...]
    den: tuple[int, ...] = (1,)
    shift: int = 0

    @classmethod
    def make(cls, p: int, num, den=(1,), shift: int = 0) -> "LaurentRational":
        num = _trim([int(v) % p for v in num])
        den = _trim([int(v) % p for v in den])
        if not den:
            raise FieldError("division by zero")
        if not num:
            return cls(p, ())
        k1, num = _strip_x(num)
        k2, den = _strip_x(den)
        shift += k1 - k2
        if len(den) > 1:
            g = poly_gcd(num, den, p)
            if len(g) > 1:
                num = poly_divmod(num, g, p)[0]
                den = poly_divmod(den, g, p)[0]
        lead = den[-1]
        if lead != 1:
            inv = pow(lead, -1, p)
            num = poly_scale(num, inv, p)
            den = poly_scale(den, inv, p)
        return cls(p, num, den, shift)

    @classmethod
    def monomial(cls, p: int, coef: int, k: int) -> "LaurentRational":
        return cls.make(p, (coef,), (1,), k)

    @classmethod
    def from_terms(cls, p: int, terms: dict[int, int]) -> "LaurentRational":
        """Laurent polynomial sum_k terms[k] x^k."""
        terms = {k: v % p for k, v in terms.items() if v % p}
        if not terms:
            return cls(p, ())
        lo = min(terms)
        hi = max(terms)
        return cls.make(p, [terms.get(k, 0) for k in range(lo, hi + 1)], (1,), lo)

    def is_zero(self) -> bool:
        return not self.num

    @property
    def is_polynomial(self) -> bool:
        return self.den == (1,)

    def degree(self) -> int:
        """deg num - deg den + shift (the valuation at infinity, negated)."""
        if not self.num:
            raise FieldError("degree of zero")
        return self.shift + len(self.num) - len(self.den)

    def terms(self) -> dict[int, int]:
        if not self.is_polynomial:
            raise FieldError("not a Laurent polynomial")
        return {self.shift + i: c for i, c in enumerate(self.num) if c}

    def __add__(self, o: "LaurentRational") -> "LaurentRational":
        if not self.num:
            return o
        if not o.num:
            return self
        p = self.p
        lo = min(self.shift, o.shift)
        a = (0,) * (self.shift - lo) + self.num
        b = (0,) * (o.shift - lo) + o.num
        if self.den == o.den == (1,):
            return LaurentRational.make(p, poly_add(a, b, p), (1,), lo)
        num = poly_add(poly_mul(a, o.den, p), poly_mul(b, self.den, p), p)
        return LaurentRational.make(p, num, poly_mul(self.den, o.den, p), lo)

    def __neg__(self) -> "LaurentRational":
        return LaurentRational(self.p, poly_scale(self.num, self.p - 1, self.p), self.den, self.shift)

    def __mul__(self, o: "LaurentRational") -> "LaurentRational":
        if not self.num or not o.num:
            return LaurentRational(self.p, ())
        p = self.p
        num = poly_mul(self.num, o.num, p)
        den = poly_mul(self.den, o.den, p)
        if len(self.num) == 1 or len(o.num) == 1:
            if den == (1,):
                return LaurentRational(p, num, den, self.shift + o.shift)
        return LaurentRational.make(p, num, den, self.shift + o.shift)

    def inverse(self) -> "LaurentRational":
        if not self.num:
            raise FieldError("division by zero")
        return LaurentRational.make(self.p, self.den, self.num, -self.shift)

    def __str__(self) -> str:
        def fmt(c, shift):
            parts = [f"{v}*x^{i + shift}" for i, v in enumerate(c) if v]
            return " + ".join(reversed(parts)) if parts else "0"

        if self.is_polynomial:
            return fmt(self.num, self.shift)
        return f"({fmt(self.num, self.shift)}) / ({fmt(self.den, 0)})"


_TERM = re.compile(r"^([+-]?\d+)(?:\*?x(?:\^([+-]?\d+))?)?$|^([+-]?)x(?:\^([+-]?\d+))?$")


def parse_laurent_poly(text: str, p: int) -> LaurentRational:
    """Parse a sparse ``c_k*x^k + ...`` literal."""
    s = text.replace(" ", "")
    if s in ("", "0"):
        return LaurentRational(p, ())
    s = s.replace("-", "+-")
    terms: dict[int, int] = {}
    for tok in s.split("+"):
        if not tok:
            continue
        m = _TERM.match(tok)
        if not m:
            raise FieldError(f"malformed Laurent term {tok!r}")
        if m.group(1) is not None:
            coef = int(m.group(1))
            if "x" in tok:
                k = int(m.group(2)) if m.group(2) is not None else 1
            else:
                k = 0
        else:
            coef = -1 if m.group(3) == "-" else 1
            k = int(m.group(4)) if m.group(4) is not None else 1
        terms[k] = terms.get(k, 0) + coef
    return LaurentRational.from_terms(p, terms)


# ---------------------------------------------------------------------------
# Valued scalars


FieldValue = Union[Fraction, LaurentRational]


@dataclass(frozen=True)
class ValuedScalar:
    value: FieldValue
    place: Place

    def __post_init__(self):
        if self.place.kind == "laurent":
            if not isinstance(self.value, LaurentRational) or self.value.p != self.place.p:
                raise FieldError("laurent place needs a LaurentRational over the same prime")
        elif not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    # construction helpers
    @classmethod
    def of(cls, value, place: Place = ARCH) -> "ValuedScalar":
        if place.kind == "laurent":
            if isinstance(value, LaurentRational):
                return cls(value, place)
            return cls(LaurentRational.monomial(place.p, int(value), 0), place)
        return cls(Fraction(value), place)

    @classmethod
    def zero(cls, place: Place) -> "ValuedScalar":
        return cls.of(0, place)

    @classmethod
    def one(cls, place: Place) -> "ValuedScalar":
        return cls.of(1, place)

    def _check(self, other: "ValuedScalar"):
        if not isinstance(other, ValuedScalar):
            raise TypeError(f"expected ValuedScalar, got {type(other).__name__}")
        if other.place != self.place:
            raise PlaceMismatch(f"place mismatch: {self.place} vs {other.place}")

    def __add__(self, other):
        self._check(other)
        return ValuedScalar(self.value + other.value, self.place)

    def __sub__(self, other):
        self._check(other)
        return ValuedScalar(self.value + (-other.value), self.place)

    def __mul__(self, other):
        self._check(other)
        return ValuedScalar(self.value * other.value, self.place)

    def __neg__(self):
        return ValuedScalar(-self.value, self.place)

    def inverse(self) -> "ValuedScalar":
        if self.is_zero():
            raise FieldError("division by zero")
        if isinstance(self.value, Fraction):
            return ValuedScalar(1 / self.value, self.place)
        return ValuedScalar(self.value.inverse(), self.place)

    def __truediv__(self, other):
        self._check(other)
        return self * other.inverse()

    def is_zero(self) -> bool:
        if isinstance(self.value, Fraction):
            return self.value == 0
        return self.value.is_zero()

    def abs(self) -> LogAbs:
        return abs_value(self)

    def abs_lt(self, threshold) -> bool:
        """Exact test |self| < threshold (threshold a rational, float or inf)."""
        if threshold == math.inf:
            return True
        t = Fraction(threshold)
        if self.is_zero():
            return t > 0
        kind = self.place.kind
        if kind == "arch":
            return abs(self.value) < t
        if kind == "padic":
            v = padic_valuation(self.value, self.place.p)
            return Fraction(self.place.p) ** (-v) < t
        return Fraction(self.place.p) ** self.value.degree() < t

    def serialize(self) -> str:
        if isinstance(self.value, Fraction):
            return f"{self.value.numerator}/{self.value.denominator}"
        return str(self.value)

    def __str__(self) -> str:
        return self.serialize()


def padic_valuation(q: Fraction, p: int) -> int:
    if q == 0:
        raise FieldError("valuation of zero")
    num, den = q.numerator, q.denominator
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def abs_value(a: ValuedScalar) -> LogAbs:
    """log |a| at the scalar's place."""
    if a.is_zero():
        return LogAbs.minus_infinity()
    kind = a.place.kind
    if kind == "padic":
        return LogAbs.exact(-padic_valuation(a.value, a.place.p), a.place.p)
    if kind == "laurent":
        return LogAbs.exact(a.value.degree(), a.place.p)
    q = abs(a.value)
    if q == 1:
        return LogAbs()
    if q.denominator == 1:
        b, e = _perfect_power(q.numerator)
        return LogAbs.exact(e, b)
    if q.numerator == 1:
        b, e = _perfect_power(q.denominator)
        return LogAbs.exact(-e, b)
    return LogAbs.from_float(math.log(q.numerator) - math.log(q.denominator))


def field_arith(a: ValuedScalar, b: ValuedScalar | None, op: str) -> ValuedScalar:
    """Dispatch one of add, mul, neg, inv (b is ignored for the unary ops)."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "inv":
        return a.inverse()
    raise FieldError(f"unknown op {op!r}")


def parse_scalar(text: str, place: Place) -> ValuedScalar:
    text = text.strip()
    if place.kind == "laurent":
        return ValuedScalar(parse_laurent_poly(text, place.p), place)
    try:
        return ValuedScalar(Fraction(text), place)
    except (ValueError, ZeroDivisionError) as exc:
        raise FieldError(f"malformed rational {text!r}") from exc
