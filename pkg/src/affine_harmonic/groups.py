"""Affine groups ``x -> lam*x + c`` over the valued fields in :mod:`.fields`.

Elements are pairs ``(c, lam)`` multiplied by ``c(xy) = c(x) + lam(x) c(y)``,
``lam(xy) = lam(x) lam(y)``.  Equality is structural on the normal forms.
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .fields import (
    ARCH,
    FieldError,
    LaurentRational,
    LogAbs,
    Place,
    ValuedScalar,
    abs_value,
    is_prime,
    parse_scalar,
)


class GroupError(ValueError):
    pass


class WordError(GroupError):
    """Malformed word literal or unknown generator label."""


class GroupSpecError(GroupError):
    """Unknown built-in group name."""


class NonPrimeError(GroupSpecError):
    pass


class BallBudgetExceeded(GroupError):
    pass


class VirtuallyAbelianError(GroupError):
    """No element with |lam| > 1 exists (the group is flagged virtually abelian)."""


@dataclass(frozen=True)
class AffineElement:
    c: ValuedScalar
    lam: ValuedScalar

    def __post_init__(self):
        if self.c.place != self.lam.place:
            raise FieldError("c and lam live at different places")
        if self.lam.is_zero():
            raise GroupError("lam must be nonzero")

    @property
    def place(self) -> Place:
        return self.lam.place

    @classmethod
    def identity(cls, place: Place) -> "AffineElement":
        return cls(ValuedScalar.zero(place), ValuedScalar.one(place))

    @classmethod
    def of(cls, c, lam, place: Place = ARCH) -> "AffineElement":
        return cls(ValuedScalar.of(c, place), ValuedScalar.of(lam, place))

    def __mul__(self, other: "AffineElement") -> "AffineElement":
        return affine_mul(self, other)

    def inverse(self) -> "AffineElement":
        li = self.lam.inverse()
        return AffineElement(-(li * self.c), li)

    def __pow__(self, n: int) -> "AffineElement":
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        out = AffineElement.identity(self.place)
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def is_identity(self) -> bool:
        return self.c.is_zero() and self.lam == ValuedScalar.one(self.place)

    def rho(self) -> LogAbs:
        return rho(self)

    def __str__(self) -> str:
        return f"({self.c.serialize()}; {self.lam.serialize()})"


def _scalar(value, place: Place) -> ValuedScalar:
    # values produced by field arithmetic are already in normal form
    out = object.__new__(ValuedScalar)
    object.__setattr__(out, "value", value)
    object.__setattr__(out, "place", place)
    return out


def affine_mul(x: AffineElement, y: AffineElement) -> AffineElement:
    place = x.lam.place
    if place != y.lam.place:
        raise FieldError(f"place mismatch: {place} vs {y.lam.place}")
    xl, yl = x.lam.value, y.lam.value
    out = object.__new__(AffineElement)
    if type(xl) is Fraction and xl == 1:
        c = _scalar(x.c.value + y.c.value, place)
    else:
        c = _scalar(x.c.value + xl * y.c.value, place)
    object.__setattr__(out, "c", c)
    if type(yl) is Fraction and yl == 1:
        object.__setattr__(out, "lam", x.lam)
    else:
        object.__setattr__(out, "lam", _scalar(xl * yl, place))
    return out


def rho(x: AffineElement) -> LogAbs:
    """-log |lam(x)|."""
    return -abs_value(x.lam)


def parse_element(text: str, place: Place) -> AffineElement:
    """Parse an element literal ``(c; lam)``."""
    m = re.fullmatch(r"\s*\(\s*(.+?)\s*;\s*(.+?)\s*\)\s*", text)
    if not m:
        raise WordError(f"malformed element literal {text!r}")
    try:
        return AffineElement(parse_scalar(m.group(1), place), parse_scalar(m.group(2), place))
    except FieldError as exc:
        raise WordError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Measured groups


@dataclass(frozen=True)
class MeasuredGroup:
    """Finite symmetric generating set with a symmetric step measure.

    ``special`` holds designated elements: ``x`` of the form (0, lam) with
    |lam| > 1 and ``z`` of the form (c, 1), c != 0, with mu(z) > 0.
    """

    name: str
    place: Place
    generators: tuple[tuple[str, AffineElement], ...]
    weights: tuple[Fraction, ...]
    inverse: dict = field(hash=False, compare=False)
    special: dict = field(default_factory=dict, hash=False, compare=False)
    virtually_abelian: bool = False

    def __post_init__(self):
        if len(self.generators) != len(self.weights):
            raise GroupError("one weight per generator")
        if any(w <= 0 for w in self.weights) or sum(self.weights) != 1:
            raise GroupError("weights must be positive and sum to 1")
        labels = [lab for lab, _ in self.generators]
        if len(set(labels)) != len(labels):
            raise GroupError("duplicate generator labels")
        idx = {lab: i for i, lab in enumerate(labels)}
        for lab, inv in self.inverse.items():
            i, j = idx[lab], idx[inv]
            s, t = self.generators[i][1], self.generators[j][1]
            if not (s * t).is_identity():
                raise GroupError(f"{inv} is not the inverse of {lab}")
            if self.weights[i] != self.weights[j]:
                raise GroupError("mu must be symmetric")
        if set(self.inverse) != set(labels):
            raise GroupError("inverse map must cover every generator")

    @property
    def labels(self) -> list[str]:
        return [lab for lab, _ in self.generators]

    @property
    def elements(self) -> list[AffineElement]:
        return [g for _, g in self.generators]

    def generator(self, label: str) -> AffineElement:
        for lab, g in self.generators:
            if lab == label:
                return g
        raise WordError(f"unknown generator {label!r}")

    def weight(self, label: str) -> Fraction:
        return self.weights[self.labels.index(label)]

    def identity(self) -> AffineElement:
        return AffineElement.identity(self.place)

    def steps(self) -> list[tuple[AffineElement, Fraction]]:
        return [(g, w) for (_, g), w in zip(self.generators, self.weights)]

    def neighbors(self, x: AffineElement) -> list[tuple[AffineElement, Fraction]]:
        """x*s for s in the support of mu, with weights."""
        return [(x * g, w) for g, w in self.steps()]

    def evaluate(self, word: str | Iterable[tuple[str, int]]) -> AffineElement:
        if isinstance(word, str):
            word = parse_word(word)
        out = self.identity()
        for label, exp in word:
            out = out * (self.generator(label) ** exp)
        return out

    def parse_point(self, text: str) -> AffineElement:
        """A word over the generators or an element literal ``(c; lam)``."""
        if text.strip().startswith("("):
            return parse_element(text, self.place)
        return self.evaluate(text)

    @property
    def lam_base(self) -> int | None:
        """Integer b with lam(s) = b^k(s) for every generator, if one exists."""
        return monomial_structure(self)[0] if monomial_structure(self) else None


_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^([+-]?\d+))?$")


def parse_word(text: str) -> list[tuple[str, int]]:
    """Whitespace separated ``label^exp`` tokens; the exponent defaults to 1."""
    out = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if not m:
            raise WordError(f"malformed word token {tok!r}")
        out.append((m.group(1), int(m.group(2)) if m.group(2) is not None else 1))
    return out


# ---------------------------------------------------------------------------
# Built-in groups


def _uniform(n: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(1, n) for _ in range(n))


def bs12() -> MeasuredGroup:
    a = AffineElement.of(0, 2)
    b = AffineElement.of(1, 1)
    gens = (("a", a), ("A", a.inverse()), ("b", b), ("B", b.inverse()))
    return MeasuredGroup(
        "bs12",
        ARCH,
        gens,
        _uniform(4),
        {"a": "A", "A": "a", "b": "B", "B": "b"},
        special={"x": a, "z": b},
    )


def lamplighter(p: int) -> MeasuredGroup:
    if not is_prime(p):
        raise NonPrimeError(f"lamplighter needs a prime, got {p}")
    place = Place("laurent", p)
    t = AffineElement(ValuedScalar.zero(place), ValuedScalar(LaurentRational.monomial(p, 1, 1), place))
    lamp = AffineElement(ValuedScalar.one(place), ValuedScalar.one(place))
    gens = [("t", t), ("T", t.inverse()), ("l", lamp)]
    inverse = {"t": "T", "T": "t", "l": "l"}
    if p != 2:
        gens.append(("L", lamp.inverse()))
        inverse = {"t": "T", "T": "t", "l": "L", "L": "l"}
    return MeasuredGroup(
        f"lamplighter:{p}",
        place,
        tuple(gens),
        _uniform(len(gens)),
        inverse,
        special={"x": t, "z": lamp},
    )


def zline() -> MeasuredGroup:
    s = AffineElement.of(1, 1)
    return MeasuredGroup(
        "zline",
        ARCH,
        (("s", s), ("S", s.inverse())),
        _uniform(2),
        {"s": "S", "S": "s"},
        virtually_abelian=True,
    )


def builtin_group(name: str) -> MeasuredGroup:
    name = name.strip()
    if name == "bs12":
        return bs12()
    if name == "zline":
        return zline()
    m = re.fullmatch(r"lamplighter:(\d+)", name)
    if m:
        return lamplighter(int(m.group(1)))
    raise GroupSpecError(f"unknown group {name!r} (expected bs12, zline or lamplighter:p)")


# ---------------------------------------------------------------------------
# Word metric


class WordBall:
    """BFS ball around the identity, grown lazily radius by radius.

    The memo maps each element to its word length; ``budget`` caps the number
    of stored elements.
    """

    def __init__(self, group: MeasuredGroup, budget: int = 5_000_000):
        self.group = group
        self.budget = budget
        e = group.identity()
        self.dist: dict[AffineElement, int] = {e: 0}
        self.frontier = [e]
        self.radius = 0
        self._gens = group.elements

    def grow_to(self, radius: int) -> None:
        while self.radius < radius and self.frontier:
            nxt = []
            for x in self.frontier:
                for s in self._gens:
                    y = x * s
                    if y not in self.dist:
                        self.dist[y] = self.radius + 1
                        nxt.append(y)
            if len(self.dist) > self.budget:
                raise BallBudgetExceeded(
                    f"ball of radius {self.radius + 1} exceeds budget {self.budget}"
                )
            self.frontier = nxt
            self.radius += 1

    def length(self, x: AffineElement, radius_cap: int) -> int | None:
        if x in self.dist:
            return self.dist[x]
        while self.radius < radius_cap:
            self.grow_to(self.radius + 1)
            if x in self.dist:
                return self.dist[x]
        return None

    def ball(self, radius: int) -> list[AffineElement]:
        self.grow_to(radius)
        return [x for x, d in self.dist.items() if d <= radius]

    def sphere_sizes(self) -> list[int]:
        counts = [0] * (self.radius + 1)
        for d in self.dist.values():
            counts[d] += 1
        return counts


_BALLS: dict[tuple[str, int], WordBall] = {}


def ball_for(group: MeasuredGroup, budget: int = 5_000_000) -> WordBall:
    key = (group.name, budget)
    ball = _BALLS.get(key)
    if ball is None or ball.group is not group and ball.group.generators != group.generators:
        ball = _BALLS[key] = WordBall(group, budget)
    return ball


def word_length(g: MeasuredGroup, x: AffineElement, radius_cap: int, budget: int = 5_000_000) -> int | None:
    """|x|_S by BFS, or None when |x| > radius_cap."""
    if radius_cap < 0:
        raise GroupError("radius_cap must be >= 0")
    return ball_for(g, budget).length(x, radius_cap)


def alpha_distance_constants(g: MeasuredGroup, radius: int = 10, budget: int = 5_000_000) -> dict:
    """Empirical K with |rho(x)| <= K|x| and log(1+|c(x)|) <= K|x| over a ball."""
    ball = ball_for(g, budget)
    ball.grow_to(radius)
    k_rho = 0.0
    k_c = 0.0
    for x, d in ball.dist.items():
        if d == 0 or d > radius:
            continue
        k_rho = max(k_rho, abs(float(rho(x))) / d)
        k_c = max(k_c, math.log1p(math.exp(float(abs_value(x.c)))) / d)
    return {"radius": min(radius, ball.radius), "K_rho": k_rho, "K_c": k_c, "K": max(k_rho, k_c)}


# ---------------------------------------------------------------------------
# Normalization


def _roots_of_unity_only(g: MeasuredGroup) -> bool:
    one = ValuedScalar.one(g.place)
    for s in g.elements:
        lam = s.lam
        power = lam
        for _ in range(12):
            if power == one:
                break
            power = power * lam
        else:
            return False
    return True


def conjugate_group(g: MeasuredGroup, h: AffineElement, name: str | None = None) -> MeasuredGroup:
    """Presentation with every generator replaced by h^-1 s h."""
    hi = h.inverse()
    gens = tuple((lab, hi * s * h) for lab, s in g.generators)
    special = {k: hi * v * h for k, v in g.special.items()}
    return MeasuredGroup(
        name or g.name,
        g.place,
        gens,
        g.weights,
        dict(g.inverse),
        special=special,
        virtually_abelian=g.virtually_abelian,
    )


def normalize_presentation(g: MeasuredGroup, search_radius: int = 4) -> MeasuredGroup:
    """Conjugate so that a designated element has the form (0, lam), |lam| > 1."""
    if g.virtually_abelian or _roots_of_unity_only(g):
        raise VirtuallyAbelianError(f"{g.name}: lam(G) consists of roots of unity; G is virtually abelian")
    cand = g.special.get("x")
    if cand is not None and cand.c.is_zero() and rho(cand).compare(0.0) < 0:
        return g
    found = None
    for s in g.elements:
        if rho(s).compare(0.0) < 0:
            found = s
            break
    if found is None:
        ball = WordBall(g, budget=200_000)
        ball.grow_to(search_radius)
        best = [x for x in ball.dist if rho(x).compare(0.0) < 0]
        if not best:
            raise VirtuallyAbelianError(f"no element with |lam| > 1 within radius {search_radius}")
        found = min(best, key=lambda x: (ball.dist[x], str(x)))
    if found.c.is_zero():
        special = dict(g.special)
        special["x"] = found
        return MeasuredGroup(g.name, g.place, g.generators, g.weights, dict(g.inverse), special, g.virtually_abelian)
    one = ValuedScalar.one(g.place)
    d = (one - found.lam).inverse() * found.c
    h = AffineElement(d, one)
    out = conjugate_group(g, h, name=f"{g.name}^h")
    special = dict(out.special)
    special["x"] = h.inverse() * found * h
    return MeasuredGroup(out.name, out.place, out.generators, out.weights, dict(out.inverse), special, out.virtually_abelian)


# ---------------------------------------------------------------------------
# Monomial structure (used by the compiled samplers)


def _lam_exponent(lam: ValuedScalar, base: int) -> int | None:
    """k with lam == base^k exactly (x^k for Laurent places), else None."""
    v = lam.value
    if isinstance(v, LaurentRational):
        if v.num == (1,) and v.den == (1,):
            return v.shift
        return None
    if v <= 0:
        return None
    k = 0
    num, den = v.numerator, v.denominator
    if num != 1 and den != 1:
        return None
    n = num if den == 1 else den
    while n > 1 and n % base == 0:
        n //= base
        k += 1
    if n != 1:
        return None
    return k if den == 1 else -k


def scalar_digits(a: ValuedScalar, base: int) -> dict[int, int] | None:
    """Signed base-b digits {position: digit} of a scalar in Z[1/b] (or F_p[x, 1/x])."""
    v = a.value
    if isinstance(v, LaurentRational):
        return v.terms() if v.is_polynomial else None
    if v == 0:
        return {}
    den = v.denominator
    shift = 0
    while den % base == 0:
        den //= base
        shift += 1
    if den != 1:
        return None
    num = abs(v.numerator)
    sign = 1 if v.numerator > 0 else -1
    out = {}
    pos = -shift
    while num:
        num, d = divmod(num, base)
        if d:
            out[pos] = sign * d
        pos += 1
    return out


def monomial_structure(g: MeasuredGroup):
    """(base, [(lam exponent, c digits)]) when every generator fits the compiled samplers."""
    place = g.place
    if place.kind == "arch":
        candidates = set()
        for s in g.elements:
            q = s.lam.value
            if q != 1:
                n = q.numerator if q.denominator == 1 else q.denominator
                candidates.add(n)
        bases = sorted({_min_base(n) for n in candidates}) or [2]
        if len(bases) != 1:
            return None
        base = bases[0]
    else:
        base = place.p
    out = []
    for s in g.elements:
        k = _lam_exponent(s.lam, base)
        digits = scalar_digits(s.c, base)
        if k is None or digits is None:
            return None
        out.append((k, digits))
    return base, out


def _min_base(n: int) -> int:
    from .fields import _perfect_power

    return _perfect_power(n)[0] if n >= 2 else 2


def lam_exponent(x: AffineElement, base: int) -> int | None:
    return _lam_exponent(x.lam, base)
