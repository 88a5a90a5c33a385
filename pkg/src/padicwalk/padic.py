"""Exact p-adic arithmetic, quotient groups, and grid embeddings.

Values in Q_p are represented exactly as mantissa * p^valuation with an
arbitrary-precision integer mantissa, so path states close under addition
and subtraction with no rounding.  Cosets of p^m Z_p are finitely supported
base-p digit vectors below index m.  The level-m grid is the image of the
quotient group G = Q_p/Z_p under g -> p^m * section(g); its mesh is p^-m.

Everything here is an immutable value and every operation is pure.
"""

from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "DEFAULT_DIGIT_CAP",
    "PrecisionError",
    "PrimeParams",
    "PadicValue",
    "GroupElement",
    "Ball",
    "SpacetimePoint",
    "padic_abs",
    "digit_expansion",
    "frac_part",
    "character",
    "group_project",
    "rescale_to_level",
    "to_base_level",
    "coset_section",
    "grid_embed",
    "embed_spacetime",
    "grid_properties_check",
    "GridReport",
    "value_to_string",
    "value_from_string",
    "value_to_digit_json",
    "value_from_digit_json",
]

# Digit-support cap: operations whose result needs more base-p digit
# positions than this fail loudly instead of silently growing.
DEFAULT_DIGIT_CAP = 64


class PrecisionError(ArithmeticError):
    """Raised when a result would exceed the digit-support cap."""


def is_prime(n: int) -> bool:
    """Deterministic primality check by trial division (desk-scale p)."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class PrimeParams:
    """Prime p, walk exponent b > 0, and diffusion constant sigma > 0."""

    p: int
    b: float
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def _digit_count(p: int, n: int) -> int:
    n = abs(n)
    count = 0
    while n:
        n //= p
        count += 1
    return count


@dataclass(frozen=True)
class PadicValue:
    """Exact element mantissa * p^valuation of Q_p.

    Canonical form: mantissa is 0 (the canonical zero, valuation 0) or not
    divisible by p.  The absolute value is then exactly p^-valuation.
    """

    p: int
    mantissa: int
    valuation: int = 0

    def __post_init__(self) -> None:
        m, v = self.mantissa, self.valuation
        if m == 0:
            v = 0
        else:
            while m % self.p == 0:
                m //= self.p
                v += 1
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "valuation", v)
        if _digit_count(self.p, m) > DEFAULT_DIGIT_CAP:
            raise PrecisionError(
                f"mantissa needs more than {DEFAULT_DIGIT_CAP} base-{self.p} digits"
            )

    @classmethod
    def zero(cls, p: int) -> "PadicValue":
        return cls(p, 0, 0)

    @classmethod
    def from_rational(cls, p: int, value) -> "PadicValue":
        """Build from an int or Fraction whose denominator is a power of p."""
        frac = Fraction(value)
        den = frac.denominator
        e = 0
        while den % p == 0:
            den //= p
            e += 1
        if den != 1:
            raise ValueError(
                f"{value} is not representable: denominator has a factor coprime to {p}"
            )
        return cls(p, frac.numerator, -e)

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def to_fraction(self) -> Fraction:
        if self.valuation >= 0:
            return Fraction(self.mantissa * self.p**self.valuation)
        return Fraction(self.mantissa, self.p**-self.valuation)

    def shift(self, k: int) -> "PadicValue":
        """Multiply by p^k (exact)."""
        if self.is_zero():
            return self
        return PadicValue(self.p, self.mantissa, self.valuation + k)

    def abs_exponent(self) -> int | None:
        """e with |x| = p^e, or None for zero."""
        return None if self.is_zero() else -self.valuation

    def __add__(self, other: "PadicValue") -> "PadicValue":
        if self.p != other.p:
            raise ValueError("mixed primes")
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        v = min(self.valuation, other.valuation)
        m = self.mantissa * self.p ** (self.valuation - v) + other.mantissa * self.p ** (
            other.valuation - v
        )
        return PadicValue(self.p, m, v)

    def __neg__(self) -> "PadicValue":
        return PadicValue(self.p, -self.mantissa, self.valuation)

    def __sub__(self, other: "PadicValue") -> "PadicValue":
        return self + (-other)

    def __repr__(self) -> str:
        return f"PadicValue({value_to_string(self)!r})"


def padic_abs(x: PadicValue) -> Fraction:
    """|x|_p as an exact Fraction: p^-valuation, or 0 for the zero value."""
    if x.is_zero():
        return Fraction(0)
    if x.valuation <= 0:
        return Fraction(x.p**-x.valuation)
    return Fraction(1, x.p**x.valuation)


def digit_expansion(x: PadicValue) -> dict[int, int]:
    """Finitely supported digit map {k: a(k)} with x = sum a(k) p^k.

    Only nonnegative values have a finite expansion; negative mantissas
    raise (their expansion is not finitely supported).
    """
    if x.mantissa < 0:
        raise ValueError("digit expansion is finite only for nonnegative values")
    digits: dict[int, int] = {}
    n = x.mantissa
    k = x.valuation
    while n:
        n, d = divmod(n, x.p)
        if d:
            digits[k] = d
        k += 1
    return digits


def frac_part(x: PadicValue) -> Fraction:
    """{x} = sum over k < 0 of a(k) p^k, a rational in [0, 1).

    For negative mantissas the digits below zero are those of the
    nonnegative residue of the mantissa modulo p^-valuation, which agrees
    with x modulo Z_p and is all the additive character needs.
    """
    if x.is_zero() or x.valuation >= 0:
        return Fraction(0)
    q = x.p**-x.valuation
    return Fraction(x.mantissa % q, q)


def character(x: PadicValue) -> complex:
    """Additive character chi(x) = exp(2 pi i {x}), a unit complex number."""
    return cmath.exp(2j * math.pi * float(frac_part(x)))


# ---------------------------------------------------------------------------
# Quotient groups G_m = Q_p / p^m Z_p


@dataclass(frozen=True)
class GroupElement:
    """Coset of p^level Z_p: a finitely supported digit vector below `level`.

    digits is a sorted tuple of (index, digit) pairs with nonzero digits in
    {1, ..., p-1} and all indices < level; this normal form is unique, so
    dataclass equality is coset equality.
    """

    p: int
    level: int
    digits: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        for k, d in self.digits:
            if k >= self.level:
                raise ValueError(f"digit index {k} not below level {self.level}")
            if not 0 < d < self.p:
                raise ValueError(f"digit {d} out of range for p={self.p}")
        if self.digits:
            object.__setattr__(self, "digits", tuple(sorted(self.digits)))
            span = self.level - self.digits[0][0]
            if span > DEFAULT_DIGIT_CAP:
                raise PrecisionError(
                    f"digit support spans {span} positions (cap {DEFAULT_DIGIT_CAP})"
                )

    @classmethod
    def identity(cls, p: int, level: int = 0) -> "GroupElement":
        return cls(p, level)

    @classmethod
    def from_digits(cls, p: int, level: int, digits: Mapping[int, int]) -> "GroupElement":
        items = tuple((k, d % p) for k, d in digits.items() if d % p)
        return cls(p, level, items)

    def is_identity(self) -> bool:
        return not self.digits

    def abs_exponent(self) -> int | None:
        """e with |g| = p^e (e = -least supported index), or None for identity."""
        return None if not self.digits else -self.digits[0][0]

    def abs_value(self) -> Fraction:
        e = self.abs_exponent()
        if e is None:
            return Fraction(0)
        return Fraction(self.p**e) if e >= 0 else Fraction(1, self.p**-e)

    def _encode(self, base: int) -> int:
        return sum(d * self.p ** (k - base) for k, d in self.digits)

    def _with_encoded(self, base: int, n: int) -> "GroupElement":
        n %= self.p ** (self.level - base)
        digits = []
        k = base
        while n:
            n, d = divmod(n, self.p)
            if d:
                digits.append((k, d))
            k += 1
        return GroupElement(self.p, self.level, tuple(digits))

    def _base_with(self, other: "GroupElement") -> int:
        indices = [k for k, _ in self.digits] + [k for k, _ in other.digits]
        return min(indices) if indices else self.level

    def __add__(self, other: "GroupElement") -> "GroupElement":
        if self.p != other.p or self.level != other.level:
            raise ValueError("group elements must share prime and level")
        base = self._base_with(other)
        return self._with_encoded(base, self._encode(base) + other._encode(base))

    def __neg__(self) -> "GroupElement":
        if not self.digits:
            return self
        base = self.digits[0][0]
        return self._with_encoded(base, -self._encode(base))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        if self.p != other.p or self.level != other.level:
            raise ValueError("group elements must share prime and level")
        base = self._base_with(other)
        return self._with_encoded(base, self._encode(base) - other._encode(base))

    def __repr__(self) -> str:
        body = ",".join(f"{k}:{d}" for k, d in self.digits)
        return f"GroupElement(p={self.p}, level={self.level}, {{{body}}})"


def group_project(x: PadicValue, m: int) -> GroupElement:
    """Quotient map Q_p -> Q_p / p^m Z_p: keep the digits at indices < m.

    A group homomorphism; works for negative values through the nonnegative
    mantissa residue (cosets only see the value modulo p^m Z_p).
    """
    if x.is_zero() or x.valuation >= m:
        return GroupElement.identity(x.p, m)
    span = m - x.valuation
    r = x.mantissa % x.p**span
    digits = []
    k = x.valuation
    while r:
        r, d = divmod(r, x.p)
        if d:
            digits.append((k, d))
        k += 1
    return GroupElement(x.p, m, tuple(digits))


def rescale_to_level(g: GroupElement, m: int) -> GroupElement:
    """Isomorphism G -> G_m: multiply representatives by p^m (index shift +m)."""
    if g.level != 0:
        raise ValueError(f"expected a level-0 element, got level {g.level}")
    return GroupElement(g.p, m, tuple((k + m, d) for k, d in g.digits))


def to_base_level(z: GroupElement) -> GroupElement:
    """Inverse of rescale_to_level: G_m -> G (index shift -level)."""
    m = z.level
    return GroupElement(z.p, 0, tuple((k - m, d) for k, d in z.digits))


def coset_section(z: GroupElement) -> PadicValue:
    """Injection G_level -> Q_p: the nonnegative value sum a(k) p^k.

    Projecting the result back to the element's level recovers z exactly.
    """
    if not z.digits:
        return PadicValue.zero(z.p)
    base = z.digits[0][0]
    return PadicValue(z.p, z._encode(base), base)


def grid_embed(g: GroupElement, m: int) -> PadicValue:
    """Level-m spatial embedding of G into Q_p; equals p^m * coset_section(g)."""
    return coset_section(rescale_to_level(g, m))


# ---------------------------------------------------------------------------
# Balls and spacetime points


@dataclass(frozen=True)
class Ball:
    """Closed ball {x : |x - center| <= p^radius_exp}."""

    center: PadicValue
    radius_exp: int

    @property
    def p(self) -> int:
        return self.center.p

    def radius(self) -> Fraction:
        if self.radius_exp >= 0:
            return Fraction(self.p**self.radius_exp)
        return Fraction(1, self.p**-self.radius_exp)

    def contains(self, x: PadicValue) -> bool:
        d = x - self.center
        return d.is_zero() or d.valuation >= -self.radius_exp


def ball_relation(a: Ball, b: Ball) -> str:
    """Exact ultrametric trichotomy: 'equal', 'a_in_b', 'b_in_a' or 'disjoint'."""
    d = a.center - b.center
    de = d.abs_exponent()  # None means same center
    touching = de is None or de <= max(a.radius_exp, b.radius_exp)
    if not touching:
        return "disjoint"
    if a.radius_exp == b.radius_exp:
        return "equal"
    return "a_in_b" if a.radius_exp < b.radius_exp else "b_in_a"


@dataclass(frozen=True)
class SpacetimePoint:
    time: float
    position: PadicValue

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError("time must be nonnegative")


def embed_spacetime(n: int, g: GroupElement, m: int, tau: float) -> SpacetimePoint:
    """Spatiotemporal embedding (n * tau, level-m grid image of g)."""
    if n < 0:
        raise ValueError("step index must be nonnegative")
    return SpacetimePoint(n * tau, grid_embed(g, m))


# ---------------------------------------------------------------------------
# Grid property verification


@dataclass(frozen=True)
class GridReport:
    """Outcome of the grid property checks on a finite sample."""

    m: int
    mesh: Fraction
    ok: bool
    separation_ok: bool
    min_distance: Fraction | None
    neighbor_counts_at_mesh: tuple[int, ...]
    neighbor_count_ok: bool
    neighbor_counts_at_min_distance: tuple[int, ...]
    covering_ok: bool
    violations: tuple[str, ...]


def grid_properties_check(
    p: int,
    m: int,
    sample: Sequence[GroupElement],
    probes: Iterable[PadicValue] = (),
) -> GridReport:
    """Check the grid axioms on a finite sample of group elements.

    Separation: distinct elements embed at distance >= p^-m.  Neighbor
    counts at distance exactly p^-m must be <= p-1 and identical across the
    sample (they are in fact 0: realized distances are >= p^(1-m); counts
    at the minimal realized distance are reported alongside).  Covering:
    each probe value lies within p^-m of the grid image of its own coset.
    """
    mesh = Fraction(1, p**m)
    violations: list[str] = []
    unique = list(dict.fromkeys(g if g.level == 0 else to_base_level(g) for g in sample))
    points = [grid_embed(g, m) for g in unique]

    min_distance: Fraction | None = None
    separation_ok = True
    distances: list[list[Fraction]] = [[] for _ in points]
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = padic_abs(points[i] - points[j])
            distances[i].append(d)
            distances[j].append(d)
            if min_distance is None or d < min_distance:
                min_distance = d
            if d < mesh:
                separation_ok = False
                violations.append(
                    f"separation: |Gamma({unique[i]!r}) - Gamma({unique[j]!r})| = {d} < {mesh}"
                )

    at_mesh = tuple(sum(1 for d in row if d == mesh) for row in distances)
    neighbor_count_ok = True
    if at_mesh:
        if max(at_mesh) > p - 1 or len(set(at_mesh)) > 1:
            neighbor_count_ok = False
            violations.append(f"neighbor counts at mesh distance not constant/<=p-1: {at_mesh}")
    at_min = tuple(
        sum(1 for d in row if d == min_distance) for row in distances
    ) if min_distance is not None else ()

    covering_ok = True
    for x in probes:
        g = to_base_level(group_project(x, m))
        gap = padic_abs(x - grid_embed(g, m))
        if gap > mesh:
            covering_ok = False
            violations.append(f"covering: {x!r} is {gap} > {mesh} from its grid point")

    ok = separation_ok and neighbor_count_ok and covering_ok
    return GridReport(
        m=m,
        mesh=mesh,
        ok=ok,
        separation_ok=separation_ok,
        min_distance=min_distance,
        neighbor_counts_at_mesh=at_mesh,
        neighbor_count_ok=neighbor_count_ok,
        neighbor_counts_at_min_distance=at_min,
        covering_ok=covering_ok,
        violations=tuple(violations),
    )


# ---------------------------------------------------------------------------
# Serialization

_VALUE_RE = re.compile(r"^(-?\d+)\*(\d+)\^(-?\d+)$")


def value_to_string(x: PadicValue) -> str:
    """Decimal form 'mantissa*p^valuation'; zero is '0'."""
    if x.is_zero():
        return "0"
    return f"{x.mantissa}*{x.p}^{x.valuation}"


def value_from_string(s: str, p: int | None = None) -> PadicValue:
    """Parse value_to_string output; p is required for the '0' form."""
    s = s.strip()
    if s == "0":
        if p is None:
            raise ValueError("prime required to parse '0'")
        return PadicValue.zero(p)
    match = _VALUE_RE.match(s)
    if not match:
        raise ValueError(f"malformed p-adic value string: {s!r}")
    mantissa, prime, valuation = int(match[1]), int(match[2]), int(match[3])
    if p is not None and p != prime:
        raise ValueError(f"expected prime {p}, string carries {prime}")
    return PadicValue(prime, mantissa, valuation)


def value_to_digit_json(x: PadicValue) -> str:
    """Digit-list JSON form; negative values carry an explicit sign field."""
    mag = x if x.mantissa >= 0 else -x
    payload: dict = {"p": x.p, "digits": {str(k): d for k, d in sorted(digit_expansion(mag).items())}}
    if x.mantissa < 0:
        payload["sign"] = -1
    return json.dumps(payload, sort_keys=True)


def value_from_digit_json(s: str) -> PadicValue:
    payload = json.loads(s)
    p = payload["p"]
    total = PadicValue.zero(p)
    for k, d in payload["digits"].items():
        total = total + PadicValue(p, int(d), int(k))
    if payload.get("sign", 1) == -1:
        total = -total
    return total
