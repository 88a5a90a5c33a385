"""Closed-form laws of the p-adic walk and its diffusion limit.

Covers the single-jump law (geometric shell law, uniform on each shell),
its characteristic function 1 - alpha*|y|^b, the n-step pmf as a telescoping
series of ball indicators, the space/time scaling schedule, the pre-limit
characteristic multiplier, and the limit heat-kernel density with its ball
probabilities.  Probabilities are doubles; every truncated series carries an
explicit analytic tail bound and is never silently cut off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator

from .padic import GroupElement, PadicValue, PrimeParams, embed_spacetime, SpacetimePoint

__all__ = [
    "GeneratorLaw",
    "RadialLaw",
    "ScalingSchedule",
    "alpha_const",
    "alpha_ratio_below_one",
    "shell_prob",
    "generator_pmf",
    "generator_pmf_shell",
    "charfn_generator",
    "walk_pmf",
    "walk_radial_law",
    "walk_ball_mass",
    "time_step",
    "prelimit_charfn",
    "limit_charfn",
    "limit_density",
    "limit_density_radial",
    "ball_prob_limit",
    "moment_bound_K",
    "walk_moment",
    "embedded_moment",
]

_MAX_SERIES_TERMS = 200_000


def alpha_const(params: PrimeParams) -> float:
    """The characteristic-function coefficient alpha = p/(p-1) * (1 - p^-(b+1)).

    Always satisfies alpha/p^b < 1, which keeps every factor of the n-step
    closed form in (-1, 1); that bound is re-checked here.
    """
    p, b = params.p, params.b
    alpha = p / (p - 1.0) * (1.0 - p ** -(b + 1.0))
    if not alpha < p**b:
        raise ArithmeticError(f"alpha/p^b >= 1 for p={p}, b={b}")
    return alpha


def alpha_ratio_below_one(p: int, b: float) -> tuple[bool, float]:
    """Check alpha/p^b < 1; exact integer arithmetic when b is integral.

    Uses the identity alpha/p^b = (p^(b+1) - 1) / (p^(2b+1) - p^(2b)).
    """
    if float(b).is_integer() and b > 0:
        k = int(b)
        num = p ** (k + 1) - 1
        den = p ** (2 * k + 1) - p ** (2 * k)
        return num < den, num / den
    ratio = alpha_const(PrimeParams(p, b)) / p**b
    return ratio < 1.0 - 1e-12, ratio


@dataclass(frozen=True)
class GeneratorLaw:
    """Law of a single jump: shells get mass (p^b-1)p^-ib, uniform on each."""

    params: PrimeParams
    alpha: float

    @classmethod
    def from_params(cls, params: PrimeParams) -> "GeneratorLaw":
        return cls(params, alpha_const(params))

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def b(self) -> float:
        return self.params.b

    def perturbed(self, factor: float) -> "GeneratorLaw":
        """Fault-injection copy with alpha scaled; breaks Fourier consistency."""
        return replace(self, alpha=self.alpha * factor)


def shell_prob(law: GeneratorLaw, i: int) -> float:
    """Mass of the shell |g| = p^i under one jump: (1 - p^-b) p^-b(i-1)."""
    if i < 1:
        raise ValueError(f"shell index must be >= 1, got {i}")
    p, b = law.p, law.b
    return (1.0 - p**-b) * p ** (-b * (i - 1))


def _shell_size(p: int, i: int) -> int:
    return p**i - p ** (i - 1)


def generator_pmf_shell(law: GeneratorLaw, i: int) -> float:
    """Per-point jump mass on the shell |g| = p^i (0 at the identity)."""
    if i == 0:
        return 0.0
    return shell_prob(law, i) / _shell_size(law.p, i)


def generator_pmf(law: GeneratorLaw, g: GroupElement) -> float:
    """Per-point jump mass at a level-0 group element."""
    if g.level != 0:
        raise ValueError("generator law lives on the level-0 group")
    e = g.abs_exponent()
    return 0.0 if e is None else generator_pmf_shell(law, e)


def charfn_generator(law: GeneratorLaw, abs_y: float) -> float:
    """Characteristic function of one jump at |y| = abs_y <= 1: 1 - alpha*|y|^b."""
    if abs_y > 1:
        raise ValueError("dual variable lies in Z_p: need |y| <= 1")
    if abs_y < 0:
        raise ValueError("absolute value cannot be negative")
    return 1.0 - law.alpha * abs_y**law.b


def _ball_coef(law: GeneratorLaw, i: int, n: int) -> float:
    """Coefficient of the radius-p^i ball indicator in the n-step closed form.

    (1 - a p^-ib)^n - (1 - a p^-(i-1)b)^n, computed through log1p/expm1 when
    both bases are positive: the naive difference cancels catastrophically
    for deep shells, which matters once the coefficient is multiplied by a
    growing weight (moment sums).
    """
    p, b, a = law.p, law.b, law.alpha
    x_lo = a * p ** (-i * b)
    x_hi = a * p ** (-(i - 1) * b)
    if x_hi < 1.0:
        inner = n * math.log1p(-x_lo)
        outer = n * math.log1p(-x_hi)
        # inner >= outer, so the exponent below is <= 0 and nothing overflows
        return -math.exp(inner) * math.expm1(outer - inner)
    return (1.0 - x_lo) ** n - (1.0 - x_hi) ** n


def _one_minus_pow(x: float, n: int) -> float:
    """1 - (1-x)^n without cancellation for tiny x in [0, 1)."""
    if 0.0 <= x < 1.0:
        return -math.expm1(n * math.log1p(-x))
    return 1.0 - (1.0 - x) ** n


def _pmf_series(law: GeneratorLaw, n: int, start: int, tol: float, rel: float = 0.0) -> float:
    """sum_{i >= start} coef_i(n) p^-i with telescoping tail below tolerance.

    Stops once the tail bound is below tol or below rel * |partial sum|; the
    relative rule lets deep-shell masses keep full relative accuracy.
    """
    p, b, a = law.p, law.b, law.alpha
    total = 0.0
    i = start
    while True:
        total += _ball_coef(law, i, n) * p ** (-i)
        # all coefficients at indices > i are nonnegative, so the tail
        # telescopes: sum_{j>i} coef_j <= 1 - (1 - a p^-ib)^n
        tail = p ** (-(i + 1)) * _one_minus_pow(a * p ** (-i * b), n)
        if tail < tol or tail < rel * abs(total):
            return total
        i += 1
        if i - start > _MAX_SERIES_TERMS:
            raise ArithmeticError("pmf series failed to meet tolerance")


def walk_pmf(law: GeneratorLaw, n: int, g: GroupElement | int, tol: float = 1e-15) -> float:
    """Per-point mass of the n-step walk at g (or at shell exponent g).

    Shell exponent 0 means the identity.  n = 0 is the point mass at the
    identity; n = 1 reduces to the single-jump pmf.
    """
    if isinstance(g, GroupElement):
        if g.level != 0:
            raise ValueError("walk pmf lives on the level-0 group")
        e = g.abs_exponent() or 0
    else:
        e = g
    if e < 0:
        raise ValueError("level-0 shells have exponent >= 1")
    if n < 0:
        raise ValueError("step count must be nonnegative")
    if n == 0:
        return 1.0 if e == 0 else 0.0
    if e == 0:
        return (1.0 - law.alpha) ** n + _pmf_series(law, n, 1, tol)
    return _pmf_series(law, n, e, tol)


@dataclass(frozen=True)
class RadialLaw:
    """Probability law on the level-0 group depending only on |g|.

    shells maps the exponent i >= 1 (radius p^i) to the total mass of that
    shell; atom is the mass at the identity.  tail_bound dominates the mass
    beyond the stored shells plus accumulated series-truncation error.
    """

    p: int
    atom: float
    shells: tuple[tuple[int, float], ...]
    tail_bound: float

    def total_mass(self) -> float:
        return self.atom + math.fsum(m for _, m in self.shells)

    def shell_mass(self, i: int) -> float:
        if i == 0:
            return self.atom
        for j, m in self.shells:
            if j == i:
                return m
        return 0.0

    def per_point(self, i: int) -> float:
        """Mass per point of shell i (shells are uniform by construction)."""
        if i == 0:
            return self.atom
        return self.shell_mass(i) / _shell_size(self.p, i)

    def max_shell(self) -> int:
        return self.shells[-1][0] if self.shells else 0

    def rows(self, scale_exp: int = 0) -> Iterator[dict]:
        """Tabular form; radii are scaled by p^scale_exp for embedded laws."""
        yield {
            "shell_index": 0,
            "radius": 0.0,
            "shell_mass": self.atom,
            "per_point_mass": self.atom,
            "tail_bound": self.tail_bound,
        }
        for i, m in self.shells:
            yield {
                "shell_index": i,
                "radius": float(self.p) ** (i + scale_exp),
                "shell_mass": m,
                "per_point_mass": m / _shell_size(self.p, i),
                "tail_bound": self.tail_bound,
            }


def walk_radial_law(
    law: GeneratorLaw, n: int, max_shell: int = 64, tol: float = 1e-15
) -> RadialLaw:
    """Shell-aggregated law of the n-step walk up to shells of radius p^max_shell.

    The tail bound 1 - (1 - alpha p^-Mb)^n dominates the mass outside the
    window exactly (telescoping), plus one series tolerance per stored shell.
    """
    if n < 0:
        raise ValueError("step count must be nonnegative")
    if n == 0:
        return RadialLaw(law.p, 1.0, (), 0.0)
    # relative stopping keeps each shell mass accurate in relative terms,
    # so the mass accuracy is not destroyed by large shell cardinalities
    atom = (1.0 - law.alpha) ** n + _pmf_series(law, n, 1, 0.0, rel=1e-16)
    shells = tuple(
        (i, _shell_size(law.p, i) * _pmf_series(law, n, i, 0.0, rel=1e-16))
        for i in range(1, max_shell + 1)
    )
    outside = _one_minus_pow(law.alpha * law.p ** (-max_shell * law.b), n)
    return RadialLaw(law.p, atom, shells, outside + (max_shell + 1) * tol)


def walk_ball_mass(law: GeneratorLaw, n: int, radius_exp: int, tol: float = 1e-14) -> float:
    """P(|walk after n steps| <= p^radius_exp), exact series evaluation.

    Equals (1 - alpha p^-Mb)^n + sum_{i > M} coef_i(n) p^(M-i) for M >= 0;
    the partial sums telescope so the tail is explicitly dominated.
    """
    if radius_exp < 0:
        raise ValueError("level-0 balls have radius exponent >= 0")
    if n < 0:
        raise ValueError("step count must be nonnegative")
    if n == 0:
        return 1.0
    p, b, a = law.p, law.b, law.alpha
    m = radius_exp
    total = (1.0 - a * p ** (-m * b)) ** n
    i = m + 1
    while True:
        total += _ball_coef(law, i, n) * p ** (m - i)
        tail = p ** (m - i - 1) * _one_minus_pow(a * p ** (-i * b), n)
        if tail < tol:
            return total
        i += 1
        if i - m > _MAX_SERIES_TERMS:
            raise ArithmeticError("ball-mass series failed to meet tolerance")


# ---------------------------------------------------------------------------
# Scaling schedule


@dataclass(frozen=True)
class ScalingSchedule:
    """Space/time scales at refinement level m.

    delta = p^-m is the grid mesh, jump_rate = (sigma/alpha) p^(mb) the
    number of walk steps per unit time, and tau = 1/jump_rate the step
    duration, so that delta^b / tau = sigma/alpha.
    """

    params: PrimeParams
    m: int
    alpha: float
    jump_rate: float
    tau: float
    delta: float

    def steps(self, t: float) -> int:
        """floor(t / tau), made consistent with the stored double tau."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        n = int(math.floor(t / self.tau))
        while (n + 1) * self.tau <= t:
            n += 1
        while n > 0 and n * self.tau > t:
            n -= 1
        return n

    def steps_to_cover(self, horizon: float) -> int:
        """ceil(horizon / tau): number of jumps needed to cover [0, horizon]."""
        n = self.steps(horizon)
        return n if n * self.tau == horizon else n + 1

    def embed(self, n: int, g: GroupElement) -> SpacetimePoint:
        return embed_spacetime(n, g, self.m, self.tau)


def time_step(params: PrimeParams, m: int) -> ScalingSchedule:
    """Build the level-m schedule and check delta^b/tau = sigma/alpha."""
    if m < 0:
        raise ValueError("level must be nonnegative")
    alpha = alpha_const(params)
    rate = (params.sigma / alpha) * params.p ** (m * params.b)
    tau = 1.0 / rate
    delta = float(params.p) ** -m
    if abs(delta**params.b / tau - params.sigma / alpha) > 1e-12 * (params.sigma / alpha):
        raise ArithmeticError("scale relation delta^b/tau = sigma/alpha violated")
    return ScalingSchedule(params, m, alpha, rate, tau, delta)


def prelimit_charfn(schedule: ScalingSchedule, law: GeneratorLaw, t: float, abs_y: float) -> float:
    """Characteristic multiplier of the level-m walk at time t and |y| = abs_y.

    (1 - alpha |y|^b p^-mb)^(steps by time t) for |y| <= p^m, 0 beyond the
    dual window.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    p, b, m = schedule.params.p, schedule.params.b, schedule.m
    if abs_y > float(p) ** m:
        return 0.0
    scaled = (abs_y * float(p) ** -m) ** b
    return (1.0 - law.alpha * scaled) ** schedule.steps(t)


def limit_charfn(params: PrimeParams, t: float, abs_y: float) -> float:
    """Limit multiplier exp(-sigma t |y|^b)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    return math.exp(-params.sigma * t * abs_y**params.b)


def limit_density_radial(
    params: PrimeParams, t: float, abs_exp: int | None, tol: float = 1e-14, rel: float = 1e-15
) -> float:
    """Limit transition density at any x with |x| = p^abs_exp (None: x = 0).

    Evaluates sum_k p^k (exp(-sigma t p^kb) - exp(-sigma t p^(k+1)b)) over
    k <= -abs_exp, truncated when the explicit tail bounds drop below tol and
    below rel * (partial sum), so tiny deep-shell densities keep relative
    accuracy as well.
    """
    if t <= 0:
        raise ValueError("density requires t > 0")
    p, b, s = params.p, params.b, params.sigma

    def term(k: int) -> float:
        # exp(-u) - exp(-v) = -exp(-u) expm1(u - v): stable for v - u tiny
        u = s * t * float(p) ** (k * b)
        v = s * t * float(p) ** ((k + 1) * b)
        return -float(p) ** k * math.exp(-u) * math.expm1(u - v)

    total = 0.0
    if abs_exp is None:
        # x = 0: the sum runs over all k; go upward until terms collapse
        k = 0
        while True:
            v = term(k)
            total += v
            if v < tol and v < rel * total and s * t * float(p) ** (k * b) > math.log(2.0 * p):
                break
            k += 1
            if k > _MAX_SERIES_TERMS:
                raise ArithmeticError("density series failed to meet tolerance")
        start_down = -1
    else:
        start_down = -abs_exp
    k = start_down
    while True:
        total += term(k)
        # exp(-u) - exp(-v) <= v - u bounds the downward tail geometrically
        tail = s * t * (p**b - 1.0) * float(p) ** ((k - 1) * (1.0 + b)) / (
            1.0 - float(p) ** -(1.0 + b)
        )
        if tail < tol and tail < rel * total:
            return total
        k -= 1
        if start_down - k > _MAX_SERIES_TERMS:
            raise ArithmeticError("density series failed to meet tolerance")


def limit_density(params: PrimeParams, t: float, x: PadicValue, tol: float = 1e-14) -> float:
    """Limit transition density at the exact point x (radial in |x|)."""
    if x.p != params.p:
        raise ValueError("mixed primes")
    return limit_density_radial(params, t, x.abs_exponent(), tol)


def ball_prob_limit(params: PrimeParams, t: float, radius_exp: int, tol: float = 1e-14) -> float:
    """P(limit process at time t lies in the ball |x| <= p^radius_exp).

    Exact series (1 - 1/p) sum_{l >= j} p^(j-l) exp(-sigma t p^-lb) with the
    remainder after l = L dominated by p^(j-L-1).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    p, b, s = params.p, params.b, params.sigma
    j = radius_exp
    total = 0.0
    l = j
    while True:
        total += (1.0 - 1.0 / p) * float(p) ** (j - l) * math.exp(-s * t * float(p) ** (-l * b))
        if float(p) ** (j - l - 1) < tol:
            return total
        l += 1
        if l - j > _MAX_SERIES_TERMS:
            raise ArithmeticError("ball series failed to meet tolerance")


# ---------------------------------------------------------------------------
# Moment bounds


def moment_bound_K(params: PrimeParams, r: float) -> float:
    """Constant K with E[|walk after n steps|^r] < K n^(r/b) for r in (0, b).

    K = 2 (1 + p^r alpha^(r/b) Gamma((b-r)/b)) padded by a fixed relative
    1e-6 to realize the strict inequality reproducibly.
    """
    b = params.b
    if not 0 < r < b:
        raise ValueError(f"moment order must lie in (0, b), got r={r}, b={b}")
    alpha = alpha_const(params)
    base = 2.0 * (1.0 + params.p**r * alpha ** (r / b) * math.gamma((b - r) / b))
    return base * (1.0 + 1e-6)


def walk_moment(law: GeneratorLaw, n: int, r: float, tol: float = 1e-12) -> float:
    """Exact E[|n-step walk|^r] for 0 < r < b, by shell summation.

    Uses sum over shells j of p^jr * shell_mass(j), reorganized through the
    ball coefficients into C * sum_l coef_l(n) (p^lr - p^-l) with
    C = (p-1) p^r / (p^(r+1) - 1), plus a geometric tail bound.
    """
    p, b, a = law.p, law.b, law.alpha
    if not 0 < r < b:
        raise ValueError(f"moment order must lie in (0, b), got r={r}, b={b}")
    if n < 0:
        raise ValueError("step count must be nonnegative")
    if n == 0:
        return 0.0
    c = (p - 1.0) * p**r / (p ** (r + 1.0) - 1.0)
    total = 0.0
    l = 1
    while True:
        total += _ball_coef(law, l, n) * (p ** (l * r) - float(p) ** -l)
        # coef_l(n) <= n alpha (1 - p^-b) p^-(l-1)b for every l
        tail = (
            n
            * a
            * (1.0 - p**-b)
            * p**b
            * p ** (-(l + 1) * (b - r))
            / (1.0 - p ** -(b - r))
        )
        if tail * c < tol * (abs(total) * c + 1.0):
            return c * total
        l += 1
        if l > _MAX_SERIES_TERMS:
            raise ArithmeticError("moment series failed to meet tolerance")


def embedded_moment(
    schedule: ScalingSchedule, law: GeneratorLaw, t: float, r: float, tol: float = 1e-12
) -> float:
    """Exact E[|embedded level-m process at time t|^r] = p^-rm E[|S_n|^r]."""
    n = schedule.steps(t)
    if n == 0:
        return 0.0
    return float(schedule.params.p) ** (-r * schedule.m) * walk_moment(law, n, r, tol)
