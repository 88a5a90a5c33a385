"""Seeded sampling of the primitive walk and its embedded step paths.

The generator draw is an inverse transform: the shell index R is geometric
with success probability 1 - p^-b (exactly the shell law), the leading digit
is uniform on {1, ..., p-1} and the remaining R-1 digits uniform on
{0, ..., p-1}, which is uniform on the shell.

Randomness comes from numpy's Philox bit generator, a counter-based 4x64
generator keyed here by (seed, stream): identical keys reproduce identical
output on every platform, distinct stream ids give independent streams.
That generator choice is part of the package contract and is fixed per
release.

Two frontends share the construction: an object-level sampler producing
exact `PadicValue` step paths, and vectorized bulk kernels for Monte Carlo
estimators that encode level-0 group elements as base-p integers (digit at
index -k at place value p^(cap-k)), under which group addition is uint64
addition modulo p^cap.  The two consume the stream differently but realize
the same law; each is deterministic per (seed, stream).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .padic import GroupElement, PadicValue, grid_embed, group_project, value_to_string
from .law import GeneratorLaw, ScalingSchedule

__all__ = [
    "RngState",
    "SampleCapError",
    "StepPath",
    "sample_generator",
    "sample_walk",
    "sample_path",
    "path_eval",
    "bulk_digit_cap",
    "encode_group",
    "BulkWalkSampler",
]

DEFAULT_MAX_SHELL = 64
_MAX_REDRAWS = 1000
DEFAULT_STEP_CAP = 10**7


class SampleCapError(RuntimeError):
    """A sampling resource cap was exceeded (shell redraws or step count)."""


@dataclass(frozen=True)
class RngState:
    """Reproducible stream id: Philox keyed by (seed, stream)."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed % 2**64, self.stream % 2**64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, k: int) -> "RngState":
        """Derived worker stream; distinct k gives independent output."""
        return RngState(self.seed, self.stream + k)


def _as_generator(rng: RngState | np.random.Generator) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngState) else rng


def _geometric_radius(u: float, p: int, b: float) -> int:
    """Inverse transform for P(R = i) = (1 - p^-b) p^-b(i-1), i >= 1."""
    # P(R > i) = p^-ib; u in [0, 1) so 1-u in (0, 1]
    return 1 + int(math.floor(math.log(1.0 - u) / math.log(p**-b)))


def sample_generator(
    rng: RngState | np.random.Generator,
    law: GeneratorLaw,
    max_shell: int = DEFAULT_MAX_SHELL,
) -> GroupElement:
    """One jump: a level-0 group element, never the identity.

    Radii beyond max_shell (probability p^-b*max_shell) are redrawn; more
    than 1000 consecutive redraws raise SampleCapError.
    """
    gen = _as_generator(rng)
    p = law.p
    for _ in range(_MAX_REDRAWS):
        radius = _geometric_radius(float(gen.random()), p, law.b)
        if radius > max_shell:
            continue
        high = 1 if p == 2 else int(gen.integers(1, p))
        digits = {-radius: high}
        if radius > 1:
            lower = gen.integers(0, p, size=radius - 1)
            for k, d in enumerate(lower, start=1):
                if d:
                    digits[-k] = int(d)
        return GroupElement.from_digits(p, 0, digits)
    raise SampleCapError(f"{_MAX_REDRAWS} consecutive draws beyond shell {max_shell}")


def sample_walk(
    rng: RngState | np.random.Generator,
    law: GeneratorLaw,
    n: int,
    max_shell: int = DEFAULT_MAX_SHELL,
) -> list[GroupElement]:
    """Partial sums S_0 = 0, S_1, ..., S_n of independent jumps."""
    if n < 0:
        raise ValueError("step count must be nonnegative")
    gen = _as_generator(rng)
    state = GroupElement.identity(law.p, 0)
    states = [state]
    for _ in range(n):
        state = state + sample_generator(gen, law, max_shell)
        states.append(state)
    return states


@dataclass(frozen=True)
class StepPath:
    """Cadlag step path: state on [n*tau, (n+1)*tau) is states[n].

    states[0] is the zero value, every state lies on the level-m grid, and
    the path can only change value at exact multiples of tau.
    """

    m: int
    tau: float
    horizon: float
    states: tuple[PadicValue, ...]

    def change_points(self) -> list[int]:
        """Indices n >= 1 where the path jumps (value changes at n*tau)."""
        return [
            n for n in range(1, len(self.states)) if self.states[n] != self.states[n - 1]
        ]

    def to_jsonl(self) -> str:
        return json.dumps(
            {
                "m": self.m,
                "tau": self.tau,
                "horizon": self.horizon,
                "states": [value_to_string(x) for x in self.states],
            }
        )

    def csv_rows(self) -> list[dict]:
        return [
            {
                "step": n,
                "time": n * self.tau,
                "mantissa": x.mantissa,
                "valuation": x.valuation,
            }
            for n, x in enumerate(self.states)
        ]


def sample_path(
    rng: RngState | np.random.Generator,
    schedule: ScalingSchedule,
    law: GeneratorLaw,
    horizon: float,
    max_shell: int = DEFAULT_MAX_SHELL,
    step_cap: int = DEFAULT_STEP_CAP,
) -> StepPath:
    """Embedded level-m path on [0, horizon]: states are exact grid values."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    n_steps = schedule.steps_to_cover(horizon)
    if n_steps > step_cap:
        raise SampleCapError(f"{n_steps} steps exceed the cap {step_cap}")
    gen = _as_generator(rng)
    walk = sample_walk(gen, law, n_steps, max_shell)
    states = tuple(grid_embed(g, schedule.m) for g in walk)
    return StepPath(schedule.m, schedule.tau, horizon, states)


def path_eval(path: StepPath, t: float) -> PadicValue:
    """Right-continuous evaluation: the state on [n*tau, (n+1)*tau)."""
    if t < 0 or t > path.horizon:
        raise ValueError(f"time {t} outside [0, {path.horizon}]")
    n = int(math.floor(t / path.tau))
    while (n + 1) * path.tau <= t:
        n += 1
    while n > 0 and n * path.tau > t:
        n -= 1
    return path.states[n]


# ---------------------------------------------------------------------------
# Vectorized bulk kernels


def bulk_digit_cap(p: int) -> int:
    """Largest digit count K with p^K <= 2^62 (so sums stay inside uint64)."""
    if p == 2:
        return 64
    k = int(math.floor(62 * math.log(2) / math.log(p)))
    while p ** (k + 1) <= 2**62:
        k += 1
    return k


def encode_group(g: GroupElement, cap: int) -> int:
    """Integer code of a level-0 element: digit at -k scaled by p^(cap-k)."""
    if g.level != 0:
        raise ValueError("bulk encoding works on level-0 elements")
    code = 0
    for k, d in g.digits:
        if k < -cap:
            raise ValueError(f"digit index {k} below bulk cap {cap}")
        code += d * g.p ** (cap + k)
    return code


class BulkWalkSampler:
    """Vectorized sampler of many independent primitive walks.

    Walk states are held as encoded uint64 codes; `advance` pushes every
    path forward by a number of jumps, `abs_exponent` decodes |state| and
    differences of snapshots give exact increment laws.
    """

    def __init__(
        self,
        rng: RngState | np.random.Generator,
        law: GeneratorLaw,
        n_paths: int,
        max_shell: int | None = None,
    ):
        self.gen = _as_generator(rng)
        self.law = law
        self.p = law.p
        self.cap = bulk_digit_cap(law.p)
        if max_shell is not None:
            self.cap = min(self.cap, max_shell)
        self.n_paths = n_paths
        self.modulus = self.p**self.cap  # == 2^64 wraparound when p == 2
        self._wraps = self.p == 2 and self.cap == 64
        self.state = np.zeros(n_paths, dtype=np.uint64)
        if self.p != 2:
            self._powers = np.array([self.p**i for i in range(self.cap + 1)], dtype=np.uint64)

    def _draw_radii(self) -> np.ndarray:
        q = self.p**-self.law.b
        u = self.gen.random(self.n_paths)
        radii = 1 + np.floor(np.log1p(-u) / math.log(q)).astype(np.int64)
        for _ in range(_MAX_REDRAWS):
            over = radii > self.cap
            if not over.any():
                return radii
            u = self.gen.random(int(over.sum()))
            radii[over] = 1 + np.floor(np.log1p(-u) / math.log(q)).astype(np.int64)
        raise SampleCapError(f"{_MAX_REDRAWS} redraw rounds beyond shell {self.cap}")

    def _draw_codes(self) -> np.ndarray:
        radii = self._draw_radii()
        if self.p == 2:
            low = (self.cap - radii).astype(np.uint64)
            bits = self.gen.integers(0, 2**64, size=self.n_paths, dtype=np.uint64)
            kept = ((bits >> low) & ~np.uint64(1)) << low
            return kept | (np.uint64(1) << low)
        high = self.gen.integers(1, self.p, size=self.n_paths).astype(np.uint64)
        block_bound = self._powers[radii - 1]
        block = self.gen.integers(0, block_bound, size=self.n_paths, dtype=np.uint64)
        # leading digit a(-R) sits at place value p^(cap-R), the R-1 free
        # digits above it
        return (block * np.uint64(self.p) + high) * self._powers[self.cap - radii]

    def advance(self, n_steps: int) -> None:
        for _ in range(n_steps):
            if self._wraps:
                self.state = self.state + self._draw_codes()
            else:
                self.state = (self.state + self._draw_codes()) % np.uint64(self.modulus)

    def snapshot(self) -> np.ndarray:
        return self.state.copy()

    def diff(self, later: np.ndarray, earlier: np.ndarray) -> np.ndarray:
        """Codes of the group differences between two snapshots."""
        if self._wraps:
            return later - earlier
        return (later + (np.uint64(self.modulus) - earlier)) % np.uint64(self.modulus)

    def abs_exponent(self, codes: np.ndarray) -> np.ndarray:
        """Shell exponents i with |g| = p^i; 0 marks the identity."""
        out = np.zeros(codes.shape, dtype=np.int64)
        nonzero = codes != 0
        if self.p == 2:
            lsb = codes[nonzero] & (~codes[nonzero] + np.uint64(1))
            val = np.rint(np.log2(lsb.astype(np.float64))).astype(np.int64)
            out[nonzero] = self.cap - val
            return out
        rem = codes.copy()
        val = np.zeros(codes.shape, dtype=np.int64)
        active = nonzero & (rem % self.p == 0)
        while active.any():
            rem[active] //= np.uint64(self.p)
            val[active] += 1
            active = nonzero & (rem % self.p == 0) & (val < self.cap)
        out[nonzero] = self.cap - val[nonzero]
        return out
