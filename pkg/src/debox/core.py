"""Shared numeric primitives: boxes, populations, statistics and seeded streams.

Everything downstream (benchmarks, corrections, engines, telemetry) is built
on the small value types defined here.  Conventions fixed once and for all:

* the box is closed -- a component sitting exactly on a bound is feasible;
* population variance uses the biased 1/N formula;
* random streams are hierarchical: a stream is fully determined by
  ``(seed, stream_path)``, and child streams obtained via :meth:`RngStream.split`
  are independent, so parallel sweeps are schedule-free.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Bounds",
    "Individual",
    "Population",
    "PopulationStats",
    "RngStream",
    "draw",
    "population_stats",
    "stable_key",
    "violation_profile",
]


@dataclass(frozen=True, eq=False)
class Bounds:
    """A box D = [lower_1, upper_1] x ... x [lower_n, upper_n]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lower, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or up.ndim != 1 or lo.shape != up.shape:
            raise ValueError("bounds must be 1-D vectors of equal length")
        if not np.all(lo < up):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @classmethod
    def symmetric(cls, half_width: float, dimension: int) -> "Bounds":
        """The box [-half_width, half_width]^dimension."""
        return cls(np.full(dimension, -float(half_width)), np.full(dimension, float(half_width)))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: np.ndarray) -> np.ndarray | bool:
        """Closed-box membership; reduces over the last (component) axis."""
        x = np.asarray(x, dtype=float)
        inside = np.logical_and(x >= self.lower, x <= self.upper).all(axis=-1)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)


@dataclass(eq=False)
class Individual:
    """A candidate solution.  fitness is +inf until the point has been
    evaluated inside the box (strict-box semantics treat everything else
    as infinitely bad)."""

    position: np.ndarray
    fitness: float = np.inf

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        self.fitness = float(self.fitness)


@dataclass(eq=False)
class Population:
    """Column-stacked population state.

    ``positions`` has shape (N, n) and ``fitness`` shape (N,).  The engines
    require N >= 4 (distinct indices for rand/1 mutation); the container
    itself allows any non-empty population so small hand-built fixtures work.
    """

    positions: np.ndarray
    fitness: np.ndarray
    generation: int = 0
    evaluations_used: int = 0

    def __post_init__(self) -> None:
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.fitness = np.asarray(self.fitness, dtype=float).ravel()
        if self.positions.shape[0] != self.fitness.size:
            raise ValueError("positions and fitness must have matching leading size")
        if self.generation < 0 or self.evaluations_used < 0:
            raise ValueError("generation and evaluations_used must be non-negative")

    @classmethod
    def from_members(
        cls, members: list[Individual], generation: int = 0, evaluations_used: int = 0
    ) -> "Population":
        if not members:
            raise ValueError("empty population")
        return cls(
            np.stack([m.position for m in members]),
            np.array([m.fitness for m in members]),
            generation,
            evaluations_used,
        )

    @property
    def members(self) -> list[Individual]:
        return [Individual(p.copy(), f) for p, f in zip(self.positions, self.fitness)]

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.fitness))


@dataclass(frozen=True, eq=False)
class PopulationStats:
    """Per-component mean and biased (1/N) variance of a population."""

    mean: np.ndarray
    variance: np.ndarray


def population_stats(pop: Population) -> PopulationStats:
    """Component-wise mean and 1/N variance of the population positions."""
    if pop.size == 0:
        raise ValueError("empty population")
    mean = pop.positions.mean(axis=0)
    variance = pop.positions.var(axis=0)  # ddof=0: biased population formula
    return PopulationStats(mean=mean, variance=variance)


def violation_profile(y: np.ndarray, bounds: Bounds) -> tuple[set[int], int]:
    """Indices of components of ``y`` lying outside the closed box, and their count."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != bounds.dimension:
        raise ValueError("dimension mismatch")
    mask = np.logical_or(y < bounds.lower, y > bounds.upper)
    idx = np.nonzero(mask)[0]
    return set(int(i) for i in idx), int(idx.size)


def stable_key(*parts) -> int:
    """64-bit key derived from a tuple of primitives.

    Stable across platforms and processes (unlike Python's salted hash), so
    instance generation and sweep seeding are reproducible everywhere.
    """
    text = "\x1f".join(repr(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


class RngStream:
    """Seeded random stream addressable by a hierarchical path.

    Two streams with the same ``(seed, stream_path)`` produce bit-identical
    draw sequences; :meth:`split` derives independent children, which makes
    the draw schedule independent of execution order across runs.
    """

    def __init__(self, seed: int, stream_path: tuple[int, ...] = ()) -> None:
        self.seed = int(seed)
        self.stream_path = tuple(int(k) for k in stream_path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream_path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_path={self.stream_path})"

    def split(self, *keys: int) -> "RngStream":
        """Independent child stream addressed by ``stream_path + keys``."""
        return RngStream(self.seed, self.stream_path + tuple(int(k) for k in keys))

    # -- draws ---------------------------------------------------------
    def random(self, size=None):
        """Unit draws from U[0, 1)."""
        return self._gen.random(size)

    def uniform(self, low, high, size=None):
        """U[low, high]; array arguments broadcast.  low == high is allowed
        (degenerate draw), low > high is not."""
        if np.any(np.asarray(high) < np.asarray(low)):
            raise ValueError("invalid distribution parameters: uniform needs high >= low")
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        if np.any(np.asarray(scale) <= 0):
            raise ValueError("invalid distribution parameters: normal scale must be > 0")
        return self._gen.normal(loc, scale, size)

    def cauchy(self, loc=0.0, scale=1.0, size=None):
        if np.any(np.asarray(scale) <= 0):
            raise ValueError("invalid distribution parameters: cauchy scale must be > 0")
        return loc + scale * self._gen.standard_cauchy(size)

    def beta(self, a, b, size=None):
        """Beta draws; numpy samples these exactly via gamma variates."""
        if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
            raise ValueError("invalid distribution parameters: beta shapes must be > 0")
        return self._gen.beta(a, b, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def choice(self, a, size=None, replace=True, p=None):
        return self._gen.choice(a, size=size, replace=replace, p=p)

    def permutation(self, x):
        return self._gen.permutation(x)


def draw(stream: RngStream, dist: tuple) -> float | np.ndarray:
    """Sample from a named distribution spec.

    ``dist`` is a tuple: ("uniform", u, v), ("normal", loc, scale),
    ("cauchy", loc, scale) or ("beta", a, b).
    """
    name, *params = dist
    if name == "uniform":
        u, v = params
        if not v > u:
            raise ValueError("invalid distribution parameters: uniform needs v > u")
        return stream.uniform(u, v)
    if name == "normal":
        loc, scale = params
        return stream.normal(loc, scale)
    if name == "cauchy":
        loc, scale = params
        return stream.cauchy(loc, scale)
    if name == "beta":
        a, b = params
        return stream.beta(a, b)
    raise ValueError(f"unknown distribution {name!r}")
