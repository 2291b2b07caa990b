"""Strict-box benchmark problems.

The suite mirrors the strict-box benchmarking style: every problem lives on
the box [-5, 5]^n, evaluating a point outside the closed box yields +inf
(death-penalty semantics) and, by default, does not consume evaluation
budget.  Instances are seeded purely by their coordinates, so the same
(function, instance, dimension, mode) always yields the same problem.

Two placement modes exist:

* ``SBOX``      -- the optimum is drawn from U[-5, 5]^n, i.e. it can land
                   arbitrarily close to the boundary;
* ``BBOB_LIKE`` -- the optimum is kept inside [-4, 4]^n, leaving a
                   boundary margin free of optima.

Functions flagged as exempt keep the [-4, 4]^n placement even in SBOX mode;
the linear slope always places its optimum on a corner of the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Bounds, RngStream, stable_key

__all__ = [
    "BenchmarkProblem",
    "CatalogEntry",
    "ExternalProblem",
    "catalog_ids",
    "create_problem",
    "evaluate_strict",
    "make_instance",
    "raw_linear_slope",
    "register_function",
    "register_problem",
    "registered_problem_ids",
]

MODES = ("SBOX", "BBOB_LIKE")
BOX_HALF_WIDTH = 5.0
INNER_HALF_WIDTH = 4.0
OFFSET_RANGE = 100.0  # f* ~ U[-100, 100]


# ---------------------------------------------------------------------------
# raw landscapes, all expressed on shifted coordinates z = x - x* with
# minimum value 0 at z = 0
# ---------------------------------------------------------------------------

def _raw_sphere(z: np.ndarray) -> float:
    return float(np.sum(z * z))


def _raw_separable_ellipsoid(z: np.ndarray) -> float:
    n = z.size
    exponents = 6.0 * np.arange(n) / (n - 1) if n > 1 else np.zeros(1)
    return float(np.sum(10.0**exponents * z * z))


def _raw_rastrigin(z: np.ndarray) -> float:
    n = z.size
    return float(10.0 * (n - np.sum(np.cos(2.0 * np.pi * z))) + np.sum(z * z))


def _raw_rosenbrock(z: np.ndarray) -> float:
    # classic Rosenbrock has its optimum at the all-ones vector; evaluating
    # on w = z + 1 moves that optimum to z = 0 so the stored x* stays exact
    w = z + 1.0
    return float(np.sum(100.0 * (w[:-1] ** 2 - w[1:]) ** 2 + (w[:-1] - 1.0) ** 2))


def _raw_different_powers(z: np.ndarray) -> float:
    n = z.size
    exponents = 2.0 + (4.0 * np.arange(n) / (n - 1) if n > 1 else np.zeros(1))
    return float(np.sum(np.abs(z) ** exponents))


def raw_linear_slope(x: np.ndarray, x_star: np.ndarray, bounds: Bounds | None = None) -> float:
    """Linear landscape with its optimum pinned on a corner of the box.

    f(x) = sum_i w_i * (x*_i - x_i) * sign(x*_i) with w_i = 10^(i/(n-1)),
    which is 0 at the corner x* and strictly positive elsewhere in the box.
    """
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    if bounds is None:
        bounds = Bounds.symmetric(BOX_HALF_WIDTH, x_star.size)
    on_corner = np.logical_or(x_star == bounds.lower, x_star == bounds.upper)
    if not np.all(on_corner):
        raise ValueError("linear slope requires corner optimum")
    n = x_star.size
    weights = 10.0 ** (np.arange(n) / (n - 1)) if n > 1 else np.ones(1)
    return float(np.sum(weights * (x_star - x) * np.sign(x_star)))


@dataclass(frozen=True)
class CatalogEntry:
    raw: Callable[[np.ndarray], float]
    exempt_from_boundary_shift: bool = False
    corner_optimum: bool = False


_CATALOG: dict[str, CatalogEntry] = {
    "sphere": CatalogEntry(_raw_sphere),
    "separable_ellipsoid": CatalogEntry(_raw_separable_ellipsoid),
    "rastrigin": CatalogEntry(_raw_rastrigin),
    "linear_slope": CatalogEntry(raw_linear_slope, exempt_from_boundary_shift=True, corner_optimum=True),
    "rosenbrock": CatalogEntry(_raw_rosenbrock),
    "different_powers": CatalogEntry(_raw_different_powers),
}


def catalog_ids() -> list[str]:
    return sorted(_CATALOG)


def register_function(function_id: str, raw: Callable[[np.ndarray], float], exempt: bool = False) -> None:
    """Add a raw landscape (minimum 0 at z = 0) to the instance catalogue."""
    _CATALOG[function_id] = CatalogEntry(raw, exempt_from_boundary_shift=exempt)


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class BenchmarkProblem:
    """A seeded instance of a catalogue function under strict-box semantics.

    The evaluation counters are the only mutable state; a problem instance
    is owned by a single run.
    """

    function_id: str
    instance_id: int
    dimension: int
    bounds: Bounds
    optimum_location: np.ndarray
    optimum_value: float
    mode: str = "SBOX"
    count_infeasible_evals: bool = False
    feasible_evaluations: int = field(default=0, compare=False)
    infeasible_evaluations: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self.optimum_location = np.asarray(self.optimum_location, dtype=float)
        if self.optimum_location.size != self.dimension:
            raise ValueError("optimum_location length must equal dimension")
        if self.function_id not in _CATALOG:
            raise ValueError(f"unknown function {self.function_id!r}")

    @property
    def budget_consumed(self) -> int:
        """Evaluations charged against the run budget."""
        if self.count_infeasible_evals:
            return self.feasible_evaluations + self.infeasible_evaluations
        return self.feasible_evaluations

    def reset_counters(self) -> None:
        self.feasible_evaluations = 0
        self.infeasible_evaluations = 0

    def evaluate(self, x: np.ndarray) -> float:
        """Strict-box evaluation: +inf outside the closed box.

        Infeasible calls never touch the raw landscape; they count against
        the budget only when ``count_infeasible_evals`` is set.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError("dimension mismatch")
        if not self.bounds.contains(x):
            self.infeasible_evaluations += 1
            return np.inf
        self.feasible_evaluations += 1
        entry = _CATALOG[self.function_id]
        if entry.corner_optimum:
            return entry.raw(x, self.optimum_location, self.bounds) + self.optimum_value
        return entry.raw(x - self.optimum_location) + self.optimum_value

    def describe(self) -> dict:
        return {
            "function": self.function_id,
            "instance": self.instance_id,
            "dimension": self.dimension,
            "mode": self.mode,
            "optimum_value": self.optimum_value,
        }


def make_instance(
    function_id: str,
    instance_id: int,
    dimension: int,
    mode: str = "SBOX",
    count_infeasible_evals: bool = False,
) -> BenchmarkProblem:
    """Instantiate a catalogue function; a pure function of its arguments."""
    if function_id not in _CATALOG:
        raise ValueError(f"unknown function {function_id!r}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    if dimension < 2:
        raise ValueError("dimension must be >= 2")
    entry = _CATALOG[function_id]
    bounds = Bounds.symmetric(BOX_HALF_WIDTH, dimension)
    stream = RngStream(stable_key("instance", function_id, instance_id, dimension, mode))
    offset = stream.uniform(-OFFSET_RANGE, OFFSET_RANGE)
    if entry.corner_optimum:
        corner_sign = np.where(stream.random(dimension) < 0.5, -1.0, 1.0)
        x_star = corner_sign * BOX_HALF_WIDTH
    else:
        half = INNER_HALF_WIDTH if (mode == "BBOB_LIKE" or entry.exempt_from_boundary_shift) else BOX_HALF_WIDTH
        x_star = stream.uniform(-half, half, dimension)
    return BenchmarkProblem(
        function_id=function_id,
        instance_id=instance_id,
        dimension=dimension,
        bounds=bounds,
        optimum_location=x_star,
        optimum_value=float(offset),
        mode=mode,
        count_infeasible_evals=count_infeasible_evals,
    )


def evaluate_strict(problem, x: np.ndarray) -> float:
    """Strict-box evaluation of any problem object (catalogue or plugin)."""
    return problem.evaluate(x)


# ---------------------------------------------------------------------------
# plugin problems
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ExternalProblem:
    """Adapter giving strict-box semantics to a user-supplied objective.

    Only (dimension, bounds, objective) are required; the optimum value is
    optional -- without it a run cannot report an error, and behaviour
    classification degrades to the variance-only form.
    """

    name: str
    dimension: int
    bounds: Bounds
    objective: Callable[[np.ndarray], float]
    optimum_value: float | None = None
    count_infeasible_evals: bool = False
    feasible_evaluations: int = 0
    infeasible_evaluations: int = 0

    function_id: str = field(init=False)
    instance_id: int = 0
    mode: str = "external"

    def __post_init__(self) -> None:
        self.function_id = self.name

    @property
    def budget_consumed(self) -> int:
        if self.count_infeasible_evals:
            return self.feasible_evaluations + self.infeasible_evaluations
        return self.feasible_evaluations

    def reset_counters(self) -> None:
        self.feasible_evaluations = 0
        self.infeasible_evaluations = 0

    def evaluate(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError("dimension mismatch")
        if not self.bounds.contains(x):
            self.infeasible_evaluations += 1
            return np.inf
        self.feasible_evaluations += 1
        return float(self.objective(x))

    def describe(self) -> dict:
        return {
            "function": self.name,
            "instance": self.instance_id,
            "dimension": self.dimension,
            "mode": self.mode,
            "optimum_value": self.optimum_value,
        }


_PROBLEM_REGISTRY: dict[str, Callable[..., object]] = {}


def register_problem(name: str, factory: Callable[..., object]) -> None:
    """Register an external problem factory under ``name``.

    The factory is called as ``factory(instance_id, dimension)`` and must
    return an object with the problem surface (dimension, bounds, evaluate,
    optional optimum_value, counters).
    """
    _PROBLEM_REGISTRY[name] = factory


def registered_problem_ids() -> list[str]:
    return sorted(_PROBLEM_REGISTRY)


def create_problem(
    function_id: str,
    instance_id: int,
    dimension: int,
    mode: str = "SBOX",
    count_infeasible_evals: bool = False,
):
    """Resolve a function id against the catalogue, then the plugin registry."""
    if function_id in _CATALOG:
        return make_instance(function_id, instance_id, dimension, mode, count_infeasible_evals)
    if function_id in _PROBLEM_REGISTRY:
        problem = _PROBLEM_REGISTRY[function_id](instance_id, dimension)
        problem.count_infeasible_evals = count_infeasible_evals
        return problem
    raise ValueError(f"unknown function {function_id!r}")
