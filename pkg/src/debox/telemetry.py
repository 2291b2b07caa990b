"""Per-generation measurement and end-of-run behaviour classification.

A generation record captures the bound-violation pressure of the raw trial
vectors (measured BEFORE any correction is applied) together with the state
of the population after selection.  At the end of a run the final error and
population variance place the run into one of four behaviour classes:

    GB  solution found and population converged
    SF  solution found, population still diverse
    PC  population converged away from the solution (premature convergence)
    BB  neither converged nor solved

Trajectories are persisted as plain CSV (one row per generation, columns
named exactly after the record fields) and runs are summarised as JSON.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, fields

import numpy as np

from .core import Population, population_stats

__all__ = [
    "BehaviourClass",
    "ClassifierConfig",
    "GenerationRecord",
    "classify",
    "format_float",
    "read_run_summary",
    "read_trajectory_csv",
    "record_generation",
    "records_to_columns",
    "write_run_summary",
    "write_trajectory_csv",
]


class BehaviourClass(enum.Enum):
    GB = "GB"
    SF = "SF"
    PC = "PC"
    BB = "BB"


@dataclass(frozen=True)
class ClassifierConfig:
    error_threshold: float = 1e-6
    variance_threshold: float = 1e-8

    def __post_init__(self) -> None:
        if self.error_threshold <= 0 or self.variance_threshold <= 0:
            raise ValueError("classifier thresholds must be strictly positive")


def classify(
    final_error: float,
    final_max_component_variance: float,
    cfg: ClassifierConfig = ClassifierConfig(),
) -> BehaviourClass:
    """Map (final error, final per-component variance) to a behaviour class.

    The variance threshold is applied to the maximum over components, i.e.
    "variance per component is small" means every component is small.
    """
    solved = final_error < cfg.error_threshold
    converged = final_max_component_variance < cfg.variance_threshold
    if solved:
        return BehaviourClass.GB if converged else BehaviourClass.SF
    return BehaviourClass.PC if converged else BehaviourClass.BB


@dataclass
class GenerationRecord:
    generation: int
    feasible_evaluations: int
    population_size: int
    best_error: float
    infeasible_component_ratio: float
    infeasible_individual_ratio: float
    max_component_variance: float
    mean_component_variance: float
    corrections_applied: int
    adaptive_probabilities: list[float] | None = None


def record_generation(
    generation: int,
    trials: np.ndarray,
    population: Population,
    problem,
    corrections_applied: int = 0,
    adaptive_probabilities=None,
) -> GenerationRecord:
    """Build the telemetry record for one completed generation.

    ``trials`` holds the raw (pre-correction) trial vectors of the
    generation, shape (M, n); the violation ratios are computed on them.
    The population is the post-selection state.
    """
    trials = np.atleast_2d(np.asarray(trials, dtype=float))
    m = trials.shape[0] if trials.size else 0
    n = population.dimension
    if m:
        outside = np.logical_or(trials < problem.bounds.lower, trials > problem.bounds.upper)
        component_ratio = float(outside.sum()) / (m * n)
        individual_ratio = float(outside.any(axis=1).sum()) / m
    else:
        component_ratio = 0.0
        individual_ratio = 0.0
    stats = population_stats(population)
    best_fitness = float(population.fitness.min())
    f_star = getattr(problem, "optimum_value", None)
    best_error = max(best_fitness - f_star, 0.0) if f_star is not None else np.nan
    probs = None if adaptive_probabilities is None else [float(p) for p in adaptive_probabilities]
    return GenerationRecord(
        generation=generation,
        feasible_evaluations=int(problem.feasible_evaluations),
        population_size=population.size,
        best_error=best_error,
        infeasible_component_ratio=component_ratio,
        infeasible_individual_ratio=individual_ratio,
        max_component_variance=float(stats.variance.max()),
        mean_component_variance=float(stats.variance.mean()),
        corrections_applied=int(corrections_applied),
        adaptive_probabilities=probs,
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """17 significant digits: round-trip exact for IEEE doubles."""
    return format(float(x), ".17g")


_COLUMNS = [f.name for f in fields(GenerationRecord)]
_INT_COLUMNS = {"generation", "feasible_evaluations", "population_size", "corrections_applied"}


def _cell(name: str, value) -> str:
    if name == "adaptive_probabilities":
        return "" if value is None else ";".join(format_float(p) for p in value)
    if name in _INT_COLUMNS:
        return str(int(value))
    return format_float(value)


def write_trajectory_csv(records: list[GenerationRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_COLUMNS)
        for rec in records:
            writer.writerow([_cell(name, getattr(rec, name)) for name in _COLUMNS])


def read_trajectory_csv(path) -> dict[str, list]:
    """Read a trajectory back as a mapping column name -> list of values."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        columns: dict[str, list] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name, raw in row.items():
                if name == "adaptive_probabilities":
                    value = [float(p) for p in raw.split(";")] if raw else None
                elif name in _INT_COLUMNS:
                    value = int(raw)
                else:
                    value = float(raw)
                columns[name].append(value)
    return columns


def records_to_columns(records: list[GenerationRecord]) -> dict[str, list]:
    return {name: [getattr(rec, name) for rec in records] for name in _COLUMNS}


def write_run_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_run_summary(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
