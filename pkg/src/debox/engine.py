"""DE/rand/1/bin and L-SHADE generational loops with BCHM repair.

Both engines share the same trial lifecycle: mutate, binomially cross over,
measure bound violations (before any repair), repair infeasible trials with
the configured BCHM, evaluate under strict-box semantics and select greedily
(the trial replaces its target on ties).  Dismissed trials are never
evaluated; the target survives implicitly because the trial's fitness is
treated as +inf.

L-SHADE adds success-history parameter adaptation (memory of size H storing
weighted Lehmer means of successful F and weighted arithmetic means of
successful CR), current-to-pbest/1 mutation with an external archive of
defeated parents, and linear population size reduction from 18*n down to 4
over the evaluation budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import telemetry
from .bchm import (
    AdaptiveState,
    CorrectionContext,
    adaptive_correct,
    adaptive_update,
    correct,
    METHOD_IDS,
)
from .core import Population, PopulationStats, RngStream, population_stats

__all__ = [
    "ClassicDEParams",
    "RunConfig",
    "RunResult",
    "ShadeParams",
    "ShadeState",
    "binomial_crossover",
    "classic_generation",
    "lehmer_mean",
    "lpsr_target_size",
    "lshade_generation",
    "rand1_mutant",
    "run",
    "sample_crossover_rate",
    "sample_scale_factor",
]


@dataclass
class ClassicDEParams:
    """Parameters of the original DE/rand/1/bin framework."""

    population_size: int = 50
    scale_factor: float = 0.5
    crossover_rate: float = 0.5

    def validation_errors(self) -> list[str]:
        errors = []
        if self.population_size < 4:
            errors.append("classic.population_size (must be >= 4)")
        if not 0.0 <= self.scale_factor <= 2.0:
            errors.append("classic.scale_factor (must be in [0, 2])")
        if not 0.0 <= self.crossover_rate < 1.0:
            errors.append("classic.crossover_rate (must be in [0, 1))")
        return errors


@dataclass
class ShadeParams:
    """Static L-SHADE configuration; the initial population is 18*n unless set."""

    memory_size: int = 6
    n_init: int | None = None
    n_min: int = 4
    p_max: float = 0.2
    reduction_enabled: bool = True
    archive_capacity: int | None = None  # None: capacity tracks the population size

    def validation_errors(self) -> list[str]:
        errors = []
        if self.memory_size < 1:
            errors.append("shade.memory_size (must be >= 1)")
        if self.n_init is not None and self.n_init < 4:
            errors.append("shade.n_init (must be >= 4)")
        if self.n_min < 4:
            errors.append("shade.n_min (must be >= 4)")
        if not 0.0 < self.p_max <= 1.0:
            errors.append("shade.p_max (must be in (0, 1])")
        return errors


@dataclass(eq=False)
class ShadeState:
    """Mutable success-history state carried across L-SHADE generations."""

    memory_f: np.ndarray
    memory_cr: np.ndarray  # NaN entries mark the terminal CR value
    memory_index: int
    archive: list[np.ndarray]
    archive_capacity: int | None
    n_init: int
    n_min: int
    p_max: float
    n_fe_max: int
    reduction_enabled: bool

    @classmethod
    def create(cls, dimension: int, budget: int, params: ShadeParams) -> "ShadeState":
        n_init = params.n_init if params.n_init is not None else 18 * dimension
        return cls(
            memory_f=np.full(params.memory_size, 0.5),
            memory_cr=np.full(params.memory_size, 0.5),
            memory_index=0,
            archive=[],
            archive_capacity=params.archive_capacity,
            n_init=n_init,
            n_min=params.n_min,
            p_max=params.p_max,
            n_fe_max=budget,
            reduction_enabled=params.reduction_enabled,
        )

    def current_archive_capacity(self, population_size: int) -> int:
        return self.archive_capacity if self.archive_capacity is not None else population_size


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def rand1_mutant(x_r1: np.ndarray, x_r2: np.ndarray, x_r3: np.ndarray, f: float) -> np.ndarray:
    """rand/1 mutation: base vector plus one scaled difference."""
    return x_r1 + f * (x_r2 - x_r3)


def binomial_crossover(rng: RngStream, target: np.ndarray, mutant: np.ndarray, cr: float) -> np.ndarray:
    """Per-component exchange with probability cr; one component (i_rand)
    always comes from the mutant.  Draw order: i_rand, then the n unit draws."""
    n = target.size
    i_rand = int(rng.integers(n))
    mask = np.asarray(rng.random(n)) < cr
    mask[i_rand] = True
    return np.where(mask, mutant, target)


def sample_scale_factor(rng: RngStream, loc: float, scale: float = 0.1) -> float:
    """Cauchy(loc, scale) draw, redrawn while <= 0 and truncated at 1."""
    while True:
        f = float(rng.cauchy(loc, scale))
        if f > 0.0:
            return min(f, 1.0)


def sample_crossover_rate(rng: RngStream, memory_cr: float, scale: float = 0.1) -> float:
    """Normal(M_CR, scale) clipped to [0, 1]; the terminal marker (NaN) pins CR to 0."""
    if np.isnan(memory_cr):
        return 0.0
    return float(np.clip(rng.normal(memory_cr, scale), 0.0, 1.0))


def lehmer_mean(values, weights) -> float:
    """Weighted Lehmer mean sum(w v^2)/sum(w v) used for the F memory."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return float(np.sum(weights * values**2) / np.sum(weights * values))


def lpsr_target_size(state: ShadeState, evaluations_used: int) -> int:
    """Linear population size schedule from n_init down to n_min over the budget."""
    frac = min(evaluations_used / state.n_fe_max, 1.0)
    target = round(state.n_init + (state.n_min - state.n_init) * frac)
    return int(min(max(target, state.n_min), state.n_init))


def _pick_distinct(rng: RngStream, limit: int, forbidden: set[int]) -> int:
    while True:
        k = int(rng.integers(limit))
        if k not in forbidden:
            return k


class _TrialRepair:
    """Shared repair/evaluation path for one generation."""

    def __init__(self, bchm: str, problem, rng: RngStream, adaptive_state: AdaptiveState | None,
                 beta_epsilon: float, stats, population_mean):
        self.bchm = bchm
        self.problem = problem
        self.rng = rng
        self.adaptive_state = adaptive_state
        self.beta_epsilon = beta_epsilon
        self.stats = stats
        self.population_mean = population_mean
        self.infeasible_components = 0
        self.infeasible_trials = 0
        self.corrections = 0

    def resolve(self, trial: np.ndarray, target: np.ndarray, pbest: np.ndarray):
        """Repair and evaluate one trial.

        Returns (evaluated vector or None when dismissed, fitness,
        adaptive pool index or None).
        """
        bounds = self.problem.bounds
        outside = np.logical_or(trial < bounds.lower, trial > bounds.upper)
        n_out = int(outside.sum())
        if n_out == 0:
            return trial, self.problem.evaluate(trial), None
        self.infeasible_trials += 1
        self.infeasible_components += n_out
        self.corrections += 1
        ctx = CorrectionContext(
            bounds=bounds,
            target=target,
            pbest=pbest,
            population_mean=self.population_mean,
            stats=self.stats,
            beta_epsilon=self.beta_epsilon,
        )
        pool_index = None
        if self.adaptive_state is not None:
            outcome, pool_index = adaptive_correct(trial, ctx, self.rng, self.adaptive_state)
        else:
            outcome = correct(self.bchm, trial, ctx, self.rng)
        if outcome.dismissed:
            # never evaluated; +inf fitness (counts against budget only when
            # infeasible evaluations are configured to be charged)
            return None, self.problem.evaluate(trial), None
        return outcome.vector, self.problem.evaluate(outcome.vector), pool_index


# ---------------------------------------------------------------------------
# generations
# ---------------------------------------------------------------------------

def classic_generation(
    pop: Population,
    params: ClassicDEParams,
    bchm: str,
    problem,
    rng: RngStream,
    records: list,
    adaptive_state: AdaptiveState | None = None,
    budget: int | None = None,
    beta_epsilon: float = 0.1,
) -> Population:
    """One synchronous DE/rand/1/bin generation.

    If the budget runs out mid-generation the remaining targets carry over
    unchanged.  Appends the generation's telemetry record to ``records``.
    """
    n_pop = pop.size
    if n_pop < 4:
        raise ValueError("classic DE needs a population of at least 4")
    positions, fitness = pop.positions, pop.fitness
    stats = population_stats(pop)
    best = positions[pop.best_index]
    repair = _TrialRepair(bchm, problem, rng, adaptive_state, beta_epsilon, stats, stats.mean)

    new_positions = positions.copy()
    new_fitness = fitness.copy()
    raw_trials = []
    for j in range(n_pop):
        if budget is not None and problem.budget_consumed >= budget:
            break
        r1 = _pick_distinct(rng, n_pop, {j})
        r2 = _pick_distinct(rng, n_pop, {j, r1})
        r3 = _pick_distinct(rng, n_pop, {j, r1, r2})
        mutant = rand1_mutant(positions[r1], positions[r2], positions[r3], params.scale_factor)
        trial = binomial_crossover(rng, positions[j], mutant, params.crossover_rate)
        raw_trials.append(trial)
        evaluated, f_trial, pool_index = repair.resolve(trial, positions[j], best)
        if f_trial <= fitness[j]:
            if evaluated is not None:
                new_positions[j] = evaluated
                new_fitness[j] = f_trial
            if pool_index is not None:
                adaptive_state.successes[pool_index] += 1

    next_pop = Population(
        new_positions,
        new_fitness,
        generation=pop.generation + 1,
        evaluations_used=problem.budget_consumed,
    )
    trials = np.asarray(raw_trials) if raw_trials else np.empty((0, pop.dimension))
    records.append(
        telemetry.record_generation(
            next_pop.generation,
            trials,
            next_pop,
            problem,
            corrections_applied=repair.corrections,
            adaptive_probabilities=None if adaptive_state is None else adaptive_state.probabilities,
        )
    )
    return next_pop


def lshade_generation(
    pop: Population,
    state: ShadeState,
    bchm: str,
    problem,
    rng: RngStream,
    records: list,
    adaptive_state: AdaptiveState | None = None,
    budget: int | None = None,
    beta_epsilon: float = 0.1,
) -> tuple[Population, ShadeState]:
    """One L-SHADE generation: current-to-pbest/1/bin with memories, archive
    and (optionally) linear population size reduction."""
    n_pop = pop.size
    positions, fitness = pop.positions, pop.fitness
    order = np.argsort(fitness, kind="stable")
    stats = population_stats(pop)
    repair = _TrialRepair(bchm, problem, rng, adaptive_state, beta_epsilon, stats, stats.mean)
    h = state.memory_f.size

    new_positions = positions.copy()
    new_fitness = fitness.copy()
    raw_trials = []
    successful_f: list[float] = []
    successful_cr: list[float] = []
    improvements: list[float] = []
    for j in range(n_pop):
        if budget is not None and problem.budget_consumed >= budget:
            break
        slot = int(rng.integers(h))
        f_j = sample_scale_factor(rng, float(state.memory_f[slot]))
        cr_j = sample_crossover_rate(rng, float(state.memory_cr[slot]))
        p_lo = 2.0 / n_pop
        p_j = float(rng.uniform(p_lo, max(p_lo, state.p_max)))
        k_best = max(2, math.ceil(p_j * n_pop))
        pbest = positions[order[int(rng.integers(k_best))]]
        r1 = _pick_distinct(rng, n_pop, {j})
        r2 = _pick_distinct(rng, n_pop + len(state.archive), {j, r1})
        donor = positions[r2] if r2 < n_pop else state.archive[r2 - n_pop]
        mutant = positions[j] + f_j * (pbest - positions[j]) + f_j * (positions[r1] - donor)
        trial = binomial_crossover(rng, positions[j], mutant, cr_j)
        raw_trials.append(trial)
        evaluated, f_trial, pool_index = repair.resolve(trial, positions[j], pbest)
        if f_trial <= fitness[j]:
            if f_trial < fitness[j]:
                _archive_append(state, positions[j].copy(), n_pop, rng)
                successful_f.append(f_j)
                successful_cr.append(cr_j)
                improvements.append(float(fitness[j] - f_trial))
            if evaluated is not None:
                new_positions[j] = evaluated
                new_fitness[j] = f_trial
            if pool_index is not None:
                adaptive_state.successes[pool_index] += 1

    _update_memories(state, successful_f, successful_cr, improvements)

    if state.reduction_enabled:
        target_size = lpsr_target_size(state, problem.budget_consumed)
        if target_size < new_positions.shape[0]:
            keep = np.argsort(new_fitness, kind="stable")[:target_size]
            keep.sort()  # preserve the positional order of survivors
            new_positions = new_positions[keep]
            new_fitness = new_fitness[keep]
            capacity = state.current_archive_capacity(target_size)
            while len(state.archive) > capacity:
                del state.archive[int(rng.integers(len(state.archive)))]

    next_pop = Population(
        new_positions,
        new_fitness,
        generation=pop.generation + 1,
        evaluations_used=problem.budget_consumed,
    )
    trials = np.asarray(raw_trials) if raw_trials else np.empty((0, pop.dimension))
    records.append(
        telemetry.record_generation(
            next_pop.generation,
            trials,
            next_pop,
            problem,
            corrections_applied=repair.corrections,
            adaptive_probabilities=None if adaptive_state is None else adaptive_state.probabilities,
        )
    )
    return next_pop, state


def _archive_append(state: ShadeState, defeated: np.ndarray, population_size: int, rng: RngStream) -> None:
    state.archive.append(defeated)
    capacity = state.current_archive_capacity(population_size)
    while len(state.archive) > capacity:
        del state.archive[int(rng.integers(len(state.archive)))]


def _update_memories(state, successful_f, successful_cr, improvements) -> None:
    """Write one memory slot from this generation's successful parameters."""
    if not successful_f:
        return
    weights = np.asarray(improvements, dtype=float)
    total = weights.sum()
    if total <= 0.0:
        return
    weights = weights / total
    k = state.memory_index
    state.memory_f[k] = lehmer_mean(successful_f, weights)
    if np.isnan(state.memory_cr[k]) or max(successful_cr) == 0.0:
        state.memory_cr[k] = np.nan  # terminal: CR stays pinned at 0 for this slot
    else:
        state.memory_cr[k] = float(np.sum(weights * np.asarray(successful_cr)))
    state.memory_index = (k + 1) % state.memory_f.size


# ---------------------------------------------------------------------------
# whole runs
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Everything needed to reproduce one optimization run."""

    problem: object
    engine: str = "lshade"
    bchm: str = "sat"
    budget: int | None = None  # default: 10000 * dimension feasible evaluations
    target_error: float | None = None
    seed: int = 0
    max_generations: int | None = None
    classic: ClassicDEParams = field(default_factory=ClassicDEParams)
    shade: ShadeParams = field(default_factory=ShadeParams)
    beta_epsilon: float = 0.1
    adaptive_update_period: int = 25
    adaptive_floor: float = 0.05

    def resolved_budget(self) -> int:
        return self.budget if self.budget is not None else 10000 * self.problem.dimension

    def validate(self) -> None:
        errors = []
        if self.problem is None:
            errors.append("problem (required)")
        if self.engine not in ("classic", "lshade"):
            errors.append("engine (must be 'classic' or 'lshade')")
        if self.bchm not in METHOD_IDS:
            errors.append(f"bchm (unknown method id {self.bchm!r})")
        if self.budget is not None and self.budget <= 0:
            errors.append("budget (budget must be positive)")
        if self.target_error is not None:
            if self.target_error <= 0:
                errors.append("target_error (must be positive)")
            elif getattr(self.problem, "optimum_value", None) is None:
                errors.append("target_error (problem has no known optimum value)")
        if self.max_generations is not None and self.max_generations <= 0:
            errors.append("max_generations (must be positive)")
        if not 0.0 < self.beta_epsilon < 0.5:
            errors.append("beta_epsilon (must be in (0, 0.5))")
        if self.adaptive_update_period < 1:
            errors.append("adaptive_update_period (must be >= 1)")
        if not 0.0 <= self.adaptive_floor < 0.2:
            errors.append("adaptive_floor (must be in [0, 0.2))")
        errors.extend(self.classic.validation_errors())
        errors.extend(self.shade.validation_errors())
        if errors:
            raise ValueError("invalid config fields: " + "; ".join(errors))


@dataclass(eq=False)
class RunResult:
    best_error: float
    best_fitness: float
    best_position: np.ndarray
    behaviour: telemetry.BehaviourClass | None
    classification_mode: str
    records: list[telemetry.GenerationRecord]
    evaluations_used: int
    generations: int
    final_stats: PopulationStats
    final_max_component_variance: float
    wall_time_seconds: float


def run(config: RunConfig) -> RunResult:
    """Execute one full run: init, generational loop, classification.

    Deterministic for a fixed seed: the init and the generational loop use
    two independent substreams of the run stream, consumed in a fixed order.
    """
    config.validate()
    problem = config.problem
    problem.reset_counters()
    budget = config.resolved_budget()
    n = problem.dimension
    bounds = problem.bounds

    root = RngStream(config.seed)
    init_rng = root.split(0)
    loop_rng = root.split(1)

    if config.engine == "classic":
        n_init = config.classic.population_size
    else:
        n_init = config.shade.n_init if config.shade.n_init is not None else 18 * n
    positions = init_rng.uniform(bounds.lower, bounds.upper, (n_init, n))
    fitness = np.array([problem.evaluate(x) for x in positions])
    pop = Population(positions, fitness, generation=0, evaluations_used=problem.budget_consumed)

    shade_state = ShadeState.create(n, budget, config.shade) if config.engine == "lshade" else None
    adaptive_state = (
        AdaptiveState(update_period=config.adaptive_update_period, floor_probability=config.adaptive_floor)
        if config.bchm == "adaptive"
        else None
    )

    f_star = getattr(problem, "optimum_value", None)
    records: list[telemetry.GenerationRecord] = []
    started = time.perf_counter()
    stalled = 0
    while problem.budget_consumed < budget:
        if config.max_generations is not None and pop.generation >= config.max_generations:
            break
        consumed_before = problem.budget_consumed
        if config.engine == "classic":
            pop = classic_generation(
                pop, config.classic, config.bchm, problem, loop_rng, records,
                adaptive_state=adaptive_state, budget=budget, beta_epsilon=config.beta_epsilon,
            )
        else:
            pop, shade_state = lshade_generation(
                pop, shade_state, config.bchm, problem, loop_rng, records,
                adaptive_state=adaptive_state, budget=budget, beta_epsilon=config.beta_epsilon,
            )
        if adaptive_state is not None and pop.generation % adaptive_state.update_period == 0:
            adaptive_state = adaptive_update(adaptive_state)
        if config.target_error is not None and records[-1].best_error <= config.target_error:
            break
        # with dismiss and free infeasible evaluations a generation may consume
        # no budget; bail out if that persists instead of spinning forever
        stalled = stalled + 1 if problem.budget_consumed == consumed_before else 0
        if stalled >= 10000:
            break
    wall_time = time.perf_counter() - started

    best_idx = pop.best_index
    best_fitness = float(pop.fitness[best_idx])
    final_stats = population_stats(pop)
    final_variance = float(final_stats.variance.max())
    if f_star is not None:
        best_error = max(best_fitness - f_star, 0.0)
        behaviour = telemetry.classify(best_error, final_variance)
        classification_mode = "error_and_variance"
    else:
        best_error = np.nan
        # without a known optimum only premature convergence is decidable
        behaviour = (
            telemetry.BehaviourClass.PC
            if final_variance < telemetry.ClassifierConfig().variance_threshold
            else None
        )
        classification_mode = "variance_only"
    return RunResult(
        best_error=best_error,
        best_fitness=best_fitness,
        best_position=pop.positions[best_idx].copy(),
        behaviour=behaviour,
        classification_mode=classification_mode,
        records=records,
        evaluations_used=problem.budget_consumed,
        generations=pop.generation,
        final_stats=final_stats,
        final_max_component_variance=final_variance,
        wall_time_seconds=wall_time,
    )
