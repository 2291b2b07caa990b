"""debox: differential evolution under strict box constraints.

A small laboratory for studying bound constraint handling methods (BCHMs)
in DE: strict-box benchmark problems, the DE/rand/1/bin and L-SHADE
engines, a pool of component- and vector-wise corrections, per-generation
bound-violation telemetry, convergence-behaviour classification, and the
similarity/clustering analyses used to compare methods and functions.
"""

from .analysis import (
    Dendrogram,
    RankingTable,
    TrajectoryMatrix,
    build_trajectory,
    build_trajectory_matrix,
    complete_linkage_cluster,
    cosine_similarity,
    cut_dendrogram,
    rank_methods,
)
from .bchm import (
    ADAPTIVE_POOL,
    METHOD_IDS,
    AdaptiveState,
    BetaFitParams,
    CorrectionContext,
    CorrectionOutcome,
    adaptive_select,
    adaptive_update,
    beta_correct,
    correct,
    dismiss,
    exp_confined,
    fit_beta_params,
    mirror,
    saturate,
    uniform_resample,
    vector_alpha,
    vector_correct,
)
from .benchmarks import (
    BenchmarkProblem,
    ExternalProblem,
    catalog_ids,
    create_problem,
    evaluate_strict,
    make_instance,
    register_function,
    register_problem,
)
from .core import (
    Bounds,
    Individual,
    Population,
    PopulationStats,
    RngStream,
    draw,
    population_stats,
    stable_key,
    violation_profile,
)
from .engine import (
    ClassicDEParams,
    RunConfig,
    RunResult,
    ShadeParams,
    ShadeState,
    classic_generation,
    lpsr_target_size,
    lshade_generation,
    run,
)
from .telemetry import (
    BehaviourClass,
    ClassifierConfig,
    GenerationRecord,
    classify,
    record_generation,
)

__version__ = "0.1.0"
