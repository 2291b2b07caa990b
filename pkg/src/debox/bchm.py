"""Bound constraint handling methods (BCHMs).

Each method maps an infeasible trial vector back into the closed box (or
discards it).  Component-wise methods touch only the violated components;
vector-wise methods rescale the whole vector toward a feasible reference
point.  All corrections accept either a single vector of shape (n,) or a
batch of shape (m, n); the batch form exists because the feasibility
guarantees are Monte-Carlo tested over millions of vectors.

Method ids used in configs and CSV output:

    sat, mirror, uniform, beta, expTarget, expBest, expMidpoint,
    vectorTarget, vectorBest, vectorMidpoint, dismiss, adaptive
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, PopulationStats, RngStream

__all__ = [
    "ADAPTIVE_POOL",
    "AdaptiveState",
    "BetaFitParams",
    "CORRECTING_METHOD_IDS",
    "CorrectionContext",
    "CorrectionOutcome",
    "METHOD_IDS",
    "adaptive_correct",
    "adaptive_select",
    "adaptive_update",
    "beta_correct",
    "correct",
    "dismiss",
    "exp_confined",
    "fit_beta_params",
    "mirror",
    "saturate",
    "uniform_resample",
    "vector_alpha",
    "vector_correct",
]

METHOD_IDS = (
    "sat",
    "mirror",
    "uniform",
    "beta",
    "expTarget",
    "expBest",
    "expMidpoint",
    "vectorTarget",
    "vectorBest",
    "vectorMidpoint",
    "dismiss",
    "adaptive",
)

#: every method that actually produces a corrected vector (dismiss discards)
CORRECTING_METHOD_IDS = tuple(m for m in METHOD_IDS if m != "dismiss")

REFERENCE_CHOICES = ("target", "pbest", "midpoint")


@dataclass(eq=False)
class CorrectionContext:
    """Feasible reference information available at the repair point.

    ``target`` is the trial's target individual, ``pbest`` a p-best element
    and ``population_mean`` the midpoint (mean) of the current population;
    ``stats`` carries the per-component mean/variance needed by the Beta
    correction.
    """

    bounds: Bounds
    target: np.ndarray
    pbest: np.ndarray
    population_mean: np.ndarray
    stats: PopulationStats | None = None
    beta_epsilon: float = 0.1


@dataclass(eq=False)
class CorrectionOutcome:
    """Result of applying a BCHM: either a feasible vector or a dismissal."""

    vector: np.ndarray | None
    dismissed: bool = False
    components_corrected: int = 0
    vector_alpha: float | np.ndarray | None = None


def _as_float_array(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim not in (1, 2):
        raise ValueError("expected a vector (n,) or a batch (m, n)")
    return y


def _masks(y: np.ndarray, bounds: Bounds) -> tuple[np.ndarray, np.ndarray]:
    return y < bounds.lower, y > bounds.upper


def resolve_reference(reference: str, ctx: CorrectionContext) -> np.ndarray:
    if reference == "target":
        return np.asarray(ctx.target, dtype=float)
    if reference == "pbest":
        return np.asarray(ctx.pbest, dtype=float)
    if reference == "midpoint":
        return np.asarray(ctx.population_mean, dtype=float)
    raise ValueError(f"unknown reference {reference!r}, expected one of {REFERENCE_CHOICES}")


# ---------------------------------------------------------------------------
# component-wise corrections
# ---------------------------------------------------------------------------

def saturate(y, bounds: Bounds) -> CorrectionOutcome:
    """Set each violated component on the violated bound."""
    y = _as_float_array(y)
    below, above = _masks(y, bounds)
    corrected = np.clip(y, bounds.lower, bounds.upper)
    return CorrectionOutcome(corrected, components_corrected=int(below.sum() + above.sum()))


def mirror(y, bounds: Bounds) -> CorrectionOutcome:
    """Reflect violated components back into the box.

    Uses the closed-form fold with period 2*(b-a), equivalent to applying
    the reflections 2a-y / 2b-y repeatedly until the component is feasible
    (a single reflection can itself land outside for violations larger than
    the box width).
    """
    y = _as_float_array(y)
    below, above = _masks(y, bounds)
    mask = np.logical_or(below, above)
    width2 = 2.0 * bounds.width
    z = np.mod(y - bounds.lower, width2)
    folded = bounds.lower + np.minimum(z, width2 - z)
    corrected = np.where(mask, folded, y)
    return CorrectionOutcome(corrected, components_corrected=int(mask.sum()))


def uniform_resample(y, bounds: Bounds, rng: RngStream) -> CorrectionOutcome:
    """Replace each violated component with a fresh draw from U[a_i, b_i].

    Feasible components are untouched and consume no randomness; violated
    positions are redrawn in row-major order.
    """
    y = _as_float_array(y)
    below, above = _masks(y, bounds)
    mask = np.logical_or(below, above)
    corrected = y.copy()
    k = int(mask.sum())
    if k:
        lo = np.broadcast_to(bounds.lower, y.shape)[mask]
        hi = np.broadcast_to(bounds.upper, y.shape)[mask]
        corrected[mask] = rng.uniform(lo, hi)
    return CorrectionOutcome(corrected, components_corrected=k)


@dataclass(eq=False)
class BetaFitParams:
    """Shape parameters of the per-component Beta correction.

    Components where the population moments are not Beta-representable
    (zero variance, or variance at/above m*(1-m)) are flagged in
    ``fallback_mask`` and handled by uniform resampling instead.
    """

    alpha: np.ndarray
    beta: np.ndarray
    m: np.ndarray
    v: np.ndarray
    epsilon: float
    fallback_mask: np.ndarray


def fit_beta_params(stats: PopulationStats, bounds: Bounds, epsilon: float = 0.1) -> BetaFitParams:
    """Moment-match Beta shapes to the population mean and variance.

    With the box rescaled to [0, 1]:  m_i = (Mean_i - a_i)/(b_i - a_i)
    (clamped into [epsilon, 1-epsilon]) and v_i = Var_i/(b_i - a_i)^2, then

        alpha_i = m_i * (m_i*(1 - m_i)/v_i - 1),   beta_i = alpha_i*(1 - m_i)/m_i.
    """
    width = bounds.width
    m = np.clip((stats.mean - bounds.lower) / width, epsilon, 1.0 - epsilon)
    v = stats.variance / width**2
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = m * (m * (1.0 - m) / v - 1.0)
        beta = alpha * (1.0 - m) / m
    fallback = ~np.isfinite(alpha) | ~np.isfinite(beta) | (alpha <= 0.0) | (beta <= 0.0) | (v <= 0.0)
    return BetaFitParams(alpha=alpha, beta=beta, m=m, v=v, epsilon=epsilon, fallback_mask=fallback)


def beta_correct(
    y, bounds: Bounds, stats: PopulationStats, rng: RngStream, epsilon: float = 0.1
) -> CorrectionOutcome:
    """Replace violated components with draws from a_i + Beta(alpha_i, beta_i)*(b_i - a_i).

    The shapes are moment-matched to the current population so the corrected
    components have (approximately) the population mean and variance.
    Fallback components follow uniform resampling.  Beta draws are consumed
    first (row-major over violated positions), then uniform fallback draws.
    """
    y = _as_float_array(y)
    params = fit_beta_params(stats, bounds, epsilon)
    below, above = _masks(y, bounds)
    mask = np.logical_or(below, above)
    corrected = y.copy()
    k = int(mask.sum())
    if k == 0:
        return CorrectionOutcome(corrected, components_corrected=0)

    cols = np.nonzero(mask)[-1]  # component index of each violated position
    use_beta = ~params.fallback_mask[cols]
    lo = np.broadcast_to(bounds.lower, y.shape)[mask]
    hi = np.broadcast_to(bounds.upper, y.shape)[mask]
    values = np.empty(k)
    if use_beta.any():
        draws = rng.beta(params.alpha[cols[use_beta]], params.beta[cols[use_beta]])
        values[use_beta] = lo[use_beta] + draws * (hi[use_beta] - lo[use_beta])
    if (~use_beta).any():
        values[~use_beta] = rng.uniform(lo[~use_beta], hi[~use_beta])
    corrected[mask] = np.clip(values, lo, hi)
    return CorrectionOutcome(corrected, components_corrected=k)


def exp_confined(
    y, bounds: Bounds, reference: str, ctx: CorrectionContext, rng: RngStream
) -> CorrectionOutcome:
    """Exponentially confined correction between the violated bound and a reference.

    For a lower violation the corrected component is

        c(y_i) = a_i - ln(1 + r * (exp(a_i - R_i) - 1)),    r ~ U[0, 1],

    and symmetrically c(y_i) = b_i + ln(1 + (1 - r) * (exp(R_i - b_i) - 1))
    for an upper violation; r is drawn fresh per violated component
    (row-major order).  The output lies in [a_i, R_i] resp. [R_i, b_i].
    """
    y = _as_float_array(y)
    R = np.broadcast_to(resolve_reference(reference, ctx), y.shape)
    below, above = _masks(y, bounds)
    mask = np.logical_or(below, above)
    corrected = y.copy()
    k = int(mask.sum())
    if k == 0:
        return CorrectionOutcome(corrected, components_corrected=0)

    r = np.asarray(rng.random(k), dtype=float)
    lo = np.broadcast_to(bounds.lower, y.shape)[mask]
    hi = np.broadcast_to(bounds.upper, y.shape)[mask]
    ref = R[mask]
    is_below = below[mask]
    values = np.empty(k)
    # log1p/expm1 keep the correction strictly inside the interval for small r
    values[is_below] = lo[is_below] - np.log1p(r[is_below] * np.expm1(lo[is_below] - ref[is_below]))
    values[~is_below] = hi[~is_below] + np.log1p(
        (1.0 - r[~is_below]) * np.expm1(ref[~is_below] - hi[~is_below])
    )
    corrected[mask] = np.clip(values, lo, hi)
    return CorrectionOutcome(corrected, components_corrected=k)


# ---------------------------------------------------------------------------
# vector-wise correction
# ---------------------------------------------------------------------------

def vector_alpha(y, R, bounds: Bounds) -> float | np.ndarray:
    """Scaling factor moving y onto the box along the segment toward R.

    alpha = min_i alpha_i with alpha_i = (R_i - a_i)/(R_i - y_i) for lower
    violations, (b_i - R_i)/(y_i - R_i) for upper violations and 1 for
    feasible components.  alpha is in [0, 1]; alpha = 1 means y is feasible.
    """
    y = _as_float_array(y)
    R = np.broadcast_to(np.asarray(R, dtype=float), y.shape)
    below, above = _masks(y, bounds)
    violated = np.logical_or(below, above)
    if np.any(violated & (R == y)):
        raise ValueError("degenerate reference")
    alpha_i = np.ones_like(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo_ratio = (R - bounds.lower) / (R - y)
        hi_ratio = (bounds.upper - R) / (y - R)
    alpha_i = np.where(below, lo_ratio, alpha_i)
    alpha_i = np.where(above, hi_ratio, alpha_i)
    alpha = np.clip(alpha_i.min(axis=-1), 0.0, 1.0)
    return float(alpha) if alpha.ndim == 0 else alpha


def vector_correct(y, reference: str, ctx: CorrectionContext) -> CorrectionOutcome:
    """Shrink the whole vector toward the reference: c = alpha*y + (1-alpha)*R.

    The corrected point is where the segment [R, y] crosses the box, so for
    reference = target the search direction y - x is preserved exactly.
    """
    y = _as_float_array(y)
    R = np.broadcast_to(resolve_reference(reference, ctx), y.shape)
    alpha = vector_alpha(y, R, ctx.bounds)
    a = np.asarray(alpha)[..., np.newaxis]
    corrected = a * y + (1.0 - a) * R
    # a*y + (1-a)*R can overshoot the binding bound by one ulp
    corrected = np.clip(corrected, ctx.bounds.lower, ctx.bounds.upper)
    changed = int(np.sum(corrected != y))
    return CorrectionOutcome(corrected, components_corrected=changed, vector_alpha=alpha)


def dismiss(y, bounds: Bounds) -> CorrectionOutcome:
    """Discard infeasible vectors (death penalty); feasible input passes through."""
    y = _as_float_array(y)
    if y.ndim != 1:
        raise ValueError("dismiss operates on single vectors")
    if bool(bounds.contains(y)):
        return CorrectionOutcome(y.copy())
    return CorrectionOutcome(None, dismissed=True)


# ---------------------------------------------------------------------------
# adaptive selection
# ---------------------------------------------------------------------------

#: pool of methods available to the adaptive selector, in selection order
ADAPTIVE_POOL = ("vectorBest", "expBest", "sat", "vectorTarget", "beta")


@dataclass(eq=False)
class AdaptiveState:
    """Selection probabilities plus use/success counters for the method pool.

    The probabilities are adjusted every ``update_period`` generations from
    the per-method success ratios and never drop below ``floor_probability``.
    """

    pool: tuple[str, ...] = ADAPTIVE_POOL
    probabilities: np.ndarray = None
    uses: np.ndarray = None
    successes: np.ndarray = None
    update_period: int = 25
    floor_probability: float = 0.05

    def __post_init__(self) -> None:
        k = len(self.pool)
        if self.probabilities is None:
            self.probabilities = np.full(k, 1.0 / k)
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.uses is None:
            self.uses = np.zeros(k, dtype=int)
        if self.successes is None:
            self.successes = np.zeros(k, dtype=int)


def adaptive_select(state: AdaptiveState, rng: RngStream) -> str:
    """Draw a method id from the categorical selection distribution."""
    u = float(rng.random())
    k = int(np.searchsorted(np.cumsum(state.probabilities), u, side="right"))
    k = min(k, len(state.pool) - 1)
    state.uses[k] += 1
    return state.pool[k]


def _floor_and_normalize(p: np.ndarray, floor: float) -> np.ndarray:
    """Renormalize p to sum 1 with every entry >= floor."""
    p = np.asarray(p, dtype=float).copy()
    floored = np.zeros(p.size, dtype=bool)
    for _ in range(p.size):
        low = p < floor
        if not low.any():
            break
        floored |= low
        p[floored] = floor
        free = ~floored
        remaining = 1.0 - floor * floored.sum()
        p[free] = p[free] / p[free].sum() * remaining
    return p


def adaptive_update(state: AdaptiveState) -> AdaptiveState:
    """Refresh selection probabilities from the observed success ratios.

    Laplace-smoothed scores (successes+1)/(uses+2) are normalized into a
    distribution, floored at ``floor_probability`` and renormalized; the
    counters restart from zero for the next learning period.
    """
    scores = (state.successes + 1.0) / (state.uses + 2.0)
    probabilities = _floor_and_normalize(scores / scores.sum(), state.floor_probability)
    return AdaptiveState(
        pool=state.pool,
        probabilities=probabilities,
        uses=np.zeros(len(state.pool), dtype=int),
        successes=np.zeros(len(state.pool), dtype=int),
        update_period=state.update_period,
        floor_probability=state.floor_probability,
    )


def adaptive_correct(
    y, ctx: CorrectionContext, rng: RngStream, state: AdaptiveState
) -> tuple[CorrectionOutcome, int]:
    """Select a pool method, apply it, and return (outcome, pool index)."""
    method = adaptive_select(state, rng)
    return correct(method, y, ctx, rng), state.pool.index(method)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_EXP_REFERENCES = {"expTarget": "target", "expBest": "pbest", "expMidpoint": "midpoint"}
_VECTOR_REFERENCES = {"vectorTarget": "target", "vectorBest": "pbest", "vectorMidpoint": "midpoint"}


def correct(method_id: str, y, ctx: CorrectionContext, rng: RngStream) -> CorrectionOutcome:
    """Apply the method named by ``method_id`` to the trial vector ``y``."""
    if method_id == "sat":
        return saturate(y, ctx.bounds)
    if method_id == "mirror":
        return mirror(y, ctx.bounds)
    if method_id == "uniform":
        return uniform_resample(y, ctx.bounds, rng)
    if method_id == "beta":
        if ctx.stats is None:
            raise ValueError("beta correction requires population stats in the context")
        return beta_correct(y, ctx.bounds, ctx.stats, rng, ctx.beta_epsilon)
    if method_id in _EXP_REFERENCES:
        return exp_confined(y, ctx.bounds, _EXP_REFERENCES[method_id], ctx, rng)
    if method_id in _VECTOR_REFERENCES:
        return vector_correct(y, _VECTOR_REFERENCES[method_id], ctx)
    if method_id == "dismiss":
        return dismiss(y, ctx.bounds)
    if method_id == "adaptive":
        raise ValueError("the adaptive method needs state; use adaptive_correct")
    raise ValueError(f"unknown method id {method_id!r}")
