"""Cross-run analytics: trajectory alignment, cosine similarity,
complete-linkage clustering and method ranking.

Runs of different engines produce different generation counts (L-SHADE's
population shrinks, so its generations get cheaper), so per-generation
series are first resampled by linear interpolation onto a uniform grid over
the feasible-evaluation axis before rows are averaged and compared.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "Dendrogram",
    "MergeStep",
    "RankingTable",
    "TrajectoryMatrix",
    "METRICS",
    "build_trajectory",
    "build_trajectory_matrix",
    "complete_linkage_cluster",
    "cosine_similarity",
    "cut_dendrogram",
    "rank_methods",
    "resample_series",
    "similarity_matrix",
]

#: metric name -> trajectory column it is computed from
METRICS = {
    "violation_probability": "infeasible_component_ratio",
    "best_so_far": "best_error",
    "population_variance": "mean_component_variance",
}

LOG_GUARD = 1e-12  # added before log10 so zero errors stay finite


def resample_series(x: Sequence[float], y: Sequence[float], grid_points: int) -> np.ndarray:
    """Linear interpolation of (x, y) onto a uniform grid spanning [x0, x_last]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        raise ValueError("empty series")
    if x.size == 1:
        return np.full(grid_points, y[0])
    grid = np.linspace(x[0], x[-1], grid_points)
    return np.interp(grid, x, y)


def _metric_series(run: Mapping[str, Sequence[float]], metric: str) -> tuple[np.ndarray, np.ndarray]:
    column = METRICS[metric]
    x = np.asarray(run["feasible_evaluations"], dtype=float)
    y = np.asarray(run[column], dtype=float)
    if metric == "best_so_far":
        y = np.log10(np.maximum(y, 0.0) + LOG_GUARD)
    return x, y


def build_trajectory(
    runs: Sequence[Mapping[str, Sequence[float]]], metric: str, grid_points: int = 200
) -> np.ndarray:
    """Average trajectory row for one label.

    ``runs`` are column mappings as produced by
    :func:`debox.telemetry.records_to_columns` or ``read_trajectory_csv``.
    Each run is resampled onto the uniform grid, then rows are averaged.
    Best-so-far rows are log10-transformed (guarded at 1e-12).
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}, expected one of {sorted(METRICS)}")
    runs = list(runs)
    if not runs:
        raise ValueError("empty run set")
    rows = [resample_series(*_metric_series(run, metric), grid_points) for run in runs]
    return np.mean(rows, axis=0)


@dataclass(eq=False)
class TrajectoryMatrix:
    row_labels: tuple[str, ...]
    rows: np.ndarray  # (K, G)
    metric: str


def build_trajectory_matrix(
    runs_by_label: Mapping[str, Sequence[Mapping[str, Sequence[float]]]],
    metric: str,
    grid_points: int = 200,
    aggregate: str = "mean",
) -> TrajectoryMatrix:
    """One row per label, aligned and aggregated across that label's runs.

    ``aggregate="mean"`` averages the resampled runs; ``"concat"``
    concatenates them instead (all labels must then have the same run count).
    """
    if aggregate not in ("mean", "concat"):
        raise ValueError("aggregate must be 'mean' or 'concat'")
    labels = tuple(sorted(runs_by_label))
    rows = []
    for label in labels:
        runs = list(runs_by_label[label])
        if not runs:
            raise ValueError(f"empty run set for label {label!r}")
        resampled = [resample_series(*_metric_series(run, metric), grid_points) for run in runs]
        rows.append(np.mean(resampled, axis=0) if aggregate == "mean" else np.concatenate(resampled))
    lengths = {row.size for row in rows}
    if len(lengths) > 1:
        raise ValueError("labels have differing run counts; concat aggregation needs equal counts")
    return TrajectoryMatrix(row_labels=labels, rows=np.vstack(rows), metric=metric)


# ---------------------------------------------------------------------------
# similarity and clustering
# ---------------------------------------------------------------------------

def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """cos(u, v); by convention 1 if both vectors are zero, 0 if exactly one is."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("vectors must have equal length")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 and nv == 0.0:
        return 1.0
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def similarity_matrix(matrix: TrajectoryMatrix) -> np.ndarray:
    k = matrix.rows.shape[0]
    sim = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            sim[i, j] = sim[j, i] = cosine_similarity(matrix.rows[i], matrix.rows[j])
    return sim


@dataclass(frozen=True)
class MergeStep:
    left: tuple[str, ...]
    right: tuple[str, ...]
    height: float


@dataclass(eq=False)
class Dendrogram:
    leaf_labels: tuple[str, ...]
    merges: tuple[MergeStep, ...]

    def heights(self) -> list[float]:
        return [step.height for step in self.merges]

    def to_nested(self) -> dict:
        """Nested {label | children, height} tree, leaves at height 0."""
        nodes: dict[tuple[str, ...], dict] = {
            (label,): {"label": label, "height": 0.0} for label in self.leaf_labels
        }
        node = None
        for step in self.merges:
            node = {
                "height": step.height,
                "children": [nodes.pop(step.left), nodes.pop(step.right)],
            }
            nodes[tuple(sorted(step.left + step.right))] = node
        if node is None:  # single leaf, no merges
            node = nodes[(self.leaf_labels[0],)]
        return node

    def to_newick(self) -> str:
        """Newick string; branch length = parent height - child height."""

        def render(node: dict, parent_height: float) -> str:
            branch = parent_height - node["height"]
            if "label" in node:
                return f"{node['label']}:{branch:.12g}"
            inner = ",".join(render(child, node["height"]) for child in node["children"])
            return f"({inner}):{branch:.12g}"

        root = self.to_nested()
        if "label" in root:
            return f"{root['label']}:0;"
        inner = ",".join(render(child, root["height"]) for child in root["children"])
        return f"({inner});"

    def to_json(self) -> str:
        return json.dumps(self.to_nested(), indent=2, sort_keys=True)


def complete_linkage_cluster(similarity: np.ndarray, labels: Sequence[str]) -> Dendrogram:
    """Agglomerative clustering with complete linkage on distance 1 - similarity.

    At each step the two clusters with minimal complete-linkage distance
    (maximum pairwise leaf distance) are merged; ties are broken by
    lexicographic cluster label order, so the merge tree is deterministic.
    """
    similarity = np.asarray(similarity, dtype=float)
    k = similarity.shape[0]
    if similarity.shape != (k, k):
        raise ValueError("similarity matrix must be square")
    if not np.allclose(similarity, similarity.T, atol=1e-12):
        raise ValueError("similarity matrix must be symmetric")
    if not np.allclose(np.diag(similarity), 1.0, atol=1e-9):
        raise ValueError("similarity matrix must have a unit diagonal")
    labels = tuple(str(l) for l in labels)
    if len(labels) != k or len(set(labels)) != k:
        raise ValueError("labels must be unique and match the matrix size")

    distance = 1.0 - similarity
    index = {label: i for i, label in enumerate(labels)}
    clusters: list[tuple[str, ...]] = [(label,) for label in sorted(labels)]
    merges: list[MergeStep] = []

    def linkage(a: tuple[str, ...], b: tuple[str, ...]) -> float:
        return max(distance[index[x], index[y]] for x in a for y in b)

    while len(clusters) > 1:
        best = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                a, b = sorted((clusters[i], clusters[j]))
                candidate = (linkage(a, b), a, b)
                if best is None or candidate < best:
                    best = candidate
        height, a, b = best
        clusters = [c for c in clusters if c not in (a, b)]
        clusters.append(tuple(sorted(a + b)))
        clusters.sort()
        merges.append(MergeStep(left=a, right=b, height=float(height)))
    return Dendrogram(leaf_labels=labels, merges=tuple(merges))


def cut_dendrogram(dendrogram: Dendrogram, height: float) -> list[tuple[str, ...]]:
    """Flat clusters obtained by applying only the merges at or below ``height``."""
    clusters = {(label,) for label in dendrogram.leaf_labels}
    for step in dendrogram.merges:
        if step.height <= height:
            clusters.discard(step.left)
            clusters.discard(step.right)
            clusters.add(tuple(sorted(step.left + step.right)))
    return sorted(clusters)


# ---------------------------------------------------------------------------
# ranking
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class RankingTable:
    methods: tuple[str, ...]
    functions: tuple[str, ...]
    ranks: np.ndarray  # (F, M), average ranks per function
    mean_rank: np.ndarray  # (M,), lower is better


def rank_methods(errors: Mapping[tuple[str, str], Sequence[float]]) -> RankingTable:
    """Rank methods per function by median final error, then average.

    ``errors`` maps (function, method) to the list of run errors for that
    cell.  Ties receive the average of the tied ranks.
    """
    functions = tuple(sorted({f for f, _ in errors}))
    methods = tuple(sorted({m for _, m in errors}))
    if len(methods) < 2:
        raise ValueError("ranking needs at least two methods")
    ranks = np.zeros((len(functions), len(methods)))
    for i, function in enumerate(functions):
        medians = [float(np.median(errors[(function, method)])) for method in methods]
        ranks[i] = rankdata(medians, method="average")
    return RankingTable(
        methods=methods,
        functions=functions,
        ranks=ranks,
        mean_rank=ranks.mean(axis=0),
    )
