import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from debox.analysis import (
    METRICS,
    Dendrogram,
    build_trajectory,
    build_trajectory_matrix,
    complete_linkage_cluster,
    cosine_similarity,
    cut_dendrogram,
    rank_methods,
    resample_series,
    similarity_matrix,
)
from debox.core import RngStream


def run_columns(nfe, values, metric="violation_probability"):
    column = METRICS[metric]
    return {"feasible_evaluations": list(nfe), column: list(values)}


class TestResampling:
    def test_constant_series(self):
        row = resample_series([0, 10, 20, 35], [0.5, 0.5, 0.5, 0.5], 10)
        assert_allclose(row, np.full(10, 0.5))

    def test_linear_interpolation(self):
        row = resample_series([0, 1000], [0.0, 1.0], 3)
        assert_allclose(row, [0.0, 0.5, 1.0])

    def test_averaging_across_runs(self):
        runs = [run_columns([0, 100], [0.0, 0.0]), run_columns([0, 100], [1.0, 1.0])]
        row = build_trajectory(runs, "violation_probability", grid_points=5)
        assert_allclose(row, np.full(5, 0.5))

    def test_empty_run_set(self):
        with pytest.raises(ValueError, match="empty run set"):
            build_trajectory([], "violation_probability")

    def test_best_so_far_is_log_transformed(self):
        runs = [run_columns([0, 100], [1.0, 0.0], metric="best_so_far")]
        row = build_trajectory(runs, "best_so_far", grid_points=2)
        assert row[0] == pytest.approx(np.log10(1.0 + 1e-12))
        assert row[1] == pytest.approx(-12.0)

    def test_unknown_metric(self):
        with pytest.raises(ValueError, match="unknown metric"):
            build_trajectory([run_columns([0], [0.0])], "speed")


class TestCosineSimilarity:
    def test_identical_vectors(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_value(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(
            0.7071067811865475
        )

    def test_zero_vector_conventions(self):
        zero = np.zeros(3)
        assert cosine_similarity(zero, zero) == 1.0
        assert cosine_similarity(zero, np.ones(3)) == 0.0

    def test_scale_invariance_and_symmetry(self):
        rng = RngStream(2)
        for _ in range(50):
            u = rng.uniform(-1, 1, 6)
            v = rng.uniform(-1, 1, 6)
            c = rng.uniform(0.1, 10.0)
            assert cosine_similarity(u, c * v) == pytest.approx(cosine_similarity(u, v), abs=1e-12)
            assert cosine_similarity(u, v) == pytest.approx(cosine_similarity(v, u), abs=1e-12)


def hand_similarity():
    # d(A,B)=0.1, d(A,C)=0.9, d(B,C)=0.8 expressed as similarities
    sim = np.array(
        [
            [1.0, 0.9, 0.1],
            [0.9, 1.0, 0.2],
            [0.1, 0.2, 1.0],
        ]
    )
    return sim, ("A", "B", "C")


class TestCompleteLinkage:
    def test_hand_oracle(self):
        sim, labels = hand_similarity()
        dendrogram = complete_linkage_cluster(sim, labels)
        assert dendrogram.merges[0].left == ("A",)
        assert dendrogram.merges[0].right == ("B",)
        assert dendrogram.merges[0].height == pytest.approx(0.1)
        assert dendrogram.merges[1].left == ("A", "B")
        assert dendrogram.merges[1].right == ("C",)
        assert dendrogram.merges[1].height == pytest.approx(0.9)

    def test_identical_rows_merge_at_zero(self):
        sim = np.array([[1.0, 1.0, 0.5], [1.0, 1.0, 0.5], [0.5, 0.5, 1.0]])
        dendrogram = complete_linkage_cluster(sim, ("A", "B", "C"))
        assert dendrogram.merges[0].height == 0.0

    def test_equidistant_labels_merge_at_same_height(self):
        k = 5
        sim = np.full((k, k), 0.4)
        np.fill_diagonal(sim, 1.0)
        dendrogram = complete_linkage_cluster(sim, tuple("ABCDE"))
        assert_allclose(dendrogram.heights(), [0.6] * (k - 1))

    def test_heights_non_decreasing_on_random_matrices(self):
        rng = RngStream(4)
        for _ in range(20):
            rows = rng.uniform(0, 1, (6, 10))
            sim = np.eye(6)
            for i in range(6):
                for j in range(i + 1, 6):
                    sim[i, j] = sim[j, i] = cosine_similarity(rows[i], rows[j])
            heights = complete_linkage_cluster(sim, tuple("ABCDEF")).heights()
            assert all(a <= b + 1e-12 for a, b in zip(heights, heights[1:]))

    def test_non_symmetric_rejected(self):
        sim = np.array([[1.0, 0.3], [0.2, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            complete_linkage_cluster(sim, ("A", "B"))

    def test_nested_and_newick_export(self):
        sim, labels = hand_similarity()
        dendrogram = complete_linkage_cluster(sim, labels)
        nested = dendrogram.to_nested()
        assert nested["height"] == pytest.approx(0.9)
        assert json.loads(dendrogram.to_json()) == nested
        newick = dendrogram.to_newick()
        assert newick.endswith(";")
        for label in labels:
            assert label in newick

    def test_cut_recovers_flat_clusters(self):
        sim, labels = hand_similarity()
        dendrogram = complete_linkage_cluster(sim, labels)
        assert cut_dendrogram(dendrogram, 0.5) == [("A", "B"), ("C",)]
        assert cut_dendrogram(dendrogram, 0.05) == [("A",), ("B",), ("C",)]
        assert cut_dendrogram(dendrogram, 1.0) == [("A", "B", "C")]


class TestThreeGroupRecovery:
    def synthetic_matrix(self):
        rng = RngStream(6)
        bases = [np.eye(9)[i] for i in (0, 3, 6)]  # mutually orthogonal templates
        labels, rows = [], []
        for g, base in enumerate(bases):
            for member in range(3):
                noise = rng.uniform(-0.005, 0.005, 9)
                rows.append(base + noise)
                labels.append(f"g{g}m{member}")
        sim = np.eye(9)
        for i in range(9):
            for j in range(i + 1, 9):
                sim[i, j] = sim[j, i] = cosine_similarity(rows[i], rows[j])
        return sim, tuple(labels)

    def test_three_flat_clusters_at_any_threshold(self):
        sim, labels = self.synthetic_matrix()
        dendrogram = complete_linkage_cluster(sim, labels)
        expected = [
            tuple(sorted(l for l in labels if l.startswith(f"g{g}"))) for g in range(3)
        ]
        for threshold in (0.02, 0.1, 0.3, 0.49):
            assert cut_dendrogram(dendrogram, threshold) == sorted(expected)


class TestRankMethods:
    def test_two_methods_one_function(self):
        table = rank_methods({("f1", "a"): [1e-9], ("f1", "b"): [1e-3]})
        assert_allclose(table.ranks, [[1.0, 2.0]])

    def test_ties_get_average_rank(self):
        table = rank_methods({("f1", "a"): [1.0, 2.0], ("f1", "b"): [2.0, 1.0]})
        assert_allclose(table.ranks, [[1.5, 1.5]])

    def test_mean_rank_hand_value(self):
        errors = {
            ("f1", "A"): [1.0], ("f1", "B"): [2.0],
            ("f2", "A"): [1.0], ("f2", "B"): [2.0],
            ("f3", "A"): [2.0], ("f3", "B"): [1.0],
        }
        table = rank_methods(errors)
        assert_allclose(table.mean_rank, [(1 + 1 + 2) / 3, (2 + 2 + 1) / 3])

    def test_invariant_under_monotone_transforms(self):
        errors = {
            ("f1", "a"): [0.1, 0.2], ("f1", "b"): [0.3, 0.5], ("f1", "c"): [0.05, 0.07],
        }
        transformed = {k: [np.log10(x) for x in v] for k, v in errors.items()}
        assert_allclose(rank_methods(errors).ranks, rank_methods(transformed).ranks)

    def test_needs_two_methods(self):
        with pytest.raises(ValueError, match="two methods"):
            rank_methods({("f1", "a"): [1.0]})


class TestTrajectoryMatrix:
    def test_labels_sorted_and_rows_aligned(self):
        runs = {
            "mirror": [run_columns([0, 10], [0.2, 0.2]), run_columns([0, 20], [0.4, 0.4])],
            "sat": [run_columns([0, 50], [1.0, 0.0])],
        }
        matrix = build_trajectory_matrix(runs, "violation_probability", grid_points=4)
        assert matrix.row_labels == ("mirror", "sat")
        assert_allclose(matrix.rows[0], np.full(4, 0.3))
        assert_allclose(matrix.rows[1], [1.0, 2 / 3, 1 / 3, 0.0])

    def test_concat_aggregation(self):
        runs = {
            "a": [run_columns([0, 10], [0.0, 0.0]), run_columns([0, 10], [1.0, 1.0])],
            "b": [run_columns([0, 10], [0.5, 0.5]), run_columns([0, 10], [0.5, 0.5])],
        }
        matrix = build_trajectory_matrix(runs, "violation_probability", grid_points=3, aggregate="concat")
        assert matrix.rows.shape == (2, 6)

    def test_similarity_matrix_unit_diagonal(self):
        runs = {
            "a": [run_columns([0, 10], [0.1, 0.4])],
            "b": [run_columns([0, 10], [0.3, 0.2])],
        }
        matrix = build_trajectory_matrix(runs, "violation_probability", grid_points=8)
        sim = similarity_matrix(matrix)
        assert_allclose(np.diag(sim), [1.0, 1.0])
        assert sim[0, 1] == sim[1, 0]
