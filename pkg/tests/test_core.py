import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import kstest

from debox.core import (
    Bounds,
    Individual,
    Population,
    RngStream,
    draw,
    population_stats,
    stable_key,
    violation_profile,
)


def pop_1d(*values):
    return Population(np.array(values, dtype=float).reshape(-1, 1), np.zeros(len(values)))


class TestBounds:
    def test_symmetric(self):
        b = Bounds.symmetric(5.0, 3)
        assert b.dimension == 3
        assert_allclose(b.lower, [-5, -5, -5])
        assert_allclose(b.width, [10, 10, 10])

    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            Bounds(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    def test_closed_box_membership(self):
        b = Bounds.symmetric(5.0, 2)
        assert b.contains(np.array([5.0, -5.0]))
        assert not b.contains(np.array([5.0000001, 0.0]))
        mask = b.contains(np.array([[0.0, 0.0], [6.0, 0.0]]))
        assert list(mask) == [True, False]


class TestPopulationStats:
    def test_two_member_1d(self):
        stats = population_stats(pop_1d(0.0, 2.0))
        assert_allclose(stats.mean, [1.0])
        assert_allclose(stats.variance, [1.0])

    def test_single_member_degenerate(self):
        pop = Population(np.array([[3.0, 3.0]]), np.zeros(1))
        stats = population_stats(pop)
        assert_allclose(stats.mean, [3.0, 3.0])
        assert_allclose(stats.variance, [0.0, 0.0])

    def test_symmetric_pair(self):
        stats = population_stats(pop_1d(-5.0, 5.0))
        assert_allclose(stats.mean, [0.0])
        assert_allclose(stats.variance, [25.0])

    def test_empty_population_rejected(self):
        with pytest.raises(ValueError, match="empty population"):
            Population.from_members([])

    def test_translation_invariance(self):
        rng = RngStream(7)
        positions = rng.uniform(-5, 5, (20, 6))
        base = population_stats(Population(positions, np.zeros(20)))
        shifted = population_stats(Population(positions + 3.25, np.zeros(20)))
        assert_allclose(shifted.mean, base.mean + 3.25, atol=1e-12)
        assert_allclose(shifted.variance, base.variance, atol=1e-12)


class TestViolationProfile:
    BOX = Bounds.symmetric(5.0, 2)

    def test_interior_point(self):
        assert violation_profile(np.array([0.0, 0.0]), self.BOX) == (set(), 0)

    def test_both_violated(self):
        assert violation_profile(np.array([6.0, -7.0]), self.BOX) == ({0, 1}, 2)

    def test_boundary_is_feasible(self):
        assert violation_profile(np.array([5.0, -5.0]), self.BOX) == (set(), 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            violation_profile(np.array([0.0, 0.0, 0.0]), self.BOX)

    def test_count_complements_feasible_components(self):
        rng = RngStream(11)
        for _ in range(50):
            y = rng.uniform(-9, 9, 2)
            _, count = violation_profile(y, self.BOX)
            feasible = int(np.sum((y >= -5) & (y <= 5)))
            assert count == 2 - feasible


class TestRngStream:
    def test_identical_seed_and_path_bit_identical(self):
        a = RngStream(123, (1, 2)).random(100)
        b = RngStream(123, (1, 2)).random(100)
        assert np.array_equal(a, b)

    def test_split_changes_stream(self):
        root = RngStream(5)
        assert root.split(0).random() != root.split(1).random()
        assert root.split(0).stream_path == (0,)

    def test_operation_sequence_reproducible(self):
        def sequence(stream):
            return (
                stream.uniform(-1, 1, 3).tolist(),
                float(stream.beta(2.0, 3.0)),
                float(stream.cauchy(0.0, 1.0)),
                int(stream.integers(0, 10)),
            )

        assert sequence(RngStream(9, (4,))) == sequence(RngStream(9, (4,)))


class TestDraw:
    def test_uniform_is_linear_map_of_unit_draw(self, scripted):
        assert draw(scripted([0.25]), ("uniform", -5.0, 5.0)) == -2.5

    def test_beta_1_1_is_uniform(self):
        samples = RngStream(42).beta(1.0, 1.0, 100_000)
        assert kstest(samples, "uniform").statistic < 0.01

    def test_cauchy_median_is_location(self):
        samples = RngStream(43).cauchy(0.5, 0.1, 100_000)
        assert abs(np.median(samples) - 0.5) < 0.01

    @pytest.mark.parametrize(
        "spec",
        [
            ("uniform", 1.0, 1.0),
            ("uniform", 2.0, -2.0),
            ("beta", 0.0, 1.0),
            ("beta", 1.0, -3.0),
            ("cauchy", 0.0, 0.0),
            ("normal", 0.0, -1.0),
        ],
    )
    def test_invalid_parameters(self, spec):
        with pytest.raises(ValueError, match="invalid distribution parameters"):
            draw(RngStream(0), spec)

    def test_unknown_distribution(self):
        with pytest.raises(ValueError, match="unknown distribution"):
            draw(RngStream(0), ("triangular", 0.0, 1.0))


class TestStableKey:
    def test_deterministic(self):
        assert stable_key(1, "sphere", 3) == stable_key(1, "sphere", 3)

    def test_distinct_inputs_differ(self):
        keys = {stable_key(seed, f, i) for seed in range(3) for f in ("a", "b") for i in range(5)}
        assert len(keys) == 30

    def test_fits_in_64_bits(self):
        assert 0 <= stable_key("x") < 2**64


def test_individual_defaults_to_unevaluated():
    ind = Individual(np.zeros(3))
    assert ind.fitness == np.inf
