"""Circle transport solvers: examples, oracle agreement, invariants."""

import numpy as np
import pytest

from spherical_ot.circle import (
    CircleEmpirical,
    CirclePoint,
    circle_distance,
    optimal_shift_uniform,
    w1_level_median,
    w2_uniform_closed_form,
    w2_uniform_rectangle,
    w_circle_binary_search,
    w_circle_brute_force,
    wrap_unit,
)


def random_pair(rng, n, m=None):
    return CircleEmpirical(rng.random(n)), CircleEmpirical(rng.random(m or n))


class TestTypes:
    def test_wrap_is_floor_based(self):
        assert wrap_unit(-0.1) == pytest.approx(0.9)
        assert wrap_unit(1.0) == 0.0
        assert wrap_unit(2.3) == pytest.approx(0.3)

    def test_circle_point_wraps(self):
        assert CirclePoint(-0.25).t == pytest.approx(0.75)
        assert 0.0 <= CirclePoint(7.0).t < 1.0

    def test_empirical_sorts_and_copermutes(self):
        m = CircleEmpirical([0.9, 0.1, 0.5], [0.5, 0.25, 0.25])
        assert np.all(np.diff(m.points) >= 0)
        assert m.weights[0] == 0.25 and m.weights[-1] == 0.5

    def test_empirical_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            CircleEmpirical([0.1, 0.2], [0.6, 0.6])
        with pytest.raises(ValueError):
            CircleEmpirical([0.1, 0.2], [1.1, -0.1])
        with pytest.raises(ValueError):
            CircleEmpirical([])

    def test_duplicate_atoms_allowed(self):
        m = CircleEmpirical([0.3, 0.3, 0.3])
        assert m.n == 3
        assert w_circle_binary_search(m, m, 2).cost <= 1e-12


class TestCircleDistance:
    def test_wraparound_shorter(self):
        assert circle_distance(0.1, 0.9) == pytest.approx(0.2)

    def test_identity(self):
        assert circle_distance(0.3, 0.3) == 0.0

    def test_antipodal_is_max(self):
        assert circle_distance(0.0, 0.5) == pytest.approx(0.5)

    def test_range(self):
        rng = np.random.default_rng(0)
        for x, y in rng.random((100, 2)):
            assert 0.0 <= circle_distance(x, y) <= 0.5


class TestBinarySearch:
    def test_two_diracs(self):
        res = w_circle_binary_search(CircleEmpirical([0.1]), CircleEmpirical([0.9]), p=1)
        assert res.cost == pytest.approx(0.2, abs=1e-10)

    def test_two_atom_example(self):
        mu = CircleEmpirical([0.0, 0.4])
        nu = CircleEmpirical([0.5, 0.9])
        oracle = w_circle_brute_force(mu, nu, p=2)
        assert oracle == pytest.approx(0.01, abs=1e-12)
        assert w_circle_binary_search(mu, nu, p=2).cost == pytest.approx(oracle, abs=1e-10)

    def test_identical_measures(self):
        rng = np.random.default_rng(3)
        mu = CircleEmpirical(rng.random(17))
        assert w_circle_binary_search(mu, mu, p=2).cost <= 1e-10

    def test_rejects_bad_parameters(self):
        mu = CircleEmpirical([0.1])
        with pytest.raises(ValueError):
            w_circle_binary_search(mu, mu, p=0)
        with pytest.raises(ValueError):
            w_circle_binary_search(mu, mu, p=2, eps=0.0)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_oracle_agreement(self, p):
        rng = np.random.default_rng(10 + p)
        for _ in range(40):
            n = int(rng.integers(1, 65))
            mu, nu = random_pair(rng, n)
            bf = w_circle_brute_force(mu, nu, p=p)
            bs = w_circle_binary_search(mu, nu, p=p, eps=1e-6).cost
            assert abs(bs - bf) <= 1e-5

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        eps = 1e-6
        for _ in range(20):
            mu, nu = random_pair(rng, int(rng.integers(2, 40)), int(rng.integers(2, 40)))
            a = w_circle_binary_search(mu, nu, p=2, eps=eps).cost
            b = w_circle_binary_search(nu, mu, p=2, eps=eps).cost
            assert abs(a - b) <= 2 * eps

    def test_translation_invariance(self):
        rng = np.random.default_rng(5)
        mu, nu = random_pair(rng, 23, 31)
        base = w_circle_binary_search(mu, nu, p=2).cost
        for shift in (0.31, 0.77, -0.4):
            mu2 = CircleEmpirical(mu.points + shift, mu.weights)
            nu2 = CircleEmpirical(nu.points + shift, nu.weights)
            assert abs(w_circle_binary_search(mu2, nu2, p=2).cost - base) <= 1e-10

    def test_weighted_inputs(self):
        # a weighted atom equals repeated unweighted atoms
        mu_w = CircleEmpirical([0.1, 0.6], [0.75, 0.25])
        mu_r = CircleEmpirical([0.1, 0.1, 0.1, 0.6])
        nu = CircleEmpirical([0.3, 0.5, 0.8, 0.95])
        a = w_circle_binary_search(mu_w, nu, p=2).cost
        b = w_circle_binary_search(mu_r, nu, p=2).cost
        assert a == pytest.approx(b, abs=1e-10)

    def test_cost_range(self):
        rng = np.random.default_rng(6)
        for p in (1, 2):
            mu, nu = random_pair(rng, 12, 19)
            cost = w_circle_binary_search(mu, nu, p=p).cost
            assert -1e-12 <= cost <= 0.5**p + 1e-12


class TestLevelMedian:
    def test_identical(self):
        rng = np.random.default_rng(7)
        mu = CircleEmpirical(rng.random(9))
        assert w1_level_median(mu, mu) == pytest.approx(0.0, abs=1e-15)

    def test_diracs_match_geodesic_distance(self):
        assert w1_level_median(CircleEmpirical([0.1]), CircleEmpirical([0.9])) == pytest.approx(0.2)
        assert w1_level_median(CircleEmpirical([0.2]), CircleEmpirical([0.45])) == pytest.approx(0.25)

    def test_against_binary_search(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            mu, nu = random_pair(rng, 64)
            lm = w1_level_median(mu, nu)
            bs = w_circle_binary_search(mu, nu, p=1, eps=1e-9).cost
            assert abs(lm - bs) <= 1e-6

    def test_against_brute_force(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            mu, nu = random_pair(rng, int(rng.integers(1, 65)))
            assert abs(w1_level_median(mu, nu) - w_circle_brute_force(mu, nu, 1)) <= 1e-5

    def test_weighted(self):
        mu = CircleEmpirical([0.1, 0.6], [0.8, 0.2])
        nu = CircleEmpirical([0.1, 0.1, 0.1, 0.1, 0.6])
        ref = CircleEmpirical([0.25, 0.5, 0.9])
        assert w1_level_median(mu, ref) == pytest.approx(w1_level_median(nu, ref), abs=1e-12)


class TestW2Uniform:
    def test_single_atom(self):
        assert w2_uniform_closed_form(CircleEmpirical([0.3])) == pytest.approx(1 / 12)
        # independent of the atom position
        assert w2_uniform_closed_form(CircleEmpirical([0.77])) == pytest.approx(1 / 12)

    def test_equally_spaced(self):
        mu = CircleEmpirical([0.0, 0.25, 0.5, 0.75])
        assert w2_uniform_closed_form(mu) == pytest.approx(1 / 192, abs=1e-12)

    def test_two_atoms(self):
        # rectangle-rule oracle for Eq-style direct integration
        mu = CircleEmpirical([0.0, 0.25])
        assert w2_uniform_closed_form(mu) == pytest.approx(7 / 192, abs=1e-12)
        assert w2_uniform_rectangle(mu, 10**5) == pytest.approx(7 / 192, abs=1e-6)

    def test_rejects_non_uniform_weights(self):
        with pytest.raises(ValueError):
            w2_uniform_closed_form(CircleEmpirical([0.1, 0.2], [0.7, 0.3]))

    def test_rectangle_single_atom(self):
        assert w2_uniform_rectangle(CircleEmpirical([0.7]), 10**6) == pytest.approx(1 / 12, abs=1e-6)

    def test_rectangle_degenerate_weight(self):
        mu = CircleEmpirical([0.0], [1.0])
        assert w2_uniform_rectangle(mu, 10**5) == pytest.approx(1 / 12, abs=1e-6)

    def test_rectangle_matches_closed_form(self):
        rng = np.random.default_rng(11)
        mu = CircleEmpirical(rng.random(100))
        assert abs(w2_uniform_rectangle(mu, 10**6) - w2_uniform_closed_form(mu)) <= 1e-6

    def test_rectangle_rejects_bad_n(self):
        with pytest.raises(ValueError):
            w2_uniform_rectangle(CircleEmpirical([0.1]), 0)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(12)
        mu = CircleEmpirical(rng.random(50))
        base = w2_uniform_closed_form(mu)
        shifted = CircleEmpirical(mu.points + 0.417)
        assert w2_uniform_closed_form(shifted) == pytest.approx(base, abs=1e-10)


class TestOptimalShift:
    def test_atom_at_half(self):
        assert optimal_shift_uniform(CircleEmpirical([0.5])) == pytest.approx(0.0)

    def test_two_atoms(self):
        assert optimal_shift_uniform(CircleEmpirical([0.0, 0.5])) == pytest.approx(-0.25)
        assert optimal_shift_uniform(CircleEmpirical([0.0, 0.25])) == pytest.approx(-0.375)

    def test_minimizes_objective_on_grid(self):
        rng = np.random.default_rng(13)
        mu = CircleEmpirical(rng.random(20))
        cum = np.cumsum(mu.weights)
        mids = (np.arange(20000) + 0.5) / 20000
        q = mu.points[np.clip(np.searchsorted(cum, mids), 0, mu.n - 1)]

        def objective(alpha):
            return np.mean((q - mids - alpha) ** 2)

        grid = np.linspace(-1, 1, 4001)
        best = grid[np.argmin([objective(a) for a in grid])]
        assert abs(best - optimal_shift_uniform(mu)) <= 1e-3


class TestBruteForce:
    def test_single_pair(self):
        mu, nu = CircleEmpirical([0.2]), CircleEmpirical([0.7])
        assert w_circle_brute_force(mu, nu, p=2) == pytest.approx(0.25)

    def test_identity(self):
        rng = np.random.default_rng(14)
        mu = CircleEmpirical(rng.random(8))
        assert w_circle_brute_force(mu, mu, p=2) == 0.0

    def test_two_assignments(self):
        mu = CircleEmpirical([0.0, 0.4])
        nu = CircleEmpirical([0.5, 0.9])
        assert w_circle_brute_force(mu, nu, p=1) == pytest.approx(0.1)

    def test_rejects_unequal_or_weighted(self):
        with pytest.raises(ValueError):
            w_circle_brute_force(CircleEmpirical([0.1]), CircleEmpirical([0.1, 0.2]))
        with pytest.raises(ValueError):
            w_circle_brute_force(
                CircleEmpirical([0.1, 0.2], [0.7, 0.3]), CircleEmpirical([0.1, 0.2])
            )
