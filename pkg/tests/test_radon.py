"""Slicing transform: dual evaluation, duality gaps, pushforward identity."""

import numpy as np
import pytest
from scipy import stats

from spherical_ot.distributions import sample_uniform_sphere
from spherical_ot.radon import (
    TEST_PAIRS_V1,
    dual_transform,
    dual_transform_given_frames,
    duality_check,
    pushforward_check,
    test_function_pairs as pair_library,
)
from spherical_ot.sphere import (
    DegenerateProjectionError,
    project_to_circle,
    sample_frames,
)


def g_const(t, frames):
    return np.ones_like(t)


def g_cos(t, frames):
    return np.cos(2 * np.pi * t)


class TestDualTransform:
    def test_constant_function(self):
        rng = np.random.default_rng(0)
        x = sample_uniform_sphere(3, 1, rng)[0]
        assert dual_transform(g_const, x, 64, rng) == 1.0

    def test_linearity_with_shared_frames(self):
        rng = np.random.default_rng(1)
        x = sample_uniform_sphere(4, 1, rng)[0]
        frames = sample_frames(4, 128, rng)

        def g_scaled(t, fr):
            return 3.5 * g_cos(t, fr)

        a = dual_transform_given_frames(g_cos, x, frames)
        b = dual_transform_given_frames(g_scaled, x, frames)
        assert b == pytest.approx(3.5 * a, abs=1e-15)

    def test_rotation_invariance_in_law(self):
        # the frame law is rotation invariant, so the dual transform of a
        # function of t alone depends on x only through nothing at all
        rng = np.random.default_rng(2)
        x = sample_uniform_sphere(3, 2, rng)
        L = 100_000
        a = dual_transform(g_cos, x[0], L, rng)
        b = dual_transform(g_cos, x[1], L, rng)
        assert abs(a - b) <= 5 * np.sqrt(2.0 / L)

    def test_parameter_error(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            dual_transform(g_cos, np.array([0.0, 0.0, 1.0]), 0, rng)


class TestDualityCheck:
    def test_zero_function(self):
        rng = np.random.default_rng(4)

        def f_zero(x):
            return np.zeros(x.shape[:-1])

        res = duality_check(f_zero, g_cos, 200, 200, rng)
        assert res.lhs == res.rhs == res.gap == 0.0

    def test_constants(self):
        rng = np.random.default_rng(5)

        def f_one(x):
            return np.ones(x.shape[:-1])

        res = duality_check(f_one, g_const, 500, 100, rng)
        assert res.lhs == pytest.approx(1.0)
        assert res.rhs == pytest.approx(1.0)
        assert res.gap == 0.0

    def test_random_pair_gap_within_errors(self):
        rng = np.random.default_rng(6)
        pair = TEST_PAIRS_V1[4]
        res = duality_check(pair.f, pair.g, 4000, 4000, rng)
        assert res.gap <= 3 * res.combined_se

    def test_library_versioning(self):
        assert len(pair_library(1)) == 10
        names = [p.name for p in pair_library()]
        assert len(set(names)) == 10
        with pytest.raises(ValueError):
            pair_library(2)


class TestPushforward:
    def test_dirac(self):
        rng = np.random.default_rng(7)
        u = sample_frames(3, 1, rng)[0]
        x = sample_uniform_sphere(3, 1, rng)
        emp = pushforward_check(x, u)
        assert emp.n == 1
        assert emp.points[0] == pytest.approx(float(project_to_circle(u, x)[0]))

    def test_uniform_projects_to_uniform(self):
        rng = np.random.default_rng(28)
        u = sample_frames(3, 1, rng)[0]
        x = sample_uniform_sphere(3, 100_000, rng)
        emp = pushforward_check(x, u)
        assert stats.kstest(emp.points, "uniform").statistic < 1.628 / np.sqrt(100_000)

    def test_atom_count_preserved(self):
        rng = np.random.default_rng(9)
        u = sample_frames(5, 1, rng)[0]
        x = sample_uniform_sphere(5, 137, rng)
        assert pushforward_check(x, u).n == 137

    def test_coordinates_identical_to_slicing_kernel(self):
        # the pushforward must feed the estimators byte-identical inputs
        rng = np.random.default_rng(10)
        u = sample_frames(3, 1, rng)[0]
        x = sample_uniform_sphere(3, 500, rng)
        emp = pushforward_check(x, u)
        t = np.sort(project_to_circle(u, x))
        assert np.array_equal(emp.points, t)

    def test_degenerate_projection_raises(self):
        u = np.eye(3)[:, :2]
        with pytest.raises(DegenerateProjectionError):
            pushforward_check(np.array([[0.0, 0.0, 1.0]]), u)
