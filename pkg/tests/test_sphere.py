"""Sphere geometry: frames, projections, coordinates, exponential map."""

import numpy as np
import pytest

from spherical_ot.distributions import sample_uniform_sphere
from spherical_ot.sphere import (
    DegenerateProjectionError,
    SphereCloud,
    StiefelFrame,
    circle_coordinate,
    circle_coordinates,
    exp_map,
    geodesic_project,
    project_to_circle,
    sample_frames,
    sample_stiefel,
    sphere_distance,
    tangent_project,
)


class TestSphereCloud:
    def test_validates_norms(self):
        with pytest.raises(ValueError):
            SphereCloud([[1.0, 1.0]])

    def test_normalizes_on_request(self):
        c = SphereCloud([[3.0, 4.0]], normalize=True)
        assert np.allclose(c.points, [[0.6, 0.8]])

    def test_shape_properties(self):
        c = SphereCloud(np.eye(4)[:2])
        assert (c.n, c.d) == (2, 4)


class TestStiefelSampling:
    def test_orthonormal_columns(self):
        rng = np.random.default_rng(0)
        frames = sample_frames(7, 200, rng)
        gram = np.einsum("ldk,ldm->lkm", frames, frames)
        assert np.abs(gram - np.eye(2)).max() <= 1e-10

    def test_d2_is_orthogonal_matrix(self):
        rng = np.random.default_rng(1)
        u = sample_stiefel(2, rng)
        assert isinstance(u, StiefelFrame)
        assert np.abs(u.columns.T @ u.columns - np.eye(2)).max() <= 1e-10

    def test_rejects_small_d(self):
        with pytest.raises(ValueError):
            sample_frames(1, 3, np.random.default_rng(0))

    def test_first_column_uniform_moments(self):
        # U e_1 must be uniform on the sphere: zero coordinate means
        rng = np.random.default_rng(2)
        d, n = 5, 100_000
        frames = sample_frames(d, n, rng)
        cols = frames[:, :, 0]
        assert np.allclose(np.linalg.norm(cols, axis=1), 1.0)
        se = np.sqrt(1.0 / d / n)
        assert np.abs(cols.mean(axis=0)).max() <= 5 * se
        # second moments of a uniform vector are 1/d
        assert np.abs((cols**2).mean(axis=0) - 1.0 / d).max() <= 5 * np.sqrt(2.0 / d**2 / n)

    def test_rotational_invariance_of_projected_moments(self):
        # projecting x and Ox through random frames gives the same law
        rng = np.random.default_rng(3)
        d, L = 4, 10_000
        x = sample_uniform_sphere(d, 1, rng)[0]
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        frames = sample_frames(d, L, rng)
        frames2 = sample_frames(d, L, rng)
        t1 = project_to_circle(frames, x[None, :])[:, 0]
        t2 = project_to_circle(frames2, (q @ x)[None, :])[:, 0]
        for moment in (1, 2):
            m1, m2 = (t1**moment).mean(), (t2**moment).mean()
            se = np.sqrt((t1**moment).var() / L + (t2**moment).var() / L)
            assert abs(m1 - m2) <= 5 * se


class TestGeodesicProjection:
    def test_point_in_plane(self):
        u = np.eye(3)[:, :2]
        assert np.allclose(geodesic_project(u, [0.6, 0.8, 0.0]), [0.6, 0.8])

    def test_normalizes_in_plane_part(self):
        u = np.eye(3)[:, :2]
        z = np.sqrt(1 - 0.25)
        assert np.allclose(geodesic_project(u, [0.3, 0.4, z]), [0.6, 0.8])

    def test_orthogonal_point_raises(self):
        u = np.eye(3)[:, :2]
        with pytest.raises(DegenerateProjectionError):
            geodesic_project(u, [0.0, 0.0, 1.0])

    def test_minimizes_geodesic_distance(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            d = int(rng.integers(3, 8))
            u = sample_frames(d, 1, rng)[0]
            x = sample_uniform_sphere(d, 1, rng)[0]
            z = geodesic_project(u, x)
            d_star = sphere_distance(x, u @ z)
            ang = rng.random(1000) * 2 * np.pi
            circle = np.stack([np.cos(ang), np.sin(ang)], axis=-1) @ u.T
            assert d_star <= sphere_distance(x[None, :], circle).min() + 1e-10


class TestCircleCoordinates:
    def test_quarter_turn(self):
        assert circle_coordinate(np.array([0.0, 1.0])) == pytest.approx(0.25)

    def test_half_turn(self):
        assert circle_coordinate(np.array([-1.0, 0.0])) == pytest.approx(0.5)

    def test_origin_wraps_to_zero(self):
        assert circle_coordinate(np.array([1.0, 0.0])) == 0.0

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            circle_coordinate(np.array([1.0, 1.0]))

    def test_roundtrip_identity(self):
        t = np.linspace(0, 1, 1024, endpoint=False)
        z = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=-1)
        assert np.abs(circle_coordinates(z) - t).max() <= 1e-12

    def test_project_to_circle_matches_two_step(self):
        rng = np.random.default_rng(5)
        u = sample_frames(3, 1, rng)[0]
        pts = sample_uniform_sphere(3, 50, rng)
        t = project_to_circle(u, pts)
        expected = [circle_coordinate(geodesic_project(u, p)) for p in pts]
        assert np.allclose(t, expected, atol=1e-12)


class TestExpMap:
    def test_quarter_circle(self):
        x = np.array([1.0, 0.0, 0.0])
        v = np.array([0.0, np.pi / 2, 0.0])
        assert np.allclose(exp_map(x, v), [0.0, 1.0, 0.0], atol=1e-12)

    def test_zero_vector_is_identity(self):
        x = np.array([0.0, 1.0, 0.0])
        out = exp_map(x, np.zeros(3))
        assert np.array_equal(out, x)

    def test_antipode(self):
        x = np.array([1.0, 0.0, 0.0])
        out = exp_map(x, np.array([0.0, np.pi, 0.0]))
        assert np.allclose(out, [-1.0, 0.0, 0.0], atol=1e-12)

    def test_preserves_norm(self):
        rng = np.random.default_rng(6)
        x = sample_uniform_sphere(5, 100, rng)
        g = rng.standard_normal((100, 5))
        v = tangent_project(x, g)
        out = exp_map(x, v)
        assert np.abs(np.linalg.norm(out, axis=1) - 1.0).max() <= 1e-12

    def test_rejects_non_tangent(self):
        x = np.array([1.0, 0.0])
        with pytest.raises(ValueError):
            exp_map(x, np.array([1.0, 1.0]))


class TestTangentAndDistance:
    def test_parallel_gradient_killed(self):
        x = np.array([0.0, 1.0, 0.0])
        assert np.allclose(tangent_project(x, 3.0 * x), 0.0)

    def test_orthogonal_gradient_unchanged(self):
        x = np.array([0.0, 1.0, 0.0])
        g = np.array([1.0, 0.0, -2.0])
        assert np.allclose(tangent_project(x, g), g)

    def test_removes_radial_part(self):
        assert np.allclose(tangent_project(np.array([1.0, 0.0]), np.array([1.0, 1.0])), [0.0, 1.0])

    def test_distance_examples(self):
        x = np.array([1.0, 0.0, 0.0])
        assert sphere_distance(x, x) == 0.0
        assert sphere_distance(x, -x) == pytest.approx(np.pi)
        assert sphere_distance(x, [0.0, 1.0, 0.0]) == pytest.approx(np.pi / 2)

    def test_clamps_rounding(self):
        x = np.array([1.0, 1e-9, 0.0])
        x = x / np.linalg.norm(x)
        assert np.isfinite(sphere_distance(x, x))
