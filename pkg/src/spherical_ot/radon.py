"""Numerically checkable slicing transform on the sphere and its dual.

The slicing transform of a function on ``S^{d-1}`` integrates it over the
fibers of the geodesic projection onto a great circle; its dual evaluates a
test function at the projected point and averages over frames,

    ``(dual g)(x) = E_U[ g(P_U(x), U) ]``.

The transform of a function is never evaluated pointwise here (the fiber is
half of a (d-2)-subsphere); everything is checked in weak form against a
fixed, versioned library of bounded test functions, which is enough to
validate the duality and disintegration identities by Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circle import CircleEmpirical
from .distributions import sample_uniform_sphere
from .sphere import project_to_circle
from .ssw import draw_frames

__all__ = [
    "TestFunctionPair",
    "TEST_PAIRS_V1",
    "test_function_pairs",
    "dual_transform",
    "duality_check",
    "DualityCheckResult",
    "pushforward_check",
]


@dataclass(frozen=True)
class TestFunctionPair:
    """A bounded test pair ``(f, g)`` for weak-form transform checks.

    ``f`` maps sphere points ``(..., d)`` to scalars; ``g`` maps circle
    coordinates ``t`` (leading shape broadcast against frames ``(..., d, 2)``)
    to scalars.  Both are deterministic and bounded.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]


def _frame_feature(frames, t_shape):
    """First frame entry ``U[0, 0]`` broadcast against coordinate arrays."""
    feat = np.asarray(frames, dtype=float)[..., 0, 0]
    extra = len(t_shape) - feat.ndim
    return feat.reshape(feat.shape + (1,) * extra) if extra > 0 else feat


def _pairs():
    two_pi = 2.0 * np.pi

    def f_one(x):
        return np.ones(x.shape[:-1])

    def f_x0(x):
        return x[..., 0]

    def f_x0x1(x):
        return x[..., 0] * x[..., 1]

    def f_quad(x):
        return x[..., 0] ** 2 - x[..., 2] ** 2

    def f_cube(x):
        return x[..., 0] ** 3

    def f_exp(x):
        return np.exp(x[..., 1])

    def f_trip(x):
        return x[..., 0] * x[..., 1] * x[..., 2]

    def g_one(t, frames):
        return np.ones_like(t)

    def g_cos1(t, frames):
        return np.cos(two_pi * t)

    def g_sin1(t, frames):
        return np.sin(two_pi * t)

    def g_cos2(t, frames):
        return np.cos(2 * two_pi * t)

    def g_sin3(t, frames):
        return np.sin(3 * two_pi * t)

    def g_mixed(t, frames):
        return np.cos(two_pi * t) * _frame_feature(frames, t.shape)

    def g_mixed2(t, frames):
        return np.sin(2 * two_pi * t) * (1.0 + 0.5 * _frame_feature(frames, t.shape))

    return (
        TestFunctionPair("one_one", f_one, g_one),
        TestFunctionPair("x0_cos", f_x0, g_cos1),
        TestFunctionPair("x0_sin", f_x0, g_sin1),
        TestFunctionPair("x0x1_sin", f_x0x1, g_sin1),
        TestFunctionPair("quad_cos2", f_quad, g_cos2),
        TestFunctionPair("cube_cos", f_cube, g_cos1),
        TestFunctionPair("exp_sin3", f_exp, g_sin3),
        TestFunctionPair("trip_cos2", f_trip, g_cos2),
        TestFunctionPair("x0_mixed", f_x0, g_mixed),
        TestFunctionPair("quad_mixed2", f_quad, g_mixed2),
    )


#: Versioned library of test pairs (requires ambient dimension d >= 3).
TEST_PAIRS_V1 = _pairs()


def test_function_pairs(version=1):
    """The fixed test-function library; bump the version to change it."""
    if version != 1:
        raise ValueError(f"unknown test-function library version {version}")
    return TEST_PAIRS_V1


def dual_transform(g, x, n_frames, rng):
    """Monte Carlo evaluation of the dual transform of ``g`` at point ``x``.

    Averages ``g(P_U(x), U)`` over ``n_frames`` uniform frames; frames
    degenerate for ``x`` are resampled.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be at least 1")
    x = np.asarray(x, dtype=float)
    frames, _ = draw_frames(x.size, n_frames, rng, clouds=(x[None, :],))
    t = project_to_circle(frames, x[None, :])[:, 0]
    return float(np.mean(g(t, frames)))


def dual_transform_given_frames(g, x, frames):
    """Dual transform averaged over explicit frames (shared-frame tests)."""
    x = np.asarray(x, dtype=float)
    t = project_to_circle(frames, x[None, :])[:, 0]
    return float(np.mean(g(t, frames)))


@dataclass(frozen=True)
class DualityCheckResult:
    """Two independent estimates of ``<f, dual g>`` and their gap."""

    lhs: float
    rhs: float
    gap: float
    se_lhs: float
    se_rhs: float

    @property
    def combined_se(self) -> float:
        return float(np.hypot(self.se_lhs, self.se_rhs))


def _pairing_estimate(f, g, n_points, n_frames, rng, d=3, chunk=256):
    """One Monte Carlo estimate of ``<f, dual g>`` with its standard error.

    Uses ``n_points`` uniform sphere points and ``n_frames`` frames shared
    across points.  The standard error combines the spread of the per-point
    means and of the per-frame means, the two independent noise sources.
    """
    x = sample_uniform_sphere(d, n_points, rng)
    frames, _ = draw_frames(d, n_frames, rng, clouds=(x,))
    fx = f(x)
    col_sum = np.zeros(n_points)
    row_means = np.empty(n_frames)
    for start in range(0, n_frames, chunk):
        blk = frames[start : start + chunk]
        t = project_to_circle(blk, x)
        vals = g(t, blk) * fx[None, :]
        col_sum += vals.sum(axis=0)
        row_means[start : start + blk.shape[0]] = vals.mean(axis=1)
    point_means = col_sum / n_frames
    value = float(point_means.mean())
    se = float(
        np.sqrt(
            point_means.var(ddof=1) / n_points + row_means.var(ddof=1) / n_frames
        )
    )
    return value, se


def duality_check(f, g, n_points, n_frames, rng, d=3):
    """Verify the duality identity in weak form, by two independent routes.

    The left estimate integrates points in the outer loop (the dual-operator
    form), the right one integrates frames in the outer loop (the transform
    form); both are unbiased for ``<f, dual g>``, so their gap should vanish
    within Monte Carlo error.
    """
    if n_points < 2 or n_frames < 2:
        raise ValueError("need at least 2 points and 2 frames")
    lhs, se_lhs = _pairing_estimate(f, g, n_points, n_frames, rng, d=d)
    rhs, se_rhs = _pairing_estimate(f, g, n_points, n_frames, rng, d=d)
    return DualityCheckResult(
        lhs=lhs, rhs=rhs, gap=abs(lhs - rhs), se_lhs=se_lhs, se_rhs=se_rhs
    )


def _library_estimates(pairs, n_points, n_frames, rng, d, chunk):
    """Estimates of ``<f, dual g>`` for every pair on one shared ensemble."""
    x = sample_uniform_sphere(d, n_points, rng)
    frames, _ = draw_frames(d, n_frames, rng, clouds=(x,))
    fx = np.stack([pair.f(x) for pair in pairs])
    col_sum = np.zeros((len(pairs), n_points))
    row_means = np.empty((len(pairs), n_frames))
    for start in range(0, n_frames, chunk):
        blk = frames[start : start + chunk]
        t = project_to_circle(blk, x)
        for i, pair in enumerate(pairs):
            vals = pair.g(t, blk) * fx[i][None, :]
            col_sum[i] += vals.sum(axis=0)
            row_means[i, start : start + blk.shape[0]] = vals.mean(axis=1)
    point_means = col_sum / n_frames
    values = point_means.mean(axis=1)
    ses = np.sqrt(
        point_means.var(axis=1, ddof=1) / n_points
        + row_means.var(axis=1, ddof=1) / n_frames
    )
    return values, ses


def library_duality_checks(pairs, n_points, n_frames, rng, d=3, chunk=256):
    """Duality gaps for a list of pairs, sharing the Monte Carlo ensembles.

    Projections of each ensemble are computed once for all pairs, which is
    what makes the whole library affordable at large ``n_points`` and
    ``n_frames``; the two ensembles stay independent of each other, so each
    pair's gap statistic means the same as in :func:`duality_check`.
    """
    if n_points < 2 or n_frames < 2:
        raise ValueError("need at least 2 points and 2 frames")
    pairs = tuple(pairs)
    lhs, se_lhs = _library_estimates(pairs, n_points, n_frames, rng, d, chunk)
    rhs, se_rhs = _library_estimates(pairs, n_points, n_frames, rng, d, chunk)
    return [
        DualityCheckResult(lhs=float(a), rhs=float(b), gap=float(abs(a - b)),
                           se_lhs=float(sa), se_rhs=float(sb))
        for a, b, sa, sb in zip(lhs, rhs, se_lhs, se_rhs)
    ]


def pushforward_check(mu, frame):
    """Empirical circle measure of a cloud projected through one frame.

    This realizes the conditional of the sliced measure as the pushforward
    of ``mu`` under the geodesic projection; coordinates are produced by the
    same kernel the sliced-discrepancy estimators consume.
    """
    pts = mu.points if hasattr(mu, "points") else np.asarray(mu, dtype=float)
    t = project_to_circle(frame, pts)
    return CircleEmpirical(t)
