"""Monte Carlo estimation of sliced transport discrepancies on the sphere.

The discrepancy between two measures on ``S^{d-1}`` is the average, over
uniformly random great circles, of the circle Wasserstein cost between the
geodesic projections of the measures.  One estimate draws ``L`` random
two-frames, projects both clouds through each frame, solves the resulting
batch of circle problems and averages.

Both clouds always share the frames of one estimate: that is what makes the
estimate symmetric under exchange of the arguments and reduces its variance.
Symmetry is made bit-exact by evaluating each pair in a canonical argument
order (the cost is symmetric, so this is unobservable otherwise).

Against the uniform distribution with ``p = 2`` no samples of the reference
are needed: the projection of the uniform law is uniform on the circle, so
every slice cost has a closed form in the order statistics, along with an
envelope-differentiated gradient used by the particle flows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import (
    _best_cyclic_shift_batch,
    _binary_search_batch,
    _level_median_cost_batch,
    _searchsorted_rows,
    _w2_uniform_batch,
    _w2_uniform_grad_batch,
)
from .sphere import (
    DegenerateProjectionError,
    SphereCloud,
    projection_norms,
    sample_frames,
)

__all__ = [
    "SOLVERS",
    "SolverCompatibilityError",
    "SswConfig",
    "SswEstimate",
    "McDiagnostics",
    "ssw",
    "ssw2_uniform",
    "ssw2_uniform_grad",
    "sw_euclidean",
    "mc_diagnostics",
    "draw_frames",
]

SOLVERS = ("binary_search", "level_median", "uniform_closed_form")

_MAX_FRAME_RESAMPLES = 100
_PROJECTION_TOL = 1e-12


class SolverCompatibilityError(ValueError):
    """Raised when the configured solver cannot handle the request."""


@dataclass(frozen=True)
class SswConfig:
    """Estimator configuration.

    Parameters
    ----------
    p : int
        Order of the ground cost, at least 1.
    n_projections : int
        Number of random great circles ``L``.
    solver : str
        One of ``binary_search`` (any p), ``level_median`` (p = 1 only) or
        ``uniform_closed_form`` (p = 2, uniform reference only).
    eps : float
        Bisection bracket width for the binary search solver.
    seed : int
        Seed used when no generator is passed to the estimator.
    """

    p: int = 2
    n_projections: int = 100
    solver: str = "binary_search"
    eps: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise SolverCompatibilityError(f"unknown solver {self.solver!r}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError("p must be an integer >= 1")
        if self.n_projections < 1:
            raise ValueError("n_projections must be at least 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.solver == "level_median" and self.p != 1:
            raise SolverCompatibilityError("level_median solves p = 1 only")
        if self.solver == "uniform_closed_form" and self.p != 2:
            raise SolverCompatibilityError("uniform_closed_form solves p = 2 only")


@dataclass(frozen=True)
class SswEstimate:
    """Monte Carlo estimate of the discrepancy to the power ``p``.

    ``value`` is the mean of ``per_projection``; ``std_error`` is their
    sample standard deviation divided by ``sqrt(L)`` (0 when L = 1).
    """

    value: float
    per_projection: np.ndarray
    std_error: float
    config: SswConfig
    n_resampled_frames: int = 0


@dataclass(frozen=True)
class McDiagnostics:
    """Spread diagnostics of the per-projection costs."""

    std_error: float
    var: float
    n_projections: int


def _rng_for(cfg, rng):
    return np.random.default_rng(cfg.seed) if rng is None else rng


def _any_degenerate(frames, pts, chunk_elements=4_000_000):
    """Per-frame flag: is some point (nearly) orthogonal to the plane?

    Chunked over frames so the (L, n) norm array never gets large.
    """
    rows = max(1, chunk_elements // max(pts.shape[0], 1))
    out = np.empty(frames.shape[0], dtype=bool)
    for start in range(0, frames.shape[0], rows):
        sl = slice(start, min(start + rows, frames.shape[0]))
        out[sl] = projection_norms(frames[sl], pts).min(axis=1) <= _PROJECTION_TOL
    return out


def draw_frames(d, n_frames, rng, clouds=(), max_resamples=_MAX_FRAME_RESAMPLES):
    """Draw frames, redrawing any frame that is degenerate for some cloud.

    A frame is degenerate when some point of some cloud in ``clouds`` is
    orthogonal to its plane.  Returns ``(frames, n_resampled)``.
    """
    frames = sample_frames(d, n_frames, rng)
    n_resampled = 0
    for _ in range(max_resamples):
        bad = np.zeros(n_frames, dtype=bool)
        for pts in clouds:
            bad |= _any_degenerate(frames, pts)
        k = int(bad.sum())
        if k == 0:
            return frames, n_resampled
        frames[bad] = sample_frames(d, k, rng)
        n_resampled += k
    raise DegenerateProjectionError(
        f"still degenerate frames after {max_resamples} resampling rounds"
    )


def _project(frames, points):
    """In-plane parts ``U^T x`` for stacked frames, shape (L, n, 2)."""
    return np.matmul(points, frames)


def _coords_from(w):
    t = (np.pi + np.arctan2(-w[..., 1], -w[..., 0])) / (2.0 * np.pi)
    t = t - np.floor(t)
    return np.where(t >= 1.0, t - 1.0, t)


def _coords(frames, points):
    return _coords_from(_project(frames, points))


def _coords_and_projections(frames, points):
    w = _project(frames, points)
    return _coords_from(w), w


def _as_points(cloud):
    if isinstance(cloud, SphereCloud):
        return cloud.points
    return SphereCloud(cloud).points


def _canonical_order(x, y):
    """Order two clouds by (size, content) so pair evaluation is symmetric."""
    kx = (x.shape[0], x.tobytes())
    ky = (y.shape[0], y.tobytes())
    return (x, y) if kx <= ky else (y, x)


def _estimate(costs, cfg, n_resampled):
    costs = np.asarray(costs, dtype=float)
    L = costs.size
    se = float(costs.std(ddof=1) / np.sqrt(L)) if L > 1 else 0.0
    return SswEstimate(
        value=float(costs.mean()),
        per_projection=costs,
        std_error=se,
        config=cfg,
        n_resampled_frames=n_resampled,
    )


def slice_costs(mu_points, nu_points, frames, p, solver="binary_search", eps=1e-6):
    """Per-frame circle costs of two clouds through explicit frames.

    This is the deterministic core of :func:`ssw`; it is exposed so that
    tests and flows can freeze the frames.
    """
    tu = _coords(frames, mu_points)
    tv = _coords(frames, nu_points)
    n, m = tu.shape[1], tv.shape[1]
    if solver == "level_median":
        uw = np.full_like(tu, 1.0 / n)
        vw = np.full_like(tv, 1.0 / m)
        return _level_median_cost_batch(np.sort(tu, axis=1), uw, np.sort(tv, axis=1), vw)
    if solver == "binary_search":
        # uniform weights: quantile lookups reduce to index arithmetic
        _, costs = _binary_search_batch(
            np.sort(tu, axis=1), None, np.sort(tv, axis=1), None, int(p), float(eps)
        )
        return np.maximum(costs, 0.0)
    raise SolverCompatibilityError(
        "uniform_closed_form needs the uniform reference; use ssw2_uniform"
    )


def ssw(mu, nu, cfg=SswConfig(), rng=None):
    """Estimate the sliced discrepancy (to the power ``p``) of two clouds.

    Parameters
    ----------
    mu, nu : SphereCloud or (n, d) array-like
    cfg : SswConfig
    rng : numpy.random.Generator, optional
        Defaults to a fresh generator seeded with ``cfg.seed``.

    Returns
    -------
    SswEstimate

    Raises
    ------
    ValueError
        On dimension mismatch.
    SolverCompatibilityError
        For ``uniform_closed_form``, which needs the implicit uniform
        reference of :func:`ssw2_uniform` rather than a second cloud.
    """
    x = _as_points(mu)
    y = _as_points(nu)
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if cfg.solver == "uniform_closed_form":
        raise SolverCompatibilityError(
            "uniform_closed_form needs the uniform reference; use ssw2_uniform"
        )
    x, y = _canonical_order(x, y)
    rng = _rng_for(cfg, rng)
    frames, n_res = draw_frames(x.shape[1], cfg.n_projections, rng, clouds=(x, y))
    costs = slice_costs(x, y, frames, cfg.p, cfg.solver, cfg.eps)
    return _estimate(costs, cfg, n_res)


def uniform_slice_costs(points, frames):
    """Per-frame closed-form squared W2 against the uniform reference."""
    return _w2_uniform_batch(_coords(frames, points))


def ssw2_uniform(mu, cfg=SswConfig(solver="uniform_closed_form"), rng=None):
    """Estimate the squared (p = 2) discrepancy against ``Unif(S^{d-1})``.

    The projection of the uniform law onto any great circle is uniform on
    the circle, so each slice cost is the closed form in the projected
    order statistics; no reference samples are drawn.
    """
    if cfg.p != 2:
        raise SolverCompatibilityError("the uniform closed form requires p = 2")
    x = _as_points(mu)
    rng = _rng_for(cfg, rng)
    frames, n_res = draw_frames(x.shape[1], cfg.n_projections, rng, clouds=(x,))
    return _estimate(uniform_slice_costs(x, frames), cfg, n_res)


def _chain_to_ambient(dcost_dt, w, r2, frames):
    """Chain per-slice coordinate derivatives to ambient point gradients.

    The circle coordinate of a point is its in-plane angle over ``2 pi``,
    whose ambient gradient is ``U (-w_2, w_1) / (2 pi |w|^2)``; the result
    averages the per-frame contributions, shape (n, d).
    """
    coef = dcost_dt / (2.0 * np.pi * r2)
    a0 = w[..., 1] * coef
    np.negative(a0, out=a0)
    a1 = w[..., 0] * coef
    f0 = np.ascontiguousarray(frames[..., 0])
    f1 = np.ascontiguousarray(frames[..., 1])
    grad = a0.T @ f0
    grad += a1.T @ f1
    return grad / frames.shape[0]


def uniform_slice_grad(points, frames):
    """Ambient gradient of the mean closed-form slice cost, frames frozen.

    Envelope differentiation: the sorted ranks and the optimal cut of every
    slice are held fixed, and the circle coordinate is chained through the
    angle map, whose gradient in the ambient point is
    ``U (-w_2, w_1) / (2 pi |w|^2)`` with ``w = U^T x``.  Output has shape
    ``(n, d)`` and is orthogonal to each point row by construction.
    """
    frames = np.asarray(frames, dtype=float)
    points = np.asarray(points, dtype=float)
    w = _project(frames, points)
    r2 = w[..., 0] ** 2 + w[..., 1] ** 2
    if np.any(r2 <= _PROJECTION_TOL**2):
        raise DegenerateProjectionError("degenerate projection in gradient")
    dcost_dt = _w2_uniform_grad_batch(_coords_from(w))
    return _chain_to_ambient(dcost_dt, w, r2, frames)


def ssw2_uniform_grad(mu, cfg=SswConfig(solver="uniform_closed_form"), rng=None):
    """Gradient of the Monte Carlo estimate of :func:`ssw2_uniform`.

    Frames are drawn here exactly as in the estimator; gradients are the
    partial derivatives of the frozen-frame estimate in each particle.
    """
    if cfg.p != 2:
        raise SolverCompatibilityError("the uniform closed form requires p = 2")
    x = _as_points(mu)
    rng = _rng_for(cfg, rng)
    frames, _ = draw_frames(x.shape[1], cfg.n_projections, rng, clouds=(x,))
    return uniform_slice_grad(x, frames)


def matched_slice_costs_grad(points, target_points, frames, p=2):
    """Costs and gradients of slices against an equal-size target cloud.

    For equal-size uniformly weighted samples the optimal circle coupling
    is a cyclic shift of the sorted coordinates; the shift objective is
    convex on the integer lattice and solved exactly per slice.  Gradients
    freeze the coupling (envelope differentiation).  Returns
    ``(costs, grad)`` with shapes ``(L,)`` and ``(n, d)``.
    """
    if p not in (1, 2):
        raise ValueError("matched-slice gradients support p in {1, 2}")
    frames = np.asarray(frames, dtype=float)
    points = np.asarray(points, dtype=float)
    target_points = np.asarray(target_points, dtype=float)
    n = points.shape[0]
    if target_points.shape[0] != n:
        raise ValueError("matched slices require equally many points")

    # one fused projection pass for both clouds
    t_all, w_all = _coords_and_projections(
        frames, np.concatenate([points, target_points])
    )
    w = np.ascontiguousarray(w_all[:, :n])
    r2 = w[..., 0] ** 2 + w[..., 1] ** 2
    if np.any(r2 <= _PROJECTION_TOL**2):
        raise DegenerateProjectionError("degenerate projection in gradient")
    t = np.ascontiguousarray(t_all[:, :n])
    s = np.ascontiguousarray(t_all[:, n:])

    # coordinate ties have measure zero; plain quicksort is fine and faster
    order = np.argsort(t, axis=1)
    ts = np.take_along_axis(t, order, axis=1)
    ss = np.sort(s, axis=1)
    _, costs, y_aligned = _best_cyclic_shift_batch(ts, ss, p)

    diff = ts - y_aligned
    if p == 1:
        g_sorted = np.sign(diff) / n
    else:
        g_sorted = 2.0 * diff / n
    dcost_dt = np.empty_like(g_sorted)
    np.put_along_axis(dcost_dt, order, g_sorted, axis=1)

    grad = _chain_to_ambient(dcost_dt, w, r2, frames)
    return costs, grad


def sw_euclidean(mu, nu, p=2, n_projections=100, rng=None, seed=0):
    """Sliced Wasserstein cost (to the power ``p``) of Euclidean clouds.

    Averages, over uniformly random directions, the 1-D transport cost of
    the projections.  Equal-size clouds use the sorted coupling; unequal
    sizes go through the merged-quantile evaluation.
    """
    x = np.atleast_2d(np.asarray(mu, dtype=float))
    y = np.atleast_2d(np.asarray(nu, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if int(p) != p or p < 1:
        raise ValueError("p must be an integer >= 1")
    if n_projections < 1:
        raise ValueError("n_projections must be at least 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    d = x.shape[1]
    theta = rng.standard_normal((n_projections, d))
    theta /= np.linalg.norm(theta, axis=1, keepdims=True)
    px = np.sort(theta @ x.T, axis=1)
    py = np.sort(theta @ y.T, axis=1)
    if x.shape[0] == y.shape[0]:
        return float(np.mean(np.abs(px - py) ** int(p)))
    return float(np.mean(_wasserstein_1d_sorted(px, py, int(p))))


def _wasserstein_1d_sorted(px, py, p):
    """Row-wise 1-D transport cost between sorted samples of unequal sizes."""
    b, n = px.shape
    m = py.shape[1]
    ucum = np.tile(np.arange(1, n + 1) / n, (b, 1))
    vcum = np.tile(np.arange(1, m + 1) / m, (b, 1))
    qs = np.sort(np.concatenate([ucum, vcum], axis=1), axis=1)
    left = np.concatenate([np.zeros((b, 1)), qs[:, :-1]], axis=1)
    mids = 0.5 * (left + qs)
    iu = np.clip(_searchsorted_rows(ucum, mids, side="left"), 0, n - 1)
    iv = np.clip(_searchsorted_rows(vcum, mids, side="left"), 0, m - 1)
    diff = np.abs(np.take_along_axis(px, iu, axis=1) - np.take_along_axis(py, iv, axis=1))
    return np.einsum("ij,ij->i", qs - left, diff**p)


def mc_diagnostics(est):
    """Variance diagnostics of an estimate; requires at least 2 projections."""
    L = est.per_projection.size
    if L < 2:
        raise ValueError("diagnostics require at least 2 projections")
    var = float(est.per_projection.var(ddof=1))
    return McDiagnostics(std_error=float(np.sqrt(var / L)), var=var, n_projections=L)
