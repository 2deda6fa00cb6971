"""Geometry of the unit sphere: frames, geodesic projection, exponential map.

Points on ``S^{d-1}`` are plain unit-norm arrays of shape ``(d,)`` and point
clouds are ``(n, d)`` arrays; :class:`SphereCloud` wraps the latter with
validation.  A great circle is encoded by a ``d x 2`` matrix with
orthonormal columns (a two-frame); :class:`StiefelFrame` wraps one frame,
while the slicing machinery works on stacked ``(L, d, 2)`` arrays.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DegenerateProjectionError",
    "SphereCloud",
    "StiefelFrame",
    "sample_stiefel",
    "sample_frames",
    "geodesic_project",
    "circle_coordinate",
    "circle_coordinates",
    "project_to_circle",
    "exp_map",
    "tangent_project",
    "sphere_distance",
]

_UNIT_TOL = 1e-10
_PROJECTION_TOL = 1e-12


class DegenerateProjectionError(ValueError):
    """Raised when a point is orthogonal to the slicing plane.

    The geodesic projection onto the great circle is undefined there; the
    event has measure zero for absolutely continuous inputs, so callers
    resample the frame instead of picking an arbitrary image.
    """


def _unit_rows(points, tol, normalize):
    points = np.asarray(points, dtype=float)
    norms = np.linalg.norm(points, axis=-1, keepdims=True)
    if normalize:
        if np.any(norms <= 0):
            raise ValueError("cannot normalize a zero vector")
        return points / norms
    if np.any(np.abs(norms - 1.0) > tol):
        raise ValueError(f"points must have unit norm within {tol:g}")
    return points


class SphereCloud:
    """A point cloud on ``S^{d-1}``, i.e. an empirical measure.

    Parameters
    ----------
    points : array-like, shape (n, d)
    normalize : bool
        Rescale rows to unit norm instead of validating them.
    """

    __slots__ = ("points",)

    def __init__(self, points, normalize=False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.ndim != 2 or points.shape[1] < 2:
            raise ValueError("expected an (n, d) array with d >= 2")
        if points.shape[0] < 1:
            raise ValueError("a cloud needs at least one point")
        points = _unit_rows(points, _UNIT_TOL, normalize)
        points = np.ascontiguousarray(points)
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("SphereCloud is immutable")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"SphereCloud(n={self.n}, d={self.d})"


class StiefelFrame:
    """A ``d x 2`` matrix with orthonormal columns, i.e. one great circle."""

    __slots__ = ("columns",)

    def __init__(self, columns):
        u = np.asarray(columns, dtype=float)
        if u.ndim != 2 or u.shape[1] != 2 or u.shape[0] < 2:
            raise ValueError("expected a (d, 2) matrix with d >= 2")
        gram = u.T @ u
        if np.max(np.abs(gram - np.eye(2))) > _UNIT_TOL:
            raise ValueError("columns must be orthonormal within 1e-10")
        u = np.ascontiguousarray(u)
        u.flags.writeable = False
        object.__setattr__(self, "columns", u)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("StiefelFrame is immutable")

    @property
    def d(self) -> int:
        return self.columns.shape[0]


def sample_frames(d, n_frames, rng):
    """Draw ``n_frames`` independent uniform two-frames as an (L, d, 2) array.

    Each frame is the Q factor of the thin QR factorization of a ``d x 2``
    standard normal matrix, with column signs flipped so that the diagonal
    of R is positive; that sign convention is what makes the law exactly
    the invariant one.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if n_frames < 1:
        raise ValueError("n_frames must be at least 1")
    z = rng.standard_normal((n_frames, d, 2))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs = np.where(signs == 0, 1.0, signs)
    return q * signs[:, None, :]


def sample_stiefel(d, rng):
    """Draw one uniform frame; see :func:`sample_frames`."""
    return StiefelFrame(sample_frames(d, 1, rng)[0])


def _frame_array(u):
    return u.columns if isinstance(u, StiefelFrame) else np.asarray(u, dtype=float)


def geodesic_project(u, x):
    """Project a sphere point onto the great circle of frame ``u``.

    Returns the image in frame coordinates, the unit 2-vector
    ``U^T x / ||U^T x||``.

    Raises
    ------
    DegenerateProjectionError
        If ``||U^T x|| <= 1e-12`` (the point is orthogonal to the plane).
    """
    u = _frame_array(u)
    w = u.T @ np.asarray(x, dtype=float)
    r = np.linalg.norm(w)
    if r <= _PROJECTION_TOL:
        raise DegenerateProjectionError(
            "point is orthogonal to the slicing plane; resample the frame"
        )
    return w / r


def circle_coordinates(z):
    """Coordinates in [0, 1) of points on the unit circle in the plane.

    ``z`` has shape (..., 2); for ``z = (cos a, sin a)`` the result is
    ``a / (2*pi)`` reduced modulo 1, computed as
    ``(pi + atan2(-z2, -z1)) / (2*pi)``.
    """
    z = np.asarray(z, dtype=float)
    t = (np.pi + np.arctan2(-z[..., 1], -z[..., 0])) / (2.0 * np.pi)
    t = t - np.floor(t)
    return np.where(t >= 1.0, t - 1.0, t)


def circle_coordinate(z):
    """Scalar version of :func:`circle_coordinates`, validating unit norm."""
    z = np.asarray(z, dtype=float)
    if z.shape != (2,):
        raise ValueError("expected a 2-vector")
    if abs(np.linalg.norm(z) - 1.0) > 1e-8:
        raise ValueError("expected a unit 2-vector")
    return float(circle_coordinates(z))


def project_to_circle(frames, points):
    """Circle coordinates of a cloud seen through one or more frames.

    Parameters
    ----------
    frames : array-like, shape (d, 2) or (L, d, 2)
    points : array-like, shape (n, d)

    Returns
    -------
    ndarray, shape (n,) or (L, n)
        Coordinates in [0, 1).  The atan2 map is scale invariant, so the
        in-plane part needs no explicit normalization.

    Raises
    ------
    DegenerateProjectionError
        If any point is orthogonal to any slicing plane.
    """
    frames = _frame_array(frames)
    points = np.asarray(points, dtype=float)
    single = frames.ndim == 2
    if single:
        frames = frames[None]
    w = np.matmul(points, frames)
    if np.any(w[..., 0] ** 2 + w[..., 1] ** 2 <= _PROJECTION_TOL**2):
        raise DegenerateProjectionError(
            "a point is orthogonal to a slicing plane; resample the frame"
        )
    t = circle_coordinates(w)
    return t[0] if single else t


def projection_norms(frames, points):
    """Norms ``||U^T x||`` for stacked frames (L, d, 2) and points (n, d)."""
    w = np.matmul(np.asarray(points, float), np.asarray(frames, float))
    return np.sqrt(w[..., 0] ** 2 + w[..., 1] ** 2)


def _check_tangent(x, v):
    dots = np.sum(x * v, axis=-1)
    scale = 1.0 + np.linalg.norm(v, axis=-1)
    if np.any(np.abs(dots) > 1e-8 * scale):
        raise ValueError("v is not tangent at x (nonzero inner product)")


def exp_map(x, v):
    """Exponential map of the sphere, ``cos(|v|) x + sin(|v|) v/|v|``.

    Works on broadcast batches of base points ``x`` and tangent vectors
    ``v`` (validated to be orthogonal to ``x``); the output is renormalized
    so iterated steps cannot drift off the sphere.  Vanishing ``v`` returns
    the base point.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_tangent(x, v)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    small = nv < 1e-12
    safe = np.where(small, 1.0, nv)
    out = np.cos(nv) * x + np.sin(nv) * (v / safe)
    out = out / np.linalg.norm(out, axis=-1, keepdims=True)
    return np.where(small, x, out)


def tangent_project(x, g):
    """Orthogonal projection of an ambient vector onto the tangent space.

    Returns ``g - <g, x> x``; this is also the Riemannian gradient of a
    function whose ambient gradient at ``x`` is ``g``.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    return g - np.sum(g * x, axis=-1, keepdims=True) * x


def sphere_distance(x, y):
    """Geodesic distance ``arccos(<x, y>)``, inner product clamped to [-1, 1]."""
    dot = np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1)
    return np.arccos(np.clip(dot, -1.0, 1.0))
