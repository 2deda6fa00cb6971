"""Optimal transport between probability measures on the unit circle.

The circle is identified with the half-open interval ``[0, 1)``: the point
with coordinate ``t`` is the angle ``2*pi*t``.  All entry points reduce
coordinates modulo 1 with floor-based wrapping, so ``-0.1`` maps to ``0.9``.

Empirical measures are kept as sorted atoms plus weights.  Between two such
measures the transport cost for the ground metric ``d(x, y)**p`` is

    ``inf_alpha  int_0^1 |F_mu^{-1}(t) - (F_nu - alpha)^{-1}(t)|^p dt``

where ``alpha`` shifts the cumulative distribution of ``nu``, i.e. selects
the point where the circle is cut open onto the line.  The objective is
convex and piecewise linear in ``alpha`` for empirical inputs, so it is
solved by bisection on the sign of its one-sided derivatives followed by an
exact line-intersection refinement.  Order ``p = 1`` admits a direct
solution through the level median of ``F_mu - F_nu``, and ``p = 2`` against
the uniform measure has a closed form in the order statistics; both are
implemented on the merged grid of cdf breakpoints, hence exact up to
rounding.

All solvers have batched kernels operating on one problem per row, which is
what the great-circle slicing machinery consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "CirclePoint",
    "CircleEmpirical",
    "ShiftResult",
    "wrap_unit",
    "circle_distance",
    "w_circle_binary_search",
    "w1_level_median",
    "w2_uniform_closed_form",
    "w2_uniform_rectangle",
    "optimal_shift_uniform",
    "w_circle_brute_force",
]

_WEIGHT_SUM_TOL = 1e-12


def wrap_unit(t):
    """Reduce coordinates to ``[0, 1)`` with floor-based wrapping."""
    t = np.asarray(t, dtype=float)
    out = t - np.floor(t)
    # floor-based wrapping can still yield 1.0 for tiny negative inputs
    out = np.where(out >= 1.0, out - 1.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CirclePoint:
    """A point on the circle, stored as a coordinate in ``[0, 1)``."""

    t: float

    def __post_init__(self):
        object.__setattr__(self, "t", wrap_unit(float(self.t)))


def _coord(x) -> float:
    return x.t if isinstance(x, CirclePoint) else float(wrap_unit(float(x)))


class CircleEmpirical:
    """Weighted empirical measure on the circle.

    Atoms are wrapped to ``[0, 1)`` and sorted ascending at construction;
    weights are co-permuted (stably, so duplicate atoms keep their order).

    Parameters
    ----------
    points : array-like, shape (n,)
        Atom coordinates; reduced modulo 1.
    weights : array-like, shape (n,), optional
        Positive weights summing to 1 within 1e-12.  Uniform if omitted.
    """

    __slots__ = ("points", "weights")

    def __init__(self, points, weights=None):
        pts = np.atleast_1d(wrap_unit(np.asarray(points, dtype=float).ravel()))
        if pts.size == 0:
            raise ValueError("an empirical measure needs at least one atom")
        if weights is None:
            w = np.full(pts.size, 1.0 / pts.size)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.shape != pts.shape:
                raise ValueError("points and weights must have the same length")
            if np.any(w <= 0):
                raise ValueError("weights must be positive")
            if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
                raise ValueError("weights must sum to 1 within 1e-12")
        order = np.argsort(pts, kind="stable")
        pts = pts[order]
        w = w[order]
        pts.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("CircleEmpirical is immutable")

    @property
    def n(self) -> int:
        return self.points.size

    def is_uniform(self) -> bool:
        """True when all weights equal 1/n within 1e-12."""
        return bool(np.all(np.abs(self.weights - 1.0 / self.n) <= _WEIGHT_SUM_TOL))

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"CircleEmpirical(n={self.n})"


class ShiftResult(NamedTuple):
    """Optimal cut location and the transport cost attained there."""

    alpha: float
    cost: float


def circle_distance(x, y):
    """Geodesic distance on the circle, ``min(|x-y|, 1-|x-y|)`` in [0, 1/2]."""
    d = abs(_coord(x) - _coord(y))
    return min(d, 1.0 - d)


# ---------------------------------------------------------------------------
# batched kernels (one transport problem per row)
# ---------------------------------------------------------------------------


def _sort_rows(values, weights):
    """Wrap, sort and accumulate a batch of weighted samples.

    Returns sorted values, sorted weights and cumulative weights with the
    last column clamped to exactly 1.
    """
    values = wrap_unit(np.asarray(values, dtype=float))
    order = np.argsort(values, axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    weights = np.take_along_axis(weights, order, axis=1)
    cum = np.cumsum(weights, axis=1)
    cum[:, -1] = 1.0
    return values, weights, cum


def _searchsorted_rows(a, q, side="left"):
    """Row-wise ``searchsorted``: ``a`` (B, n) with sorted rows in [0, 2], ``q`` (B, m)."""
    b, n = a.shape
    offset = 4.0 * np.arange(b)[:, None]
    idx = np.searchsorted((a + offset).ravel(), (q + offset).ravel(), side=side)
    return idx.reshape(q.shape) - n * np.arange(b)[:, None]


def _quantile_rows(values, cum, q, side="left"):
    """Evaluate step quantile functions row-wise at levels ``q`` in (0, 1].

    ``cum = None`` means uniform weights, for which the atom index is plain
    arithmetic on the level instead of a binary search.
    """
    n = values.shape[1]
    if cum is None:
        if side == "left":
            idx = np.ceil(q * n).astype(np.int64) - 1
        else:
            idx = np.floor(q * n).astype(np.int64)
    else:
        idx = _searchsorted_rows(cum, q, side=side)
    return np.take_along_axis(values, np.clip(idx, 0, n - 1), axis=1)


def _shifted_quantile_rows(values, cum, z):
    """Extended quantile ``F^{-1}(z)`` with ``F^{-1}(q + k) = F^{-1}(q) + k``."""
    k = np.ceil(z) - 1.0
    return _quantile_rows(values, cum, z - k) + k


def _level_rows(values, cum):
    """Cumulative-weight rows, materializing the uniform grid when implicit."""
    if cum is not None:
        return cum
    b, n = values.shape
    return np.broadcast_to(np.arange(1, n + 1) / n, (b, n))


def _cost_at_shift(alpha, uv, ucum, vv, vcum, p):
    """Exact transport cost at cut locations ``alpha`` (one per row).

    The integrand ``|F_u^{-1}(t) - F_v^{-1}(t + alpha)|**p`` is piecewise
    constant in ``t``; it is integrated on the merged grid of breakpoints,
    evaluating each segment at its midpoint.
    """
    alpha = alpha[:, None]
    tv = (_level_rows(vv, vcum) - alpha) % 1.0
    edges = np.sort(np.concatenate([_level_rows(uv, ucum), tv], axis=1), axis=1)
    left = np.concatenate([np.zeros((edges.shape[0], 1)), edges[:, :-1]], axis=1)
    mids = 0.5 * (left + edges)
    qu = _quantile_rows(uv, ucum, mids)
    qv = _shifted_quantile_rows(vv, vcum, mids + alpha)
    diff = np.abs(qu - qv)
    if p != 1:
        diff = diff**p
    return np.einsum("ij,ij->i", edges - left, diff)


def _subgradient_at_shift(alpha, uv, ucum, vv, vcum, p, side):
    """One-sided derivative of the cost in ``alpha``.

    Each atom level of ``v`` crosses position ``t_j = (B_j - alpha) mod 1``;
    moving the cut transfers an infinitesimal strip at ``t_j`` between the
    atom below that level and the next one.  ``side='right'`` evaluates the
    source quantile on the strip to the left of ``t_j`` (right derivative),
    ``side='left'`` on the strip to the right.
    """
    alpha = alpha[:, None]
    vlev = _level_rows(vv, vcum)
    tv = (vlev - alpha) % 1.0
    k = np.rint(tv + alpha - vlev)
    y_lo = vv + k
    y_hi = np.concatenate([vv[:, 1:], vv[:, :1] + 1.0], axis=1) + k
    qu = _quantile_rows(uv, ucum, tv, side="left" if side == "right" else "right")
    if p == 1:
        g = np.abs(qu - y_hi) - np.abs(qu - y_lo)
    else:
        g = np.abs(qu - y_hi) ** p - np.abs(qu - y_lo) ** p
    return g.sum(axis=1)


def _fast_subgradient(alpha, uv, vv, vlev, v_next, p, side):
    """Subgradient with hoisted per-batch constants; see _subgradient_at_shift.

    ``v_next`` is the successor atom row (last entry wrapped up by one);
    only valid for uniform source weights (``ucum`` handled as implicit).
    """
    alpha = alpha[:, None]
    tv = (vlev - alpha) % 1.0
    k = np.rint(tv + alpha - vlev)
    n = uv.shape[1]
    if side == "right":
        idx = np.ceil(tv * n).astype(np.int64) - 1
    else:
        idx = np.floor(tv * n).astype(np.int64)
    qu = np.take_along_axis(uv, np.clip(idx, 0, n - 1), axis=1)
    if p == 2:
        # |a|^2 - |b|^2 with a - b = v - v_next independent of the wrap
        g = (vv - v_next) * (2.0 * (qu - k) - vv - v_next)
    elif p == 1:
        g = np.abs(qu - v_next - k) - np.abs(qu - vv - k)
    else:
        g = np.abs(qu - v_next - k) ** p - np.abs(qu - vv - k) ** p
    return g.sum(axis=1)


def _binary_search_chunk(uv, ucum, vv, vcum, p, eps):
    b = uv.shape[0]
    lo = np.full(b, -1.0)
    hi = np.full(b, 1.0)
    uniform = ucum is None and vcum is None
    if uniform:
        vlev = _level_rows(vv, vcum)
        v_next = np.concatenate([vv[:, 1:], vv[:, :1] + 1.0], axis=1)
        subgrad = lambda a, side: _fast_subgradient(a, uv, vv, vlev, v_next, p, side)
    else:
        subgrad = lambda a, side: _subgradient_at_shift(a, uv, ucum, vv, vcum, p, side)
    n_iter = max(1, int(np.ceil(np.log2(2.0 / eps))))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        neg = subgrad(mid, "right") < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)

    g_lo = subgrad(lo, "right")
    g_hi = subgrad(hi, "left")
    c_lo = _cost_at_shift(lo, uv, ucum, vv, vcum, p)
    c_hi = _cost_at_shift(hi, uv, ucum, vv, vcum, p)
    denom = g_lo - g_hi
    mid = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = (c_hi - c_lo + g_lo * lo - g_hi * hi) / denom
    cross = np.where(np.abs(denom) > 1e-300, cross, mid)
    cross = np.clip(cross, lo, hi)
    c_cross = _cost_at_shift(cross, uv, ucum, vv, vcum, p)

    costs = np.stack([c_lo, c_hi, c_cross])
    shifts = np.stack([lo, hi, cross])
    pick = np.argmin(costs, axis=0)
    rows = np.arange(b)
    return shifts[pick, rows], costs[pick, rows]


def _binary_search_batch(uv, ucum, vv, vcum, p, eps, chunk_elements=500_000):
    """Solve a batch of circle transport problems by bisection on the cut.

    Returns ``(alpha, cost)`` arrays.  The minimiser always lies in
    [-1, 1] because the optimal shift is a generalised median of
    ``F_u - F_v``, which takes values in [-1, 1].  After the bracket is
    narrower than ``eps`` the two supporting lines of the convex objective
    are intersected, which recovers the minimising kink exactly whenever it
    is the only one left in the bracket.

    ``ucum``/``vcum`` may be ``None`` for uniform weights, which enables
    arithmetic quantile lookups.  Rows are processed in chunks sized to
    keep the per-iteration working set cache resident.
    """
    b, width = uv.shape[0], uv.shape[1] + vv.shape[1]
    rows = max(1, min(b, chunk_elements // max(width, 1)))
    if rows >= b:
        return _binary_search_chunk(uv, ucum, vv, vcum, p, eps)
    alphas = np.empty(b)
    costs = np.empty(b)
    for start in range(0, b, rows):
        sl = slice(start, min(start + rows, b))
        alphas[sl], costs[sl] = _binary_search_chunk(
            uv[sl],
            None if ucum is None else ucum[sl],
            vv[sl],
            None if vcum is None else vcum[sl],
            p,
            eps,
        )
    return alphas, costs


def _level_median_cost_batch(uv, uw, vv, vw):
    """W1 on the circle through the level median of ``F_u - F_v``.

    ``F_u - F_v`` is piecewise constant on the merged support; its level
    median is the weighted median of the segment values with segment
    lengths as weights (ties resolved to the smallest minimiser).  The
    leading segment ``[0, first atom)`` carries value 0 and participates.
    """
    b = uv.shape[0]
    vals = np.concatenate([uv, vv], axis=1)
    w = np.concatenate([uw, -vw], axis=1)
    order = np.argsort(vals, axis=1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=1)
    w = np.take_along_axis(w, order, axis=1)
    f = np.cumsum(w, axis=1)

    right = np.concatenate([vals[:, 1:], np.ones((b, 1))], axis=1)
    lengths = right - vals
    # prepend the [0, vals_0) segment, where F_u - F_v == 0
    f = np.concatenate([np.zeros((b, 1)), f], axis=1)
    lengths = np.concatenate([vals[:, :1], lengths], axis=1)

    order = np.argsort(f, axis=1, kind="stable")
    f_sorted = np.take_along_axis(f, order, axis=1)
    cum = np.cumsum(np.take_along_axis(lengths, order, axis=1), axis=1)
    cum[:, -1] = 1.0
    idx = _searchsorted_rows(cum, np.full((b, 1), 0.5), side="left")
    med = np.take_along_axis(f_sorted, np.clip(idx, 0, f.shape[1] - 1), axis=1)
    return np.einsum("ij,ij->i", lengths, np.abs(f - med))


def _w2_uniform_batch(values):
    """Closed-form squared W2 against the uniform measure, one row per cloud.

    Rows hold equally weighted atoms in arbitrary order; sorting happens
    here.  For sorted ``x_1 <= ... <= x_n`` the value is
    ``mean(x^2) - mean(x)^2 + sum((n+1-2i) x_i)/n^2 + 1/12``.
    """
    x = np.sort(wrap_unit(np.asarray(values, dtype=float)), axis=1)
    n = x.shape[1]
    coef = (n + 1.0 - 2.0 * np.arange(1, n + 1)) / (n * n)
    m1 = x.mean(axis=1)
    return (x * x).mean(axis=1) - m1 * m1 + x @ coef + 1.0 / 12.0


def _w2_uniform_grad_batch(values):
    """Row-wise gradient of :func:`_w2_uniform_batch` in the coordinates.

    The optimal cut is held fixed (envelope differentiation); the sorted
    ranks are those of the input, so the result matches the one-sided
    derivative at ties.
    """
    t = wrap_unit(np.asarray(values, dtype=float))
    n = t.shape[1]
    ranks = np.argsort(np.argsort(t, axis=1), axis=1)
    mean = t.mean(axis=1, keepdims=True)
    return 2.0 * (t - mean) / n + (n - 1.0 - 2.0 * ranks) / (n * n)


def _best_cyclic_shift_batch(x_sorted, y_sorted, p):
    """Optimal integer cut between equal-size sorted uniform samples.

    The continuous cut objective is convex piecewise linear with kinks on
    the lattice ``j/n``; restricted to the lattice it is a convex sequence
    over ``j`` in ``[-n, n]``.  For ``p = 2`` all lattice costs come from
    one cross-correlation (computed by FFT, then re-evaluated exactly
    around the argmin to wash out FFT rounding); other orders use a ternary
    search.  Returns ``(j, cost, y_aligned)`` where ``y_aligned[i]`` is the
    unrolled target atom matched with ``x_sorted[i]``.
    """
    b, n = x_sorted.shape
    rows = max(1, min(b, 120_000 // max(n, 1)))
    if rows >= b:
        return _best_cyclic_shift_chunk(x_sorted, y_sorted, p)
    j = np.empty(b, dtype=np.int64)
    costs = np.empty(b)
    y_aligned = np.empty_like(x_sorted)
    for start in range(0, b, rows):
        sl = slice(start, min(start + rows, b))
        j[sl], costs[sl], y_aligned[sl] = _best_cyclic_shift_chunk(
            x_sorted[sl], y_sorted[sl], p
        )
    return j, costs, y_aligned


def _best_cyclic_shift_chunk(x_sorted, y_sorted, p):
    b, n = x_sorted.shape
    rows = np.arange(b)
    # shift j places the source window at offset j + n of the unrolled copies
    # [y - 1, y, y + 1]; one extra column lets window j + 1 reach offset 2n + 1
    y_ext = np.concatenate(
        [y_sorted - 1.0, y_sorted, y_sorted + 1.0, y_sorted[:, :1] + 2.0], axis=1
    )
    windows = np.lib.stride_tricks.sliding_window_view(y_ext, n, axis=1)
    if p == 2:
        dy = np.diff(y_ext, axis=1)
        dy_windows = np.lib.stride_tricks.sliding_window_view(dy, n, axis=1)

    def forward_difference(s):
        # C(j+1) - C(j) at s = j + n, a nondecreasing sequence by convexity
        y0 = windows[rows, s]
        if p == 2:
            step = dy_windows[rows, s]
            g = step * (2.0 * (y0 - x_sorted) + step)
        elif p == 1:
            g = np.abs(x_sorted - windows[rows, s + 1]) - np.abs(x_sorted - y0)
        else:
            g = np.abs(x_sorted - windows[rows, s + 1]) ** p - np.abs(x_sorted - y0) ** p
        return g.sum(axis=1)

    # smallest j in [-n, n] with C(j+1) - C(j) >= 0 minimizes C
    lo = np.full(b, 0)
    hi = np.full(b, 2 * n)
    while np.any(lo < hi):
        mid = (lo + hi) >> 1
        neg = forward_difference(mid) < 0
        lo = np.where(neg, mid + 1, lo)
        hi = np.where(neg, hi, mid)

    y_aligned = windows[rows, lo]
    d = np.abs(x_sorted - y_aligned)
    if p != 1:
        d = d**p
    return lo - n, d.mean(axis=1), y_aligned


# ---------------------------------------------------------------------------
# public single-instance API
# ---------------------------------------------------------------------------


def _rows(mu: CircleEmpirical):
    cum = np.cumsum(mu.weights)[None, :]
    cum[:, -1] = 1.0
    return mu.points[None, :], mu.weights[None, :], cum


def w_circle_binary_search(mu, nu, p=2, eps=1e-6):
    """Wasserstein cost on the circle by bisection on the cut location.

    Parameters
    ----------
    mu, nu : CircleEmpirical
    p : int
        Order of the ground cost ``d(x, y)**p``, at least 1.
    eps : float
        Width of the final bisection bracket.

    Returns
    -------
    ShiftResult
        Optimal shift ``alpha`` of ``F_nu`` and the cost ``W_p^p`` there.
    """
    if int(p) != p or p < 1:
        raise ValueError("p must be an integer >= 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    uv, _, ucum = _rows(mu)
    vv, _, vcum = _rows(nu)
    alpha, cost = _binary_search_batch(uv, ucum, vv, vcum, int(p), float(eps))
    return ShiftResult(float(alpha[0]), max(float(cost[0]), 0.0))


def w1_level_median(mu, nu):
    """Exact W1 on the circle via the level median of ``F_mu - F_nu``."""
    uv, uw, _ = _rows(mu)
    vv, vw, _ = _rows(nu)
    return float(_level_median_cost_batch(uv, uw, vv, vw)[0])


def w2_uniform_closed_form(mu):
    """Closed-form squared W2 between equally weighted atoms and Unif(S^1).

    Raises
    ------
    ValueError
        If ``mu`` does not carry uniform weights; the order-statistics
        formula is only valid in that case (use
        :func:`w2_uniform_rectangle` for general weights).
    """
    if not mu.is_uniform():
        raise ValueError("closed form requires uniform weights 1/n")
    return float(_w2_uniform_batch(mu.points[None, :])[0])


def w2_uniform_rectangle(mu, n_rect):
    """Midpoint-rule approximation of squared W2 against Unif(S^1).

    Approximates ``int_0^1 |F_mu^{-1}(t) - t - alpha|^2 dt`` at the optimal
    shift ``alpha = mean(mu) - 1/2`` with ``n_rect`` midpoint cells;
    supports arbitrary weights through the weighted quantile function.
    """
    if int(n_rect) != n_rect or n_rect < 1:
        raise ValueError("n_rect must be an integer >= 1")
    n_rect = int(n_rect)
    alpha = optimal_shift_uniform(mu)
    cum = np.cumsum(mu.weights)
    cum[-1] = 1.0
    mids = (np.arange(n_rect) + 0.5) / n_rect
    idx = np.clip(np.searchsorted(cum, mids, side="left"), 0, mu.n - 1)
    q = mu.points[idx]
    return float(np.mean((q - mids - alpha) ** 2))


def optimal_shift_uniform(mu):
    """Optimal cut against the uniform measure: weighted mean minus 1/2."""
    return float(mu.points @ mu.weights - 0.5)


def w_circle_brute_force(mu, nu, p=2):
    """Exact cost for equal-size uniformly weighted samples, by enumeration.

    Tries all ``n`` cyclic assignments between the sorted samples, scoring
    each pair with the geodesic circle distance; O(n^2).  Used as the
    independent oracle for the other solvers.
    """
    if mu.n != nu.n:
        raise ValueError("brute force requires equally many atoms")
    if not (mu.is_uniform() and nu.is_uniform()):
        raise ValueError("brute force requires uniform weights")
    if int(p) != p or p < 1:
        raise ValueError("p must be an integer >= 1")
    n = mu.n
    idx = (np.arange(n)[None, :] + np.arange(n)[:, None]) % n
    d = np.abs(mu.points[None, :] - nu.points[idx])
    d = np.minimum(d, 1.0 - d)
    return float(np.min(np.mean(d ** int(p), axis=1)))
