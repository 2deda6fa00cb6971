"""Riemannian optimization and sampling on the sphere.

Particle flows minimize the sliced discrepancy toward a target (an
empirical cloud of equal size, or the uniform distribution through its
closed form), drawing fresh frames at every iteration so the slice
integral is estimated stochastically.  Two step rules are available: the
exponential-map step and the cheaper project-and-renormalize retraction,
which agree to first order in the step size.

Sampling uses the unadjusted geodesic Langevin update

    ``x <- exp_x( Proj_x( -gamma grad V(x) + sqrt(2 gamma) Z ) )``

with standard normal ambient noise ``Z``; no Metropolis correction is
applied, so the chain is biased at finite step size.  The particle
variational loop alternates a few Langevin steps from the current particles
with one sliced-discrepancy gradient step of the particles toward the
refined cloud.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .sphere import DegenerateProjectionError, SphereCloud, exp_map, sample_frames, tangent_project
from .ssw import (
    SswConfig,
    draw_frames,
    matched_slice_costs_grad,
    uniform_slice_costs,
    uniform_slice_grad,
)

__all__ = [
    "FlowConfig",
    "GlaConfig",
    "FlowResult",
    "riemannian_step",
    "projected_step",
    "ssw_gradient_flow",
    "gla_step",
    "gla_chain",
    "gla_evolve",
    "sswvi_particles",
    "vmf_potential",
]

STEP_MODES = ("riemannian_exp", "projected")


@dataclass(frozen=True)
class FlowConfig:
    """Particle-flow configuration.

    ``step_size`` scales raw partial derivatives of the Monte Carlo
    discrepancy estimate, which are O(1/n) per particle; useful values are
    therefore of order ``n``.  ``step_size = 0`` is accepted and makes every
    particle a fixed point, which is occasionally useful in tests.
    """

    step_size: float = 200.0
    n_steps: int = 500
    mode: str = "riemannian_exp"
    ssw: SswConfig = field(default_factory=lambda: SswConfig(p=2))
    snapshot_every: int = 0

    def __post_init__(self):
        if self.step_size < 0:
            raise ValueError("step_size must be >= 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.mode not in STEP_MODES:
            raise ValueError(f"mode must be one of {STEP_MODES}")


@dataclass(frozen=True)
class GlaConfig:
    """Langevin sampler configuration: step size and ambient potential.

    ``grad_potential`` maps points ``(..., d)`` to ambient gradients of the
    same shape; ``potential`` itself is optional and unused by the update.
    """

    step_size: float
    grad_potential: Callable[[np.ndarray], np.ndarray]
    potential: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")


@dataclass(frozen=True)
class FlowResult:
    """Final particles, per-iteration cost estimates and optional snapshots."""

    points: np.ndarray
    costs: np.ndarray
    snapshots: tuple


def riemannian_step(x, euclidean_grad, step_size):
    """One descent step along the geodesic of the projected gradient."""
    if step_size < 0:
        raise ValueError("step_size must be >= 0")
    return exp_map(x, -step_size * tangent_project(x, euclidean_grad))


def projected_step(x, euclidean_grad, step_size):
    """Euclidean descent step followed by renormalization (a retraction)."""
    if step_size < 0:
        raise ValueError("step_size must be >= 0")
    y = np.asarray(x, dtype=float) - step_size * np.asarray(euclidean_grad, dtype=float)
    norms = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ValueError("step too large: renormalization hit the origin")
    return y / norms


def _step(points, grad, cfg):
    if cfg.mode == "riemannian_exp":
        return riemannian_step(points, grad, cfg.step_size)
    return projected_step(points, grad, cfg.step_size)


# per-iteration slice work is split over a fixed number of frame blocks;
# the block structure (not the worker count) determines the floating-point
# reduction order, so results are bit-identical at any parallelism degree
_N_FRAME_BLOCKS = 8


def _worker_count():
    env = os.environ.get("SPHERICAL_OT_THREADS", "")
    try:
        workers = int(env) if env else (os.cpu_count() or 1)
    except ValueError:
        workers = 1
    return max(1, min(workers, _N_FRAME_BLOCKS))


def _frame_blocks(n_frames):
    k = min(_N_FRAME_BLOCKS, n_frames)
    edges = np.linspace(0, n_frames, k + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _blockwise_costs_grad(eval_block, frames, pool):
    """Evaluate (costs, grad) per frame block and reduce in block order."""
    blocks = _frame_blocks(frames.shape[0])
    if pool is None:
        results = [eval_block(frames[sl]) for sl in blocks]
    else:
        futures = [pool.submit(eval_block, frames[sl]) for sl in blocks]
        results = [f.result() for f in futures]
    costs = np.concatenate([c for c, _ in results])
    grad = np.zeros_like(results[0][1])
    for (_, g), sl in zip(results, blocks):
        grad += g * ((sl.stop - sl.start) / frames.shape[0])
    return costs, grad


def ssw_gradient_flow(init, target, cfg, rng):
    """Flow a particle cloud toward a target by sliced-discrepancy descent.

    Parameters
    ----------
    init : SphereCloud or (n, d) array-like
        Initial particles.
    target : SphereCloud, (m, d) array-like, or None
        ``None`` selects the uniform distribution, handled through the
        closed form (requires ``cfg.ssw.p == 2``).  An empirical target
        must have as many points as there are particles.
    cfg : FlowConfig
    rng : numpy.random.Generator

    Returns
    -------
    FlowResult
        ``costs[k]`` is the discrepancy estimate of iteration ``k``
        (computed with that iteration's fresh frames, before stepping).
    """
    points = np.array(init.points if isinstance(init, SphereCloud) else init, dtype=float)
    d = points.shape[1]
    uniform_target = target is None
    if uniform_target:
        if cfg.ssw.p != 2:
            raise ValueError("the uniform-target fast path requires p = 2")
        clouds = (points,)
        tgt = None
    else:
        tgt = np.asarray(target.points if isinstance(target, SphereCloud) else target, dtype=float)
        if tgt.shape[1] != d:
            raise ValueError("target dimension mismatch")
        if tgt.shape[0] != points.shape[0]:
            raise ValueError("empirical targets need as many points as particles")

    workers = _worker_count()
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    costs = np.empty(cfg.n_steps)
    snapshots = []
    try:
        for k in range(cfg.n_steps):
            # degenerate projections are measure zero: redraw on demand
            # instead of screening every frame up front
            for _ in range(100):
                frames = sample_frames(d, cfg.ssw.n_projections, rng)
                if uniform_target:
                    eval_block = lambda blk: (
                        uniform_slice_costs(points, blk),
                        uniform_slice_grad(points, blk),
                    )
                else:
                    eval_block = lambda blk: matched_slice_costs_grad(
                        points, tgt, blk, cfg.ssw.p
                    )
                try:
                    slice_vals, grad = _blockwise_costs_grad(eval_block, frames, pool)
                except DegenerateProjectionError:
                    continue
                costs[k] = float(slice_vals.mean())
                break
            else:
                raise DegenerateProjectionError("persistent degenerate projections")
            points = _step(points, grad, cfg)
            if cfg.snapshot_every and (k + 1) % cfg.snapshot_every == 0:
                snapshots.append((k + 1, points.copy()))
    finally:
        if pool is not None:
            pool.shutdown()
    return FlowResult(points=points, costs=costs, snapshots=tuple(snapshots))


def _gla_update(x, cfg, noise):
    drift = -cfg.step_size * cfg.grad_potential(x)
    v = tangent_project(x, drift + np.sqrt(2.0 * cfg.step_size) * noise)
    return exp_map(x, v)


def gla_step(x, cfg, rng):
    """One unadjusted geodesic Langevin step from a single point."""
    x = np.asarray(x, dtype=float)
    return _gla_update(x, cfg, rng.standard_normal(x.shape))


def gla_chain(x0, cfg, n_steps, rng):
    """Run one chain and return its trajectory, shape (n_steps + 1, d)."""
    x = np.asarray(x0, dtype=float)
    out = np.empty((n_steps + 1, x.size))
    out[0] = x
    for k in range(n_steps):
        x = gla_step(x, cfg, rng)
        out[k + 1] = x
    return out


def gla_evolve(points, cfg, n_steps, rng):
    """Advance every row of a particle cloud by ``n_steps`` Langevin steps."""
    x = np.array(points, dtype=float)
    for _ in range(n_steps):
        x = _gla_update(x, cfg, rng.standard_normal(x.shape))
    return x


def sswvi_particles(init, gla_cfg, outer_steps, inner_steps, ssw_cfg, flow_step_size, rng):
    """Langevin-guided particle transport toward an unnormalized density.

    Each outer step refines the current particles with ``inner_steps``
    Langevin updates, then moves the current particles one
    sliced-discrepancy gradient step toward the refined cloud.  With
    ``inner_steps = 0`` the refined cloud equals the current one and the
    particles are a fixed point.

    Returns a :class:`FlowResult` whose ``costs[k]`` is the discrepancy
    estimate between current and refined particles at outer step ``k``.
    """
    if outer_steps < 1:
        raise ValueError("outer_steps must be at least 1")
    if inner_steps < 0:
        raise ValueError("inner_steps must be >= 0")
    points = np.array(init.points if isinstance(init, SphereCloud) else init, dtype=float)
    d = points.shape[1]
    costs = np.empty(outer_steps)
    for k in range(outer_steps):
        refined = gla_evolve(points, gla_cfg, inner_steps, rng)
        frames, _ = draw_frames(d, ssw_cfg.n_projections, rng, clouds=(points, refined))
        slice_vals, grad = matched_slice_costs_grad(points, refined, frames, ssw_cfg.p)
        costs[k] = float(slice_vals.mean())
        points = riemannian_step(points, grad, flow_step_size)
    return FlowResult(points=points, costs=costs, snapshots=())


def vmf_potential(mu, kappa):
    """Potential of the von Mises-Fisher law: ``V(x) = -kappa <mu, x>``."""
    mu = np.asarray(mu, dtype=float)

    def potential(x):
        return -kappa * (np.asarray(x, dtype=float) @ mu)

    def grad_potential(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(-kappa * mu, x.shape).copy()

    return potential, grad_potential
