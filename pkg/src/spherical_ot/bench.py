"""Benchmark harness and desk-scale experiments.

Every observation is a :class:`RunRecord` serialized to CSV with a fixed,
versioned column order; experiment-specific fields travel in the ``extra``
JSON column.  Timings warm up once per configuration, then time the
estimator call only (cloud generation and parsing are outside the clock).

The exact transport baseline on the sphere solves the assignment problem on
the geodesic cost matrix, which is cubic in the sample size; configurations
beyond the cap emit a record flagged ``skipped`` instead of a measurement.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .distributions import (
    VmfParams,
    sample_uniform_sphere,
    sample_vmf,
    sample_vmf_mixture,
    six_mode_mixture,
)
from .flows import FlowConfig, GlaConfig, gla_chain, ssw_gradient_flow, sswvi_particles, vmf_potential
from .radon import duality_check, test_function_pairs
from .ssw import SswConfig, ssw, ssw2_uniform, sw_euclidean

__all__ = [
    "CSV_SCHEMA_VERSION",
    "CSV_COLUMNS",
    "RunRecord",
    "write_records",
    "records_to_csv",
    "wasserstein_sphere_exact",
    "bench_runtime",
    "run_experiment",
    "EXPERIMENTS",
    "BENCH_METHODS",
]

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "schema_version",
    "experiment",
    "method",
    "d",
    "n",
    "m",
    "L",
    "p",
    "seed",
    "value",
    "wall_time_ns",
    "extra",
)

BENCH_METHODS = ("ssw_bs", "ssw1_levmed", "ssw2_unif", "sw", "w_bruteforce")


@dataclass(frozen=True)
class RunRecord:
    """One benchmark or experiment observation."""

    experiment: str
    method: str
    d: int
    n: int
    m: int
    L: int
    p: int
    seed: int
    value: float
    wall_time_ns: int
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.wall_time_ns > 0:
            raise ValueError("wall_time_ns must be positive")
        if not np.isfinite(self.value):
            raise ValueError("value must be finite")

    def to_row(self):
        return (
            CSV_SCHEMA_VERSION,
            self.experiment,
            self.method,
            self.d,
            self.n,
            self.m,
            self.L,
            self.p,
            self.seed,
            repr(self.value),
            self.wall_time_ns,
            json.dumps(self.extra, sort_keys=True),
        )


def records_to_csv(records):
    """Render records as a CSV string (header plus one line per record)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.to_row())
    return buf.getvalue()


def write_records(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))


def wasserstein_sphere_exact(x, y, p=2):
    """Exact transport cost between equal-size uniform clouds on the sphere.

    Solves the assignment problem on the geodesic cost matrix
    ``arccos(<x_i, y_j>)^p``; O(n^3), intended for n up to a few thousand.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("exact baseline requires equal-size clouds")
    cost = np.arccos(np.clip(x @ y.T, -1.0, 1.0)) ** p
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def _timed(fn, repeats, warmup=1):
    """Wall times (ns) and values of ``repeats`` calls after ``warmup``."""
    for _ in range(warmup):
        fn()
    out = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        value = fn()
        out.append((max(time.perf_counter_ns() - t0, 1), value))
    return out


def _bench_clouds(d, n, rng):
    mu1 = np.zeros(d)
    mu1[0] = 1.0
    mu2 = np.zeros(d)
    mu2[1] = 1.0
    x = sample_vmf(VmfParams(mu1, 10.0), n, rng)
    y = sample_vmf(VmfParams(mu2, 10.0), n, rng)
    return x, y


def bench_runtime(
    methods=BENCH_METHODS,
    n_grid=(1000,),
    L_grid=(200,),
    d_grid=(3,),
    repeats=3,
    seed=0,
    p=2,
    eps=1e-6,
    exact_cap=2048,
):
    """Time the estimators on a grid of (d, n, L) configurations.

    The exact baseline ignores ``L`` and is skipped (with a flagged record)
    above ``exact_cap`` points.
    """
    unknown = set(methods) - set(BENCH_METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    records = []
    for d in d_grid:
        for n in n_grid:
            rng = np.random.default_rng(np.random.SeedSequence((seed, d, n)))
            x, y = _bench_clouds(d, n, rng)
            for method in methods:
                if method == "w_bruteforce":
                    if n > exact_cap:
                        records.append(
                            RunRecord(
                                "bench_runtime", method, d, n, n, 0, p, seed,
                                0.0, 1, {"skipped": f"n>{exact_cap}"},
                            )
                        )
                        continue
                    fn = lambda: wasserstein_sphere_exact(x, y, p)
                    for dt, value in _timed(fn, repeats):
                        records.append(
                            RunRecord("bench_runtime", method, d, n, n, 0, p,
                                      seed, value, dt)
                        )
                    continue
                for L in L_grid:
                    fn = _method_runner(method, x, y, L, p, eps, seed)
                    for dt, value in _timed(fn, repeats):
                        records.append(
                            RunRecord("bench_runtime", method, d, n, n, L,
                                      1 if method == "ssw1_levmed" else p,
                                      seed, value, dt)
                        )
    return records


def _method_runner(method, x, y, L, p, eps, seed):
    if method == "ssw_bs":
        cfg = SswConfig(p=p, n_projections=L, solver="binary_search", eps=eps, seed=seed)
        return lambda: ssw(x, y, cfg).value
    if method == "ssw1_levmed":
        cfg = SswConfig(p=1, n_projections=L, solver="level_median", seed=seed)
        return lambda: ssw(x, y, cfg).value
    if method == "ssw2_unif":
        cfg = SswConfig(p=2, n_projections=L, solver="uniform_closed_form", seed=seed)
        return lambda: ssw2_uniform(x, cfg).value
    if method == "sw":
        return lambda: sw_euclidean(x, y, p=p, n_projections=L, seed=seed)
    raise ValueError(method)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _vmf_cloud(d, direction, kappa, n, rng):
    mu = np.zeros(d)
    if np.ndim(direction) == 0:
        mu[int(direction)] = 1.0
    else:
        mu = np.asarray(direction, dtype=float)
    return sample_vmf(VmfParams(mu, kappa), n, rng)


def experiment_bell_curve(seed=0, n=500, L=200, n_seeds=20, kappa=10.0, n_thetas=13):
    """Discrepancy between a fixed and a rotating concentrated law on S^2.

    The second location parameter sweeps ``theta in {k pi/6}``; the curve
    rises to the antipodal position and falls back.
    """
    records = []
    thetas = [k * np.pi / 6 for k in range(n_thetas)]
    for k, theta in enumerate(thetas):
        mu2 = np.array([np.cos(theta), np.sin(theta), 0.0])
        for s in range(n_seeds):
            rng = np.random.default_rng(np.random.SeedSequence((seed, k, s)))
            x = _vmf_cloud(3, 0, kappa, n, rng)
            y = sample_vmf(VmfParams(mu2, kappa), n, rng)
            cfg = SswConfig(p=2, n_projections=L, solver="binary_search", seed=s)
            t0 = time.perf_counter_ns()
            est = ssw(x, y, cfg, rng)
            dt = max(time.perf_counter_ns() - t0, 1)
            records.append(
                RunRecord("bell_curve", "ssw_bs", 3, n, n, L, 2, s, est.value,
                          dt, {"theta": repr(theta), "k": k})
            )
    return records


def experiment_projection_variance(seed=0, n=500, d=3, kappa=10.0,
                                   L_grid=(10, 100, 1000, 10000), repeats=10):
    """Monte Carlo spread of the estimate versus the number of slices.

    The sample clouds are drawn once; only the frames are redrawn, so the
    recorded standard errors isolate the projection noise.
    """
    rng = np.random.default_rng(seed)
    x, y = _bench_clouds(d, n, rng)
    records = []
    for L in L_grid:
        for r in range(repeats):
            cfg = SswConfig(p=2, n_projections=int(L), solver="binary_search", seed=r)
            t0 = time.perf_counter_ns()
            est = ssw(x, y, cfg, np.random.default_rng(np.random.SeedSequence((seed, L, r))))
            dt = max(time.perf_counter_ns() - t0, 1)
            records.append(
                RunRecord("projection_variance", "ssw_bs", d, n, n, int(L), 2,
                          r, est.value, dt, {"std_error": repr(est.std_error)})
            )
    return records


def experiment_sample_complexity(seed=0, d_grid=(3, 10, 100),
                                 n_grid=(100, 316, 1000, 3162, 10000),
                                 repeats=6, L=64, exact_cap=1024):
    """Estimator error between two uniform empirical samples versus n.

    The population discrepancy vanishes, so the recorded values are the
    absolute estimator errors.  The exact transport baseline is included
    where the assignment problem is affordable.
    """
    records = []
    for d in d_grid:
        for n in n_grid:
            for r in range(repeats):
                rng = np.random.default_rng(np.random.SeedSequence((seed, d, n, r)))
                x = sample_uniform_sphere(d, n, rng)
                y = sample_uniform_sphere(d, n, rng)
                cfg = SswConfig(p=2, n_projections=L, solver="binary_search", seed=r)
                t0 = time.perf_counter_ns()
                est = ssw(x, y, cfg, rng)
                dt = max(time.perf_counter_ns() - t0, 1)
                records.append(
                    RunRecord("sample_complexity", "ssw_bs", d, n, n, L, 2, r,
                              est.value, dt)
                )
                if n <= exact_cap:
                    t0 = time.perf_counter_ns()
                    w = wasserstein_sphere_exact(x, y, 2)
                    dt = max(time.perf_counter_ns() - t0, 1)
                    records.append(
                        RunRecord("sample_complexity", "w_bruteforce", d, n, n,
                                  0, 2, r, w, dt)
                    )
    return records


def experiment_kappa_sweep(seed=0, d_grid=(3,), n=500, L=100, repeats=10,
                           kappas=(1, 5, 10, 20, 30, 40, 50, 75, 100, 150, 200, 250)):
    """Discrepancy against the uniform law versus the concentration."""
    records = []
    for d in d_grid:
        for kappa in kappas:
            for r in range(repeats):
                rng = np.random.default_rng(np.random.SeedSequence((seed, d, int(kappa), r)))
                x = _vmf_cloud(d, 0, float(kappa), n, rng)
                cfg = SswConfig(p=2, n_projections=L, solver="uniform_closed_form", seed=r)
                t0 = time.perf_counter_ns()
                est = ssw2_uniform(x, cfg, rng)
                dt = max(time.perf_counter_ns() - t0, 1)
                records.append(
                    RunRecord("kappa_sweep", "ssw2_unif", d, n, 0, L, 2, r,
                              est.value, dt, {"kappa": repr(float(kappa))})
                )
    return records


def experiment_gradient_flow(seed=0, n_particles=500, n_steps=2000, L=1000,
                             step_size=200.0, kappa=10.0, record_every=50):
    """Particle descent toward the six-mode mixture; see the flows module."""
    rng = np.random.default_rng(seed)
    mix = six_mode_mixture(kappa)
    target = sample_vmf_mixture(mix, n_particles, rng)
    init = sample_uniform_sphere(3, n_particles, rng)
    cfg = FlowConfig(
        step_size=step_size, n_steps=n_steps, mode="riemannian_exp",
        ssw=SswConfig(p=2, n_projections=L), snapshot_every=0,
    )
    t0 = time.perf_counter_ns()
    res = ssw_gradient_flow(init, target, cfg, rng)
    dt = max(time.perf_counter_ns() - t0, 1)
    locs = np.array([c.mu for c in mix.components])
    frac = np.bincount(np.argmax(res.points @ locs.T, axis=1), minlength=6) / n_particles
    records = []
    for k in range(0, n_steps, record_every):
        records.append(
            RunRecord("gradient_flow", "ssw_bs", 3, n_particles, n_particles,
                      L, 2, seed, float(res.costs[k]), dt,
                      {"step": k})
        )
    records.append(
        RunRecord("gradient_flow", "ssw_bs", 3, n_particles, n_particles, L, 2,
                  seed, float(res.costs[-1]), dt,
                  {"step": n_steps - 1, "mode_fractions": [round(f, 4) for f in frac]})
    )
    return records


def experiment_gla_chain(seed=0, kappa=10.0, gamma=1e-3, n_steps=100000,
                         record_every=5000):
    """Long unadjusted Langevin chain against a concentrated potential."""
    rng = np.random.default_rng(seed)
    mu = np.array([0.0, 0.0, 1.0])
    _, grad_v = vmf_potential(mu, kappa)
    cfg = GlaConfig(step_size=gamma, grad_potential=grad_v)
    t0 = time.perf_counter_ns()
    traj = gla_chain(np.array([1.0, 0.0, 0.0]), cfg, n_steps, rng)
    dt = max(time.perf_counter_ns() - t0, 1)
    burn = n_steps // 10
    records = []
    for k in range(record_every, n_steps + 1, record_every):
        samp = traj[burn:k] if k > burn else traj[:k]
        m = samp.mean(axis=0)
        resultant = float(np.linalg.norm(m))
        angle = float(np.arccos(np.clip(m[2] / max(resultant, 1e-300), -1, 1)))
        records.append(
            RunRecord("gla_chain", "gla", 3, k, 0, 0, 2, seed, resultant, dt,
                      {"angle_to_mode": repr(angle), "gamma": repr(gamma),
                       "kappa": repr(kappa)})
        )
    return records


def experiment_sswvi(seed=0, kappa=10.0, gamma=1e-3, outer_steps=500,
                     inner_steps=20, n_particles=500, L=200, flow_step=200.0,
                     record_every=25):
    """Langevin-guided particle transport toward a concentrated potential."""
    rng = np.random.default_rng(seed)
    mu = np.array([0.0, 0.0, 1.0])
    _, grad_v = vmf_potential(mu, kappa)
    gla_cfg = GlaConfig(step_size=gamma, grad_potential=grad_v)
    init = sample_uniform_sphere(3, n_particles, rng)
    t0 = time.perf_counter_ns()
    res = sswvi_particles(init, gla_cfg, outer_steps, inner_steps,
                          SswConfig(p=2, n_projections=L), flow_step, rng)
    dt = max(time.perf_counter_ns() - t0, 1)
    m = res.points.mean(axis=0)
    angle = float(np.arccos(np.clip(m[2] / max(np.linalg.norm(m), 1e-300), -1, 1)))
    records = []
    for k in range(0, outer_steps, record_every):
        records.append(
            RunRecord("sswvi", "sswvi", 3, n_particles, n_particles, L, 2,
                      seed, float(res.costs[k]), dt, {"outer_step": k})
        )
    records.append(
        RunRecord("sswvi", "sswvi", 3, n_particles, n_particles, L, 2, seed,
                  float(res.costs[-1]), dt,
                  {"outer_step": outer_steps - 1, "angle_to_mode": repr(angle)})
    )
    return records


def experiment_radon_duality(seed=0, n_points=10000, L=10000):
    """Weak-form duality gaps for the versioned test-function library."""
    records = []
    for i, pair in enumerate(test_function_pairs()):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        t0 = time.perf_counter_ns()
        res = duality_check(pair.f, pair.g, n_points, L, rng)
        dt = max(time.perf_counter_ns() - t0, 1)
        records.append(
            RunRecord("radon_duality", "radon", 3, n_points, 0, L, 1, seed,
                      res.gap, dt,
                      {"pair": pair.name, "lhs": repr(res.lhs),
                       "rhs": repr(res.rhs), "combined_se": repr(res.combined_se)})
        )
    return records


EXPERIMENTS = {
    "bell_curve": experiment_bell_curve,
    "projection_variance": experiment_projection_variance,
    "sample_complexity": experiment_sample_complexity,
    "kappa_sweep": experiment_kappa_sweep,
    "gradient_flow": experiment_gradient_flow,
    "gla_chain": experiment_gla_chain,
    "sswvi": experiment_sswvi,
    "radon_duality": experiment_radon_duality,
}


def run_experiment(name, seed=0, **overrides):
    """Run a named experiment and return its records.

    Raises
    ------
    KeyError
        For unknown experiment names.
    """
    try:
        fn = EXPERIMENTS[name]
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}; "
                       f"known: {sorted(EXPERIMENTS)}") from None
    return fn(seed=seed, **overrides)
