"""Command-line front end.

Subcommands: ``compute`` (estimate the discrepancy between two clouds),
``bench-runtime`` (timing grids), ``experiment`` (named desk-scale
experiments), ``sample`` (write a cloud file from a distribution spec) and
``flow`` (particle flows / Langevin chains, exporting snapshots).

Clouds are given either as cloud-file paths or as generator specs such as
``uniform:d=3,n=500`` or ``vmf:d=3,mu=0,0,1,kappa=10,n=500``.  Exit code 2
signals malformed inputs, 3 a solver incompatibility.

``--threads`` (or the ``SPHERICAL_OT_THREADS`` environment variable) bounds
the BLAS thread pools; it is applied before the numerical modules load.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_BAD_INPUT = 2
EXIT_SOLVER = 3

_SPEC_KINDS = ("uniform", "vmf", "power", "vmf6")


class SpecError(ValueError):
    """Malformed generator spec."""


def _parse_fields(rest):
    fields = {}
    key = None
    for tok in rest.split(","):
        if "=" in tok:
            key, val = tok.split("=", 1)
            fields[key.strip()] = val.strip()
        elif key is not None:
            # values may contain commas (vectors): glue onto the last key
            fields[key] += "," + tok.strip()
        else:
            raise SpecError(f"cannot parse spec field {tok!r}")
    return fields


def _vector(text):
    return [float(tok) for tok in text.split(",")]


def parse_spec(text):
    """Parse a generator spec into ``(kind, fields)``."""
    kind, sep, rest = text.partition(":")
    if not sep or kind not in _SPEC_KINDS:
        raise SpecError(f"unknown generator spec {text!r}")
    try:
        fields = _parse_fields(rest)
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    return kind, fields


def generate_cloud(kind, fields, rng):
    import numpy as np

    from . import distributions as dist

    try:
        if kind == "uniform":
            return dist.sample_uniform_sphere(int(fields["d"]), int(fields["n"]), rng)
        if kind == "vmf":
            mu = np.asarray(_vector(fields["mu"]))
            mu = mu / np.linalg.norm(mu)
            if "d" in fields and int(fields["d"]) != mu.size:
                raise SpecError("d does not match the length of mu")
            params = dist.VmfParams(mu, float(fields["kappa"]))
            return dist.sample_vmf(params, int(fields["n"]), rng)
        if kind == "power":
            mu = np.asarray(_vector(fields["mu"]))
            mu = mu / np.linalg.norm(mu)
            params = dist.PowerSphericalParams(mu, float(fields["kappa"]))
            return dist.sample_power_spherical(params, int(fields["n"]), rng)
        if kind == "vmf6":
            mix = dist.six_mode_mixture(float(fields.get("kappa", "10")))
            return dist.sample_vmf_mixture(mix, int(fields["n"]), rng)
    except KeyError as exc:
        raise SpecError(f"spec {kind!r} is missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise SpecError(f"bad field in spec {kind!r}: {exc}") from None
    raise SpecError(kind)


def _is_spec(text):
    kind, sep, _ = text.partition(":")
    return bool(sep) and kind in _SPEC_KINDS


def load_input(text, rng):
    """Resolve a positional cloud argument: generator spec or file path."""
    if _is_spec(text):
        return generate_cloud(*parse_spec(text), rng)
    from .cloudfile import load_cloud

    return load_cloud(text)


def _append_record(path, records):
    from .bench import records_to_csv

    text = records_to_csv(records)
    if os.path.exists(path):
        with open(path, "a", encoding="utf-8", newline="") as fh:
            fh.write(text.split("\n", 1)[1])
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _cmd_compute(args):
    import time

    import numpy as np

    from .bench import RunRecord
    from .ssw import SswConfig, ssw, ssw2_uniform

    rng = np.random.default_rng(args.seed)
    mu = load_input(args.mu, rng)
    cfg = SswConfig(p=args.p, n_projections=args.L, solver=args.solver,
                    eps=args.eps, seed=args.seed)
    uniform_reference = args.solver == "uniform_closed_form"
    if uniform_reference:
        if not (_is_spec(args.nu) and parse_spec(args.nu)[0] == "uniform"):
            from .ssw import SolverCompatibilityError

            raise SolverCompatibilityError(
                "uniform_closed_form compares against the exact uniform law; "
                "pass a uniform:... spec as the second input"
            )
        t0 = time.perf_counter_ns()
        est = ssw2_uniform(mu, cfg, rng)
        dt = max(time.perf_counter_ns() - t0, 1)
        m = 0
    else:
        nu = load_input(args.nu, rng)
        t0 = time.perf_counter_ns()
        est = ssw(mu, nu, cfg, rng)
        dt = max(time.perf_counter_ns() - t0, 1)
        m = nu.shape[0]

    print(json.dumps({
        "value": est.value,
        "std_error": est.std_error,
        "p": args.p,
        "L": args.L,
        "solver": args.solver,
        "seed": args.seed,
        "n_resampled_frames": est.n_resampled_frames,
    }))
    if args.out:
        method = {"binary_search": "ssw_bs", "level_median": "ssw1_levmed",
                  "uniform_closed_form": "ssw2_unif"}[args.solver]
        rec = RunRecord("compute", method, mu.shape[1], mu.shape[0], m,
                        args.L, args.p, args.seed, est.value, dt)
        _append_record(args.out, [rec])
    return 0


def _cmd_sample(args):
    import numpy as np

    from .cloudfile import save_cloud

    rng = np.random.default_rng(args.seed)
    cloud = generate_cloud(*parse_spec(args.spec), rng)
    save_cloud(args.out, cloud)
    print(f"wrote {cloud.shape[0]} points of dimension {cloud.shape[1]} to {args.out}")
    return 0


def _grid(text):
    return tuple(int(tok) for tok in text.split(","))


def _cmd_bench_runtime(args):
    from .bench import bench_runtime, records_to_csv, write_records

    records = bench_runtime(
        methods=tuple(args.methods.split(",")),
        n_grid=_grid(args.n_grid),
        L_grid=_grid(args.L_grid),
        d_grid=_grid(args.d_grid),
        repeats=args.repeats,
        seed=args.seed,
        p=args.p,
        exact_cap=args.exact_cap,
    )
    if args.out:
        write_records(args.out, records)
        print(f"wrote {len(records)} records to {args.out}")
    else:
        sys.stdout.write(records_to_csv(records))
    return 0


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise SpecError(f"--set expects key=value, got {pair!r}")
        key, val = pair.split("=", 1)
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def _cmd_experiment(args):
    from .bench import records_to_csv, run_experiment, write_records

    try:
        records = run_experiment(args.name, seed=args.seed,
                                 **_parse_overrides(args.set))
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except TypeError as exc:
        print(f"error: bad experiment override: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if args.out:
        write_records(args.out, records)
        print(f"wrote {len(records)} records to {args.out}")
    else:
        sys.stdout.write(records_to_csv(records))
    return 0


def _write_snapshots(out_dir, snapshots, final_points):
    from .cloudfile import save_cloud

    os.makedirs(out_dir, exist_ok=True)
    for step, pts in snapshots:
        save_cloud(os.path.join(out_dir, f"cloud_{step:06d}.txt"), pts)
    save_cloud(os.path.join(out_dir, "cloud_final.txt"), final_points)


def _cmd_flow(args):
    import numpy as np

    from .flows import (
        FlowConfig,
        GlaConfig,
        gla_chain,
        ssw_gradient_flow,
        sswvi_particles,
        vmf_potential,
    )
    from .ssw import SswConfig

    rng = np.random.default_rng(args.seed)
    init = load_input(args.init, rng)

    if args.kind == "ssw":
        target = None if args.target == "uniform" else load_input(args.target, rng)
        cfg = FlowConfig(step_size=args.step_size, n_steps=args.steps,
                         mode=args.mode,
                         ssw=SswConfig(p=args.p, n_projections=args.L),
                         snapshot_every=args.snapshot_every)
        res = ssw_gradient_flow(init, target, cfg, rng)
        costs = res.costs
        final = res.points
        snapshots = res.snapshots
    else:
        mu = np.asarray(_vector(args.mu))
        mu = mu / np.linalg.norm(mu)
        _, grad_v = vmf_potential(mu, args.kappa)
        gla_cfg = GlaConfig(step_size=args.gamma, grad_potential=grad_v)
        if args.kind == "gla":
            traj = gla_chain(init[0], gla_cfg, args.steps, rng)
            stride = args.snapshot_every or max(args.steps // 10, 1)
            snapshots = [(k, traj[k][None, :]) for k in range(stride, args.steps + 1, stride)]
            final = traj[-1][None, :]
            costs = np.array([])
        else:  # sswvi
            res = sswvi_particles(init, gla_cfg, args.steps, args.inner_steps,
                                  SswConfig(p=args.p, n_projections=args.L),
                                  args.step_size, rng)
            costs = res.costs
            final = res.points
            snapshots = res.snapshots

    if args.out_dir:
        _write_snapshots(args.out_dir, snapshots, final)
    summary = {"kind": args.kind, "steps": args.steps, "seed": args.seed}
    if costs.size:
        summary["initial_cost"] = float(costs[0])
        summary["final_cost"] = float(costs[-1])
    print(json.dumps(summary))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spherical-ot",
        description="Sliced optimal transport on the sphere",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="bound BLAS thread pools (env: SPHERICAL_OT_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="estimate the discrepancy of two clouds")
    c.add_argument("mu", help="cloud file or generator spec")
    c.add_argument("nu", help="cloud file or generator spec")
    c.add_argument("--p", type=int, default=2)
    c.add_argument("--L", type=int, default=100)
    c.add_argument("--solver", default="binary_search",
                   choices=("binary_search", "level_median", "uniform_closed_form"))
    c.add_argument("--eps", type=float, default=1e-6)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=None, help="append a RunRecord row to this CSV")
    c.set_defaults(fn=_cmd_compute)

    s = sub.add_parser("sample", help="write a cloud file from a generator spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=_cmd_sample)

    b = sub.add_parser("bench-runtime", help="time estimators over grids")
    b.add_argument("--methods", default="ssw_bs,ssw1_levmed,ssw2_unif,sw")
    b.add_argument("--n-grid", default="1000")
    b.add_argument("--L-grid", default="200")
    b.add_argument("--d-grid", default="3")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--p", type=int, default=2)
    b.add_argument("--exact-cap", type=int, default=2048)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=None)
    b.set_defaults(fn=_cmd_bench_runtime)

    e = sub.add_parser("experiment", help="run a named desk-scale experiment")
    e.add_argument("name")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override an experiment parameter (JSON values)")
    e.add_argument("--out", default=None)
    e.set_defaults(fn=_cmd_experiment)

    f = sub.add_parser("flow", help="particle flows and Langevin chains")
    f.add_argument("kind", choices=("ssw", "gla", "sswvi"))
    f.add_argument("--init", default="uniform:d=3,n=500")
    f.add_argument("--target", default="uniform",
                   help="'uniform', a cloud file, or a generator spec (ssw flows)")
    f.add_argument("--steps", type=int, default=500)
    f.add_argument("--inner-steps", type=int, default=20, help="sswvi only")
    f.add_argument("--step-size", type=float, default=200.0)
    f.add_argument("--mode", default="riemannian_exp",
                   choices=("riemannian_exp", "projected"))
    f.add_argument("--p", type=int, default=2)
    f.add_argument("--L", type=int, default=200)
    f.add_argument("--gamma", type=float, default=1e-3, help="Langevin step size")
    f.add_argument("--kappa", type=float, default=10.0, help="potential concentration")
    f.add_argument("--mu", default="0,0,1", help="potential location")
    f.add_argument("--snapshot-every", type=int, default=0)
    f.add_argument("--out-dir", default=None)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(fn=_cmd_flow)

    return parser


def _apply_threads(threads):
    if threads is None:
        threads = os.environ.get("SPHERICAL_OT_THREADS")
    if not threads:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(threads))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args.threads)
    # imported here so the thread variables above take effect first
    from .cloudfile import CloudFileError
    from .ssw import SolverCompatibilityError

    try:
        return args.fn(args)
    except SolverCompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (SpecError, CloudFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
