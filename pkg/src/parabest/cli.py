"""Command-line front end: presets, custom run series, property checks.

Three subcommands:

* ``preset <name>`` runs one of the built-in benchmark presets;
* ``run`` takes the series parameters explicitly;
* ``check`` runs the in-process property suites (scheme identity,
  representation identity, mesh algebra) and reports pass or fail.

Both run subcommands write ``steps.csv``, ``summary.csv``, ``plot.py``
and ``manifest.json`` into the output directory and refuse to touch an
existing directory unless forced.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .estimators import ConstantsTable
from . import benchmark as bench


def _parse_constant(text):
    """Parse one 'k,j=v' constants override."""
    try:
        key, value = text.split("=", 1)
        k, j = key.split(",")
        return int(k), int(j), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            "constant override must look like 'k,j=value', got %r" % text)


def _parse_schedule_line(line):
    parts = line.split()
    n = int(parts[0])
    kind = parts[1]
    if kind == "refine":
        frac = float(parts[2]) if len(parts) > 2 else 0.25
        return n, ("refine", frac)
    if kind == "coarsen":
        return n, ("coarsen",)
    raise ValueError("unknown schedule action %r" % (kind,))


def load_schedule(path):
    """Mesh-change schedule file: lines '<step> refine [frac]' / '<step> coarsen'."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            n, action = _parse_schedule_line(line)
            if n in out:
                raise ValueError("duplicate schedule entry for step %d" % n)
            out[n] = action
    return out


def load_config_file(path):
    """Flat key=value config; returns a dict of strings."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("config line without '=': %r" % raw.strip())
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


_CONFIG_KEYS = {"problem", "degree", "k", "h0", "tau0", "runs", "out",
                "jobs", "alpha", "error_exactness", "data_exactness",
                "load_exactness", "schedule"}


def _apply_config_file(args, parser):
    if not args.config:
        return
    try:
        cfg = load_config_file(args.config)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        parser.error("unknown config keys: %s" % ", ".join(sorted(unknown)))
    casts = {"degree": int, "k": int, "runs": int, "jobs": int,
             "h0": float, "tau0": float, "alpha": float,
             "error_exactness": int, "data_exactness": int,
             "load_exactness": int}
    for key, raw in cfg.items():
        if getattr(args, key, None) is not None:
            continue                       # flags override the file
        try:
            value = casts.get(key, str)(raw)
        except ValueError:
            parser.error("bad value for config key %s: %r" % (key, raw))
        setattr(args, key, value)


def _add_run_options(p):
    p.add_argument("--out", help="output directory (default from "
                   "PARABEST_OUT or ./parabest-out)")
    p.add_argument("--force", action="store_true",
                   help="allow writing into an existing output directory")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes for independent runs (default 1)")
    p.add_argument("--constant", action="append", type=_parse_constant,
                   default=[], metavar="K,J=V",
                   help="override one basic estimator constant; repeatable")
    p.add_argument("--alpha", type=float, default=None,
                   help="override the ellipticity constant used by the "
                   "estimators")
    p.add_argument("--error-exactness", dest="error_exactness", type=int,
                   default=None, help="quadrature exactness of error norms")
    p.add_argument("--data-exactness", dest="data_exactness", type=int,
                   default=None, help="quadrature exactness of data terms")
    p.add_argument("--load-exactness", dest="load_exactness", type=int,
                   default=None, help="quadrature exactness of source loads")
    p.add_argument("--schedule", default=None,
                   help="mesh-change schedule file")
    p.add_argument("--config", default=None,
                   help="key=value config file; flags take precedence")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="parabest",
        description="backward Euler finite element runs with reconstruction"
        " error estimators")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_preset = sub.add_parser("preset", help="run a built-in benchmark preset")
    p_preset.add_argument("name", choices=sorted(bench.PRESETS),
                          help="preset name")
    p_preset.add_argument("--runs", type=int, default=None,
                          help="truncate or extend the run count")
    _add_run_options(p_preset)

    p_run = sub.add_parser("run", help="run a custom series")
    p_run.add_argument("--problem", choices=["slow", "fast"], default=None)
    p_run.add_argument("--degree", type=int, choices=[1, 2], default=None)
    p_run.add_argument("--k", type=int, default=None,
                       help="coupling exponent in tau = c0 h^k")
    p_run.add_argument("--h0", type=float, default=None,
                       help="coarsest mesh size")
    p_run.add_argument("--tau0", type=float, default=None,
                       help="step size of the coarsest run")
    p_run.add_argument("--runs", type=int, default=None,
                       help="number of runs (mesh halvings)")
    _add_run_options(p_run)

    p_check = sub.add_parser("check", help="run the property suites")
    p_check.add_argument("--pairs", type=int, default=25,
                         help="random mesh pairs per suite")
    p_check.add_argument("--seed", type=int, default=0)
    return parser


def _resolve_outdir(args):
    out = args.out or os.environ.get("PARABEST_OUT") or "parabest-out"
    return out


def _prepare_outdir(path, force):
    if os.path.exists(path):
        if not force:
            raise SystemExit(
                "output directory %r exists; pass --force to reuse it"
                % path)
    else:
        os.makedirs(path)


def _constants_from(args):
    if not args.constant:
        return None
    table = ConstantsTable()
    for k, j, v in args.constant:
        table.set(k, j, v)
    return table


def _series_params(args, parser):
    if args.command == "preset":
        preset = bench.PRESETS[args.name]
        return {
            "problem_label": preset.problem_label,
            "degree": preset.degree,
            "coupling": preset.coupling,
            "h0": preset.h0,
            "tau0": preset.tau0,
            "runs": args.runs if args.runs is not None else preset.runs,
        }
    required = ("problem", "degree", "k", "h0", "tau0", "runs")
    missing = [name for name in required if getattr(args, name) is None]
    if missing:
        parser.error("missing required options: %s"
                     % ", ".join("--" + m for m in missing))
    return {
        "problem_label": args.problem,
        "degree": args.degree,
        "coupling": args.k,
        "h0": args.h0,
        "tau0": args.tau0,
        "runs": args.runs,
    }


def _run_one_index(params, i, constants_spec, alpha, schedule, exactness):
    """Worker entry: run index i of the series (1-based)."""
    constants = None
    if constants_spec:
        constants = ConstantsTable()
        for k, j, v in constants_spec:
            constants.set(k, j, v)
    h = params["h0"] / 2 ** (i - 1)
    c0 = params["tau0"] / params["h0"] ** params["coupling"]
    problem = bench.problem_by_label(params["problem_label"])
    return bench.run_single(
        problem, params["degree"], h, c0 * h ** params["coupling"],
        label="run%d" % i, index=i, constants=constants, alpha=alpha,
        schedule=schedule, **exactness)


def cmd_run(args, parser):
    params = _series_params(args, parser)
    outdir = _resolve_outdir(args)
    _prepare_outdir(outdir, args.force)

    schedule = None
    if args.schedule:
        try:
            schedule = load_schedule(args.schedule)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))

    exactness = {
        "error_exactness": args.error_exactness
        if args.error_exactness is not None else bench.ERROR_EXACTNESS,
        "data_exactness": args.data_exactness
        if args.data_exactness is not None else 8,
        "load_exactness": args.load_exactness
        if args.load_exactness is not None else 8,
    }
    constants_spec = list(args.constant)
    jobs = args.jobs or 1

    t0 = time.perf_counter()
    indices = list(range(1, params["runs"] + 1))
    if jobs > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(min(jobs, len(indices))) as pool:
            results = pool.starmap(
                _run_one_index,
                [(params, i, constants_spec, args.alpha, schedule, exactness)
                 for i in indices])
    else:
        results = [_run_one_index(params, i, constants_spec, args.alpha,
                                  schedule, exactness) for i in indices]
    wall = time.perf_counter() - t0

    with open(os.path.join(outdir, "steps.csv"), "w") as fh:
        bench.write_steps_csv(fh, results)
    with open(os.path.join(outdir, "summary.csv"), "w") as fh:
        bench.write_summary_csv(fh, results)

    title = "%s degree %d, tau ~ h^%d" % (params["problem_label"],
                                          params["degree"],
                                          params["coupling"])
    if args.command == "preset":
        title = "preset %s: %s" % (args.name, title)
    with open(os.path.join(outdir, "plot.py"), "w") as fh:
        fh.write(bench.plot_script_text(title))

    manifest = {
        "tool": "parabest",
        "version": __version__,
        "command": args.command,
        "parameters": params,
        "constants": [[k, j, v] for k, j, v in constants_spec],
        "alpha": args.alpha,
        "schedule": args.schedule,
        "exactness": exactness,
        "jobs": jobs,
        "outputs": ["steps.csv", "summary.csv", "plot.py"],
        "numpy_version": np.__version__,
        "runs": [
            {"label": r.label, "h": r.h, "tau": r.tau, "steps": r.steps,
             "seconds": round(r.seconds, 3),
             "max_pointwise_defect": r.max_defect,
             "max_elliptic_gap": r.max_elliptic_gap}
            for r in results
        ],
        "wall_seconds": round(wall, 3),
    }
    if args.command == "preset":
        manifest["preset"] = args.name
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for r in results:
        print("%-6s h=%-10g tau=%-12g steps=%-6d %8.1fs"
              % (r.label, r.h, r.tau, r.steps, r.seconds))
    print("wrote %s" % os.path.join(outdir, "steps.csv"))
    print("wrote %s" % os.path.join(outdir, "summary.csv"))
    print("wrote %s" % os.path.join(outdir, "plot.py"))
    print("wrote %s" % os.path.join(outdir, "manifest.json"))
    return 0


# -- property suites ------------------------------------------------------------------


def _check_scheme_identity(report):
    from .benchmark import slow_problem
    from .evolution import Evolution
    from .fespace import FeSpace
    from .mesh import square_macro

    worst = 0.0
    for degree in (1, 2):
        problem = slow_problem()
        ev = Evolution(problem)
        state = ev.initial_state(FeSpace(square_macro(subdivisions=4),
                                         degree))
        for _ in range(5):
            state = ev.advance(state, 0.05)
            worst = max(worst, state.pointwise_defect)
    report("scheme pointwise identity (relative defect %.2e)" % worst,
           worst <= 1e-10)


def _check_representation(report, pairs, seed):
    from .assembly import CoefficientMatrix, FeFunction
    from .evolution import energy_product, representation_defect
    from .fespace import FeSpace
    from .mesh import square_macro, uniform_refine, bisect_marked

    rng = np.random.default_rng(seed)
    coef = CoefficientMatrix(np.array([[1.5, 0.2], [0.2, 1.0]]))
    base = square_macro(subdivisions=2)
    meshes = [base, uniform_refine(base),
              bisect_marked(base, [0, 1, 2])]
    worst = 0.0
    for tri in meshes:
        for degree in (1, 2):
            space = FeSpace(tri, degree)
            for _ in range(pairs):
                u = FeFunction(space, rng.standard_normal(space.n_dofs))
                v = FeFunction(space, rng.standard_normal(space.n_dofs))
                d = representation_defect(u, v, coef)
                scale = max(1.0, abs(energy_product(u, v, coef)))
                worst = max(worst, abs(d) / scale)
    report("bilinear-form representation identity (defect %.2e)" % worst,
           worst <= 1e-10)


def _check_mesh_algebra(report, pairs, seed):
    from .mesh import (
        coarsest_common_refinement,
        finest_common_coarsening,
        is_refinement_of,
        meshsize,
        check_conformity,
    )

    rng = np.random.default_rng(seed + 1)
    ok = True
    detail = ""
    try:
        from .mesh import square_macro, bisect_marked
        for trial in range(pairs):
            base = square_macro(subdivisions=2)
            a = _random_refine(base, rng, bisect_marked)
            b = _random_refine(base, rng, bisect_marked)
            lo = coarsest_common_refinement(a, b)
            hi = finest_common_coarsening(a, b)
            for tri in (a, b, lo, hi):
                check_conformity(tri)
            if not (is_refinement_of(lo, a) and is_refinement_of(lo, b)):
                raise AssertionError("join does not refine both operands")
            if not (is_refinement_of(a, hi) and is_refinement_of(b, hi)):
                raise AssertionError("meet is not coarser than both")
            pts = rng.uniform(-0.95, 0.95, size=(8, 2))
            ha = meshsize(a)
            hb = meshsize(b)
            hlo = meshsize(lo)
            hhi = meshsize(hi)
            for x, y in pts:
                sa, sb = ha.value_at(x, y), hb.value_at(x, y)
                if abs(hlo.value_at(x, y) - min(sa, sb)) > 1e-12:
                    raise AssertionError("join size is not the minimum")
                if abs(hhi.value_at(x, y) - max(sa, sb)) > 1e-12:
                    raise AssertionError("meet size is not the maximum")
    except AssertionError as exc:
        ok = False
        detail = " (%s)" % exc
    report("mesh lattice algebra on %d random pairs%s" % (pairs, detail), ok)


def _random_refine(tri, rng, bisect_marked):
    for _ in range(int(rng.integers(1, 4))):
        ne = tri.element_count
        marks = np.flatnonzero(rng.random(ne) < 0.3)
        if len(marks) == 0:
            marks = [int(rng.integers(0, ne))]
        tri = bisect_marked(tri, marks)
    return tri


def cmd_check(args):
    failures = []

    def report(name, ok):
        print("%s %s" % ("PASS" if ok else "FAIL", name))
        if not ok:
            failures.append(name)

    _check_scheme_identity(report)
    _check_representation(report, max(1, args.pairs), args.seed)
    _check_mesh_algebra(report, max(1, args.pairs), args.seed)
    if failures:
        print("%d check(s) failed" % len(failures))
        return 1
    print("all checks passed")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is not None:
        _apply_config_file(args, parser)
    try:
        if args.command in ("preset", "run"):
            return cmd_run(args, parser)
        if args.command == "check":
            return cmd_check(args)
    except SystemExit:
        raise
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    parser.error("unknown command %r" % args.command)


if __name__ == "__main__":
    sys.exit(main())
