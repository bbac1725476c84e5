"""Command-line front door: homology runs, simulations, and exports.

Exit codes: 0 success, 2 indeterminate result, 1 failure.  JSON output is
deterministic for identical invocations; wall-clock timings live in a
sidecar "timings" field that comparison tooling should ignore.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import catalog, gradsim, nervess
from .flowcat import (LocallyFiniteFamily, SchemaError, ValidationFailure,
                      write_category)
from .nervess import Indeterminate
from .zhom import FGAbelianGroup


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MORSEFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    n = worker_count()
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _group_json(g):
    if isinstance(g, Indeterminate):
        return {"indeterminate": g.reason, "blockers": list(g.blockers)}
    return {"rank": g.rank, "torsion": list(g.torsion)}


def _emit(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# homology
# ---------------------------------------------------------------------------

def cmd_homology(args) -> int:
    t_start = time.perf_counter()
    invocation = {"command": "homology", "example": args.example,
                  "file": args.file, "window": args.window,
                  "max_degree": args.max_degree, "format": args.format}
    try:
        if args.file:
            cat = catalog.parse_category_file(args.file)
            family = None
        else:
            built = catalog.build_example(args.example, args.window)
            if isinstance(built, LocallyFiniteFamily):
                family = built
                cat = catalog.counterexample_window(args.window)
            else:
                family = None
                cat = built
    except (SchemaError, ValidationFailure, ValueError, OSError) as exc:
        _emit({"invocation": invocation, "results": None,
               "error": str(exc)}, args.out)
        return 1

    try:
        page1 = nervess.e1_page(cat, max_r=args.max_degree)
        page2 = nervess.e2_page(page1)
        table = [nervess.total_homology(page2, n)
                 for n in range(args.max_degree + 1)]
    except (nervess.UnsupportedHomology, nervess.MissingDegreeAnnotation,
            ValueError) as exc:
        _emit({"invocation": invocation, "results": None,
               "error": str(exc)}, args.out)
        return 1
    results = {
        "objects": [p.id for p in cat.objects],
        "e1": nervess.page_to_json(page1),
        "e2": nervess.page_to_json(page2),
        "homology": {str(n): _group_json(h) for n, h in enumerate(table)},
    }
    status = "indeterminate" if any(isinstance(h, Indeterminate)
                                    for h in table) else "success"

    if family is not None:
        cert = nervess.windowed_kernel_certificate(family, 3, args.window)
        zero_rows = {f"({r},{s})": _group_json(page1.entry(r, s))
                     for (r, s) in ((1, 2), (2, 1), (3, 0))}
        certified = (cert.verdict == "KernelZeroForAllWindows" and
                     all(page1.entry(r, s).is_trivial
                         for (r, s) in ((1, 2), (2, 1), (3, 0))))
        results["family"] = {
            "window": args.window,
            "h3": _group_json(FGAbelianGroup(0)) if certified else
            {"indeterminate": "certificate failed"},
            "h3_certified_for_family": certified,
            "certificate": {
                "verdict": cert.verdict,
                "columns": cert.columns,
                "rank": cert.rank,
                "periodicity": cert.periodicity,
                "periodicity_ok": cert.periodicity_ok,
            },
            "e1_zero_checks": zero_rows,
        }
        if not certified:
            status = "indeterminate"

    report = {"invocation": invocation, "results": results, "status": status,
              "timings": {"total_s": round(time.perf_counter() - t_start, 6)}}
    if args.format == "csv":
        text = nervess.homology_to_csv(table)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        _emit(report, args.out)
    return 0 if status == "success" else 2


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _task_sign_law(cfg: gradsim.SimConfig) -> dict:
    theta = cfg.field.theta
    if theta.kind != "finite_zeros":
        theta = gradsim.ThetaSpec("finite_zeros", 4)
    fs = gradsim.FieldSpec("perturbed", cfg.field.r, theta, cfg.field.psi,
                           cfg.field.delta, cfg.field.box)
    fs2 = gradsim.FieldSpec("perturbed", cfg.field.r, theta, cfg.field.psi,
                            2.0 * cfg.field.delta, cfg.field.box)
    n = 256
    angles = [2.0 * math.pi * (j + 0.5) / n for j in range(n)]
    angles = [a for a in angles if abs(theta.on_circle(a)) > 1e-6]

    def check(pair):
        a, field = pair
        lam = gradsim.box_lambda(a, field)
        return (lam > 0) == (theta.on_circle(a) > 0)

    results = _map(check, [(a, fs) for a in angles])
    results2 = _map(check, [(a, fs2) for a in angles])
    agree, agree2 = sum(results), sum(results2)
    first_failure = next((a for a, good in zip(angles, results + results2)
                          if not good), None)
    zero_theta = gradsim.ThetaSpec("finite_zeros", 8)
    zero_fs = gradsim.FieldSpec("perturbed", cfg.field.r, zero_theta,
                                cfg.field.psi, cfg.field.delta, cfg.field.box)
    zero_lams = [abs(gradsim.box_lambda(z, zero_fs))
                 for z in zero_theta.zeros()]
    ok = (agree == len(angles) == 256 and agree2 == len(angles) and
          max(zero_lams) < 1e-6)
    summary = {
        "status": "success" if ok else "failure",
        "angles": len(angles),
        "agreement": agree,
        "delta_doubled_agreement": agree2,
        "zeros_checked": len(zero_lams),
        "zero_max_abs_lambda": max(zero_lams),
    }
    if first_failure is not None:
        summary["first_failing_angle"] = first_failure
    return summary


def _task_standard_survey(cfg: gradsim.SimConfig) -> tuple[dict, list]:
    fs = gradsim.FieldSpec("standard", cfg.field.r)
    opts = cfg.opts
    eps = cfg.cluster_eps
    rep12 = gradsim.empirical_moduli(fs, "p1", "p2", 16, opts, eps)
    rep34 = gradsim.empirical_moduli(fs, "p3", "p4", 8, opts, eps)
    trajectories = list(rep12.trajectories) + list(rep34.trajectories)

    crits = gradsim.critical_points(fs.r)
    inner = []
    for j in range(8):
        phi = 2.0 * math.pi * (j + 0.37) / 8
        u = (0.0, math.cos(phi), math.sin(phi))
        tr = gradsim.integrate(fs, gradsim.EmbeddedPoint(u, math.pi, fs.r),
                               opts, start="M0")
        inner.append(tr)
    trajectories += inner

    survey_n = max(100 - len(trajectories), 0)
    seeds = gradsim.unstable_seeds(fs, crits["p1"], survey_n)
    survey = [gradsim.integrate(fs, y0, opts, start="p1")
              for _, y0 in seeds]
    trajectories += survey
    endpoint_table: dict[str, int] = {}
    for tr in survey:
        endpoint_table[tr.end] = endpoint_table.get(tr.end, 0) + 1

    monotone = sum(1 for tr in trajectories if tr.f_monotone())
    max_y = max(tr.max_abs_y() for tr in inner)
    ok = (rep12.cluster_count == 2 and rep34.cluster_count == 2 and
          max_y <= 1e-6 and monotone == len(trajectories) and
          set(endpoint_table) <= {"p2", "p4"} and
          all(tr.end in ("p3", "p4") for tr in inner))
    summary = {
        "status": "success" if ok else "failure",
        "clusters_p1_p2": rep12.cluster_count,
        "clusters_p3_p4": rep34.cluster_count,
        "inner_sphere_max_abs_y": max_y,
        "inner_sphere_ends": sorted({tr.end for tr in inner}),
        "endpoint_table_from_p1": dict(sorted(endpoint_table.items())),
        "trajectories": len(trajectories),
        "f_monotone": monotone,
    }
    return summary, trajectories


def _task_moduli(cfg: gradsim.SimConfig) -> tuple[dict, list]:
    theta = cfg.field.theta
    if theta.kind != "finite_zeros":
        theta = gradsim.ThetaSpec("finite_zeros", 4)
    fs = gradsim.FieldSpec("perturbed", cfg.field.r, theta, cfg.field.psi,
                           cfg.field.delta, cfg.field.box)
    rep = gradsim.empirical_moduli(fs, "p2", "p3", cfg.samples, cfg.opts,
                                   cfg.cluster_eps)
    ok = rep.cluster_count == theta.k
    summary = {
        "status": "success" if ok else "failure",
        "theta_zeros": theta.k,
        "clusters_p2_p3": rep.cluster_count,
        "cluster_sizes": rep.cluster_sizes,
        "method": rep.method,
        "representatives": rep.representatives,
    }
    return summary, rep.trajectories


def cmd_simulate(args) -> int:
    t_start = time.perf_counter()
    invocation = {"command": "simulate", "task": args.task,
                  "config": args.config}
    try:
        if args.config:
            cfg = gradsim.load_config(args.config)
        else:
            cfg = gradsim.parse_config({})
    except (gradsim.ConfigError, OSError, json.JSONDecodeError) as exc:
        _emit({"invocation": invocation, "results": None,
               "error": str(exc)}, args.out)
        return 1

    trajectories: list = []
    try:
        if args.task == "sign-law":
            summary = _task_sign_law(cfg)
        elif args.task == "standard-survey":
            summary, trajectories = _task_standard_survey(cfg)
        elif args.task == "moduli":
            summary, trajectories = _task_moduli(cfg)
        else:
            raise ValueError(f"unknown task {args.task!r}")
    except (gradsim.NoConnections, gradsim.StallWithoutCapture,
            gradsim.ExitFailure, ValueError) as exc:
        _emit({"invocation": invocation, "results": None,
               "error": str(exc)}, args.out)
        return 1

    if args.dump_dir and trajectories:
        os.makedirs(args.dump_dir, exist_ok=True)
        for i, tr in enumerate(trajectories):
            path = os.path.join(args.dump_dir, f"trajectory_{i:03d}.csv")
            with open(path, "w") as fh:
                fh.write(gradsim.trajectory_csv(tr, cfg.field.r))

    report = {"invocation": invocation, "results": summary,
              "status": summary["status"],
              "timings": {"total_s": round(time.perf_counter() - t_start, 6)}}
    _emit(report, args.out)
    return 0 if summary["status"] == "success" else 1


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def cmd_export(args) -> int:
    invocation = {"command": "export", "example": args.example,
                  "window": args.window, "out": args.out}
    try:
        built = catalog.build_example(args.example, args.window)
        if isinstance(built, LocallyFiniteFamily):
            built = catalog.counterexample_window(args.window)
        write_category(built, args.out)
    except (ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({"invocation": invocation,
                                     "error": str(exc)}) + "\n")
        return 1
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morseflow",
        description="Flow-category homology engine and gradient-flow simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    hom = sub.add_parser("homology", help="compute E1/E2 pages and homology")
    src = hom.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", metavar="NAME",
                     help=f"one of {', '.join(catalog.catalog_names())}")
    src.add_argument("--file", help="category file in the JSON schema")
    hom.add_argument("--window", type=int, default=32,
                     help="window size for the infinite family (default 32)")
    hom.add_argument("--max-degree", type=int, default=3)
    hom.add_argument("--out", help="write the report here instead of stdout")
    hom.add_argument("--format", choices=("json", "csv"), default="json")
    hom.set_defaults(func=cmd_homology)

    sim = sub.add_parser("simulate", help="run a gradient-flow task suite")
    sim.add_argument("--task", required=True,
                     choices=("sign-law", "moduli", "standard-survey"))
    sim.add_argument("--config", help="simulation config JSON")
    sim.add_argument("--out", help="write the summary here instead of stdout")
    sim.add_argument("--dump-dir", help="write trajectory CSV dumps here")
    sim.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("export", help="write a catalog category file")
    exp.add_argument("--example", required=True, metavar="NAME",
                     help=f"one of {', '.join(catalog.catalog_names())}")
    exp.add_argument("--window", type=int, default=32)
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
