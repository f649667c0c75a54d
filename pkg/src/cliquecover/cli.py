"""Command-line interface: ``cliquecover {cover,render,graph,clique,triangle-demo}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .cliques import CliqueTimeout, EnumerationBudgetExceeded, max_clique, max_clique_no_holes
from .geometry import DimensionError
from .inflation import InflationError
from .numopt import SolverError, convex_hull_weights
from .pipeline import CSV_COLUMNS, RegionSet, UnsoundRegionError, VccConfig, dump_json, ios, vcc
from .scenes import (
    CENTROID, HOLE_THRESHOLD, SceneError, load_scene, triangle_scene,
)
from .visibility import VisibilityGraph, build_visibility_graph, sample_free_uncovered

log = logging.getLogger("cliquecover")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
RUNTIME_ERRORS = (InflationError, UnsoundRegionError, CliqueTimeout, EnumerationBudgetExceeded,
                  SolverError, RuntimeError)

CONFIG_KEYS = {"alpha", "K", "s_min", "M", "seed", "max_outer_iterations", "ios_max_regions"}


class UsageError(Exception):
    pass


def _config(doc: dict, algo: str, args) -> VccConfig:
    block = doc.get(algo, {})
    unknown = set(block) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"{algo}.{sorted(unknown)[0]}: unknown config key")
    flags = {"alpha": args.alpha, "K": args.samples_k, "s_min": args.smin,
             "M": args.coverage_samples, "seed": args.seed}
    merged = {**block, **{k: v for k, v in flags.items() if v is not None}}
    try:
        return VccConfig(**merged)
    except (TypeError, ValueError) as err:
        raise UsageError(f"invalid configuration: {err}") from err


def _append_csv(path: Path, rows) -> None:
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(CSV_COLUMNS)
        w.writerows(rows)


def _mean_std(xs):
    return statistics.fmean(xs), (statistics.stdev(xs) if len(xs) > 1 else 0.0)


def cmd_cover(args) -> int:
    env, doc = load_scene(args.scene)
    cfg = _config(doc, args.algo, args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run = vcc if args.algo == "vcc" else ios
    reports = []
    for t in range(args.trials):
        seed = cfg.seed + t
        regions, rep = run(env, replace(cfg, seed=seed), env.name)
        target = out if args.trials == 1 else out / f"seed-{seed}"
        target.mkdir(exist_ok=True)
        dump_json(regions.to_json(), target / "regions.json")
        dump_json(rep.to_json(), target / "report.json")
        if env.dimension == 2:
            from .render import render_svg
            render_svg(env, target / "regions.svg", regions.polytopes,
                       title=f"{args.algo} on {env.name}, seed {seed}: {rep.N} regions, "
                             f"coverage {rep.coverage:.3f}")
        reports.append(rep)
        print(",".join(map(str, rep.csv_row())))
    rows = [r.csv_row() for r in reports]
    if args.trials > 1:
        n_m, n_s = _mean_std([r.N for r in reports])
        t_m, t_s = _mean_std([r.runtime_s for r in reports])
        c_m, c_s = _mean_std([r.coverage for r in reports])
        summary = [args.algo, env.name, "summary", f"{n_m:.3f}±{n_s:.3f}",
                   f"{t_m:.6f}±{t_s:.6f}", f"{c_m:.6f}±{c_s:.6f}"]
        rows.append(summary)
        print(",".join(summary))
        dump_json({"trials": [r.to_json() for r in reports],
                   "summary": {"N": [n_m, n_s], "runtime_s": [t_m, t_s], "coverage": [c_m, c_s]}},
                  out / "report.json")
    _append_csv(out / "runs.csv", rows)
    unmet = [r.seed for r in reports if not r.threshold_met and not r.saturated]
    if unmet:
        print(f"warning: coverage threshold not met for seeds {unmet}", file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    from .render import render_svg
    env, _ = load_scene(args.scene)
    if env.dimension != 2:
        raise UsageError("render supports 2D only")
    with open(args.regions) as fh:
        regions = RegionSet.from_json(env, json.load(fh))
    graph = None
    if args.graph:
        with open(args.graph) as fh:
            graph = VisibilityGraph.from_json(json.load(fh))
    render_svg(env, args.out, regions.polytopes, graph=graph)
    return EXIT_OK


def cmd_graph(args) -> int:
    env, _ = load_scene(args.scene)
    pts = sample_free_uncovered(env, [], args.K, args.seed)
    build_visibility_graph(env, pts).dump(args.out)
    return EXIT_OK


def cmd_clique(args) -> int:
    with open(args.graph) as fh:
        g = VisibilityGraph.from_json(json.load(fh))
    c = max_clique_no_holes(g) if args.no_holes else max_clique(g, time_budget=args.time_budget)
    print(json.dumps(list(c.vertices)))
    return EXIT_OK


def _hull_contains(points: np.ndarray, q: np.ndarray) -> bool:
    return convex_hull_weights(q, points) is not None


def _hull_polygon(points: np.ndarray) -> np.ndarray:
    from scipy.spatial import ConvexHull
    return points[ConvexHull(points).vertices]


def cmd_triangle_demo(args) -> int:
    eps = args.epsilon
    if not 0 < eps < 1 / 3:
        raise UsageError(f"--epsilon must lie in (0, 1/3), got {eps}")
    env = triangle_scene(eps)
    pts = sample_free_uncovered(env, [], args.K, args.seed)
    g = build_visibility_graph(env, pts)
    big = max_clique(g)
    safe = max_clique_no_holes(g)
    res = {
        "epsilon": eps, "K": args.K, "seed": args.seed, "threshold": HOLE_THRESHOLD,
        "guaranteed": eps <= HOLE_THRESHOLD,
        "unconstrained": {"size": len(big), "vertices": list(big.vertices),
                          "contains_hole_centroid": _hull_contains(pts[list(big.vertices)], CENTROID)},
        "constrained": {"size": len(safe), "vertices": list(safe.vertices),
                        "contains_hole_centroid": _hull_contains(pts[list(safe.vertices)], CENTROID)},
    }
    if not res["guaranteed"]:
        print(f"note: epsilon={eps:g} exceeds 1 - sqrt(5/6) = {HOLE_THRESHOLD:.4f}; "
              "the maximum clique is NOT guaranteed to enclose the hole", file=sys.stderr)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .render import Overlay, render_svg
    overlays = [Overlay(_hull_polygon(pts[list(big.vertices)]), "red",
                        f"max clique ({len(big)})", "clique-unconstrained"),
                Overlay(_hull_polygon(pts[list(safe.vertices)]), "green",
                        f"hole-free clique ({len(safe)})", "clique-constrained")]
    render_svg(env, out / "triangle.svg", points=pts, overlays=overlays,
               title=f"epsilon={eps:g}, K={args.K}, seed={args.seed}")
    dump_json(res, out / "triangle.json")
    print(json.dumps(res, sort_keys=True))
    if len(safe) > len(big):
        print("error: hole-free clique larger than the maximum clique", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cliquecover", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cover", help="compute a convex cover of a scene")
    c.add_argument("scene")
    c.add_argument("algo", choices=("vcc", "ios"))
    c.add_argument("--alpha", type=float)
    c.add_argument("--samples-k", type=int, dest="samples_k")
    c.add_argument("--smin", type=int)
    c.add_argument("--coverage-samples", type=int, dest="coverage_samples")
    c.add_argument("--seed", type=int)
    c.add_argument("--trials", type=int, default=1)
    c.add_argument("--out", default=".")
    c.set_defaults(func=cmd_cover)

    r = sub.add_parser("render", help="draw a 2D scene and its regions as SVG")
    r.add_argument("scene")
    r.add_argument("regions")
    r.add_argument("--out", required=True)
    r.add_argument("--graph", help="visibility-graph JSON to overlay")
    r.set_defaults(func=cmd_render)

    g = sub.add_parser("graph", help="sample a visibility graph and dump it as JSON")
    g.add_argument("scene")
    g.add_argument("--K", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_graph)

    k = sub.add_parser("clique", help="solve a maximum clique on a graph JSON dump")
    k.add_argument("graph")
    k.add_argument("--no-holes", action="store_true")
    k.add_argument("--time-budget", type=float, default=60.0)
    k.set_defaults(func=cmd_clique)

    t = sub.add_parser("triangle-demo", help="triangle-with-hole clique demonstration")
    t.add_argument("--epsilon", type=float, default=0.05)
    t.add_argument("--K", type=int, default=100)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default=".")
    t.set_defaults(func=cmd_triangle_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SceneError, UsageError, DimensionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except RUNTIME_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
