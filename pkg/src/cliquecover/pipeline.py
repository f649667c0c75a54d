"""Visibility Clique Cover, the IOS baseline, and Monte Carlo coverage checks."""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .cliques import truncated_clique_cover
from .geometry import Environment, HPolytope, region_obstacle_disjoint
from .inflation import (
    InflationConfig, IrisTrace, clique_to_ellipsoid, inflate_polytope_one_iteration, iris_full,
)
from .visibility import (
    CoverageSaturated, build_visibility_graph, covered_mask, make_rng, sample_free_uncovered,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("algo", "env", "seed", "N", "runtime_s", "coverage")


class UnsoundRegionError(RuntimeError):
    pass


@dataclass(frozen=True)
class VccConfig:
    alpha: float = 0.8
    K: int = 500
    s_min: int = 10
    M: int = 5000
    seed: int = 0
    max_outer_iterations: int = 50
    ios_max_regions: int = 1000
    inflation: InflationConfig = field(default_factory=InflationConfig)
    clique_time_budget: float = 60.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.K >= self.s_min >= 1:
            raise ValueError("need K >= s_min >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")


@dataclass
class Region:
    polytope: HPolytope
    iteration: int
    seed: dict

    def to_json(self) -> dict:
        return {"A": self.polytope.A.tolist(), "b": self.polytope.b.tolist(),
                "seed": self.seed, "iteration": self.iteration}

    @classmethod
    def from_json(cls, doc: dict) -> "Region":
        return cls(HPolytope(doc["A"], doc["b"]), int(doc.get("iteration", 0)), doc.get("seed", {}))


class RegionSet:
    """Ordered, append-only set of verified collision-free regions."""

    def __init__(self, env: Environment, verify: bool = True):
        self.env = env
        self.verify = verify
        self.regions: list[Region] = []
        self.coverage_log: list[float] = []

    def __len__(self) -> int:
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)

    @property
    def polytopes(self) -> list[HPolytope]:
        return [r.polytope for r in self.regions]

    def add(self, P: HPolytope, iteration: int, seed: dict) -> None:
        if self.verify:
            for k, o in enumerate(self.env.obstacles):
                if not region_obstacle_disjoint(P, o):
                    raise UnsoundRegionError(f"region from iteration {iteration} touches obstacle {k}")
        self.regions.append(Region(P, iteration, seed))

    def to_json(self) -> dict:
        return {"dimension": self.env.dimension, "regions": [r.to_json() for r in self.regions]}

    @classmethod
    def from_json(cls, env: Environment, doc: dict, verify: bool = False) -> "RegionSet":
        rs = cls(env, verify=verify)
        for r in doc["regions"]:
            reg = Region.from_json(r)
            rs.add(reg.polytope, reg.iteration, reg.seed)
        return rs


@dataclass
class RunReport:
    algo: str
    env: str
    seed: int
    N: int = 0
    runtime_s: float = 0.0
    coverage: float = 0.0
    threshold_met: bool = False
    hit_iteration_cap: bool = False
    saturated: bool = False
    iterations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    def csv_row(self) -> list:
        return [self.algo, self.env, self.seed, self.N, f"{self.runtime_s:.6f}", f"{self.coverage:.6f}"]


def _streams(seed: int):
    """Independent generators for sampling and for coverage checks."""
    ss = np.random.SeedSequence(seed)
    sample_ss, coverage_ss = ss.spawn(2)
    return (np.random.Generator(np.random.PCG64(sample_ss)),
            np.random.Generator(np.random.PCG64(coverage_ss)))


def free_samples(env: Environment, M: int, rng, max_draws: Optional[int] = None) -> np.ndarray:
    rng = make_rng(rng)
    max_draws = max_draws or 10_000 * M
    out, n, drawn = [], 0, 0
    batch = max(1024, M)
    while n < M:
        if drawn >= max_draws:
            raise RuntimeError(f"could not draw {M} free samples in {drawn} draws")
        Q = env.sample_box(rng, batch)
        drawn += batch
        Q = Q[env.free_mask(Q)][: M - n]
        out.append(Q)
        n += Q.shape[0]
    return np.vstack(out)


def check_coverage(env: Environment, regions, M: int, seed) -> float:
    """Fraction of M uniform free samples inside at least one region."""
    if M < 1:
        raise ValueError("M must be >= 1")
    polys = [r.polytope if isinstance(r, Region) else r for r in regions]
    Q = free_samples(env, M, seed)
    if not polys:
        return 0.0
    return float(covered_mask(polys, Q).mean())


def worker_count() -> int:
    n = int(os.environ.get("VCC_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def _pmap(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def vcc(env: Environment, cfg: VccConfig, name: Optional[str] = None) -> tuple[RegionSet, RunReport]:
    """Visibility Clique Cover.

    Each outer iteration samples K uncovered free points, builds their
    visibility graph, extracts a truncated clique cover, summarizes each
    clique with its minimum-volume ellipsoid and inflates one region per
    ellipsoid with a single separating pass. Stops once the estimated
    coverage exceeds alpha.
    """
    t0 = time.perf_counter()
    sample_rng, cov_rng = _streams(cfg.seed)
    regions = RegionSet(env)
    report = RunReport("vcc", name or env.name, cfg.seed)
    s_min = cfg.s_min
    workers = worker_count()
    coverage = 0.0
    for it in range(cfg.max_outer_iterations + 1):
        ti = time.perf_counter()
        coverage = check_coverage(env, regions.polytopes, cfg.M, cov_rng)
        regions.coverage_log.append(coverage)
        if coverage > cfg.alpha:
            report.threshold_met = True
            break
        if it == cfg.max_outer_iterations:
            report.hit_iteration_cap = True
            break
        try:
            pts = sample_free_uncovered(env, regions.polytopes, cfg.K, sample_rng)
        except CoverageSaturated:
            log.info("uncovered free space saturated at iteration %d", it)
            report.saturated = True
            break
        g = build_visibility_graph(env, pts, workers=workers)
        cover = truncated_clique_cover(g, s_min, cfg.clique_time_budget)
        entry = {"iteration": it, "coverage_before": coverage, "s_min": s_min,
                 "edges": g.n_edges, "cliques": [len(c) for c in cover.cliques]}
        if not cover.cliques:
            s_min = max(2, s_min // 2)
            entry.update(new_regions=0, seconds=time.perf_counter() - ti)
            report.iterations.append(entry)
            continue
        seeds = _pmap(lambda c: clique_to_ellipsoid(env, pts[list(c.vertices)]), cover.cliques, workers)
        polys = _pmap(lambda s: inflate_polytope_one_iteration(env, s, cfg.inflation), seeds, workers)
        for c, s, P in zip(cover.cliques, seeds, polys):
            regions.add(P, it, {"clique_size": len(c), "center": s.ellipsoid.d.tolist(),
                                "recentered": s.recentered})
        entry.update(new_regions=len(polys), seconds=time.perf_counter() - ti)
        report.iterations.append(entry)
    report.N = len(regions)
    report.coverage = coverage
    report.runtime_s = time.perf_counter() - t0
    return regions, report


def ios(env: Environment, cfg: VccConfig, name: Optional[str] = None) -> tuple[RegionSet, RunReport]:
    """Iterative Obstacle Seeding: full IRIS from uncovered random seeds,
    with earlier regions treated as obstacles."""
    t0 = time.perf_counter()
    sample_rng, cov_rng = _streams(cfg.seed)
    regions = RegionSet(env)
    report = RunReport("ios", name or env.name, cfg.seed)
    coverage = 0.0
    cap = cfg.ios_max_regions
    for it in range(cap + 1):
        ti = time.perf_counter()
        coverage = check_coverage(env, regions.polytopes, cfg.M, cov_rng)
        regions.coverage_log.append(coverage)
        if coverage > cfg.alpha:
            report.threshold_met = True
            break
        if it == cap:
            report.hit_iteration_cap = True
            break
        try:
            q = sample_free_uncovered(env, regions.polytopes, 1, sample_rng)[0]
        except CoverageSaturated:
            report.saturated = True
            break
        trace = IrisTrace([], 0)
        P = iris_full(env, q, cfg.inflation, regions.polytopes, trace)
        regions.add(P, it, {"point": q.tolist(), "iris_iterations": trace.iterations})
        report.iterations.append({"iteration": it, "coverage_before": coverage,
                                  "iris_iterations": trace.iterations,
                                  "seconds": time.perf_counter() - ti})
    report.N = len(regions)
    report.coverage = coverage
    report.runtime_s = time.perf_counter() - t0
    return regions, report


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
