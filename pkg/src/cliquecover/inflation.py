"""Clique summaries as ellipsoids and IRIS-style polytope inflation."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .geometry import (
    Ellipsoid, Environment, HPolytope, PolytopeObstacle,
    point_in_free_space,
)
from .numopt import max_volume_inscribed_ellipsoid, min_volume_ellipsoid, project_onto_polytope

log = logging.getLogger(__name__)


class InflationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeedEllipsoid:
    ellipsoid: Ellipsoid
    clique_size: int
    recentered: bool = False


@dataclass(frozen=True)
class InflationConfig:
    max_hyperplanes: Optional[int] = None   # default 10 n + number of obstacles
    boundary_backoff: float = 1e-8
    ios_max_iterations: int = 10
    ios_termination_threshold: float = 0.02

    def __post_init__(self):
        if self.boundary_backoff < 0:
            raise ValueError("boundary_backoff must be >= 0")
        if self.ios_max_iterations < 1 or self.ios_termination_threshold <= 0:
            raise ValueError("IOS iteration settings must be positive")


def clique_to_ellipsoid(env: Environment, points, eps: float = 1e-4) -> SeedEllipsoid:
    """MVEE of a clique; recentered on the nearest clique vertex if its center collides."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    E = min_volume_ellipsoid(X, eps).ellipsoid
    if point_in_free_space(env, E.d):
        return SeedEllipsoid(E, X.shape[0], False)
    nearest = X[int(np.argmin(np.linalg.norm(X - E.d, axis=1)))]
    return SeedEllipsoid(E.recentered(nearest), X.shape[0], True)


def _closest_point(o, E: Ellipsoid) -> np.ndarray:
    """Point of obstacle ``o`` closest to the ellipsoid center in its metric."""
    W = E.metric
    if isinstance(o, PolytopeObstacle):
        return project_onto_polytope(o.polytope, E.d, W)
    if isinstance(o, HPolytope):
        return project_onto_polytope(o, E.d, W)
    # ball: x(mu) = (W + mu I)^-1 (W d + mu c) with |x(mu) - c| = r
    lam, V = np.linalg.eigh(W)
    e = V.T @ (E.d - o.center)
    if np.linalg.norm(e) <= o.radius:
        return E.d.copy()

    def excess(mu):
        return np.linalg.norm(lam * e / (lam + mu)) - o.radius

    hi = 1.0
    while excess(hi) > 0:
        hi *= 4.0
    mu = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    x = o.center + V @ (lam * e / (lam + mu))
    # snap onto the sphere surface
    return o.center + o.radius * (x - o.center) / np.linalg.norm(x - o.center)


def _min_support(o, a: np.ndarray) -> float:
    if isinstance(o, HPolytope):
        return float(np.min(o.vertices @ a))
    return o.min_support(a)


def _contains_point(o, q: np.ndarray) -> bool:
    if isinstance(o, HPolytope):
        return bool(o.contains_many(q[None, :])[0])
    return bool(o.contains_many(q[None, :])[0])


def separating_pass(env: Environment, E: Ellipsoid, extra_obstacles: Sequence[HPolytope] = (),
                    cfg: InflationConfig = InflationConfig()) -> HPolytope:
    """One IRIS separating-hyperplane pass around ellipsoid E.

    Obstacles are visited in order of metric distance from the center; each
    visit adds the hyperplane tangent to the metric level set at the closest
    point and drops every obstacle lying wholly beyond it. Domain faces come
    last.
    """
    d = E.d
    obstacles = list(env.obstacles) + list(extra_obstacles)
    for o in obstacles:
        if _contains_point(o, d):
            raise InflationError("ellipsoid center is in collision")
    if not np.all((d >= env.lower) & (d <= env.upper)):
        raise InflationError("ellipsoid center is outside the domain")
    budget = cfg.max_hyperplanes or 10 * env.dimension + len(obstacles)
    W = E.metric
    closest = [_closest_point(o, E) for o in obstacles]
    dist = [float(E.metric_distance(x)[0]) for x in closest]
    order = sorted(range(len(obstacles)), key=lambda i: (dist[i], i))
    excluded = np.zeros(len(obstacles), dtype=bool)
    rows, offsets = [], []
    for i in order:
        if excluded[i]:
            continue
        if len(rows) >= budget:
            raise InflationError(f"hyperplane budget of {budget} exceeded")
        x = closest[i]
        a = W @ (x - d)
        na = np.linalg.norm(a)
        if na == 0:
            raise InflationError("ellipsoid center touches an obstacle")
        b = float(a @ x)
        # back off toward the center, but never past half the center's slack
        backoff = min(cfg.boundary_backoff, 0.5 * (b - a @ d) / na)
        rows.append(a)
        offsets.append(b - backoff * na)
        excluded[i] = True
        for j in order:
            if not excluded[j] and _min_support(obstacles[j], a) >= b:
                excluded[j] = True
    dom = env.domain
    A = np.vstack(rows + [dom.A]) if rows else dom.A
    bvec = np.concatenate([offsets, dom.b]) if rows else dom.b
    return HPolytope(A, bvec)


def inflate_polytope_one_iteration(env: Environment, seed: SeedEllipsoid | Ellipsoid,
                                   cfg: InflationConfig = InflationConfig()) -> HPolytope:
    E = seed.ellipsoid if isinstance(seed, SeedEllipsoid) else seed
    if not point_in_free_space(env, E.d):
        raise InflationError("seed ellipsoid center is in collision")
    return separating_pass(env, E, (), cfg)


@dataclass
class IrisTrace:
    volumes: list
    iterations: int


def iris_full(env: Environment, seed, cfg: InflationConfig = InflationConfig(),
              extra_obstacles: Sequence[HPolytope] = (), trace: Optional[IrisTrace] = None) -> HPolytope:
    """IRIS to convergence from a point seed, treating ``extra_obstacles`` as obstacles.

    Alternates the separating pass with the maximum-volume inscribed
    ellipsoid until its relative volume growth falls below the threshold.
    """
    q = np.asarray(seed, dtype=float).ravel()
    if not point_in_free_space(env, q):
        raise InflationError("IRIS seed is in collision")
    for k, R in enumerate(extra_obstacles):
        if R.contains(q):
            raise InflationError(f"IRIS seed lies inside extra obstacle {k}")
    n = env.dimension
    E = Ellipsoid(np.eye(n) * 1e-3 * env.diameter, q)
    prev_vol = None
    volumes = []
    P = None
    it = 0
    for it in range(1, cfg.ios_max_iterations + 1):
        P = separating_pass(env, E, extra_obstacles, cfg)
        E_new = max_volume_inscribed_ellipsoid(P)
        vol = E_new.volume
        volumes.append(vol)
        if prev_vol is not None and (vol - prev_vol) / prev_vol < cfg.ios_termination_threshold:
            break
        if prev_vol is None and P.A.shape == env.domain.A.shape:
            break  # nothing to separate from: the domain is already the fixed point
        prev_vol = vol
        E = E_new
    if trace is not None:
        trace.volumes = volumes
        trace.iterations = it
    return P
