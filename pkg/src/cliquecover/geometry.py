"""Geometric types and exact predicates for box domains with convex obstacles.

Conventions: obstacle boundaries count as collision, domain boundaries count
as free. Membership uses a single tolerance ``TOL``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

TOL = 1e-9
SOLVER_TOL = 1e-7


class DimensionError(ValueError):
    pass


def _vec(x, name="point") -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def _check_dim(q: np.ndarray, n: int):
    if q.shape[-1] != n:
        raise DimensionError(f"expected a {n}-D point, got {q.shape[-1]}-D")


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True, eq=False)
class HPolytope:
    """Intersection of half-spaces {q : A q <= b}."""
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        b = np.array(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.size} entries")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("polytope data must be finite")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise ValueError("polytope has a zero face normal")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_box(cls, lower, upper) -> "HPolytope":
        lo, hi = _vec(lower, "lower"), _vec(upper, "upper")
        n = lo.size
        eye = np.eye(n)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, q, tol: float = TOL) -> bool:
        q = _vec(q)
        _check_dim(q, self.dim)
        return bool(np.all(self.A @ q <= self.b + tol))

    def contains_many(self, Q, tol: float = TOL) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        _check_dim(Q, self.dim)
        return np.all(Q @ self.A.T <= self.b + tol, axis=1)

    def normalized(self) -> "HPolytope":
        norms = np.linalg.norm(self.A, axis=1)
        return HPolytope(self.A / norms[:, None], self.b / norms)

    def intersect(self, other: "HPolytope") -> "HPolytope":
        return HPolytope(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]))

    @cached_property
    def is_bounded(self) -> bool:
        from .numopt import polytope_is_bounded
        return polytope_is_bounded(self)

    @cached_property
    def chebyshev(self) -> tuple[np.ndarray, float]:
        from .numopt import chebyshev_center
        return chebyshev_center(self)

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertices of a bounded, full-dimensional polytope (k x n)."""
        from scipy.spatial import HalfspaceIntersection
        center, radius = self.chebyshev
        if radius <= TOL:
            raise ValueError("polytope has no interior; cannot enumerate vertices")
        hs = HalfspaceIntersection(np.hstack([self.A, -self.b[:, None]]), center)
        V = np.unique(np.round(hs.intersections, 12), axis=0)
        V.setflags(write=False)
        return V

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        V = self.vertices
        return V.min(axis=0), V.max(axis=0)

    def volume(self) -> float:
        from scipy.spatial import ConvexHull
        return float(ConvexHull(self.vertices).volume)


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Half-space {q : a'q <= b}; its boundary is the hyperplane."""
    a: np.ndarray
    b: float

    def __post_init__(self):
        a = _vec(self.a, "normal")
        if np.linalg.norm(a) == 0:
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def side(self, q) -> float:
        return float(self.a @ _vec(q) - self.b)


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Affine image of the unit ball, {C u + d : |u| <= 1}."""
    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.array(self.C, dtype=float))
        d = _vec(self.d, "center")
        if C.shape != (d.size, d.size):
            raise ValueError(f"shape matrix {C.shape} does not match center of size {d.size}")
        if abs(np.linalg.det(C)) < 1e-12:
            raise ValueError("ellipsoid shape matrix is singular")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "d", d)

    @property
    def dim(self) -> int:
        return self.d.size

    @cached_property
    def Cinv(self) -> np.ndarray:
        return np.linalg.inv(self.C)

    @property
    def metric(self) -> np.ndarray:
        """W such that |C^-1 (x - d)|^2 = (x - d)' W (x - d)."""
        return self.Cinv.T @ self.Cinv

    @property
    def volume(self) -> float:
        return abs(np.linalg.det(self.C)) * unit_ball_volume(self.dim)

    def metric_distance(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm((X - self.d) @ self.Cinv.T, axis=1)

    def contains(self, q, tol: float = TOL) -> bool:
        return bool(self.metric_distance(q)[0] <= 1.0 + tol)

    def scaled(self, s: float) -> "Ellipsoid":
        return Ellipsoid(s * self.C, self.d)

    def recentered(self, d) -> "Ellipsoid":
        return Ellipsoid(self.C, d)

    def boundary_points(self, k: int, rng=None) -> np.ndarray:
        """k points on the boundary; evenly spaced in 2-D, random directions otherwise."""
        n = self.dim
        if n == 2 and rng is None:
            th = np.linspace(0.0, 2 * np.pi, k, endpoint=False)
            U = np.column_stack([np.cos(th), np.sin(th)])
        else:
            rng = np.random.default_rng(rng)
            U = rng.standard_normal((k, n))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
        return U @ self.C.T + self.d


@dataclass(frozen=True, eq=False)
class SphereObstacle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "center"))
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size

    def contains_many(self, Q, tol: float = TOL) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        return np.linalg.norm(Q - self.center, axis=1) <= self.radius + tol

    def segments_hit(self, P, Q, tol: float = TOL) -> np.ndarray:
        """Vectorized: does segment P[i]-Q[i] touch the closed ball."""
        D = Q - P
        dd = np.einsum("ij,ij->i", D, D)
        t = np.where(dd > 0, np.einsum("ij,ij->i", self.center - P, D) / np.where(dd > 0, dd, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        closest = P + t[:, None] * D
        return np.linalg.norm(closest - self.center, axis=1) <= self.radius + tol

    def min_support(self, a: np.ndarray) -> float:
        """min over the obstacle of a'x."""
        return float(a @ self.center - self.radius * np.linalg.norm(a))

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def to_json(self) -> dict:
        return {"type": "sphere", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class PolytopeObstacle:
    polytope: HPolytope
    kind: str = "polytope"  # "box" when built from bounds; only affects serialization

    @property
    def dim(self) -> int:
        return self.polytope.dim

    def contains_many(self, Q, tol: float = TOL) -> np.ndarray:
        return self.polytope.contains_many(Q, tol)

    def segments_hit(self, P, Q, tol: float = TOL) -> np.ndarray:
        """Vectorized 1-D LP over the segment parameter t in [0, 1].

        Each face a'x <= b + tol restricts t to a half-line; the segment
        meets the closed obstacle iff the intersected interval is nonempty.
        """
        A, b = self.polytope.A, self.polytope.b
        num = b + tol - P @ A.T          # (k, m): need t * den <= num
        den = (Q - P) @ A.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = num / den
        upper = np.where(den > 0, ratio, np.inf).min(axis=1)
        lower = np.where(den < 0, ratio, -np.inf).max(axis=1)
        parallel_ok = np.all((den != 0) | (num >= 0), axis=1)
        lo = np.maximum(lower, 0.0)
        hi = np.minimum(upper, 1.0)
        return parallel_ok & (lo <= hi)

    def min_support(self, a: np.ndarray) -> float:
        return float(np.min(self.polytope.vertices @ a))

    def bounding_box(self):
        return self.polytope.bounding_box()

    def to_json(self) -> dict:
        if self.kind == "box":
            lo, hi = self.bounding_box()
            return {"type": "box", "lower": lo.tolist(), "upper": hi.tolist()}
        return {"type": "polytope", "A": self.polytope.A.tolist(), "b": self.polytope.b.tolist()}


ConvexObstacle = Union[SphereObstacle, PolytopeObstacle]


def box_obstacle(lower, upper) -> PolytopeObstacle:
    return PolytopeObstacle(HPolytope.from_box(lower, upper), kind="box")


@dataclass(frozen=True, eq=False)
class Environment:
    """Axis-aligned box domain minus a list of convex obstacles."""
    lower: np.ndarray
    upper: np.ndarray
    obstacles: tuple = field(default_factory=tuple)
    name: str = "scene"

    def __post_init__(self):
        lo, hi = _vec(self.lower, "lower"), _vec(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ValueError("domain bounds have different lengths")
        if not np.all(lo < hi):
            raise ValueError("domain lower bound must be below upper bound in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        obs = tuple(self.obstacles)
        for o in obs:
            if o.dim != lo.size:
                raise DimensionError(f"obstacle of dimension {o.dim} in a {lo.size}-D environment")
        object.__setattr__(self, "obstacles", obs)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @cached_property
    def domain(self) -> HPolytope:
        return HPolytope.from_box(self.lower, self.upper)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def free_mask(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        _check_dim(Q, self.dimension)
        ok = np.all((Q >= self.lower - TOL) & (Q <= self.upper + TOL), axis=1)
        for o in self.obstacles:
            ok &= ~o.contains_many(Q)
        return ok

    def sample_box(self, rng: np.random.Generator, k: int) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * rng.random((k, self.dimension))


def polytope_contains(P: HPolytope, q) -> bool:
    return P.contains(q)


def point_in_free_space(env: Environment, q) -> bool:
    q = _vec(q)
    _check_dim(q, env.dimension)
    return bool(env.free_mask(q[None, :])[0])


def segments_free(env: Environment, P, Q) -> np.ndarray:
    """Exact visibility for many segments at once; endpoints are assumed free."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    ok = np.ones(P.shape[0], dtype=bool)
    for o in env.obstacles:
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            break
        ok[idx] = ~o.segments_hit(P[idx], Q[idx])
    return ok


def segment_in_free_space(env: Environment, q, q2, exact: bool = True,
                          step: float | None = None) -> bool:
    """Whether the closed segment q-q2 lies in the free space.

    The default is exact. ``exact=False`` checks points spaced ``step`` apart
    (default 1e-3 of the domain diagonal) instead.
    """
    q, q2 = _vec(q), _vec(q2)
    _check_dim(q, env.dimension)
    _check_dim(q2, env.dimension)
    if not (point_in_free_space(env, q) and point_in_free_space(env, q2)):
        raise ValueError("segment endpoints must be collision-free")
    if exact:
        return bool(segments_free(env, q[None, :], q2[None, :])[0])
    step = step or 1e-3 * env.diameter
    k = max(2, int(np.ceil(np.linalg.norm(q2 - q) / step)) + 1)
    t = np.linspace(0.0, 1.0, k)[:, None]
    return bool(np.all(env.free_mask(q + t * (q2 - q))))


def region_obstacle_disjoint(P: HPolytope, o: ConvexObstacle) -> bool:
    """Exact test that a bounded region and an obstacle do not touch.

    Polytope obstacles: the LP min t s.t. both (row-normalized) polytopes
    inflated by t intersect; disjoint iff t* > TOL. Spheres: distance from the
    center to P must exceed radius + TOL.
    """
    from .numopt import LpProblem, lp_solve, project_onto_polytope
    if P.dim != o.dim:
        raise DimensionError("region and obstacle dimensions differ")
    if not P.is_bounded:
        raise ValueError("region is unbounded")
    if isinstance(o, SphereObstacle):
        x = project_onto_polytope(P, o.center)
        return bool(np.linalg.norm(x - o.center) > o.radius + TOL)
    Pn, On = P.normalized(), o.polytope.normalized()
    A = np.vstack([Pn.A, On.A])
    b = np.concatenate([Pn.b, On.b])
    n = P.dim
    c = np.zeros(n + 1)
    c[-1] = 1.0
    res = lp_solve(LpProblem(c, np.hstack([A, -np.ones((A.shape[0], 1))]), b,
                             bounds=[(None, None)] * (n + 1)))
    if not res.optimal:
        raise RuntimeError(f"disjointness LP ended with status {res.status}")
    return bool(res.fun > TOL)


def polygon_vertices_2d(P: HPolytope, tol: float = 1e-9) -> np.ndarray:
    """Counter-clockwise vertices of a bounded 2-D polytope.

    Pairwise face intersections filtered by containment; fine for a few
    hundred faces.
    """
    if P.dim != 2:
        raise DimensionError("polygon_vertices_2d needs a 2-D polytope")
    A, b = P.A, P.b
    pts = []
    m = A.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            M = A[[i, j]]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, b[[i, j]])
            if np.all(A @ x <= b + tol * max(1.0, np.abs(b).max())):
                pts.append(x)
    if not pts:
        return np.zeros((0, 2))
    V = np.unique(np.round(np.array(pts), 10), axis=0)
    c = V.mean(axis=0)
    order = np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))
    return V[order]


def as_points(points: Sequence) -> np.ndarray:
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(X)):
        raise ValueError("points must be finite")
    return X
