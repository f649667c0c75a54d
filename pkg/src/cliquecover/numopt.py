"""Small dense convex solvers used by the geometric predicates and inflation.

Everything here works on plain numpy arrays or on the geometry types, and is
stateless: concurrent calls on independent problems are safe.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .geometry import TOL, SOLVER_TOL, Ellipsoid, HPolytope, Hyperplane


class SolverError(RuntimeError):
    """Raised when a subproblem solver fails for numerical reasons."""


@dataclass(frozen=True)
class LpProblem:
    """minimize c @ x subject to A @ x <= b, optional equalities and bounds."""
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: object = (None, None)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape != (b.size, c.size):
            raise ValueError(f"constraint shape {A.shape} does not match b ({b.size}) and c ({c.size})")
        for arr in (c, A, b):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray] = None
    fun: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def lp_solve(p: LpProblem) -> LpResult:
    """Solve a small dense LP with the HiGHS dual simplex."""
    res = linprog(
        p.c, A_ub=p.A if p.A.size else None, b_ub=p.b if p.A.size else None,
        A_eq=p.A_eq, b_eq=p.b_eq, bounds=p.bounds, method="highs-ds",
        options={"primal_feasibility_tolerance": SOLVER_TOL,
                 "dual_feasibility_tolerance": SOLVER_TOL},
    )
    if res.status == 0:
        return LpResult("optimal", np.asarray(res.x), float(res.fun))
    if res.status == 2:
        return LpResult("infeasible")
    if res.status == 3:
        return LpResult("unbounded")
    raise SolverError(f"LP solver failed (status {res.status}): {res.message}")


def _as_arrays(P):
    if isinstance(P, HPolytope):
        return P.A, P.b
    A, b = P
    return np.atleast_2d(np.asarray(A, dtype=float)), np.asarray(b, dtype=float).ravel()


def nnls(E: np.ndarray, f: np.ndarray, max_iter: Optional[int] = None) -> np.ndarray:
    """Lawson-Hanson active-set solution of min |E u - f| subject to u >= 0."""
    m, k = E.shape
    max_iter = max_iter or 30 * k + 30
    u = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    tol = 10 * np.finfo(float).eps * np.linalg.norm(E, 1) * max(m, k)
    for _ in range(max_iter):
        w = E.T @ (f - E @ u)
        cand = ~passive & (w > tol)
        if not cand.any():
            return u
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        passive[j] = True
        while True:
            z = np.zeros(k)
            z[passive] = np.linalg.lstsq(E[:, passive], f, rcond=None)[0]
            if np.all(z[passive] > 0):
                u = z
                break
            neg = passive & (z <= 0)
            alpha = np.min(u[neg] / (u[neg] - z[neg]))
            u = u + alpha * (z - u)
            passive &= u > tol
            u[~passive] = 0.0
    raise SolverError("NNLS did not converge")


def project_onto_polytope(P, y, W=None) -> np.ndarray:
    """Return argmin over x in P of (x - y)' W (x - y).

    Solved as a least-distance program in the whitened coordinates
    z = L'(x - y), W = L L', through the Lawson-Hanson NNLS reduction.
    Raises ValueError if P is empty.
    """
    A, b = _as_arrays(P)
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if A.shape[1] != n:
        raise ValueError(f"dimension mismatch: polytope is {A.shape[1]}-D, point is {n}-D")
    slack = b - A @ y
    if np.all(slack >= 0):
        return y.copy()
    if W is None:
        Linv_T = np.eye(n)
    else:
        L = np.linalg.cholesky(np.asarray(W, dtype=float))
        Linv_T = np.linalg.inv(L).T
    # least distance: min |z| s.t. G z >= h
    G = -A @ Linv_T
    h = -slack
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u = nnls(E, f)
    r = E @ u - f
    if abs(r[-1]) < 1e-14 or np.linalg.norm(r) < 1e-12:
        raise ValueError("cannot project onto an empty polytope")
    z = -r[:n] / r[-1]
    return y + Linv_T @ z


def chebyshev_center(P) -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside P. Radius <= 0 means no interior."""
    A, b = _as_arrays(P)
    n = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = lp_solve(LpProblem(c, np.hstack([A, norms[:, None]]), b,
                             bounds=[(None, None)] * n + [(None, 1e6)]))
    if res.status == "infeasible":
        raise ValueError("polytope is empty")
    if not res.optimal:
        raise SolverError("Chebyshev center LP is unbounded")
    return res.x[:n], float(res.x[-1])


def polytope_is_bounded(P) -> bool:
    A, b = _as_arrays(P)
    n = A.shape[1]
    for k in range(n):
        for sign in (1.0, -1.0):
            c = np.zeros(n)
            c[k] = -sign
            res = lp_solve(LpProblem(c, A, b, bounds=[(None, None)] * n))
            if res.status == "unbounded":
                return False
            if res.status == "infeasible":
                return True  # empty sets are bounded
    return True


def convex_hull_weights(q, S) -> Optional[np.ndarray]:
    """Convex-combination weights w >= 0, sum w = 1, S' w = q, or None.

    The simplex returns a basic solution, so at most n+1 weights are nonzero.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    q = np.asarray(q, dtype=float).ravel()
    k = S.shape[0]
    A_eq = np.vstack([S.T, np.ones((1, k))])
    b_eq = np.concatenate([q, [1.0]])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status == 2:
        return None
    if res.status != 0:
        raise SolverError(f"hull-membership LP failed: {res.message}")
    w = np.clip(res.x, 0.0, None)
    return w / w.sum()


def separating_hyperplane(q, S) -> Optional[Hyperplane]:
    """Strictly separate q from conv(S), or return None if q lies in the hull.

    Maximizes the margin t with -1 <= c <= 1 and t <= 1; a positive optimum is
    rescaled so that c'q + d >= 1 and c's + d <= 0 for all s in S. The
    returned half-space {x : a'x <= b} contains S and excludes q.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    q = np.asarray(q, dtype=float).ravel()
    if S.shape[0] == 0:
        raise ValueError("S must be nonempty")
    n = q.size
    # variables (c, d, t); maximize t
    obj = np.zeros(n + 2)
    obj[-1] = -1.0
    rows = [np.hstack([S, np.ones((S.shape[0], 1)), np.zeros((S.shape[0], 1))]),
            np.hstack([-q, [-1.0, 1.0]])[None, :]]
    A = np.vstack(rows)
    b = np.zeros(A.shape[0])
    bounds = [(-1.0, 1.0)] * n + [(None, None), (None, 1.0)]
    res = lp_solve(LpProblem(obj, A, b, bounds=bounds))
    if not res.optimal:
        raise SolverError("separation LP did not reach an optimum")
    t = -res.fun
    if t <= TOL:
        return None
    c, d = res.x[:n] / t, res.x[n] / t
    # c'x + d <= 0 on S  <=>  c'x <= -d
    return Hyperplane(c, -d)


@dataclass(frozen=True)
class MveeResult:
    ellipsoid: Ellipsoid
    weights: np.ndarray
    gap: float
    degenerate: bool = False


def _khachiyan(P: np.ndarray, eps: float, max_iter: int):
    """Dual weights of the MVEE of the rows of P (full-dimensional case).

    Khachiyan steps toward the most violated point, Wolfe-Atwood away steps
    from the least useful support point.
    """
    m, n = P.shape
    Q = np.hstack([P, np.ones((m, 1))])
    u = np.full(m, 1.0 / m)
    d1 = n + 1
    gap = np.inf
    for _ in range(max_iter):
        X = Q.T @ (u[:, None] * Q)
        try:
            Xinv_Q = np.linalg.solve(X, Q.T)
        except np.linalg.LinAlgError as err:
            raise SolverError("MVEE moment matrix became singular") from err
        M = np.einsum("ij,ji->i", Q, Xinv_Q)
        j = int(np.argmax(M))
        support = u > 0
        Ms = np.where(support, M, np.inf)
        k = int(np.argmin(Ms))
        eps_plus = M[j] / d1 - 1.0
        eps_minus = 1.0 - M[k] / d1
        gap = max(eps_plus, eps_minus)
        if gap <= eps:
            break
        if eps_plus >= eps_minus:
            beta = (M[j] - d1) / (d1 * (M[j] - 1.0))
            u *= 1.0 - beta
            u[j] += beta
        else:
            drop = -u[k] / (1.0 - u[k])
            beta = (M[k] - d1) / (d1 * (M[k] - 1.0)) if M[k] > 1.0 else drop
            beta = max(beta, drop)
            u *= 1.0 - beta
            u[k] += beta
            u[u < 0] = 0.0
    return u, gap


def min_volume_ellipsoid(points, eps: float = 1e-4, max_iter: int = 100_000) -> MveeResult:
    """Minimum-volume ellipsoid enclosing a point cloud.

    Affinely degenerate clouds are solved in their affine hull and the
    missing axes are floored to 1e-6 times the largest axis.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m, n = P.shape
    if m < 2:
        raise ValueError("need at least 2 points")
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 0.5]")
    mean = P.mean(axis=0)
    X = P - mean
    _, sv, Vt = np.linalg.svd(X, full_matrices=False)
    if sv[0] <= 1e-12 * max(1.0, np.abs(P).max()):
        raise ValueError("all points are identical")
    rank = int(np.sum(sv > 1e-7 * sv[0]))
    basis = Vt[:rank]  # rank x n
    Y = X @ basis.T
    u, gap = _khachiyan(Y, eps, max_iter)
    c = u @ Y
    Sigma = (Y * u[:, None]).T @ Y - np.outer(c, c)
    Sinv = np.linalg.inv(Sigma)
    diff = Y - c
    scale = np.max(np.einsum("ij,jk,ik->i", diff, Sinv, diff))
    w, V = np.linalg.eigh(Sigma * scale)
    axes = np.sqrt(np.clip(w, 0.0, None))
    # shape in the full space: C = B' V diag(axes) V' B + floor on the complement
    C_sub = V @ np.diag(axes) @ V.T
    C = basis.T @ C_sub @ basis
    degenerate = rank < n
    if degenerate:
        floor = 1e-6 * axes.max()
        _, _, Vfull = np.linalg.svd(X, full_matrices=True)
        comp = Vfull[rank:]
        C = C + floor * comp.T @ comp
    center = mean + c @ basis
    return MveeResult(Ellipsoid(C, center), u, float(max(gap, 0.0)), degenerate)


def max_volume_inscribed_ellipsoid(P, tol: float = 1e-5, max_newton: int = 200) -> Ellipsoid:
    """Largest-volume ellipsoid {L u + d : |u| <= 1} inside {x : A x <= b}.

    L is kept lower triangular with positive diagonal, which makes both the
    log-det objective and the constraints |L'a_i| + a_i'd <= b_i convex in
    (L, d). Solved with a log-barrier Newton method to a duality gap of
    tol/10 in log-volume.
    """
    A, b = _as_arrays(P)
    m, n = A.shape
    tri = [(j, k) for j in range(n) for k in range(j + 1)]
    nl = len(tri)
    diag_idx = np.array([i for i, (j, k) in enumerate(tri) if j == k])
    # s_i = L' a_i = Mstack[i] @ ell
    Mstack = np.zeros((m, n, nl))
    for idx, (j, k) in enumerate(tri):
        Mstack[:, k, idx] = A[:, j]

    center, radius = chebyshev_center((A, b))
    if radius <= 0:
        raise ValueError("polytope has empty interior")
    ell = np.zeros(nl)
    ell[diag_idx] = 0.5 * radius
    x = np.concatenate([ell, center])

    def parts(x):
        ell, d = x[:nl], x[nl:]
        s = np.einsum("ikl,l->ik", Mstack, ell)
        r = np.linalg.norm(s, axis=1)
        g = b - A @ d - r
        return ell, d, s, r, g

    def feasible(x):
        ell, _, _, _, g = parts(x)
        return np.all(ell[diag_idx] > 0) and np.all(g > 0)

    def value(x, t):
        ell, _, _, _, g = parts(x)
        return -t * np.sum(np.log(ell[diag_idx])) - np.sum(np.log(g))

    t = 1.0
    n_log = m + n
    while True:
        for _ in range(max_newton):
            ell, d, s, r, g = parts(x)
            # gradient / Hessian of -sum log g
            dg_ell = -np.einsum("ikl,ik->il", Mstack, s / r[:, None])
            dg = np.hstack([dg_ell, -A])
            grad = np.sum(-dg / g[:, None], axis=0)
            H = (dg / g[:, None]).T @ (dg / g[:, None])
            proj = np.eye(n)[None] / r[:, None, None] - np.einsum("ik,il->ikl", s, s) / r[:, None, None] ** 3
            Hg_ell = -np.einsum("ikl,ikm,imn->iln", Mstack, proj, Mstack)
            H[:nl, :nl] -= np.einsum("iln,i->ln", Hg_ell, 1.0 / g)
            Ld = ell[diag_idx]
            grad[diag_idx] += -t / Ld
            H[diag_idx, diag_idx] += t / Ld ** 2
            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError as err:
                raise SolverError("singular Newton system in inscribed-ellipsoid solve") from err
            dec = -grad @ step
            if dec / 2 <= 1e-10:
                break
            alpha = 1.0
            f0 = value(x, t)
            while alpha > 1e-12:
                xn = x + alpha * step
                if feasible(xn) and value(xn, t) <= f0 + 0.25 * alpha * grad @ step:
                    break
                alpha *= 0.5
            else:
                break
            x = xn
        if n_log / t < tol / 10:
            break
        t *= 10.0
    ell, d = x[:nl], x[nl:]
    L = np.zeros((n, n))
    for idx, (j, k) in enumerate(tri):
        L[j, k] = ell[idx]
    return Ellipsoid(L, d)
