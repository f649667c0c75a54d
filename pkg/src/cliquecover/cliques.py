"""Exact maximum cliques, truncated clique covers and hole-free cliques.

The search is a bitset branch-and-bound: vertices are branched on in
ascending label order, and a greedy coloring of the candidate set bounds
every suffix of it at once. Branching in ascending order means the first
maximum clique reached is the lexicographically smallest one.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .visibility import VisibilityGraph


class CliqueTimeout(RuntimeError):
    pass


class EnumerationBudgetExceeded(RuntimeError):
    def __init__(self, msg: str, best: "Clique"):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class Clique:
    vertices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(int(v) for v in self.vertices)))

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def is_clique_of(self, g: VisibilityGraph) -> bool:
        v = np.asarray(self.vertices, dtype=int)
        sub = g.adjacency[np.ix_(v, v)]
        return bool(np.all(sub | np.eye(len(v), dtype=bool)))


@dataclass
class CliqueCover:
    cliques: list[Clique] = field(default_factory=list)
    residual: tuple[int, ...] = ()


def _iter_bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def _to_bits(vs) -> int:
    out = 0
    for v in vs:
        out |= 1 << int(v)
    return out


class _Stop(Exception):
    pass


class _HullGuard:
    """Exact geometric pruning for hole-free cliques.

    A branch is dead once the hull of the partial clique strictly contains a
    vertex that can no longer join it: hulls only grow along a branch.
    """

    def __init__(self, X: np.ndarray, margin: float = 1e-7):
        self.X = X
        self.margin = margin
        self.nbytes = (X.shape[0] + 7) // 8

    def blocked(self, R: list[int], reach: int) -> bool:
        X = self.X
        n = X.shape[1]
        if len(R) <= n:
            return False
        mask = np.unpackbits(np.frombuffer(reach.to_bytes(self.nbytes, "little"), dtype=np.uint8),
                             bitorder="little")[: X.shape[0]].astype(bool)
        out = X[~mask]
        if out.shape[0] == 0:
            return False
        H = X[R]
        if n == 1:
            return bool(np.any((out[:, 0] > H.min() + self.margin) & (out[:, 0] < H.max() - self.margin)))
        try:
            eq = ConvexHull(H).equations
        except QhullError:
            return False  # flat hull: leave it to the exact separation check
        return bool(np.any(np.all(out @ eq[:, :-1].T + eq[:, -1] < -self.margin, axis=1)))


class _BranchAndBound:
    """Max-clique search over bitset adjacency in a fixed vertex labeling.

    ``cuts`` are implications (S, v): any accepted clique containing all of S
    must also contain v.
    """

    def __init__(self, nbrs: list[int], deadline: float, cuts: Sequence[tuple[int, int]] = (),
                 guard: Optional[_HullGuard] = None):
        self.nbrs = nbrs
        self.guard = guard
        self.deadline = deadline
        self.cuts = list(cuts)
        self.best: list[int] = []
        self.best_size = 0
        self.target: Optional[int] = None
        self.stop_at: Optional[int] = None
        self.nodes = 0

    def _accepts(self, Rbits: int) -> bool:
        for S, v in self.cuts:
            if S & ~Rbits == 0 and not v & Rbits:
                return False
        return True

    def _propagate(self, Rbits: int, P: int) -> Optional[int]:
        """Shrink the candidate set using the cuts; None when no accepted
        clique extends R."""
        nbrs = self.nbrs
        for S, q in self.cuts:
            if q & Rbits:
                continue
            miss = S & ~Rbits
            if not miss:
                if not q & P:
                    return None
                P &= nbrs[q.bit_length() - 1] | q  # q is forced in
            elif not miss & (miss - 1) and miss & P:
                # adding the last missing vertex of S forces q, which must stay reachable
                v = miss.bit_length() - 1
                if not q & P & nbrs[v]:
                    P &= ~miss
        return P

    def run(self, P: int, lower: int = 0, target: Optional[int] = None,
            stop_at: Optional[int] = None) -> list[int]:
        """Largest clique above ``lower``. ``target`` searches only for cliques of
        that size; ``stop_at`` is a known upper bound that ends the search early."""
        self.best_size = lower
        self.target = target
        self.stop_at = target if target is not None else stop_at
        try:
            self._expand([], 0, P)
        except _Stop:
            pass
        return self.best

    def _expand(self, R: list[int], Rbits: int, P: int):
        self.nodes += 1
        if self.nodes & 1023 == 0 and time.monotonic() > self.deadline:
            raise CliqueTimeout("maximum-clique search exceeded its time budget")
        if self.cuts:
            P = self._propagate(Rbits, P)
            if P is None:
                return
        if self.guard is not None and self.guard.blocked(R, Rbits | P):
            return
        size = len(R)
        if size > self.best_size and (not self.cuts or self._accepts(Rbits)):
            self.best = list(R)
            self.best_size = size
            if self.stop_at is not None and size >= self.stop_at:
                raise _Stop
        if not P:
            return
        # greedy coloring, highest labels first, so suffixes need few colors
        nbrs = self.nbrs
        colored = []
        U = P
        color = 0
        while U:
            color += 1
            Q = U
            while Q:
                v = Q.bit_length() - 1
                bit = 1 << v
                Q &= ~bit & ~nbrs[v]
                U &= ~bit
                colored.append((v, color))
        colored.sort()
        # suffix maxima of the color numbers
        suf = [0] * len(colored)
        run = 0
        for i in range(len(colored) - 1, -1, -1):
            c = colored[i][1]
            if c > run:
                run = c
            suf[i] = run
        need = self.best_size if self.target is None else self.target - 1
        for i, (v, _) in enumerate(colored):
            if size + suf[i] <= need:
                break
            bit = 1 << v
            P &= ~bit
            R.append(v)
            self._expand(R, Rbits | bit, P & nbrs[v])
            R.pop()
            if self.target is None:
                need = self.best_size


def _degeneracy_order(adj: np.ndarray) -> list[int]:
    """Smallest-last ordering: repeatedly remove a minimum-degree vertex."""
    deg = adj.sum(axis=1).astype(np.int64)
    alive = np.ones(adj.shape[0], dtype=bool)
    order = []
    for _ in range(adj.shape[0]):
        d = np.where(alive, deg, np.iinfo(np.int64).max)
        v = int(np.argmin(d))
        order.append(v)
        alive[v] = False
        deg -= adj[v]
    return order


def _greedy_clique(adj: np.ndarray, verts: np.ndarray) -> list[int]:
    if verts.size == 0:
        return []
    cand = set(verts.tolist())
    sub = adj[np.ix_(verts, verts)]
    start = int(verts[np.argmax(sub.sum(axis=1))])
    clique = [start]
    cand = {u for u in cand if adj[start, u]}
    while cand:
        cl = np.fromiter(cand, dtype=int)
        inner = adj[np.ix_(cl, cl)].sum(axis=1)
        v = int(cl[np.argmax(inner)])
        clique.append(v)
        cand = {u for u in cand if adj[v, u]}
    return clique


def _solve(adj: np.ndarray, vertices: Optional[Sequence[int]], time_budget: float,
           cuts: Sequence[tuple[Sequence[int], int]] = (), upper: Optional[int] = None,
           points: Optional[np.ndarray] = None) -> list[int]:
    K = adj.shape[0]
    verts = np.arange(K) if vertices is None else np.asarray(sorted(vertices), dtype=int)
    if verts.size == 0:
        return []
    deadline = time.monotonic() + time_budget
    sub = adj[np.ix_(verts, verts)]
    k = verts.size
    # phase 1: clique number, searched in smallest-last order
    order = _degeneracy_order(sub)
    pos = np.empty(k, dtype=int)
    pos[order] = np.arange(k)
    relabeled = sub[np.ix_(order, order)]
    packed = np.packbits(relabeled, axis=1, bitorder="little")
    nbrs = [int.from_bytes(r.tobytes(), "little") for r in packed]
    local_cuts = [(_to_bits(pos[list(S)]), 1 << int(pos[v])) for S, v in cuts]
    guard = _HullGuard(points[verts][order]) if points is not None else None
    bnb = _BranchAndBound(nbrs, deadline, local_cuts, guard)
    lower = 0
    if not cuts and guard is None:
        lower = max(len(_greedy_clique(sub, np.arange(k))) - 1, 0)
    found = bnb.run((1 << k) - 1, lower=lower, stop_at=upper)
    omega = len(found)
    if omega == 0:
        return []
    # phase 2: lexicographically smallest clique of that size, original labels
    packed = np.packbits(sub, axis=1, bitorder="little")
    nbrs = [int.from_bytes(r.tobytes(), "little") for r in packed]
    orig_cuts = [(_to_bits(S), 1 << int(v)) for S, v in cuts]
    guard = _HullGuard(points[verts]) if points is not None else None
    lex = _BranchAndBound(nbrs, deadline, orig_cuts, guard).run((1 << k) - 1, target=omega)
    assert len(lex) == omega
    return sorted(verts[lex].tolist())


def max_clique(g: VisibilityGraph, vertices: Optional[Sequence[int]] = None,
               time_budget: float = 60.0) -> Clique:
    """Exact maximum clique, ties broken by the lexicographically smallest set.

    ``vertices`` restricts the search to an induced subgraph (labels are kept).
    Raises CliqueTimeout when ``time_budget`` seconds elapse.
    """
    if g.K < 1:
        raise ValueError("graph has no vertices")
    return Clique(_solve(g.adjacency, vertices, time_budget))


def truncated_clique_cover(g: VisibilityGraph, s_min: int, time_budget: float = 60.0) -> CliqueCover:
    """Greedy cover by repeated maximum cliques; stops once the best is below s_min."""
    if s_min < 1:
        raise ValueError("s_min must be >= 1")
    remaining = set(range(g.K))
    cover = CliqueCover()
    while remaining:
        c = max_clique(g, sorted(remaining), time_budget)
        if len(c) < s_min:
            break
        cover.cliques.append(c)
        remaining.difference_update(c.vertices)
    cover.residual = tuple(sorted(remaining))
    return cover


def inseparable_members(g: VisibilityGraph, clique: Clique) -> list[tuple[int, tuple[int, ...]]]:
    """Non-members lying in the hull of the clique, each with a witness subset.

    The witness is the support of a basic convex-combination solution, so it
    has at most n+1 clique vertices.
    """
    from .numopt import convex_hull_weights, separating_hyperplane
    X = g.points
    members = np.asarray(clique.vertices, dtype=int)
    H = X[members]
    lo, hi = H.min(axis=0), H.max(axis=0)
    member_set = set(clique.vertices)
    out = []
    for q in range(g.K):
        if q in member_set:
            continue
        if np.any(X[q] < lo - 1e-12) or np.any(X[q] > hi + 1e-12):
            continue  # outside the bounding box, trivially separable
        if separating_hyperplane(X[q], H) is not None:
            continue
        w = convex_hull_weights(X[q], H)
        support = members[w > 1e-12] if w is not None else members
        out.append((q, tuple(int(s) for s in support)))
    return out


def is_admissible(g: VisibilityGraph, clique: Clique) -> bool:
    return not inseparable_members(g, clique)


def max_clique_no_holes(g: VisibilityGraph, L: Optional[float] = None, budget: int = 10_000,
                        time_budget: float = 60.0) -> Clique:
    """Largest clique whose convex hull contains no non-member vertex.

    Lazy enumeration: solve the max clique, test every non-member for
    separability, and for each inseparable q with witness subset S add the
    cut "S in clique implies q in clique" (it removes the rejected clique and
    no admissible one). Repeats until the optimum is admissible.

    ``L`` is the big-M scale of the mixed-integer form; it is validated
    (default 10x the point-set diameter) but the cut loop does not need it.
    """
    if g.points is None:
        raise ValueError("max_clique_no_holes needs geometric points on the graph")
    X = g.points
    diam = float(np.max(np.linalg.norm(X[:, None] - X[None], axis=-1))) if g.K > 1 else 0.0
    if L is None:
        L = 10.0 * diam
    if L < 10.0 * diam - 1e-12:
        raise ValueError(f"L={L} is below 10x the point-set diameter ({diam:.4g})")
    cuts: list[tuple[tuple[int, ...], int]] = []
    upper = None
    c = Clique((0,))
    for _ in range(budget):
        c = Clique(_solve(g.adjacency, None, time_budget, cuts, upper, X))
        upper = len(c)  # cuts only remove cliques, so sizes never grow
        bad = inseparable_members(g, c)
        if not bad:
            return c
        for q, S in bad:
            cuts.append((S, q))
    raise EnumerationBudgetExceeded(
        f"no admissible clique after {budget} candidate cliques", _greedy_admissible(g, c))


def _greedy_admissible(g: VisibilityGraph, candidate: Clique) -> Clique:
    """Admissible sub-clique grown greedily from the candidate's vertices."""
    kept: list[int] = []
    for v in candidate.vertices:
        trial = Clique(kept + [v])
        if is_admissible(g, trial):
            kept.append(v)
    return Clique(kept) if kept else Clique((candidate.vertices[0],))
