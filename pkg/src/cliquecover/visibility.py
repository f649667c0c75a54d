"""Uniform sampling of uncovered free space and visibility-graph construction."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import TOL, Environment, HPolytope, segments_free


class CoverageSaturated(Exception):
    """Rejection sampling found no uncovered free point within its budget."""


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def covered_mask(regions: Sequence[HPolytope], Q: np.ndarray) -> np.ndarray:
    Q = np.atleast_2d(Q)
    hit = np.zeros(Q.shape[0], dtype=bool)
    for R in regions:
        idx = np.flatnonzero(~hit)
        if idx.size == 0:
            break
        hit[idx] = np.all(Q[idx] @ R.A.T <= R.b + TOL, axis=1)
    return hit


def sample_free_uncovered(env: Environment, regions: Sequence[HPolytope], K: int, seed,
                          budget_per_sample: int = 10_000, batch: int = 1024) -> np.ndarray:
    """K i.i.d. uniform points of the free space outside every region.

    Rejection sampling from the domain box, drawn in batches; accepted points
    keep draw order so results depend only on the seed. Raises
    CoverageSaturated after ``budget_per_sample * K`` consecutive rejections.
    """
    if K < 1:
        raise ValueError("K must be positive")
    rng = make_rng(seed)
    out = []
    n_out = 0
    misses = 0
    limit = budget_per_sample * K
    while n_out < K:
        Q = env.sample_box(rng, batch)
        ok = env.free_mask(Q)
        if regions:
            ok[ok] = ~covered_mask(regions, Q[ok])
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            misses += batch
            if misses >= limit:
                raise CoverageSaturated(f"no uncovered free sample in {misses} draws")
            continue
        # consecutive misses before the first accepted point in this batch
        misses += int(hits[0])
        if misses >= limit:
            raise CoverageSaturated(f"no uncovered free sample in {misses} draws")
        take = hits[: K - n_out]
        out.append(Q[take])
        n_out += take.size
        misses = batch - 1 - int(hits[-1])
    return np.vstack(out)


@dataclass(frozen=True, eq=False)
class VisibilityGraph:
    """Sampled free points with symmetric, irreflexive visibility adjacency."""
    points: np.ndarray
    adjacency: np.ndarray  # K x K bool

    @property
    def K(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def neighbor_bits(self) -> list[int]:
        """Adjacency rows as Python int bitsets (bit j set iff j is a neighbor)."""
        packed = np.packbits(self.adjacency, axis=1, bitorder="little")
        return [int.from_bytes(row.tobytes(), "little") for row in packed]

    def subgraph(self, vertices: Iterable[int]) -> "VisibilityGraph":
        idx = np.asarray(sorted(vertices), dtype=int)
        pts = self.points[idx] if self.points is not None else None
        return VisibilityGraph(pts, self.adjacency[np.ix_(idx, idx)])

    def to_json(self, include_points: bool = True) -> dict:
        doc = {"K": self.K, "edges": [list(e) for e in self.edges()]}
        if include_points and self.points is not None:
            doc["points"] = self.points.tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "VisibilityGraph":
        K = int(doc["K"])
        adj = np.zeros((K, K), dtype=bool)
        for i, j in doc["edges"]:
            if i == j:
                raise ValueError(f"self-edge at vertex {i}")
            adj[i, j] = adj[j, i] = True
        pts = np.asarray(doc["points"], dtype=float) if "points" in doc else None
        return cls(pts, adj)

    @classmethod
    def from_edges(cls, K: int, edges, points=None) -> "VisibilityGraph":
        return cls.from_json({"K": K, "edges": edges, **({"points": points} if points is not None else {})})

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


def build_visibility_graph(env: Environment, points, workers: Optional[int] = None,
                           chunk: int = 20_000) -> VisibilityGraph:
    """Visibility graph over ``points`` using exact segment checks.

    Pairs are checked in chunks; with ``workers > 1`` chunks run on a thread
    pool. Output does not depend on the evaluation order.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(env.free_mask(P)):
        bad = int(np.flatnonzero(~env.free_mask(P))[0])
        raise ValueError(f"point {bad} is not collision-free")
    K = P.shape[0]
    iu, ju = np.triu_indices(K, 1)
    visible = np.empty(iu.size, dtype=bool)
    spans = [(s, min(s + chunk, iu.size)) for s in range(0, iu.size, chunk)]

    def run(span):
        s, e = span
        visible[s:e] = segments_free(env, P[iu[s:e]], P[ju[s:e]])

    if workers and workers > 1 and len(spans) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, spans))
    else:
        for span in spans:
            run(span)
    adj = np.zeros((K, K), dtype=bool)
    adj[iu[visible], ju[visible]] = True
    adj |= adj.T
    adj.setflags(write=False)
    return VisibilityGraph(P, adj)
