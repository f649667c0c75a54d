import json

import numpy as np
import pytest

from cliquecover.geometry import Environment, HPolytope, SphereObstacle, box_obstacle, segments_free
from cliquecover.scenes import random_scene
from cliquecover.visibility import (
    CoverageSaturated, VisibilityGraph, build_visibility_graph, covered_mask, sample_free_uncovered,
)

EMPTY = Environment([0, 0], [1, 1])
SPHERE_ENV = Environment([0, 0], [3, 3], (SphereObstacle([1.5, 1.5], 0.5),))


def test_sampling_examples():
    P = sample_free_uncovered(EMPTY, [], 100, 0)
    assert P.shape == (100, 2) and np.all((P >= 0) & (P <= 1))
    with pytest.raises(CoverageSaturated):
        sample_free_uncovered(EMPTY, [HPolytope.from_box([0, 0], [1, 1])], 10, 0)
    half = Environment([0, 0], [2, 1], (box_obstacle([0, 0], [1, 1]),))
    P = sample_free_uncovered(half, [], 10_000, 1)
    # uniform on [1,2]x[0,1]: sd of the mean is 0.289/100, so 0.02 is ~7 sigma
    assert P[:, 0].mean() == pytest.approx(1.5, abs=0.02)
    with pytest.raises(ValueError):
        sample_free_uncovered(EMPTY, [], 0, 0)


def test_sampling_avoids_regions_and_is_deterministic():
    env = random_scene(2)
    R = [HPolytope.from_box([0, 0], [5, 5])]
    P = sample_free_uncovered(env, R, 500, 42)
    assert np.all(env.free_mask(P)) and not covered_mask(R, P).any()
    assert np.array_equal(P, sample_free_uncovered(env, R, 500, 42))
    assert not np.array_equal(P, sample_free_uncovered(env, R, 500, 43))


def test_sampling_is_uniform_on_uncovered_free_space():
    env = Environment([0, 0], [1, 1])
    R = [HPolytope.from_box([0, 0], [0.5, 1])]
    P = sample_free_uncovered(env, R, 20_000, 7)
    hist, _ = np.histogram(P[:, 1], bins=5, range=(0, 1))
    # chi-square with 4 dof, 0.999 quantile is 18.5
    expected = len(P) / 5
    assert np.sum((hist - expected) ** 2 / expected) < 18.5


def test_graph_examples():
    g = build_visibility_graph(EMPTY, [(0.1, 0.1), (0.5, 0.5), (0.9, 0.9)])
    assert g.n_edges == 3
    g = build_visibility_graph(SPHERE_ENV, [(0.2, 0.5), (2.8, 0.5)])
    assert g.adjacency[0, 1]
    g = build_visibility_graph(SPHERE_ENV, [(0.2, 1.5), (2.8, 1.5)])
    assert not g.adjacency[0, 1]
    with pytest.raises(ValueError):
        build_visibility_graph(SPHERE_ENV, [(1.5, 1.5), (0.2, 0.2)])


@pytest.mark.parametrize("seed", range(3))
def test_graph_properties(seed):
    env = random_scene(seed)
    P = sample_free_uncovered(env, [], 150, seed)
    g = build_visibility_graph(env, P)
    A = g.adjacency
    assert np.array_equal(A, A.T) and not A.diagonal().any()
    i, j = np.triu_indices(len(P), 1)
    assert np.array_equal(A[i, j], segments_free(env, P[i], P[j]))
    # subset coherence
    idx = np.arange(0, 150, 3)
    assert np.array_equal(g.subgraph(idx).adjacency, build_visibility_graph(env, P[idx]).adjacency)
    # parallel evaluation gives the same graph
    assert np.array_equal(A, build_visibility_graph(env, P, workers=4, chunk=97).adjacency)


def test_convex_domain_graph_is_complete():
    P = sample_free_uncovered(EMPTY, [], 60, 3)
    g = build_visibility_graph(EMPTY, P)
    assert g.n_edges == 60 * 59 // 2


def test_graph_json_round_trip(tmp_path):
    env = random_scene(4)
    g = build_visibility_graph(env, sample_free_uncovered(env, [], 40, 0))
    path = tmp_path / "g.json"
    g.dump(path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"K", "edges", "points"} and doc["K"] == 40
    h = VisibilityGraph.from_json(doc)
    assert np.array_equal(h.adjacency, g.adjacency) and np.array_equal(h.points, g.points)
    with pytest.raises(ValueError):
        VisibilityGraph.from_edges(3, [[1, 1]])


def test_neighbor_bits():
    g = VisibilityGraph.from_edges(4, [[0, 1], [1, 3]])
    assert g.neighbor_bits() == [0b10, 0b1001, 0, 0b10]
