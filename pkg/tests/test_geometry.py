import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cliquecover.geometry import (
    DimensionError, Ellipsoid, Environment, HPolytope, Hyperplane, PolytopeObstacle,
    SphereObstacle, box_obstacle, point_in_free_space, polygon_vertices_2d, polytope_contains,
    region_obstacle_disjoint, segment_in_free_space, segments_free,
)

UNIT = HPolytope.from_box([0, 0], [1, 1])
SPHERE_ENV = Environment([0, 0], [3, 3], (SphereObstacle([1.5, 1.5], 0.5),))
SLAB_ENV = Environment([0, 0], [3, 3], (box_obstacle([1, 0], [2, 3]),))


@pytest.mark.parametrize("q, inside", [((0.5, 0.5), True), ((1.5, 0.5), False), ((1.0, 1.0), True)])
def test_polytope_contains_examples(q, inside):
    assert polytope_contains(UNIT, q) is inside


def test_polytope_contains_dimension_mismatch():
    with pytest.raises(DimensionError):
        polytope_contains(UNIT, (0.5, 0.5, 0.5))


def test_hpolytope_rejects_zero_rows_and_mismatch():
    with pytest.raises(ValueError):
        HPolytope([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        HPolytope([[1.0, 0.0]], [1.0, 2.0])
    with pytest.raises(ValueError):
        HPolytope([[np.nan, 0.0]], [1.0])


def test_hyperplane_and_ellipsoid_invariants():
    with pytest.raises(ValueError):
        Hyperplane([0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        Ellipsoid(np.diag([1.0, 1e-13]), [0, 0])
    E = Ellipsoid(np.diag([2.0, 3.0]), [1.0, -1.0])
    assert E.volume == pytest.approx(6 * math.pi)
    assert E.contains([3.0, -1.0]) and not E.contains([3.1, -1.0])
    assert np.allclose(E.metric_distance(E.boundary_points(50)), 1.0)


@pytest.mark.parametrize("q, free", [((0.2, 0.2), True), ((1.5, 1.5), False), ((3.5, 0.5), False)])
def test_point_in_free_space_examples(q, free):
    assert point_in_free_space(SPHERE_ENV, q) is free


def test_boundary_conventions():
    # obstacle boundary is collision, domain boundary is free
    assert not point_in_free_space(SPHERE_ENV, (2.0, 1.5))
    assert point_in_free_space(SPHERE_ENV, (3.0, 3.0))
    assert not point_in_free_space(SLAB_ENV, (1.0, 0.5))


def test_segment_examples():
    assert not segment_in_free_space(SPHERE_ENV, (0.2, 1.5), (2.8, 1.5))
    assert segment_in_free_space(SPHERE_ENV, (0.2, 0.2), (2.8, 0.2))
    assert not segment_in_free_space(SLAB_ENV, (0.5, 0.5), (2.5, 0.5))


def test_segment_requires_free_endpoints():
    with pytest.raises(ValueError):
        segment_in_free_space(SPHERE_ENV, (1.5, 1.5), (0.2, 0.2))


def test_segment_tangent_to_sphere_is_blocked():
    assert not segment_in_free_space(SPHERE_ENV, (0.2, 1.0), (2.8, 1.0))
    assert segment_in_free_space(SPHERE_ENV, (0.2, 0.99), (2.8, 0.99))


def test_sampled_fallback_agrees_on_clear_cases():
    assert not segment_in_free_space(SPHERE_ENV, (0.2, 1.5), (2.8, 1.5), exact=False)
    assert segment_in_free_space(SPHERE_ENV, (0.2, 0.2), (2.8, 0.2), exact=False)


def _scene(seed):
    from cliquecover.scenes import random_scene
    return random_scene(seed)


def _free_points(env, k, rng):
    Q = env.sample_box(rng, 20 * k)
    return Q[env.free_mask(Q)][:k]


@pytest.mark.parametrize("seed", range(4))
def test_segment_properties_against_dense_sampling(seed):
    env = _scene(seed)
    rng = np.random.default_rng(seed)
    P = _free_points(env, 200, rng)
    Q = _free_points(env, 200, rng)
    exact = segments_free(env, P, Q)
    assert np.array_equal(exact, segments_free(env, Q, P))  # symmetry
    assert np.all(segments_free(env, P, P))  # degenerate segments of free points
    t = np.linspace(0, 1, 102)[1:-1]
    for p, q, ok in zip(P, Q, exact):
        dense = env.free_mask(p + t[:, None] * (q - p))
        if ok:
            assert dense.all()
        # sampled hits certify a collision
        if not dense.all():
            assert not ok


def test_region_obstacle_disjoint_examples():
    assert region_obstacle_disjoint(UNIT, box_obstacle([2, 2], [3, 3]))
    assert not region_obstacle_disjoint(UNIT, box_obstacle([0.5, 0.5], [1.5, 1.5]))
    assert not region_obstacle_disjoint(UNIT, SphereObstacle([2.0, 0.5], 1.0))
    assert region_obstacle_disjoint(UNIT, SphereObstacle([2.0, 0.5], 1.0 - 1e-6))
    # touching faces count as intersecting
    assert not region_obstacle_disjoint(UNIT, box_obstacle([1, 0], [2, 1]))


def test_region_obstacle_disjoint_unbounded_region():
    half = HPolytope([[1.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        region_obstacle_disjoint(half, box_obstacle([2, 2], [3, 3]))


@given(st.integers(0, 10_000))
def test_region_obstacle_disjoint_matches_grid(seed):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(0, 2, 2)
    P = HPolytope.from_box(lo, lo + rng.uniform(0.2, 1.5, 2))
    c = rng.uniform(0, 3, 2)
    o = (SphereObstacle(c, rng.uniform(0.1, 0.8)) if seed % 2
         else box_obstacle(c - rng.uniform(0.1, 0.5, 2), c + rng.uniform(0.1, 0.5, 2)))
    g = np.linspace(0, 1, 100)
    plo, phi = P.bounding_box()
    G = np.stack(np.meshgrid(plo[0] + g * (phi[0] - plo[0]), plo[1] + g * (phi[1] - plo[1])), -1).reshape(-1, 2)
    if region_obstacle_disjoint(P, o):
        assert not o.contains_many(G).any()


def test_region_obstacle_disjoint_polygon_against_cvxpy(rng):
    cp = pytest.importorskip("cvxpy")
    from cliquecover.scenes import random_polygon
    for _ in range(30):
        P = random_polygon(rng, rng.uniform(0, 2, 2), rng.uniform(0.3, 1), 5)
        O = random_polygon(rng, rng.uniform(0, 2, 2), rng.uniform(0.3, 1), 4)
        x, y = cp.Variable(2), cp.Variable(2)
        prob = cp.Problem(cp.Minimize(cp.norm(x - y)), [P.A @ x <= P.b, O.A @ y <= O.b])
        prob.solve()
        if prob.value > 1e-5:
            assert region_obstacle_disjoint(P, PolytopeObstacle(O))
        elif prob.value < 1e-9:
            assert not region_obstacle_disjoint(P, PolytopeObstacle(O))


def test_polygon_vertices_match_halfspace_intersection(rng):
    from cliquecover.scenes import random_polygon
    for _ in range(20):
        P = random_polygon(rng, rng.uniform(-1, 1, 2), rng.uniform(0.5, 2), int(rng.integers(3, 9)))
        V = polygon_vertices_2d(P)
        W = P.vertices
        assert len(V) == len(W)
        for v in V:
            assert np.min(np.linalg.norm(W - v, axis=1)) < 1e-8
        # counter-clockwise: positive shoelace area
        area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
        assert area == pytest.approx(P.volume(), rel=1e-9)


def test_environment_validation():
    with pytest.raises(ValueError):
        Environment([0, 0], [0, 1])
    with pytest.raises(DimensionError):
        Environment([0, 0], [1, 1], (SphereObstacle([0, 0, 0], 1.0),))
    with pytest.raises(ValueError):
        SphereObstacle([0, 0], 0.0)


def test_sphere_min_support_and_polytope_volume():
    s = SphereObstacle([1.0, 2.0], 0.5)
    assert s.min_support(np.array([0.0, 2.0])) == pytest.approx(4.0 - 1.0)
    assert UNIT.volume() == pytest.approx(1.0)
    assert UNIT.chebyshev[1] == pytest.approx(0.5)
