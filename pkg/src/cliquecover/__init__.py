"""Approximate convex covers of collision-free space via visibility clique covers."""
from .cliques import Clique, CliqueCover, max_clique, max_clique_no_holes, truncated_clique_cover
from .geometry import (
    Ellipsoid, Environment, HPolytope, Hyperplane, PolytopeObstacle, SphereObstacle, box_obstacle,
)
from .inflation import InflationConfig, inflate_polytope_one_iteration, iris_full
from .pipeline import RegionSet, RunReport, VccConfig, check_coverage, ios, vcc
from .visibility import VisibilityGraph, build_visibility_graph, sample_free_uncovered

__version__ = "0.1.0"

__all__ = [
    "Clique", "CliqueCover", "Ellipsoid", "Environment", "HPolytope", "Hyperplane",
    "InflationConfig", "PolytopeObstacle", "RegionSet", "RunReport", "SphereObstacle",
    "VccConfig", "VisibilityGraph", "box_obstacle", "build_visibility_graph", "check_coverage",
    "inflate_polytope_one_iteration", "ios", "iris_full", "max_clique", "max_clique_no_holes",
    "sample_free_uncovered", "truncated_clique_cover", "vcc",
]
