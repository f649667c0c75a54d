"""SVG figures of 2-D scenes, regions and visibility graphs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
from matplotlib.collections import LineCollection  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Circle, Polygon, Rectangle  # noqa: E402

import numpy as np  # noqa: E402

from .geometry import DimensionError, Environment, HPolytope, SphereObstacle, polygon_vertices_2d  # noqa: E402
from .visibility import VisibilityGraph  # noqa: E402

REGION_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22")


@dataclass
class Overlay:
    """Extra outlined polygon, e.g. a clique's convex hull."""
    vertices: np.ndarray
    color: str
    label: str = ""
    gid: Optional[str] = None


def render_svg(env: Environment, path, regions: Sequence[HPolytope] = (),
               graph: Optional[VisibilityGraph] = None, overlays: Sequence[Overlay] = (),
               points: Optional[np.ndarray] = None, title: str = "") -> None:
    if env.dimension != 2:
        raise DimensionError("render supports 2D only")
    matplotlib.rcParams["svg.hashsalt"] = "cliquecover"
    lo, hi = env.lower, env.upper
    span = hi - lo
    fig = Figure(figsize=(6.0, 6.0 * span[1] / span[0]))
    ax = fig.add_subplot(1, 1, 1)
    ax.add_patch(Rectangle(lo, *span, fill=False, edgecolor="black", linewidth=1.2, gid="domain"))
    for k, o in enumerate(env.obstacles):
        if isinstance(o, SphereObstacle):
            patch = Circle(o.center, o.radius)
        else:
            patch = Polygon(polygon_vertices_2d(o.polytope), closed=True)
        patch.set(facecolor="0.35", edgecolor="black", linewidth=0.6, gid=f"obstacle-{k}")
        ax.add_patch(patch)
    for k, R in enumerate(regions):
        V = polygon_vertices_2d(R)
        if len(V) < 3:
            continue
        c = REGION_COLORS[k % len(REGION_COLORS)]
        ax.add_patch(Polygon(V, closed=True, facecolor=c, alpha=0.3, edgecolor=c,
                             linewidth=0.8, gid=f"region-{k}"))
    if graph is not None and graph.points is not None:
        P = graph.points
        segs = [(P[i], P[j]) for i, j in graph.edges()]
        ax.add_collection(LineCollection(segs, colors="0.5", linewidths=0.2, alpha=0.4,
                                         gid="visibility-graph"))
        ax.plot(P[:, 0], P[:, 1], ".", color="black", markersize=2, gid="graph-vertices")
    if points is not None and len(points):
        ax.plot(points[:, 0], points[:, 1], ".", color="black", markersize=3, gid="samples")
    for ov in overlays:
        ax.add_patch(Polygon(ov.vertices, closed=True, fill=False, edgecolor=ov.color,
                             linewidth=1.5, label=ov.label or None, gid=ov.gid))
    if any(ov.label for ov in overlays):
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
