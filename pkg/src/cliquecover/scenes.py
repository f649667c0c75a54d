"""Scene files, generated benchmark scenes and the triangle-with-hole scene.

Scene JSON::

    {"dimension": 2,
     "domain": {"lower": [0, 0], "upper": [10, 10]},
     "obstacles": [{"type": "box", "lower": [...], "upper": [...]},
                   {"type": "polytope", "A": [[...]], "b": [...]},
                   {"type": "sphere", "center": [...], "radius": 0.5}],
     "vcc": {...}, "ios": {...}}      # optional config blocks
"""
from __future__ import annotations

import json
import math
from json.decoder import scanstring
from typing import Any, Optional

import jsonschema
import numpy as np

from .geometry import (
    Environment, HPolytope, PolytopeObstacle, SphereObstacle, box_obstacle,
)

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCENE_SCHEMA = {
    "type": "object",
    "required": ["dimension", "domain", "obstacles"],
    "properties": {
        "name": {"type": "string"},
        "dimension": {"type": "integer", "minimum": 1},
        "domain": {
            "type": "object", "required": ["lower", "upper"],
            "properties": {"lower": _vec, "upper": _vec},
        },
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type"],
                "properties": {"type": {"enum": ["box", "polytope", "sphere"]}},
                "allOf": [
                    {"if": {"properties": {"type": {"const": "box"}}},
                     "then": {"required": ["lower", "upper"],
                              "properties": {"lower": _vec, "upper": _vec}}},
                    {"if": {"properties": {"type": {"const": "polytope"}}},
                     "then": {"required": ["A", "b"],
                              "properties": {"A": {"type": "array", "items": _vec, "minItems": 1},
                                             "b": _vec}}},
                    {"if": {"properties": {"type": {"const": "sphere"}}},
                     "then": {"required": ["center", "radius"],
                              "properties": {"center": _vec,
                                             "radius": {"type": "number", "exclusiveMinimum": 0}}}},
                ],
            },
        },
        "vcc": {"type": "object"},
        "ios": {"type": "object"},
    },
}


class SceneError(ValueError):
    """Invalid scene file; message carries the field path and line number."""

    def __init__(self, msg: str, path: str = "", line: Optional[int] = None):
        where = f"{path or '<root>'}" + (f" (line {line})" if line else "")
        super().__init__(f"{where}: {msg}")
        self.path = path
        self.line = line


def _locate(text: str) -> dict[tuple, int]:
    """Map every JSON value path to the 1-based line where the value starts."""
    decoder = json.JSONDecoder()
    ws = " \t\r\n"
    lines: dict[tuple, int] = {}

    def skip(i):
        while i < len(text) and text[i] in ws:
            i += 1
        return i

    def value(i, path):
        i = skip(i)
        lines[path] = text.count("\n", 0, i) + 1
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = scanstring(text, skip(i) + 1)
                i = skip(i)
                i = value(i + 1, path + (key,))
                i = skip(i)
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = value(i, path + (k,))
                i = skip(i)
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return lines


def _fmt(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out


def parse_scene(text: str, name: str = "scene") -> tuple[Environment, dict]:
    """Parse and validate scene JSON. Returns the environment and the raw document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise SceneError(f"invalid JSON: {err.msg}", line=err.lineno) from err
    lines = _locate(text)

    def fail(msg, path):
        path = tuple(path)
        while path and path not in lines:
            path = path[:-1]
        raise SceneError(msg, _fmt(path), lines.get(path))

    validator = jsonschema.Draft7Validator(SCENE_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: len(e.absolute_path), reverse=True)
    if errors:
        err = errors[0]
        fail(err.message, err.absolute_path)
    n = doc["dimension"]
    lo, hi = doc["domain"]["lower"], doc["domain"]["upper"]
    for key, v in (("lower", lo), ("upper", hi)):
        if len(v) != n:
            fail(f"expected {n} entries, got {len(v)}", ("domain", key))
    if not all(a < b for a, b in zip(lo, hi)):
        fail("lower must be strictly below upper in every coordinate", ("domain", "lower"))
    obstacles = []
    for k, o in enumerate(doc["obstacles"]):
        base = ("obstacles", k)
        try:
            if o["type"] == "box":
                for key in ("lower", "upper"):
                    if len(o[key]) != n:
                        fail(f"expected {n} entries, got {len(o[key])}", base + (key,))
                if not all(a < b for a, b in zip(o["lower"], o["upper"])):
                    fail("box lower must be strictly below upper", base + ("lower",))
                obstacles.append(box_obstacle(o["lower"], o["upper"]))
            elif o["type"] == "sphere":
                if len(o["center"]) != n:
                    fail(f"expected {n} entries, got {len(o['center'])}", base + ("center",))
                obstacles.append(SphereObstacle(o["center"], o["radius"]))
            else:
                A, b = o["A"], o["b"]
                if any(len(row) != n for row in A):
                    fail(f"every row of A needs {n} entries", base + ("A",))
                if len(b) != len(A):
                    fail("b must have one entry per row of A", base + ("b",))
                P = HPolytope(A, b)
                try:
                    _, radius = P.chebyshev
                except ValueError:
                    fail("polytope obstacle is empty", base + ("A",))
                if radius <= 0 or not P.is_bounded:
                    fail("polytope obstacle must be bounded with nonempty interior", base + ("A",))
                obstacles.append(PolytopeObstacle(P))
        except SceneError:
            raise
        except ValueError as err:
            fail(str(err), base)
    env = Environment(lo, hi, tuple(obstacles), name=doc.get("name", name))
    rng = np.random.default_rng(0)
    if not env.free_mask(env.sample_box(rng, 10_000)).any():
        fail("free space appears empty (no free sample in 10000 draws)", ("obstacles",))
    return env, doc


def load_scene(path) -> tuple[Environment, dict]:
    import os
    with open(path) as fh:
        text = fh.read()
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_scene(text, name)


def scene_to_json(env: Environment) -> dict:
    return {"name": env.name, "dimension": env.dimension,
            "domain": {"lower": env.lower.tolist(), "upper": env.upper.tolist()},
            "obstacles": [o.to_json() for o in env.obstacles]}


def random_polygon(rng, center, radius, k) -> HPolytope:
    """Convex polygon: k random angles on a circle, as an H-polytope."""
    th = np.sort(rng.uniform(0, 2 * np.pi, k))
    # keep gaps under pi so the center stays inside
    while np.max(np.diff(np.concatenate([th, [th[0] + 2 * np.pi]]))) >= np.pi:
        th = np.sort(rng.uniform(0, 2 * np.pi, k))
    V = center + radius * np.column_stack([np.cos(th), np.sin(th)])
    rows, offs = [], []
    for i in range(k):
        p, q = V[i], V[(i + 1) % k]
        nrm = np.array([q[1] - p[1], p[0] - q[0]])
        nrm /= np.linalg.norm(nrm)
        rows.append(nrm)
        offs.append(nrm @ p)
    return HPolytope(np.array(rows), np.array(offs))


def random_scene(seed: int, n_obstacles: Optional[int] = None, size: float = 10.0) -> Environment:
    """Random 2-D benchmark scene: 3-8 boxes, spheres and polygons in [0, size]^2."""
    rng = np.random.default_rng(seed)
    if n_obstacles is None:
        n_obstacles = int(rng.integers(3, 9))
    obstacles = []
    for k in range(n_obstacles):
        c = rng.uniform(0.15 * size, 0.85 * size, 2)
        r = rng.uniform(0.06, 0.14) * size
        kind = k % 3
        if kind == 0:
            half = r * rng.uniform(0.4, 1.2, 2)
            obstacles.append(box_obstacle(c - half, c + half))
        elif kind == 1:
            obstacles.append(SphereObstacle(c, r))
        else:
            obstacles.append(PolytopeObstacle(random_polygon(rng, c, r, int(rng.integers(3, 7)))))
    return Environment([0.0, 0.0], [size, size], tuple(obstacles), name=f"random{seed}")


def benchmark_suite(n: int = 10) -> list[Environment]:
    return [random_scene(s) for s in range(n)]


def two_slab_scene() -> Environment:
    return Environment([0.0, 0.0], [4.0, 4.0], (box_obstacle([2.0, 0.0], [3.0, 4.0]),), name="two_slab")


# --- triangle with a triangular hole ---------------------------------------

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
CENTROID = TRIANGLE.mean(axis=0)
HOLE_THRESHOLD = 1.0 - math.sqrt(5.0 / 6.0)


def _halfplanes(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward half-planes a'x <= b of a counter-clockwise triangle."""
    rows, offs = [], []
    for i in range(3):
        p, q = V[i], V[(i + 1) % 3]
        a = np.array([q[1] - p[1], p[0] - q[0]])
        a /= np.linalg.norm(a)
        rows.append(a)
        offs.append(a @ p)
    return np.array(rows), np.array(offs)


def hole_vertices(eps: float) -> np.ndarray:
    """The hole: the outer triangle scaled by eps about its centroid."""
    return CENTROID + eps * (TRIANGLE - CENTROID)


def triangle_scene(eps: float) -> Environment:
    """Unit equilateral triangle with a centered triangular hole of side eps.

    The domain is the triangle's bounding box; the three pieces of box outside
    the triangle are convex obstacles, and so is the hole.
    """
    if not 0 < eps < 1 / 3:
        raise ValueError("epsilon must lie in (0, 1/3)")
    lower, upper = TRIANGLE.min(axis=0), TRIANGLE.max(axis=0)
    box = HPolytope.from_box(lower, upper)
    A, b = _halfplanes(TRIANGLE)
    obstacles = []
    for i in range(3):
        # box minus the triangle, one edge at a time: {x in box : a_i'x >= b_i}
        obstacles.append(PolytopeObstacle(HPolytope(np.vstack([box.A, -A[i]]),
                                                    np.concatenate([box.b, [-b[i]]]))))
    Ah, bh = _halfplanes(hole_vertices(eps))
    obstacles.append(PolytopeObstacle(HPolytope(Ah, bh)))
    return Environment(lower, upper, tuple(obstacles), name=f"triangle_eps{eps:g}")


def triangle_limit_sets() -> dict[str, list[HPolytope]]:
    """Limiting (eps -> 0) sets: the trapezoid below the centroid line and the
    three corner parallelograms whose far corners meet at the centroid."""
    return _triangle_sets(CENTROID, CENTROID, CENTROID, CENTROID[1])


def triangle_finite_sets(eps: float) -> dict[str, list[HPolytope]]:
    """Same construction at finite eps: parallelogram corners sit on the hole
    vertices and the trapezoid stops at the hole's base."""
    H = hole_vertices(eps)
    return _triangle_sets(H[0], H[1], H[2], H[0][1])


def _triangle_sets(w0, w1, w2, cut_y) -> dict[str, list[HPolytope]]:
    A, b = _halfplanes(TRIANGLE)
    trapezoid = HPolytope(np.vstack([A, [0.0, 1.0]]), np.concatenate([b, [cut_y]]))
    paras = []
    for i, w in enumerate((w0, w1, w2)):
        # corner i: incident edges i and i-1, plus their parallels through w
        k = (i + 2) % 3
        rows = [A[i], A[k], -A[i], -A[k]]
        offs = [b[i], b[k], -(A[i] @ w), -(A[k] @ w)]
        paras.append(HPolytope(np.array(rows), np.array(offs)))
    return {"trapezoid": [trapezoid], "parallelograms": paras}


def dumps_scene(env: Environment, extra: Optional[dict[str, Any]] = None) -> str:
    doc = scene_to_json(env)
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1)
