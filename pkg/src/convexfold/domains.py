"""Builtin domains, random convex polygon corpus, and geometry file I/O."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import ConvexPolygon, ConvexPolytope, _hull_polygon


def square() -> ConvexPolygon:
    return ConvexPolygon([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def rectangle31() -> ConvexPolygon:
    return ConvexPolygon([[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [0.0, 1.0]])


def disk(n: int = 64) -> ConvexPolygon:
    th = 2 * np.pi * np.arange(n) / n
    return ConvexPolygon(np.stack([np.cos(th), np.sin(th)], axis=1))


def parallelogram() -> ConvexPolygon:
    """Two congruent right isosceles triangles joined through a short side."""
    return ConvexPolygon([[-1.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def pentagon() -> ConvexPolygon:
    """A fixed irregular convex pentagon with a flat side and corners."""
    return ConvexPolygon(
        [[0.0, 0.0], [1.1, 0.0], [1.45, 0.75], [0.6, 1.25], [-0.25, 0.55]]
    )


def equilateral_triangle(side: float = 1.0) -> ConvexPolygon:
    return ConvexPolygon(
        [[0.0, 0.0], [side, 0.0], [side / 2, side * np.sqrt(3) / 2]]
    )


BUILTIN_DOMAINS = {
    "square": square,
    "rect31": rectangle31,
    "disk": disk,
    "parallelogram": parallelogram,
    "pentagon": pentagon,
    "triangle": equilateral_triangle,
}


def builtin_domain(name: str) -> ConvexPolygon:
    try:
        return BUILTIN_DOMAINS[name]()
    except KeyError:
        raise KeyError(
            f"unknown builtin domain {name!r}; choose from {sorted(BUILTIN_DOMAINS)}"
        ) from None


def random_convex_polygon(rng: np.random.Generator, n_vertices: int) -> ConvexPolygon:
    """Random convex polygon with exactly n vertices (Valtr's construction)."""
    if n_vertices < 3:
        raise ValueError("need at least 3 vertices")
    for _ in range(64):
        xs = np.sort(rng.random(n_vertices))
        ys = np.sort(rng.random(n_vertices))
        vx = _chain_deltas(xs, rng)
        vy = _chain_deltas(ys, rng)
        rng.shuffle(vy)
        vecs = np.stack([vx, vy], axis=1)
        angles = np.arctan2(vecs[:, 1], vecs[:, 0])
        vecs = vecs[np.argsort(angles)]
        pts = np.cumsum(vecs, axis=0)
        pts -= pts.min(axis=0)
        poly = _hull_polygon(pts)
        if poly.n_vertices == n_vertices:
            return ConvexPolygon(poly.vertices)
    # extremely rare collinear degeneracies: accept the hull vertex count
    return ConvexPolygon(poly.vertices)


def _chain_deltas(sorted_vals: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    lo, hi = sorted_vals[0], sorted_vals[-1]
    interior = sorted_vals[1:-1]
    mask = rng.random(len(interior)) < 0.5
    chain_a = np.concatenate([[lo], interior[mask], [hi]])
    chain_b = np.concatenate([[lo], interior[~mask], [hi]])
    return np.concatenate([np.diff(chain_a), -np.diff(chain_b)])


def random_polygon_corpus(seed: int, count: int, min_vertices: int = 5, max_vertices: int = 30):
    """Seeded stream of random convex polygons with 5 to 30 vertices."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = int(rng.integers(min_vertices, max_vertices + 1))
        out.append(random_convex_polygon(rng, k))
    return out


# ---------------------------------------------------------------------------
# geometry files


def load_geometry(path) -> ConvexPolygon | ConvexPolytope:
    """Read {"type": "polygon"|"polytope", "vertices": [...]} JSON."""
    data = json.loads(Path(path).read_text())
    kind = data.get("type")
    verts = np.asarray(data["vertices"], dtype=float)
    if kind == "polygon":
        return _hull_polygon(verts)
    if kind == "polytope":
        return ConvexPolytope.from_vertices(verts)
    raise ValueError(f"unknown geometry type {kind!r}")


def save_geometry(body, path) -> None:
    kind = "polygon" if isinstance(body, ConvexPolygon) else "polytope"
    data = {"type": kind, "vertices": [[float(c) for c in v] for v in body.vertices]}
    Path(path).write_text(json.dumps(data, indent=2) + "\n")
