"""Triangulation of convex polygons for piecewise-linear fields.

Boundary nodes subdivide the polygon edges at the target length; interior
nodes come from a hexagonal lattice kept clear of the boundary and relaxed by
a few rounds of neighbor averaging. Delaunay on the union conforms to the
polygon because the domain is convex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .geometry import ConvexPolygon


@dataclass
class Mesh:
    points: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray  # bool per point
    h: float
    domain: ConvexPolygon
    _tri_locator: Delaunay | None = field(default=None, repr=False)
    _areas: np.ndarray | None = field(default=None, repr=False)
    _grads: np.ndarray | None = field(default=None, repr=False)
    _lumped_mass: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        self._ensure_geometry()
        return self._areas

    def grads(self) -> np.ndarray:
        """Constant gradient of each nodal basis function per triangle, (m, 3, 2)."""
        self._ensure_geometry()
        return self._grads

    def lumped_mass(self) -> np.ndarray:
        self._ensure_geometry()
        return self._lumped_mass

    def _ensure_geometry(self):
        if self._areas is not None:
            return
        x = self.points[self.triangles]  # (m, 3, 2)
        e1 = x[:, 1] - x[:, 0]
        e2 = x[:, 2] - x[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        areas = 0.5 * det
        # nabla lambda_i = rot90(x_{i+2} - x_{i+1}) / (2 A), rot90 = (-y, x)
        grads = np.empty((len(self.triangles), 3, 2))
        for i in range(3):
            d = x[:, (i + 2) % 3] - x[:, (i + 1) % 3]
            grads[:, i, 0] = -d[:, 1]
            grads[:, i, 1] = d[:, 0]
        grads /= (2.0 * areas)[:, None, None]
        mass = np.zeros(self.n_points)
        w = np.repeat(areas / 3.0, 3)
        np.add.at(mass, self.triangles.ravel(), w)
        self._areas = areas
        self._grads = grads
        self._lumped_mass = mass

    def min_angle_deg(self) -> float:
        x = self.points[self.triangles]
        angles = []
        for i in range(3):
            a = x[:, (i + 1) % 3] - x[:, i]
            b = x[:, (i + 2) % 3] - x[:, i]
            cosang = np.einsum("ij,ij->i", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            angles.append(np.degrees(np.arccos(np.clip(cosang, -1, 1))))
        return float(np.min(angles))

    def locator(self) -> Delaunay:
        if self._tri_locator is None:
            raise RuntimeError("mesh was not built from a Delaunay triangulation")
        return self._tri_locator


def triangulate_polygon(domain: ConvexPolygon, h: float, smooth_iters: int = 5) -> Mesh:
    """Conforming triangulation of a convex polygon with target edge length h."""
    if domain.is_degenerate:
        raise ValueError("cannot mesh a degenerate polygon")
    if h <= 0:
        raise ValueError("h must be positive")

    bpts = _boundary_points(domain, h)
    ipts = _hex_lattice_interior(domain, h, bpts)
    pts = np.vstack([bpts, ipts]) if len(ipts) else bpts
    nb = len(bpts)

    for _ in range(smooth_iters):
        if len(ipts) == 0:
            break
        tri = Delaunay(pts)
        neigh_sum = np.zeros_like(pts)
        neigh_cnt = np.zeros(len(pts))
        for simplex in tri.simplices:
            for a in range(3):
                for b in range(3):
                    if a != b:
                        neigh_sum[simplex[a]] += pts[simplex[b]]
                        neigh_cnt[simplex[a]] += 1
        moved = neigh_sum[nb:] / np.maximum(neigh_cnt[nb:], 1)[:, None]
        # keep relaxed points inside with a safety margin
        inside = domain.contains(moved, tol=-0.3 * h)
        pts[nb:][inside] = moved[inside]

    tri = Delaunay(pts)
    simplices = _drop_slivers(pts, tri.simplices, h)
    boundary = np.zeros(len(pts), dtype=bool)
    boundary[:nb] = True
    mesh = Mesh(points=pts, triangles=simplices, boundary=boundary, h=float(h), domain=domain)
    mesh._tri_locator = tri
    return mesh


def _boundary_points(domain: ConvexPolygon, h: float) -> np.ndarray:
    out = []
    for a, b in domain.edges():
        n = max(1, int(np.ceil(np.linalg.norm(b - a) / h)))
        for k in range(n):
            out.append(a + (b - a) * (k / n))
    return np.array(out)


def _hex_lattice_interior(domain: ConvexPolygon, h: float, bpts: np.ndarray) -> np.ndarray:
    lo = domain.vertices.min(axis=0)
    hi = domain.vertices.max(axis=0)
    dy = h * np.sqrt(3) / 2
    ys = np.arange(lo[1] + 0.5 * dy, hi[1], dy)
    pts = []
    for row, y in enumerate(ys):
        off = 0.25 * h if row % 2 else -0.25 * h
        xs = np.arange(lo[0] + 0.5 * h + off, hi[0], h)
        pts.append(np.stack([xs, np.full_like(xs, y)], axis=1))
    if not pts:
        return np.zeros((0, 2))
    pts = np.vstack(pts)
    # clear of the boundary polyline by a fraction of h
    inside = domain.contains(pts, tol=-0.45 * h)
    pts = pts[inside]
    if len(pts) and len(bpts):
        d2 = ((pts[:, None, :] - bpts[None, :, :]) ** 2).sum(axis=2).min(axis=1)
        pts = pts[d2 >= (0.5 * h) ** 2]
    return pts


def _drop_slivers(pts: np.ndarray, simplices: np.ndarray, h: float) -> np.ndarray:
    x = pts[simplices]
    e1 = x[:, 1] - x[:, 0]
    e2 = x[:, 2] - x[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    keep = np.abs(det) > 1e-12 * h * h
    simplices = simplices[keep]
    det = det[keep]
    flip = det < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]
    return simplices