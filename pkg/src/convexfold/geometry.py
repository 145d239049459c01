"""Convex-body queries in 2D and 3D: support, breadth, width, sections, shadows.

Bodies are vertex-based: polygons as counterclockwise vertex loops, polytopes as
vertices plus outward face halfspaces. All predicates use a relative tolerance
scaled by the body diameter; there is no exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import EmptyBody, NoIntersection

GEOM_RTOL = 1e-9


def unit(v) -> np.ndarray:
    """Normalize a vector, rejecting near-zero input."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-300:
        raise ValueError("cannot normalize zero vector")
    return v / n


def perp(v) -> np.ndarray:
    """Counterclockwise perpendicular of a 2D vector."""
    v = np.asarray(v, dtype=float)
    return np.array([-v[1], v[0]])


def plane_basis(omega) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the plane normal to a 3D direction.

    Picks the coordinate axis least aligned with omega, so that projecting
    along (1,0,0) yields coordinates in the (x2, x3) plane.
    """
    omega = unit(omega)
    k = int(np.argmin(np.abs(omega)))
    e = np.zeros(3)
    e[k] = 1.0
    e1 = unit(e - np.dot(e, omega) * omega)
    e2 = np.cross(omega, e1)
    return e1, e2


@dataclass(frozen=True)
class Cut:
    """Hyperplane {x : <x, omega> = lam} with unit normal omega."""

    lam: float
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", unit(self.omega))
        object.__setattr__(self, "lam", float(self.lam))


class ConvexPolygon:
    """Bounded convex body in the plane as a counterclockwise vertex loop.

    Degenerate bodies (segments, points) are allowed: level sets collapse to
    the argmax in the experiments and must not crash queries.
    """

    def __init__(self, vertices, check: bool = True):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        if v.size == 0:
            raise EmptyBody("polygon with no vertices")
        if v.shape[1] != 2:
            raise ValueError("expected (n, 2) vertex array")
        v = _dedupe_loop(v)
        self.vertices = v
        if check and len(v) >= 3:
            self._check_convex_ccw()

    @property
    def dim(self) -> int:
        return 2

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 3

    @property
    def diameter(self) -> float:
        """Largest pairwise vertex distance (cached)."""
        cached = getattr(self, "_diameter", None)
        if cached is None:
            cached = _vertex_diameter(self.vertices)
            self._diameter = cached
        return cached

    @property
    def tol(self) -> float:
        return GEOM_RTOL * max(self.diameter, 1e-12)

    def area(self) -> float:
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def centroid(self) -> np.ndarray:
        v = self.vertices
        a = self.area()
        if a < self.tol * max(self.diameter, 1e-12):
            return v.mean(axis=0)
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        w = x * yn - xn * y
        cx = np.sum((x + xn) * w) / (6 * a)
        cy = np.sum((y + yn) * w) / (6 * a)
        return np.array([cx, cy])

    def edges(self):
        """Vertex pairs (v_i, v_{i+1}) around the loop."""
        v = self.vertices
        return zip(v, np.roll(v, -1, axis=0))

    def halfplanes(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward normals and offsets: K = {x : normals @ x <= offsets}."""
        cached = getattr(self, "_halfplanes", None)
        if cached is not None:
            return cached
        v = self.vertices
        if len(v) < 3:
            raise EmptyBody("degenerate polygon has no halfplane form")
        e = np.roll(v, -1, axis=0) - v
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = np.einsum("ij,ij->i", normals, v)
        self._halfplanes = (normals, offsets)
        return self._halfplanes

    def contains(self, points, tol: float | None = None) -> np.ndarray:
        """Pointwise membership with signed-distance slack tol (default body tol)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if tol is None:
            tol = self.tol
        if len(self.vertices) == 0:
            return np.zeros(len(pts), dtype=bool)
        if self.is_degenerate:
            return _dist_points_to_polyline(pts, self.vertices) <= tol
        normals, offsets = self.halfplanes()
        return (pts @ normals.T - offsets <= tol).all(axis=1)

    def _check_convex_ccw(self):
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        cr = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        if np.any(cr < -self.tol * max(self.diameter, 1e-12)):
            raise ValueError("vertices not in counterclockwise convex position")

    def __repr__(self):
        return f"ConvexPolygon({self.n_vertices} vertices)"


class ConvexPolytope:
    """Bounded convex body in 3-space: vertices plus outward face halfspaces."""

    def __init__(self, vertices, normals, offsets, check: bool = True):
        self.vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        self.normals = np.atleast_2d(np.asarray(normals, dtype=float))
        self.offsets = np.asarray(offsets, dtype=float)
        if self.vertices.shape[1] != 3:
            raise ValueError("expected (n, 3) vertex array")
        self._edges = None
        if check:
            slack = self.vertices @ self.normals.T - self.offsets
            if slack.max() > self.tol:
                raise ValueError("a vertex violates a face inequality")

    @classmethod
    def from_vertices(cls, vertices) -> "ConvexPolytope":
        """Hull of a full-dimensional 3D point set."""
        vertices = np.asarray(vertices, dtype=float)
        hull = ConvexHull(vertices)
        eqs = _dedupe_rows(hull.equations, 1e-12 * max(1.0, np.abs(hull.equations).max()))
        body = cls(vertices[hull.vertices], eqs[:, :3], -eqs[:, 3], check=False)
        return body

    @property
    def dim(self) -> int:
        return 3

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def diameter(self) -> float:
        cached = getattr(self, "_diameter", None)
        if cached is None:
            cached = _vertex_diameter(self.vertices)
            self._diameter = cached
        return cached

    @property
    def tol(self) -> float:
        return GEOM_RTOL * max(self.diameter, 1e-12)

    def edges(self) -> np.ndarray:
        """Vertex index pairs of hull edges (face diagonals excluded for simplicial hulls)."""
        if self._edges is None:
            n = self.n_vertices
            if n <= 4:
                self._edges = np.array(
                    [(i, j) for i in range(n) for j in range(i + 1, n)], dtype=int
                )
            else:
                hull = ConvexHull(self.vertices)
                pairs = set()
                for simplex in hull.simplices:
                    a, b, c = sorted(simplex)
                    pairs.update([(a, b), (a, c), (b, c)])
                self._edges = np.array(sorted(pairs), dtype=int)
        return self._edges

    def contains(self, points, tol: float | None = None) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if tol is None:
            tol = self.tol
        return (pts @ self.normals.T - self.offsets <= tol).all(axis=1)

    def __repr__(self):
        return f"ConvexPolytope({self.n_vertices} vertices, {len(self.offsets)} faces)"


@dataclass(frozen=True)
class Segment:
    """Convex hull of two points, in the plane or in space."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))

    @property
    def vertices(self) -> np.ndarray:
        return np.stack([self.a, self.b])

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


# ---------------------------------------------------------------------------
# support / breadth / width


def support(body, omega) -> float:
    """sup over the body of <x, omega>; attained at a vertex."""
    omega = unit(omega)
    verts = getattr(body, "vertices", None)
    if verts is None or len(verts) == 0:
        raise EmptyBody("support of empty body")
    return float(np.max(verts @ omega))


def support_vertex(body, omega) -> np.ndarray:
    """A vertex attaining the support value."""
    omega = unit(omega)
    verts = body.vertices
    return verts[int(np.argmax(verts @ omega))].copy()


def breadth(body, omega) -> float:
    """Distance between the two supporting hyperplanes with normal omega."""
    return support(body, omega) + support(body, -np.asarray(omega, dtype=float))


def width(polygon: ConvexPolygon) -> tuple[float, np.ndarray]:
    """Minimal breadth of a polygon and a minimizing direction.

    The minimum over directions is attained at an edge normal, so it suffices
    to scan edges (rotating-calipers fact). Ties resolve to the direction of
    smallest angle to the positive x axis, with directions identified mod sign.
    """
    v = polygon.vertices
    if polygon.is_degenerate:
        if len(v) == 1:
            return 0.0, np.array([1.0, 0.0])
        return 0.0, _canonical_direction(unit(perp(v[1] - v[0])))
    e = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(e, axis=1)
    best = None
    for k in range(len(v)):
        if lengths[k] <= polygon.tol:
            continue
        n = _canonical_direction(np.array([e[k, 1], -e[k, 0]]) / lengths[k])
        b = breadth(polygon, n)
        ang = np.arctan2(n[1], n[0]) % np.pi
        if best is None or b < best[0] - polygon.tol or (
            abs(b - best[0]) <= polygon.tol and ang < best[1] - 1e-15
        ):
            best = (b, ang, n)
    return best[0], best[2]


def _canonical_direction(n: np.ndarray) -> np.ndarray:
    """Representative of {n, -n} with angle in [0, pi)."""
    if n[1] < 0 or (n[1] == 0 and n[0] < 0):
        return -n
    return n


# ---------------------------------------------------------------------------
# sections and shadows


def section(body, cut: Cut):
    """Intersection of the body with the cut hyperplane.

    Returns a Segment for polygons and a ConvexPolygon in plane coordinates
    for polytopes (basis from plane_basis(cut.omega)).
    """
    if isinstance(body, ConvexPolygon):
        return _section_polygon(body, cut)
    return _section_polytope(body, cut)


def _section_polygon(polygon: ConvexPolygon, cut: Cut) -> Segment:
    omega, lam = cut.omega, cut.lam
    d = perp(omega)
    p0 = lam * omega
    # clip the parametrized line p0 + s d against each edge halfplane
    if polygon.is_degenerate:
        raise NoIntersection("section of a degenerate polygon is not supported")
    normals, offsets = polygon.halfplanes()
    num = offsets - normals @ p0
    den = normals @ d
    lo, hi = -np.inf, np.inf
    tol = polygon.tol
    for nk, dk in zip(num, den):
        if abs(dk) <= 1e-15:
            if nk < -tol:
                raise NoIntersection("cut plane misses the body")
            continue
        s = nk / dk
        if dk > 0:
            hi = min(hi, s)
        else:
            lo = max(lo, s)
    if lo > hi + tol:
        raise NoIntersection("cut plane misses the body")
    lo = min(lo, hi)
    return Segment(p0 + lo * d, p0 + hi * d)


def _section_polytope(body: ConvexPolytope, cut: Cut) -> ConvexPolygon:
    omega, lam = cut.omega, cut.lam
    vals = body.vertices @ omega - lam
    tol = body.tol
    if vals.min() > tol or vals.max() < -tol:
        raise NoIntersection("cut plane misses the body")
    e1, e2 = plane_basis(omega)
    p0 = lam * omega
    # the section is a 2D halfplane intersection in (e1, e2) coordinates
    pts = []
    for i, j in body.edges():
        a, b = vals[i], vals[j]
        if (a > tol and b < -tol) or (a < -tol and b > tol):
            t = a / (a - b)
            x = body.vertices[i] + t * (body.vertices[j] - body.vertices[i])
            pts.append(x)
    for k in range(body.n_vertices):
        if abs(vals[k]) <= tol:
            pts.append(body.vertices[k])
    if not pts:
        raise NoIntersection("cut plane touches no edge")
    pts = np.array(pts)
    uv = np.stack([(pts - p0) @ e1, (pts - p0) @ e2], axis=1)
    return _hull_polygon(uv)


def project(body, omega, lam: float = 0.0):
    """Shadow of the body: orthogonal projection onto the plane <x, omega> = lam.

    For polygons the shadow is a Segment on the plane; for polytopes it is a
    ConvexPolygon in plane_basis(omega) coordinates.
    """
    omega = unit(omega)
    if isinstance(body, ConvexPolygon):
        d = perp(omega)
        s_hi = support(body, d)
        s_lo = -support(body, -d)
        p0 = lam * omega
        return Segment(p0 + s_lo * d, p0 + s_hi * d)
    e1, e2 = plane_basis(omega)
    uv = np.stack([body.vertices @ e1, body.vertices @ e2], axis=1)
    return _hull_polygon(uv)


def _hull_polygon(pts: np.ndarray) -> ConvexPolygon:
    """Convex hull of planar points as a polygon; tolerant of degenerate input."""
    pts = np.atleast_2d(pts)
    if len(pts) >= 3:
        try:
            hull = ConvexHull(pts)
            return ConvexPolygon(pts[hull.vertices], check=False)
        except Exception:
            pass
    uniq = _dedupe_rows(pts[:4096], 1e-12 * max(1.0, np.abs(pts).max()))
    if len(uniq) < 3:
        return ConvexPolygon(uniq, check=False)
    # nearly collinear: fall back to the extreme pair
    d = uniq - uniq.mean(axis=0)
    axis = d[np.argmax(np.linalg.norm(d, axis=1))]
    t = d @ axis
    return ConvexPolygon(np.stack([uniq[np.argmin(t)], uniq[np.argmax(t)]]), check=False)


def shadow_section_for_min_breadth(polygon: ConvexPolygon):
    """Cut and chord realizing the width, with section equal to shadow.

    Returns (cut, chord, verified): the chord [x1, x2] is parallel to the
    minimal-breadth direction w and spans the full w-extent of the polygon, so
    the section at the cut equals the projection of the polygon onto the cut
    line. The cut normal is oriented so lam <= (H(omega) - H(-omega)) / 2.
    """
    if polygon.is_degenerate:
        raise EmptyBody("width chord of a degenerate polygon")
    w_val, w_dir = width(polygon)
    tol = max(polygon.tol, 1e-12)
    u = perp(w_dir)

    x1 = _face_point(polygon, w_dir, u, tol)
    x2 = _face_point(polygon, -w_dir, u, tol)
    if x1 is None or x2 is None:
        raise RuntimeError("width faces do not share a chord; polygon may be ill-conditioned")
    chord = Segment(x1, x2)

    lam = float(x1 @ u)
    if lam > (support(polygon, u) - support(polygon, -u)) / 2 + tol:
        u = -u
        lam = -lam
    cut = Cut(lam, u)

    seg = _section_polygon(polygon, cut)
    ext = sorted([float(seg.a @ w_dir), float(seg.b @ w_dir)])
    full = [-support(polygon, -w_dir), support(polygon, w_dir)]
    verified = abs(ext[0] - full[0]) <= 1e3 * tol and abs(ext[1] - full[1]) <= 1e3 * tol
    return cut, chord, verified


def _face_point(polygon: ConvexPolygon, direction, axis, tol):
    """Point of the supporting face at `direction` whose axis-coordinate is shared.

    The supporting faces at +-direction project onto intervals of the axis; the
    width characterization guarantees the intervals overlap, and any common
    coordinate yields a chord realizing the breadth. Uses the mid-overlap value.
    """
    v = polygon.vertices
    h = support(polygon, direction)
    on_face = np.abs(v @ unit(direction) - h) <= 1e3 * tol
    face = v[on_face]
    h_opp = support(polygon, -np.asarray(direction, dtype=float))
    on_opp = np.abs(v @ unit(direction) + h_opp) <= 1e3 * tol
    opp = v[on_opp]
    t_face = face @ axis
    t_opp = opp @ axis
    lo = max(t_face.min(), t_opp.min())
    hi = min(t_face.max(), t_opp.max())
    if lo > hi + 1e3 * tol:
        return None
    t = 0.5 * (max(lo, t_face.min()) + min(hi, t_face.max()))
    # interpolate along the face to axis-coordinate t
    if len(face) == 1:
        return face[0].copy()
    order = np.argsort(t_face)
    ts, fs = t_face[order], face[order]
    t = np.clip(t, ts[0], ts[-1])
    k = int(np.searchsorted(ts, t, side="right")) - 1
    k = max(0, min(k, len(ts) - 2))
    dt = ts[k + 1] - ts[k]
    w = 0.0 if dt <= 1e-15 else (t - ts[k]) / dt
    return fs[k] + w * (fs[k + 1] - fs[k])


# ---------------------------------------------------------------------------
# Hausdorff distance


def hausdorff_distance(body1, body2) -> float:
    """Hausdorff distance between convex bodies (polygons, polytopes, segments).

    For convex sets the supremum of the distance-to-other is attained at a
    vertex, so only vertex-to-body distances are needed.
    """
    v1 = getattr(body1, "vertices", None)
    v2 = getattr(body2, "vertices", None)
    if v1 is None or v2 is None or len(v1) == 0 or len(v2) == 0:
        raise EmptyBody("hausdorff distance of empty body")
    d12 = max(_dist_point_to_body(p, body2) for p in np.atleast_2d(v1))
    d21 = max(_dist_point_to_body(p, body1) for p in np.atleast_2d(v2))
    return float(max(d12, d21))


def _dist_point_to_body(p, body) -> float:
    p = np.asarray(p, dtype=float)
    if isinstance(body, Segment):
        return _dist_point_segment(p, body.a, body.b)
    if isinstance(body, ConvexPolygon):
        if body.is_degenerate:
            return float(_dist_points_to_polyline(p[None, :], body.vertices)[0])
        if body.contains(p[None, :])[0]:
            return 0.0
        return float(_dist_points_to_polyline(p[None, :], np.vstack([body.vertices, body.vertices[:1]]))[0])
    if isinstance(body, ConvexPolytope):
        if body.contains(p[None, :])[0]:
            return 0.0
        hull = ConvexHull(body.vertices) if body.n_vertices > 4 else None
        tris = hull.simplices if hull is not None else _tetra_faces(body.n_vertices)
        return min(
            _dist_point_triangle(p, body.vertices[i], body.vertices[j], body.vertices[k])
            for i, j, k in tris
        )
    raise TypeError(f"unsupported body type {type(body)!r}")


def _tetra_faces(n):
    if n < 3:
        return []
    if n == 3:
        return [(0, 1, 2)]
    return [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]


def _dist_point_segment(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom < 1e-300 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _dist_points_to_polyline(pts, chain) -> np.ndarray:
    chain = np.atleast_2d(chain)
    if len(chain) == 1:
        return np.linalg.norm(pts - chain[0], axis=1)
    out = np.full(len(pts), np.inf)
    for a, b in zip(chain[:-1], chain[1:]):
        ab = b - a
        denom = float(ab @ ab)
        if denom < 1e-300:
            d = np.linalg.norm(pts - a, axis=1)
        else:
            t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
            d = np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)
        out = np.minimum(out, d)
    return out


def _dist_point_triangle(p, a, b, c) -> float:
    """Euclidean distance from a 3D point to a triangle."""
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = float(ab @ ap), float(ac @ ap)
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(p - a))
    bp = p - b
    d3, d4 = float(ab @ bp), float(ac @ bp)
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(p - b))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        t = d1 / (d1 - d3)
        return float(np.linalg.norm(p - (a + t * ab)))
    cp = p - c
    d5, d6 = float(ab @ cp), float(ac @ cp)
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(p - c))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        t = d2 / (d2 - d6)
        return float(np.linalg.norm(p - (a + t * ac)))
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + t * (c - b))))
    denom = 1.0 / (va + vb + vc)
    v, w = vb * denom, vc * denom
    return float(np.linalg.norm(p - (a + v * ab + w * ac)))


# ---------------------------------------------------------------------------
# helpers


def _vertex_diameter(v: np.ndarray) -> float:
    if len(v) <= 1:
        return 0.0
    if len(v) > 2048:
        lo, hi = v.min(axis=0), v.max(axis=0)
        return float(np.linalg.norm(hi - lo))
    d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


def _dedupe_loop(v: np.ndarray) -> np.ndarray:
    """Drop consecutive duplicates (loop-wise) within a scale-relative tolerance."""
    if len(v) <= 1:
        return v
    scale = max(np.abs(v).max(), 1e-12)
    keep = [0]
    for k in range(1, len(v)):
        if np.linalg.norm(v[k] - v[keep[-1]]) > 1e-12 * scale:
            keep.append(k)
    if len(keep) > 1 and np.linalg.norm(v[keep[-1]] - v[keep[0]]) <= 1e-12 * scale:
        keep.pop()
    return v[keep]


def _dedupe_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    out = []
    for r in np.atleast_2d(rows):
        if not any(np.abs(r - q).max() <= tol for q in out):
            out.append(r)
    return np.array(out)
