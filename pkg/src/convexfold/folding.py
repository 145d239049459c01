"""Reflections, caps, foldability, maximal folding heights and hearts.

A cap is the part of a body on the positive side of a cut plane; it is
foldable when its mirror image across the plane stays inside the body.
Folding the deepest foldable cap in every direction and intersecting the
leftover halfspaces gives an outer approximation of the heart, the region no
fold can remove.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import NotAShadow
from .geometry import (
    ConvexPolygon,
    ConvexPolytope,
    Cut,
    breadth,
    perp,
    section,
    support,
    unit,
)

FOLD_ITERS = 60  # bisection steps for the minimal foldable offset


@dataclass(frozen=True)
class FoldProfile:
    """Deepest foldable cut in one direction and the resulting fold height."""

    omega: np.ndarray
    lambda_min: float
    height: float


@dataclass
class HeartApprox:
    """Outer approximation of the heart from finitely many directions.

    The body is the intersection of K with the halfspaces
    {<x, omega_i> <= lambda_min(omega_i)}. In 2D the intersection is
    materialized as a polygon; in 3D it is kept in halfspace form because the
    exact heart can be lower-dimensional.
    """

    directions: np.ndarray
    offsets: np.ndarray
    base: object
    polygon: ConvexPolygon | None = None

    @property
    def n_directions(self) -> int:
        return len(self.directions)

    def contains(self, points, tol: float | None = None) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if tol is None:
            tol = self.base.tol
        ok = self.base.contains(pts, tol)
        return ok & (pts @ self.directions.T - self.offsets <= tol).all(axis=1)

    def diameter(self) -> float:
        if self.polygon is not None:
            return self.polygon.diameter
        raise NotImplementedError("diameter only materialized for 2D hearts")


# ---------------------------------------------------------------------------
# directions


def circle_directions(n: int) -> np.ndarray:
    """n equally spaced unit vectors; samples at n and n/2 nest for even n."""
    th = 2 * np.pi * np.arange(n) / n
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def fibonacci_sphere_directions(n: int) -> np.ndarray:
    """Deterministic quasi-uniform sample of the unit sphere."""
    k = np.arange(n)
    z = 1.0 - 2.0 * (k + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    th = golden * k
    return np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)


# ---------------------------------------------------------------------------
# reflection / cap / foldability


def reflect(points, cut: Cut) -> np.ndarray:
    """Mirror image across the cut plane: x - 2 omega (<omega, x> - lam)."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = pts - 2.0 * np.outer(pts @ cut.omega - cut.lam, cut.omega)
    return out[0] if single else out


def cap(body, cut: Cut):
    """Part of the body on the positive side of the cut; may be empty."""
    if isinstance(body, ConvexPolygon):
        verts = _clip_keep_above(body.vertices, cut.omega, cut.lam, body.tol)
        return _empty_or_polygon(verts)
    return _cap_polytope(body, cut)


def _empty_or_polygon(verts) -> ConvexPolygon:
    if len(verts) == 0:
        poly = ConvexPolygon.__new__(ConvexPolygon)
        poly.vertices = np.zeros((0, 2))
        return poly
    return ConvexPolygon(verts, check=False)


def cap_vertices(body, cut: Cut) -> np.ndarray:
    """Vertex set of the cap without building a body (fast path for folding)."""
    if isinstance(body, ConvexPolygon):
        return _clip_keep_above(body.vertices, cut.omega, cut.lam, body.tol)
    return _cap_polytope_vertices(body, cut)


def _clip_keep_above(verts: np.ndarray, omega, lam, tol) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex loop by {<x, omega> >= lam}."""
    if len(verts) == 0:
        return verts
    d = verts @ omega - lam
    if len(verts) < 3:
        keep = verts[d >= -tol]
        if len(verts) == 2 and ((d[0] > tol) != (d[1] > tol)) and abs(d[0] - d[1]) > 1e-300:
            t = d[0] / (d[0] - d[1])
            cross = verts[0] + t * (verts[1] - verts[0])
            keep = np.vstack([keep, cross]) if len(keep) else cross[None, :]
        return keep
    out = []
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        di, dj = d[i], d[j]
        if di >= -tol:
            out.append(verts[i])
        if (di > tol and dj < -tol) or (di < -tol and dj > tol):
            t = di / (di - dj)
            out.append(verts[i] + t * (verts[j] - verts[i]))
    if not out:
        return np.zeros((0, 2))
    return _dedupe(np.array(out), tol)


def _cap_polytope_vertices(body: ConvexPolytope, cut: Cut) -> np.ndarray:
    d = body.vertices @ cut.omega - cut.lam
    tol = body.tol
    pts = [body.vertices[d >= -tol]]
    for i, j in body.edges():
        di, dj = d[i], d[j]
        if (di > tol and dj < -tol) or (di < -tol and dj > tol):
            t = di / (di - dj)
            pts.append((body.vertices[i] + t * (body.vertices[j] - body.vertices[i]))[None, :])
    allpts = np.vstack(pts) if pts else np.zeros((0, 3))
    return _dedupe(allpts, tol)


def _cap_polytope(body: ConvexPolytope, cut: Cut) -> ConvexPolytope:
    verts = _cap_polytope_vertices(body, cut)
    normals = np.vstack([body.normals, -cut.omega])
    offsets = np.append(body.offsets, -cut.lam)
    if len(verts) >= 5:
        try:
            hull = ConvexHull(verts)
            verts = verts[hull.vertices]
        except QhullError:
            pass  # flat cap, keep raw candidates
    poly = ConvexPolytope.__new__(ConvexPolytope)
    poly.vertices = verts
    poly.normals = normals
    poly.offsets = offsets
    poly._edges = None
    return poly


def _dedupe(pts: np.ndarray, tol: float) -> np.ndarray:
    if len(pts) <= 1:
        return pts
    out = [pts[0]]
    for q in pts[1:]:
        if min(np.abs(q - r).max() for r in out) > tol:
            out.append(q)
    return np.array(out)


def _fold_context(body, tol):
    """Cached arrays for the foldability hot loop: vertices, halfspaces, edges."""
    verts = body.vertices
    if isinstance(body, ConvexPolygon):
        if body.is_degenerate:
            return None
        normals, offsets = body.halfplanes()
        edges = None
    else:
        normals, offsets = body.normals, body.offsets
        edges = body.edges()
    return verts, normals, offsets, edges, (body.tol if tol is None else tol)


def _cap_candidates(verts, edges, d, tol):
    """Cap vertex candidates (kept vertices + edge crossings), unordered."""
    kept = verts[d >= -tol]
    if edges is None:
        dj = np.roll(d, -1)
        cross = ((d > tol) & (dj < -tol)) | ((d < -tol) & (dj > tol))
        if cross.any():
            vj = np.roll(verts, -1, axis=0)
            t = (d[cross] / (d[cross] - dj[cross]))[:, None]
            pts = verts[cross] + t * (vj[cross] - verts[cross])
            return np.vstack([kept, pts]) if len(kept) else pts
        return kept
    di, dj = d[edges[:, 0]], d[edges[:, 1]]
    cross = ((di > tol) & (dj < -tol)) | ((di < -tol) & (dj > tol))
    if cross.any():
        a = verts[edges[cross, 0]]
        b = verts[edges[cross, 1]]
        t = (di[cross] / (di[cross] - dj[cross]))[:, None]
        return np.vstack([kept, a + t * (b - a)]) if len(kept) else a + t * (b - a)
    return kept


def _foldable_at(ctx, omega, lam) -> bool:
    verts, normals, offsets, edges, tol = ctx
    d = verts @ omega - lam
    pts = _cap_candidates(verts, edges, d, tol)
    if len(pts) == 0:
        return True
    refl = pts - 2.0 * np.outer(pts @ omega - lam, omega)
    return bool((refl @ normals.T - offsets <= tol).all())


def is_foldable(body, cut: Cut, tol: float | None = None) -> bool:
    """True when the mirrored cap stays inside the body.

    Checking the reflected cap vertices suffices by convexity. Reflected
    extreme points may sit exactly on the boundary, hence the signed-distance
    slack (default 1e-9 * diameter).
    """
    ctx = _fold_context(body, tol)
    if ctx is None:
        if tol is None:
            tol = body.tol
        verts = cap_vertices(body, cut)
        if len(verts) == 0:
            return True
        return bool(body.contains(reflect(verts, cut), tol).all())
    return _foldable_at(ctx, cut.omega, cut.lam)


def folding_profile(body, omega, iters: int = FOLD_ITERS, tol: float | None = None) -> FoldProfile:
    """Deepest foldable offset by bisection; assumes foldability monotone in lam.

    Bracket is [-H(-omega), H(omega)]: the tangent cap at the top is foldable
    (it reflects onto itself), the full body generally is not.
    """
    omega = unit(omega)
    hi = support(body, omega)
    lo = -support(body, -omega)
    ctx = _fold_context(body, tol)
    if ctx is None:
        raise ValueError("folding profile needs a nondegenerate body")
    if _foldable_at(ctx, omega, lo):
        lam = lo
    else:
        a, b = lo, hi
        for _ in range(iters):
            mid = 0.5 * (a + b)
            if _foldable_at(ctx, omega, mid):
                b = mid
            else:
                a = mid
        lam = b
    return FoldProfile(omega=omega, lambda_min=float(lam), height=float(hi - lam))


# ---------------------------------------------------------------------------
# heart


def heart(body, n_directions: int) -> HeartApprox:
    """Outer approximation of the heart from n sampled directions.

    2D uses equally spaced angles (nesting under halving), 3D a Fibonacci
    sphere. The approximation only shrinks as sampling refines; containment
    claims may be tested against it, exclusion claims may not.
    """
    if n_directions < 16:
        raise ValueError("need at least 16 directions")
    if isinstance(body, ConvexPolygon):
        dirs = circle_directions(n_directions)
    else:
        dirs = fibonacci_sphere_directions(n_directions)
    offsets = np.array([folding_profile(body, w).lambda_min for w in dirs])
    poly = None
    if isinstance(body, ConvexPolygon):
        # clip with extra slack: the sampled offsets each sit up to one
        # containment tolerance below the true fold offset, so the exact
        # intersection can be empty when the true heart is a single point
        clip_tol = 10 * body.tol
        verts = body.vertices
        for w, lam in zip(dirs, offsets):
            verts = _clip_keep_above(verts, -w, -lam, clip_tol)
            if len(verts) == 0:
                break
        if len(verts) == 0:
            verts = _max_slack_point(dirs, offsets)[None, :]
        poly = _empty_or_polygon(verts)
    return HeartApprox(directions=dirs, offsets=offsets, base=body, polygon=poly)


def _max_slack_point(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Point minimizing the worst constraint violation of {normals x <= offsets}."""
    from scipy.optimize import linprog

    n = normals.shape[1]
    # variables (x, t): minimize t subject to normals x - t <= offsets
    res = linprog(
        c=np.append(np.zeros(n), 1.0),
        A_ub=np.hstack([normals, -np.ones((len(normals), 1))]),
        b_ub=offsets,
        bounds=[(None, None)] * n + [(None, None)],
        method="highs",
    )
    if not res.success:
        raise RuntimeError("max-slack point LP failed")
    return res.x[:n]


# ---------------------------------------------------------------------------
# lemma verifiers


def is_shadow_section(polygon: ConvexPolygon, cut: Cut, rtol: float = 1e-6) -> bool:
    """Does the section at the cut equal the shadow of the polygon on the cut line?

    Equivalent to the section chord spanning the full extent of the polygon in
    the in-plane direction perp(omega).
    """
    try:
        seg = section(polygon, cut)
    except Exception:
        return False
    d = perp(cut.omega)
    ext = sorted([float(seg.a @ d), float(seg.b @ d)])
    full = [-support(polygon, -d), support(polygon, d)]
    tol = rtol * max(polygon.diameter, 1e-12)
    return abs(ext[0] - full[0]) <= tol and abs(ext[1] - full[1]) <= tol


def lemma_fold_check(polygon: ConvexPolygon, cut: Cut, tol: float = 1e-9) -> dict:
    """Check the quarter-breadth folding bound at a shadow-section cut.

    Requires the section at the cut to be a shadow of the body. Verifies
    max(F(omega), F(-omega)) >= B(omega)/4 and, when the cut offset is at most
    the mid-level (H(omega) - H(-omega))/2, that the cap above
    mu = H(omega) - B(omega)/4 folds and mu >= lam + B/4.
    """
    if not is_shadow_section(polygon, cut):
        raise NotAShadow("section at the cut is not a shadow of the body")
    omega = cut.omega
    b = breadth(polygon, omega)
    h_plus = support(polygon, omega)
    h_minus = support(polygon, -omega)
    f_plus = folding_profile(polygon, omega)
    f_minus = folding_profile(polygon, -omega)
    max_height = max(f_plus.height, f_minus.height)
    bound_ok = max_height >= b / 4 - tol

    report = {
        "breadth": float(b),
        "height_plus": float(f_plus.height),
        "height_minus": float(f_minus.height),
        "quarter_bound": float(b / 4),
        "bound_holds": bool(bound_ok),
        "mid_level_condition": bool(cut.lam <= (h_plus - h_minus) / 2 + tol),
        "equality_gap": float(max_height - b / 4),
    }
    if report["mid_level_condition"]:
        mu = h_plus - b / 4
        report["mu"] = float(mu)
        report["mu_fold_ok"] = bool(is_foldable(polygon, Cut(mu, omega)))
        report["mu_above_lam_plus_quarter"] = bool(mu >= cut.lam + b / 4 - tol)
    return report


def rectangle_rigidity_check(
    polygon: ConvexPolygon,
    cut: Cut,
    delta: float,
    n_angles: int = 20,
    eps: float | None = None,
) -> dict:
    """Finite-sweep surrogate for the fold-height rigidity statement.

    Let C be the cap above the cut. If the half-slab of the body between the
    cut level and the mid-level toward H(omega) is not a rectangle with sides
    parallel to omega and perp(omega), the fold height of C may not drop in
    the limit omega' -> omega. The limit is not decidable numerically; this
    sweeps angles up to delta and reports the observed minimum, labelled as
    finite-sweep evidence.
    """
    if not is_shadow_section(polygon, cut):
        raise NotAShadow("section at the cut is not a shadow of the body")
    omega = cut.omega
    if eps is None:
        eps = 1e-7 * polygon.diameter

    h = support(polygon, omega)
    slab_lo, slab_hi = cut.lam, (cut.lam + h) / 2
    verts = _clip_keep_above(polygon.vertices, omega, slab_lo, polygon.tol)
    verts = _clip_keep_above(verts, -omega, -slab_hi, polygon.tol)
    slab = _empty_or_polygon(verts)
    rect_defect = _rectangle_defect(slab, omega)
    is_rect = rect_defect <= 1e-7

    cap_body = cap(polygon, cut)
    f_center = folding_profile(cap_body, omega).height
    angles = np.linspace(-delta, delta, n_angles + 1)
    angles = angles[np.abs(angles) > 1e-15]
    heights = []
    for a in angles:
        c, s = np.cos(a), np.sin(a)
        w = np.array([c * omega[0] - s * omega[1], s * omega[0] + c * omega[1]])
        heights.append(folding_profile(cap_body, w).height)
    heights = np.array(heights)
    min_height = float(heights.min()) if len(heights) else f_center

    report = {
        "rectangle": bool(is_rect),
        "rectangle_defect": float(rect_defect),
        "cap_height_at_center": float(f_center),
        "min_height_near_center": min_height,
        "delta": float(delta),
        "n_angles": int(len(angles)),
        "evidence": "finite-sweep",
    }
    if not is_rect:
        report["no_drop_nearby"] = bool(min_height >= f_center - eps)
    return report


def _rectangle_defect(slab: ConvexPolygon, omega) -> float:
    """1 - area/area(bounding box) in the (omega, perp(omega)) frame."""
    if slab.is_degenerate:
        return 0.0
    u = perp(omega)
    s = slab.vertices @ omega
    t = slab.vertices @ u
    box_area = (s.max() - s.min()) * (t.max() - t.min())
    if box_area <= 0:
        return 0.0
    return max(0.0, 1.0 - slab.area() / box_area)
