"""Energy-minimizing solver for -div(|grad u|^{p-2} grad u) = f(u), u = 0 on the boundary.

Piecewise-linear elements on a Delaunay triangulation; the gradient is constant
per triangle, so the p-Dirichlet term of the energy is exact per element and the
reaction term uses the lumped vertex rule. Minimization is gradient descent with
Barzilai-Borwein steps, Armijo backtracking, and continuation both in p (from
the linear p=2 solve) and in the gradient regularization epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EmptyLevel, InvalidReaction, NonConvergence, UnsupportedReaction
from .geometry import ConvexPolygon, breadth, width, perp
from .meshing import Mesh, triangulate_polygon

_EPS_SCHEDULE = (1e-2, 1e-4, 1e-8, 0.0)


@dataclass(frozen=True)
class Reaction:
    """Reaction term f(u): torsion (f = 1), power (f = c t^{q-1}), or a table.

    Power requires 1 <= q < p, the regime with a unique positive solution.
    Tabulated reactions carry a monotone sample table (t_k, f_k), linearly
    interpolated, and must pass the hypothesis checks before use in the
    concavity experiments.
    """

    p: float
    kind: str = "torsion"
    c: float = 1.0
    q: float = 1.0
    table: tuple | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidReaction(f"p must exceed 1, got {self.p}")
        if self.kind not in ("torsion", "power", "tabulated"):
            raise InvalidReaction(f"unknown reaction kind {self.kind!r}")
        if self.kind == "power":
            if not self.c > 0:
                raise InvalidReaction("power reaction needs c > 0")
            if not (1 <= self.q < self.p):
                raise InvalidReaction(
                    f"power reaction needs 1 <= q < p, got q={self.q}, p={self.p}"
                )
        if self.kind == "tabulated":
            if self.table is None:
                raise InvalidReaction("tabulated reaction needs a table")
            tk, fk = (np.asarray(a, dtype=float) for a in self.table)
            if len(tk) < 2 or np.any(np.diff(tk) <= 0) or np.any(fk < 0):
                raise InvalidReaction("table must have increasing t and nonnegative f")

    def f(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "torsion":
            return np.ones_like(t)
        if self.kind == "power":
            tp = np.maximum(t, 0.0)
            if self.q == 1:
                return np.full_like(t, self.c)
            return self.c * tp ** (self.q - 1)
        tk, fk = (np.asarray(a, dtype=float) for a in self.table)
        return np.interp(np.maximum(t, 0.0), tk, fk)

    def F(self, t) -> np.ndarray:
        """Antiderivative of f with F(0) = 0 (torsion keeps F(t) = t below zero)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "torsion":
            return t.copy()
        if self.kind == "power":
            tp = np.maximum(t, 0.0)
            return self.c * tp**self.q / self.q
        tk, fk = (np.asarray(a, dtype=float) for a in self.table)
        grid = np.linspace(0.0, max(tk[-1], float(np.max(t, initial=0.0)) + 1.0), 4097)
        fg = np.interp(grid, tk, fk)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (fg[1:] + fg[:-1]) * np.diff(grid))])
        return np.interp(np.maximum(t, 0.0), grid, cum)

    def label(self) -> str:
        if self.kind == "torsion":
            return f"torsion(p={self.p})"
        if self.kind == "power":
            return f"power(p={self.p}, q={self.q}, c={self.c})"
        return f"tabulated(p={self.p}, {len(self.table[0])} samples)"


@dataclass
class ScalarField:
    """Nodal values of a piecewise-linear field on a mesh."""

    mesh: Mesh
    values: np.ndarray
    p: float | None = None
    reaction: Reaction | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    @property
    def value_tolerance(self) -> float:
        """Discretization-error scale of the nodal values, (h/diam)^2 * max |u|."""
        rel = (self.mesh.h / max(self.mesh.domain.diameter, 1e-300)) ** 2
        return rel * float(np.abs(self.values).max())

    def evaluate(self, points) -> np.ndarray:
        """Interpolate at arbitrary points; snaps to the nearest node outside the hull."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        loc = self.mesh.locator()
        simplex = loc.find_simplex(pts)
        out = np.empty(len(pts))
        inside = simplex >= 0
        if inside.any():
            s = simplex[inside]
            trans = loc.transform[s]
            bary2 = np.einsum("nij,nj->ni", trans[:, :2], pts[inside] - trans[:, 2])
            bary = np.concatenate([bary2, 1 - bary2.sum(axis=1, keepdims=True)], axis=1)
            bary = np.clip(bary, 0.0, 1.0)
            bary /= bary.sum(axis=1, keepdims=True)
            out[inside] = np.einsum("ni,ni->n", bary, self.values[loc.simplices[s]])
        if (~inside).any():
            miss = pts[~inside]
            d2 = ((miss[:, None, :] - self.mesh.points[None, :, :]) ** 2).sum(axis=2)
            out[~inside] = self.values[np.argmin(d2, axis=1)]
        return out

    def triangle_gradients(self) -> np.ndarray:
        ut = self.values[self.mesh.triangles]
        return np.einsum("mi,mid->md", ut, self.mesh.grads())

    def transform(self, func) -> "ScalarField":
        return ScalarField(
            mesh=self.mesh,
            values=np.asarray(func(self.values), dtype=float),
            p=self.p,
            reaction=self.reaction,
            diagnostics=dict(self.diagnostics),
        )


# ---------------------------------------------------------------------------
# assembly and minimization


def _stiffness(mesh: Mesh) -> sp.csr_matrix:
    tris, areas, grads = mesh.triangles, mesh.areas(), mesh.grads()
    m = len(tris)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    vals = (areas[:, None, None] * np.einsum("mid,mjd->mij", grads, grads)).ravel()
    n = mesh.n_points
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


class _Energy:
    """Regularized p-Dirichlet energy with lumped reaction term."""

    def __init__(self, mesh: Mesh, reaction: Reaction, p: float, eps: float):
        self.mesh = mesh
        self.reaction = reaction
        self.p = p
        self.eps2 = eps * eps
        self.free = ~mesh.boundary
        self.tris = mesh.triangles
        self.areas = mesh.areas()
        self.grads = mesh.grads()
        self.mass = mesh.lumped_mass()

    def value_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        p = self.p
        gu = np.einsum("mi,mid->md", u[self.tris], self.grads)
        gn2 = np.einsum("md,md->m", gu, gu) + self.eps2
        J = float(np.dot(self.areas, gn2 ** (p / 2)) / p - np.dot(self.mass, self.reaction.F(u)))
        if p == 2:
            w = np.ones_like(gn2)
        else:
            with np.errstate(divide="ignore"):
                w = np.where(gn2 > 0, gn2 ** ((p - 2) / 2), 0.0)
        contrib = (self.areas * w)[:, None] * np.einsum("md,mid->mi", gu, self.grads)
        g = np.zeros(len(u))
        for i in range(3):
            g += np.bincount(self.tris[:, i], weights=contrib[:, i], minlength=len(u))
        g -= self.mass * self.reaction.f(u)
        g[~self.free] = 0.0
        return J, g

    def value(self, u: np.ndarray) -> float:
        p = self.p
        gu = np.einsum("mi,mid->md", u[self.tris], self.grads)
        gn2 = np.einsum("md,md->m", gu, gu) + self.eps2
        return float(np.dot(self.areas, gn2 ** (p / 2)) / p - np.dot(self.mass, self.reaction.F(u)))

    def load_norm(self, u: np.ndarray) -> float:
        r = self.mass * self.reaction.f(u)
        return float(np.linalg.norm(r[self.free])) or 1.0


def _minimize_bb(
    energy: _Energy,
    u0: np.ndarray,
    grad_rtol: float,
    energy_rtol: float,
    max_iter: int,
    precond=None,
) -> tuple[np.ndarray, dict]:
    """Barzilai-Borwein descent with monotone Armijo backtracking.

    With `precond` the descent direction is P g (P symmetric positive
    definite); preconditioning by the p=2 stiffness inverse makes the step
    counts mesh-independent. Convergence needs both a relative energy drop
    below energy_rtol and a residual below grad_rtol times the load norm.
    """
    u = u0.copy()
    J, g = energy.value_grad(u)
    d = precond(g) if precond else g
    alpha = 1.0 if precond else 0.1
    sPs = sy = None  # BB1 quantities in the preconditioned metric
    trace = [J]
    info = {"iterations": 0, "energy": J, "converged": False, "energy_trace": trace}
    for it in range(1, max_iter + 1):
        load = energy.load_norm(u)
        gnorm = float(np.linalg.norm(g))
        slope = float(g @ d)
        if slope <= 0:
            d = g
            slope = gnorm * gnorm
        if sPs is not None and sy is not None:
            if sy > 1e-300:
                alpha = sPs / sy
            else:
                alpha *= 2.0
        alpha = float(np.clip(alpha, 1e-14, 1e6))
        t = alpha
        accepted = False
        for _ in range(60):
            u_new = u - t * d
            J_new = energy.value(u_new)
            if J_new <= J - 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            info.update(iterations=it, energy=J, gradient_norm=gnorm, line_search_failed=True)
            info["converged"] = gnorm <= grad_rtol * load
            return u, info
        J_prev = J
        g_prev, d_prev = g, d
        u = u_new
        J, g = energy.value_grad(u)
        trace.append(J)
        d = precond(g) if precond else g
        # s = -t d_prev, so s^T P^{-1} s = t^2 g_prev . d_prev and s^T y uses the raw gradients
        sPs = t * t * float(g_prev @ d_prev)
        sy = -t * float(d_prev @ (g - g_prev))
        rel_drop = abs(J_prev - J) / max(abs(J), 1e-300)
        gnorm = float(np.linalg.norm(g))
        if rel_drop < energy_rtol and gnorm <= grad_rtol * energy.load_norm(u):
            info.update(iterations=it, energy=J, gradient_norm=gnorm, converged=True)
            return u, info
    info.update(iterations=max_iter, energy=J, gradient_norm=float(np.linalg.norm(g)))
    return u, info


def _p2_solve(mesh: Mesh, reaction: Reaction, picard_iters: int = 60):
    """Direct solve at p=2 (Picard for nonlinear reactions); returns (u, preconditioner)."""
    A = _stiffness(mesh)
    free = np.flatnonzero(~mesh.boundary)
    A_ff = A[np.ix_(free, free)].tocsc()
    lu = spla.splu(A_ff)
    mass = mesh.lumped_mass()
    u = np.zeros(mesh.n_points)
    u[free] = lu.solve(mass[free])  # torsion load f = 1
    if reaction.kind != "torsion":
        for _ in range(picard_iters):
            rhs = mass * reaction.f(u)
            new = np.zeros_like(u)
            new[free] = lu.solve(rhs[free])
            change = np.abs(new - u).max() / max(np.abs(new).max(), 1e-300)
            u = new
            if change < 1e-12:
                break

    def precond(g: np.ndarray) -> np.ndarray:
        out = np.zeros_like(g)
        out[free] = lu.solve(g[free])
        return out

    return u, precond


def solve(
    domain: ConvexPolygon,
    reaction: Reaction,
    h: float,
    max_iter: int = 20000,
    mesh: Mesh | None = None,
) -> ScalarField:
    """Solve the Dirichlet problem on a convex polygon at target mesh size h.

    Stops when the relative energy decrease per iteration falls below 1e-10
    and the discrete residual is below 1e-6 of the load norm. Raises
    NonConvergence (carrying the last iterate) when the budget runs out.
    """
    if h >= domain.diameter / 10:
        raise ValueError("h must be below a tenth of the domain diameter")
    if mesh is None:
        mesh = triangulate_polygon(domain, h)
    p = reaction.p

    u, precond = _p2_solve(mesh, reaction)
    history = []
    if p != 2:
        n_steps = max(1, int(np.ceil(abs(p - 2) / 0.5)))
        p_path = list(np.linspace(2.0, p, n_steps + 1)[1:])
        for pk in p_path[:-1]:
            for eps in (1e-2, 1e-4):
                energy = _Energy(mesh, reaction, pk, eps)
                u, info = _minimize_bb(energy, u, 1e-4, 1e-9, 4000, precond=precond)
                history.append({"p": pk, "eps": eps, **info})
        final_p = p_path[-1]
    else:
        final_p = 2.0
    eps_schedule = _EPS_SCHEDULE if p != 2 else (0.0,)
    info = {"converged": True, "iterations": 0, "gradient_norm": 0.0}
    for k, eps in enumerate(eps_schedule):
        last = k == len(eps_schedule) - 1
        energy = _Energy(mesh, reaction, final_p, eps)
        u, info = _minimize_bb(
            energy,
            u,
            1e-6 if last else 1e-4,
            1e-10 if last else 1e-9,
            max_iter if last else 4000,
            precond=precond,
        )
        history.append({"p": final_p, "eps": eps, **info})
    if not info.get("converged"):
        fld = ScalarField(mesh=mesh, values=u, p=p, reaction=reaction, diagnostics={"history": history})
        raise NonConvergence("iteration budget exhausted", field=fld, diagnostics=history[-1])

    u = np.where(mesh.boundary, 0.0, u)
    fld = ScalarField(
        mesh=mesh,
        values=u,
        p=p,
        reaction=reaction,
        diagnostics={"history": history, "residual": info.get("gradient_norm"), "h": h},
    )
    return fld


# ---------------------------------------------------------------------------
# radial reference profiles on the unit disk


def radial_oracle(p: float, reaction: Reaction, n_steps: int = 4000):
    """Radial profile r -> u(r) of the unit-disk problem.

    Torsion has the closed form (p-1)/p * 2^(-1/(p-1)) * (1 - r^(p/(p-1))).
    Power reactions integrate the radial ODE with a shooting bisection on u(0).
    """
    if reaction.kind == "torsion":
        c = (p - 1) / p * 2 ** (-1 / (p - 1))
        expo = p / (p - 1)

        def profile(r):
            return c * (1 - np.minimum(np.asarray(r, dtype=float), 1.0) ** expo)

        return profile
    if reaction.kind != "power":
        raise UnsupportedReaction("radial oracle supports torsion and power reactions")

    def shoot(u0: float) -> np.ndarray:
        rs = np.linspace(0.0, 1.0, n_steps + 1)
        dr = rs[1] - rs[0]
        u = np.empty(n_steps + 1)
        w = np.empty(n_steps + 1)  # w = -r |u'|^{p-2} u' >= 0
        u[0], w[0] = u0, 0.0

        def slope(r, wv, uv):
            if r <= 0 or wv <= 0:
                return 0.0
            return -((wv / r) ** (1 / (p - 1)))

        for k in range(n_steps):
            r, uk, wk = rs[k], u[k], w[k]
            fu = float(reaction.f(uk))
            k1u = slope(r, wk, uk)
            k1w = r * fu
            r2 = r + dr / 2
            k2u = slope(r2, wk + dr / 2 * k1w, uk)
            k2w = r2 * float(reaction.f(uk + dr / 2 * k1u))
            k3u = slope(r2, wk + dr / 2 * k2w, uk)
            k3w = r2 * float(reaction.f(uk + dr / 2 * k2u))
            r3 = r + dr
            k4u = slope(r3, wk + dr * k3w, uk)
            k4w = r3 * float(reaction.f(uk + dr * k3u))
            u[k + 1] = uk + dr / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
            w[k + 1] = wk + dr / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        return u

    lo, hi = 1e-8, 1.0
    while shoot(hi)[-1] < 0:
        hi *= 2
        if hi > 1e8:
            raise RuntimeError("shooting bracket failed")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if shoot(mid)[-1] < 0:
            lo = mid
        else:
            hi = mid
    u_vals = shoot(0.5 * (lo + hi))
    rs = np.linspace(0.0, 1.0, n_steps + 1)

    def profile(r):
        return np.interp(np.minimum(np.asarray(r, dtype=float), 1.0), rs, np.maximum(u_vals, 0.0))

    return profile


# ---------------------------------------------------------------------------
# level sets


@dataclass
class LevelSet:
    polygon: ConvexPolygon
    defect: float
    level: float


def level_set(field: ScalarField, t: float, defect_tol: float = 1e-3) -> LevelSet:
    """Superlevel contour {u >= t} as a convex polygon plus its convexity defect.

    The defect is 1 - area({u >= t}) / area(hull), with the region area exact
    for the piecewise-linear field. The returned polygon is the hull.
    """
    v = field.values
    vmax = float(v.max())
    if t >= vmax:
        raise EmptyLevel(f"level {t} is at or above the maximum {vmax}")
    if t <= 0:
        raise ValueError("level must be positive for a Dirichlet field")

    tris = field.mesh.triangles
    pts = field.mesh.points
    tv = v[tris]  # (m, 3)
    areas = field.mesh.areas()
    above = tv >= t
    n_above = above.sum(axis=1)

    region_area = float(areas[n_above == 3].sum())
    hull_pts = [pts[v >= t]]

    mixed = np.flatnonzero((n_above == 1) | (n_above == 2))
    for m in mixed:
        loc_v = tv[m]
        loc_p = pts[tris[m]]
        iso = above[m]
        if iso.sum() == 1:
            a = int(np.flatnonzero(iso)[0])
            b, c = (a + 1) % 3, (a + 2) % 3
            sb = (loc_v[a] - t) / (loc_v[a] - loc_v[b])
            sc = (loc_v[a] - t) / (loc_v[a] - loc_v[c])
            region_area += float(areas[m] * sb * sc)
            hull_pts.append(np.stack([
                loc_p[a] + sb * (loc_p[b] - loc_p[a]),
                loc_p[a] + sc * (loc_p[c] - loc_p[a]),
            ]))
        else:
            a = int(np.flatnonzero(~iso)[0])
            b, c = (a + 1) % 3, (a + 2) % 3
            sb = (t - loc_v[a]) / (loc_v[b] - loc_v[a])
            sc = (t - loc_v[a]) / (loc_v[c] - loc_v[a])
            region_area += float(areas[m] * (1 - sb * sc))
            hull_pts.append(np.stack([
                loc_p[a] + sb * (loc_p[b] - loc_p[a]),
                loc_p[a] + sc * (loc_p[c] - loc_p[a]),
            ]))
    allpts = np.vstack([q for q in hull_pts if len(q)])
    if len(allpts) == 0:
        raise EmptyLevel(f"no mesh point reaches level {t}")
    from .geometry import _hull_polygon

    hull = _hull_polygon(allpts)
    hull_area = hull.area()
    defect = 0.0 if hull_area <= 0 else max(0.0, 1.0 - region_area / hull_area)
    return LevelSet(polygon=hull, defect=float(defect), level=float(t))


@dataclass
class ArgmaxSet:
    polygon: ConvexPolygon
    defect: float
    epsilon: float
    breadth_min: float
    breadth_perp: float
    direction_min: np.ndarray
    aspect_condition: bool

    @property
    def diameter(self) -> float:
        return self.polygon.diameter


def argmax_set(field: ScalarField, epsilon: float) -> ArgmaxSet:
    """Superlevel set at max - epsilon with breadth diagnostics.

    Reports the breadths along the minimal direction and its perpendicular,
    plus the aspect check (B_min/B_perp)^2 + (3/4)^2 < 1 used when near-argmax
    sets are compared against a segment.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    vmax = field.max_value
    if epsilon >= vmax:
        poly, defect = field.mesh.domain, 0.0
    else:
        ls = level_set(field, vmax - epsilon)
        poly, defect = ls.polygon, ls.defect
    if poly.is_degenerate:
        bmin = 0.0
        bperp = float(poly.diameter)
        wdir = np.array([1.0, 0.0])
        if poly.n_vertices == 2:
            seg = poly.vertices[1] - poly.vertices[0]
            nrm = np.linalg.norm(seg)
            if nrm > 0:
                wdir = perp(seg / nrm)
    else:
        bmin, wdir = width(poly)
        bperp = breadth(poly, perp(wdir))
    ratio = 0.0 if bperp == 0 else bmin / bperp
    cond = ratio**2 + (3.0 / 4.0) ** 2 < 1.0
    return ArgmaxSet(
        polygon=poly,
        defect=defect,
        epsilon=float(epsilon),
        breadth_min=float(bmin),
        breadth_perp=float(bperp),
        direction_min=wdir,
        aspect_condition=bool(cond),
    )