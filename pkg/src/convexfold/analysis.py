"""Concavity machinery: transforms of u, reaction hypothesis checks,
quasi-concavity and critical-point counts, strict-concavity certificates,
and the Picone / reflection-comparison experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DivergentIntegral, FoldFailed, NonPositiveField, NotAShadow
from .folding import cap, is_foldable, is_shadow_section
from .geometry import ConvexPolygon, Cut, breadth, shadow_section_for_min_breadth, support
from .solver import Reaction, ScalarField, level_set, argmax_set


# ---------------------------------------------------------------------------
# transforms


@dataclass
class TransformSpec:
    """Strictly increasing transform phi with inverse psi.

    Closed forms where the reaction admits them, adaptive quadrature plus
    bracketed inversion otherwise. phi is defined on (0, t_max]; psi round-trips
    to 1e-10.
    """

    kind: str
    phi: callable
    psi: callable
    description: str = ""

    def apply(self, field: ScalarField) -> ScalarField:
        return field.transform(lambda v: self.phi(np.maximum(v, 1e-300)))


def log_transform() -> TransformSpec:
    return TransformSpec(kind="log", phi=np.log, psi=np.exp, description="log t")


def power_concavity_transform(p: float) -> TransformSpec:
    """t -> t^(1-1/p), the classical concave power of the torsion function."""
    a = 1.0 - 1.0 / p

    def phi(t):
        return np.asarray(t, dtype=float) ** a

    def psi(s):
        return np.asarray(s, dtype=float) ** (1.0 / a)

    return TransformSpec(kind="power_concavity", phi=phi, psi=psi, description=f"t^{a:g}")


def phi_transform(reaction: Reaction) -> TransformSpec:
    """The transform phi(t) = integral_1^t F(tau)^(-1/p) dtau for the reaction.

    Torsion and power reactions have closed forms; tabulated reactions fall
    back to adaptive quadrature with relative error 1e-10 and inverse by
    bracketed root finding.
    """
    p = reaction.p
    if reaction.kind == "torsion":
        a = 1.0 - 1.0 / p
        k = p / (p - 1.0)

        def phi(t):
            return k * (np.asarray(t, dtype=float) ** a - 1.0)

        def psi(s):
            return (np.asarray(s, dtype=float) / k + 1.0) ** (1.0 / a)

        return TransformSpec(kind="phi", phi=phi, psi=psi, description=f"{k:g} (t^{a:g} - 1)")
    if reaction.kind == "power":
        # F = c t^q / q, so F^(-1/p) = (q/c)^(1/p) t^(-q/p)
        q, c = reaction.q, reaction.c
        if abs(q - p) < 1e-15:
            raise DivergentIntegral("q = p makes the transform logarithmic")
        pref = (q / c) ** (1.0 / p)
        a = 1.0 - q / p
        k = pref / a

        def phi(t):
            return k * (np.asarray(t, dtype=float) ** a - 1.0)

        def psi(s):
            return (np.asarray(s, dtype=float) / k + 1.0) ** (1.0 / a)

        return TransformSpec(kind="phi", phi=phi, psi=psi, description=f"{k:g} (t^{a:g} - 1)")

    def integrand(tau):
        val = float(reaction.F(tau))
        if val <= 0:
            raise DivergentIntegral(f"F({tau}) <= 0")
        return val ** (-1.0 / p)

    # check integrability near zero before building the table
    probe, _ = quad(integrand, 1e-12, 1e-6, limit=200)
    if not np.isfinite(probe):
        raise DivergentIntegral("transform integral diverges near zero")

    def phi_scalar(t):
        if t <= 0:
            raise DivergentIntegral("phi defined on positive arguments")
        val, _ = quad(integrand, 1.0, t, limit=400, epsrel=1e-12, epsabs=0)
        return val

    def phi(t):
        t = np.asarray(t, dtype=float)
        return np.vectorize(phi_scalar)(t)

    def psi_scalar(s):
        lo, hi = 1e-14, 1.0
        while phi_scalar(hi) < s:
            hi *= 2
            if hi > 1e12:
                raise DivergentIntegral("inverse transform bracket failed")
        return brentq(lambda t: phi_scalar(t) - s, lo, hi, xtol=1e-14, rtol=1e-14)

    def psi(s):
        s = np.asarray(s, dtype=float)
        return np.vectorize(psi_scalar)(s)

    return TransformSpec(kind="phi", phi=phi, psi=psi, description="quadrature transform")


# ---------------------------------------------------------------------------
# reaction hypothesis checks


def check_hypotheses(reaction: Reaction, n_grid: int = 10_000, scale: float = 1.0) -> dict:
    """Sampled monotonicity/convexity conditions on the reaction.

    Checks on a log-spaced grid spanning [1e-6, 1e3] * scale:
      * f(t)/t^(p-1) non-increasing      (uniqueness / weak comparison regime)
      * e^((p-1)s)/f(e^s) convex in s    (log-concavity of the solution)
      * F^(1/p) concave                  (phi-transform concavity, part 1)
      * F/f convex                       (phi-transform concavity, part 2)

    Monotonicity uses adjacent differences, curvature uses second divided
    differences (valid on non-uniform grids). Worst violations are relative
    to the local value scale.
    """
    p = reaction.p
    t = np.geomspace(1e-6 * scale, 1e3 * scale, n_grid)
    f = reaction.f(t)
    F = reaction.F(t)

    ratio = f / t ** (p - 1)
    mono_viol = np.diff(ratio) / np.maximum(np.abs(ratio[:-1]), 1e-300)
    worst_mono = float(np.max(mono_viol, initial=-np.inf))

    s = np.log(t)
    with np.errstate(divide="ignore", over="ignore"):
        g = np.exp((p - 1) * s) / np.maximum(f, 1e-300)
    worst_logconv = _worst_concavity_violation(s, g, sign=+1)

    worst_Fp = _worst_concavity_violation(t, F ** (1.0 / p), sign=-1)
    with np.errstate(divide="ignore"):
        Ff = F / np.maximum(f, 1e-300)
    worst_Ff = _worst_concavity_violation(t, Ff, sign=+1)

    tol = 1e-9
    return {
        "p": p,
        "reaction": reaction.label(),
        "f_over_tp1_nonincreasing": {"pass": bool(worst_mono <= tol), "worst": worst_mono},
        "exp_over_f_convex": {"pass": bool(worst_logconv <= tol), "worst": worst_logconv},
        "F_onep_concave": {"pass": bool(worst_Fp <= tol), "worst": worst_Fp},
        "F_over_f_convex": {"pass": bool(worst_Ff <= tol), "worst": worst_Ff},
    }


def _worst_concavity_violation(x: np.ndarray, y: np.ndarray, sign: int) -> float:
    """Worst normalized violation of convexity (sign=+1) or concavity (sign=-1).

    Uses second divided differences: y is convex iff they are all >= 0.
    """
    finite = np.isfinite(y)
    x, y = x[finite], y[finite]
    if len(x) < 3:
        return -np.inf
    d1 = (y[1:] - y[:-1]) / (x[1:] - x[:-1])
    dd = (d1[1:] - d1[:-1]) / (x[2:] - x[:-2])
    scale = np.maximum.reduce([np.abs(y[2:]), np.abs(y[:-2]), np.full(len(dd), 1e-300)])
    span = (x[2:] - x[:-2]) ** 2
    viol = -sign * dd * span / scale
    return float(np.max(viol, initial=-np.inf))


# ---------------------------------------------------------------------------
# quasi-concavity / critical points


def check_quasiconcave(field: ScalarField, n_levels: int = 20, defect_tol: float = 1e-3) -> dict:
    """Convexity defect of n evenly spaced superlevel sets."""
    vmax = field.max_value
    levels = np.linspace(0, vmax, n_levels + 2)[1:-1]
    worst = 0.0
    worst_level = None
    per_level = []
    for t in levels:
        ls = level_set(field, float(t))
        per_level.append({"level": float(t), "defect": ls.defect})
        if ls.defect > worst:
            worst, worst_level = ls.defect, float(t)
    return {
        "pass": bool(worst < defect_tol),
        "worst_defect": float(worst),
        "worst_level": worst_level,
        "n_levels": int(n_levels),
        "defect_tol": defect_tol,
        "levels": per_level,
    }


@dataclass
class CriticalReport:
    centers: np.ndarray
    radii: np.ndarray
    count: int
    grad_threshold: float
    argmax_epsilon: float
    argmax_diameter: float


def count_critical_points(field: ScalarField, grad_threshold: float = 0.02) -> CriticalReport:
    """Cluster count of discrete interior local maxima.

    A vertex qualifies when it dominates its stencil and touches a triangle
    with |grad u| below grad_threshold * max |grad u| (discrete gradients near
    a degenerate maximum decay polynomially, so the cutoff is relative).
    Qualifying vertices within 3h of each other merge into one cluster. Also
    reports the diameter of the superlevel set at 10x the field's value
    tolerance below the max.
    """
    mesh = field.mesh
    v = field.values
    tris = mesh.triangles
    n = mesh.n_points

    neighbor_max = np.full(n, -np.inf)
    for i in range(3):
        for j in range(3):
            if i != j:
                np.maximum.at(neighbor_max, tris[:, i], v[tris[:, j]])

    gnorm = np.linalg.norm(field.triangle_gradients(), axis=1)
    thr = grad_threshold * float(gnorm.max())
    small_grad = np.full(n, False)
    flat_tris = gnorm <= thr
    for i in range(3):
        small_grad[tris[flat_tris, i]] = True

    is_cand = (~mesh.boundary) & (v >= neighbor_max - 1e-14 * max(abs(field.max_value), 1e-300))
    cand = np.flatnonzero(is_cand & small_grad)

    centers, radii = _cluster(mesh.points[cand], 3 * mesh.h)
    eps = 10 * field.value_tolerance
    am = argmax_set(field, eps) if eps > 0 else None
    return CriticalReport(
        centers=centers,
        radii=radii,
        count=len(centers),
        grad_threshold=thr,
        argmax_epsilon=float(eps),
        argmax_diameter=float(am.diameter) if am is not None else 0.0,
    )


def _cluster(points: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    if len(points) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    parent = list(range(len(points)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if np.linalg.norm(points[i] - points[j]) < radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(points)):
        groups.setdefault(find(i), []).append(i)
    centers, radii = [], []
    for idx in groups.values():
        pts = points[idx]
        c = pts.mean(axis=0)
        centers.append(c)
        radii.append(float(np.linalg.norm(pts - c, axis=1).max()) if len(pts) > 1 else 0.0)
    order = np.lexsort((np.array(centers)[:, 1], np.array(centers)[:, 0]))
    return np.array(centers)[order], np.array(radii)[order]


# ---------------------------------------------------------------------------
# strict concavity


def check_strict_concavity(
    v,
    n_segments: int,
    rng: np.random.Generator | None = None,
    domain: ConvexPolygon | None = None,
    min_length: float | None = None,
    margin: float | None = None,
    gap_rtol: float = 1e-12,
) -> dict:
    """Midpoint-gap certificate of (strict) concavity along random segments.

    For each sampled interior segment [x, y] the gap
    v((x+y)/2) - (v(x) + v(y))/2 must be positive for strict concavity and
    >= -tol for plain concavity. Piecewise-linear fields get a minimum segment
    length (default 8h): shorter segments measure interpolation sag, not the
    field. Exact callables use no length floor; on v = -|x|^2 the gap equals
    |x - y|^2 / 4, which calibrates the numerics.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if isinstance(v, ScalarField):
        domain = v.mesh.domain
        evaluate = v.evaluate
        if min_length is None:
            min_length = 8 * v.mesh.h
        if margin is None:
            margin = v.mesh.h
    else:
        if domain is None:
            raise ValueError("callable fields need an explicit domain")
        evaluate = lambda pts: np.asarray(v(np.atleast_2d(pts)), dtype=float)
        if min_length is None:
            min_length = 0.0
        if margin is None:
            margin = 1e-9 * domain.diameter

    xs = _sample_interior_pairs(domain, n_segments, rng, min_length, margin)
    a, b = xs[:, 0, :], xs[:, 1, :]
    mid = 0.5 * (a + b)
    va, vb, vm = evaluate(a), evaluate(b), evaluate(mid)
    gaps = vm - 0.5 * (va + vb)
    scale = max(float(np.max(np.abs(np.concatenate([va, vb, vm])))), 1e-300)
    k = int(np.argmin(gaps))
    strict = bool(gaps.min() > gap_rtol * scale)
    plain = bool(gaps.min() >= -1e-9 * scale)
    return {
        "n_segments": int(len(gaps)),
        "min_gap": float(gaps.min()),
        "min_gap_normalized": float(gaps.min() / scale),
        "argmin_segment": [a[k].tolist(), b[k].tolist()],
        "strict": strict,
        "concave": plain,
        "gap_threshold": gap_rtol * scale,
        "gaps_quantiles": [float(q) for q in np.quantile(gaps, [0.0, 0.25, 0.5, 1.0])],
    }


def _sample_interior_pairs(domain, n, rng, min_length, margin):
    lo = domain.vertices.min(axis=0)
    hi = domain.vertices.max(axis=0)
    out = np.empty((n, 2, 2))
    have = 0
    while have < n:
        cand = lo + (hi - lo) * rng.random((4 * (n - have), 2, 2))
        flat = cand.reshape(-1, 2)
        ok = domain.contains(flat, tol=-margin).reshape(-1, 2).all(axis=1)
        seg_len = np.linalg.norm(cand[:, 0] - cand[:, 1], axis=1)
        ok &= seg_len >= min_length
        good = cand[ok]
        take = min(len(good), n - have)
        out[have : have + take] = good[:take]
        have += take
    return out


# ---------------------------------------------------------------------------
# Picone


def picone_check(v: ScalarField, w: ScalarField, p: float | None = None) -> dict:
    """Per-triangle slack of the gradient inequality linking two positive fields.

    On each triangle (constant gradients, centroid values)
      |grad v|^(p-2) grad v . grad(w^p / v^(p-1)) <= |grad w|^p
    must hold with equality exactly for proportional fields.
    """
    if p is None:
        p = v.p or 2.0
    if v.mesh is not w.mesh:
        raise ValueError("fields must share a mesh")
    interior = ~v.mesh.boundary
    for name, f in (("v", v), ("w", w)):
        if interior.any() and float(f.values[interior].min()) <= 0:
            raise NonPositiveField(f"{name} must be positive at interior nodes")
    tris = v.mesh.triangles
    vc = v.values[tris].mean(axis=1)
    wc = w.values[tris].mean(axis=1)
    # triangles spanned by boundary nodes only carry centroid value zero; the
    # quotient w^p / v^(p-1) is not defined there and they are excluded
    keep = (vc > 0) & (wc > 0)
    if not keep.any():
        raise NonPositiveField("no triangle with positive centroid values")
    gv = v.triangle_gradients()
    gw = w.triangle_gradients()
    tris, vc, wc, gv, gw = tris[keep], vc[keep], wc[keep], gv[keep], gw[keep]
    t = wc / vc
    gv2 = np.einsum("md,md->m", gv, gv)
    gvn = np.sqrt(gv2)
    dot = np.einsum("md,md->m", gv, gw)
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = p * t ** (p - 1) * np.where(gv2 > 0, gvn ** (p - 2), 0.0) * dot - (
            p - 1
        ) * t**p * np.where(gv2 > 0, gvn**p, 0.0)
    rhs = np.einsum("md,md->m", gw, gw) ** (p / 2)
    slack = rhs - lhs
    areas = v.mesh.areas()[keep]
    scale = max(float(rhs.max()), 1e-300)
    return {
        "p": float(p),
        "min_slack": float(slack.min()),
        "min_slack_normalized": float(slack.min() / scale),
        "integral_slack": float(np.dot(areas, slack)),
        "equality": bool(np.abs(slack).max() <= 1e-10 * scale),
        "pass": bool(slack.min() >= -1e-9 * scale),
    }


# ---------------------------------------------------------------------------
# reflection comparison


def reflection_comparison_experiment(
    field: ScalarField,
    t: float,
    compare_tol: float = 1e-3,
    fold_tol: float | None = None,
) -> dict:
    """Fold the quarter-breadth cap of a superlevel set and compare u with u o T.

    Builds K_t, takes the width-chord shadow cut, folds the cap above
    mu = H(omega) - B(omega)/4 across its plane, verifies the fold lands in
    K_t, and checks u(T(x)) >= u(x) - tol on the cap (the weak-comparison
    conclusion, realized discretely at mesh nodes and cap vertices).
    """
    ls = level_set(field, t)
    kt = ls.polygon
    cut, chord, shadow_ok = shadow_section_for_min_breadth(kt)
    omega = cut.omega
    if not shadow_ok or not is_shadow_section(kt, cut, rtol=1e-4):
        raise NotAShadow("width chord section failed the shadow check")
    b = breadth(kt, omega)
    mu = support(kt, omega) - b / 4
    fold_cut = Cut(mu, omega)
    if fold_tol is None:
        # level-set polygons are convex only up to the contour error O(h^2)
        fold_tol = 4 * field.mesh.h**2 / max(kt.diameter, 1e-300)
    if not is_foldable(kt, fold_cut, tol=fold_tol):
        raise FoldFailed("quarter-breadth cap does not fold; mesh too coarse")
    cap_poly = cap(kt, fold_cut)

    nodes = field.mesh.points
    in_cap = (nodes @ omega >= mu) & kt.contains(nodes, tol=-1e-12)
    sample = np.vstack([nodes[in_cap], cap_poly.vertices])
    reflected = sample - 2.0 * np.outer(sample @ omega - mu, omega)
    u_here = field.evaluate(sample)
    u_there = field.evaluate(reflected)
    diff = u_there - u_here
    return {
        "level": float(t),
        "defect": ls.defect,
        "cut_offset": float(cut.lam),
        "cut_direction": [float(c) for c in omega],
        "mu": float(mu),
        "breadth": float(b),
        "fold_tol": float(fold_tol),
        "n_sample_points": int(len(sample)),
        "min_comparison": float(diff.min()),
        "comparison_holds": bool(diff.min() >= -compare_tol),
        "compare_tol": float(compare_tol),
    }