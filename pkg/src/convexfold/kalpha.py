"""The thin tetrahedron family K^alpha and its folding-obstruction checks.

K^alpha = {|x3| <= alpha x1, |x2| <= alpha (1 - x1)} is a 4-vertex polytope
whose fold heights are uniformly small (at most 2 alpha) while its heart
contains a long axis segment. Rescaled and shifted copies converge to the unit
axis segment with every foldable cap disjoint from it, which is the obstruction
to the planar folding strategy in three dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidAlpha
from .folding import fibonacci_sphere_directions, folding_profile
from .geometry import ConvexPolytope, Segment, hausdorff_distance

SMALL_ALPHA = 0.05  # corpus threshold for the small-parameter regime


@dataclass(frozen=True)
class KAlphaSpec:
    """Shape parameter alpha, overall scale and translation offset."""

    alpha: float
    scale: float = 1.0
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidAlpha(f"alpha must be positive, got {self.alpha}")
        if not self.scale > 0:
            raise InvalidAlpha(f"scale must be positive, got {self.scale}")


def kalpha_vertices(spec: KAlphaSpec) -> np.ndarray:
    a = spec.alpha
    base = np.array(
        [
            [0.0, a, 0.0],
            [0.0, -a, 0.0],
            [1.0, 0.0, a],
            [1.0, 0.0, -a],
        ]
    )
    return spec.scale * base + np.asarray(spec.offset, dtype=float)


def build_kalpha(spec: KAlphaSpec) -> ConvexPolytope:
    """Tetrahedron with |x3| <= alpha x1 and |x2| <= alpha (1 - x1) (scaled, shifted)."""
    a, l = spec.alpha, spec.scale
    t0 = np.asarray(spec.offset, dtype=float)
    # local halfspaces: x3 - a x1 <= 0, -x3 - a x1 <= 0,
    #                   x2 + a x1 <= a, -x2 + a x1 <= a
    raw_normals = np.array(
        [
            [-a, 0.0, 1.0],
            [-a, 0.0, -1.0],
            [a, 1.0, 0.0],
            [a, -1.0, 0.0],
        ]
    )
    raw_offsets = np.array([0.0, 0.0, a, a])
    norms = np.linalg.norm(raw_normals, axis=1)
    normals = raw_normals / norms[:, None]
    offsets = (l * raw_offsets / norms) + normals @ t0
    return ConvexPolytope(kalpha_vertices(spec), normals, offsets)


def symmetry_maps(spec: KAlphaSpec):
    """The three isometries of K^alpha, acting on global coordinates.

    In local coordinates: x3 -> -x3, x2 -> -x2, and the swap
    (x1, x2, x3) -> (1 - x1, x3, x2); together they permute the vertices
    transitively.
    """
    l = spec.scale
    t0 = np.asarray(spec.offset, dtype=float)

    def conj(mat, shift):
        def apply(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            local = (x - t0) / l
            return l * (local @ mat.T + shift) + t0

        return apply

    m3 = np.diag([1.0, 1.0, -1.0])
    m2 = np.diag([1.0, -1.0, 1.0])
    swap = np.array([[-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    return [
        conj(m3, np.zeros(3)),
        conj(m2, np.zeros(3)),
        conj(swap, np.array([1.0, 0.0, 0.0])),
    ]


def _axis_point(spec: KAlphaSpec, t: float) -> np.ndarray:
    """Global coordinates of the local axis point (t, 0, 0)."""
    return np.asarray(spec.offset, dtype=float) + spec.scale * np.array([t, 0.0, 0.0])


def tbar_bound(alpha: float) -> float:
    """Largest axis coordinate a foldable cap holding an apex vertex can reach."""
    return alpha * (np.sqrt(2 * alpha**2 + 1) - alpha)


def sweep_profiles(spec: KAlphaSpec, n_directions: int):
    """Fold profiles of K^alpha over a Fibonacci-sphere sweep."""
    body = build_kalpha(spec)
    dirs = fibonacci_sphere_directions(n_directions)
    profiles = [folding_profile(body, w) for w in dirs]
    return body, dirs, profiles


def verify_folding_bound(spec: KAlphaSpec, n_directions: int, profiles=None) -> dict:
    """Max fold height over the sweep against the 2*alpha*scale ceiling."""
    if profiles is None:
        _, dirs, profiles = sweep_profiles(spec, n_directions)
    else:
        dirs = np.array([p.omega for p in profiles])
    heights = np.array([p.height for p in profiles])
    k = int(np.argmax(heights))
    bound = 2 * spec.alpha * spec.scale
    return {
        "alpha": spec.alpha,
        "scale": spec.scale,
        "n_directions": len(profiles),
        "max_height": float(heights[k]),
        "worst_direction": [float(c) for c in dirs[k]],
        "bound": float(bound),
        "bound_holds": bool(heights[k] <= bound + 1e-6),
        "sanity_floor": float(spec.alpha * spec.scale / 2),
        "floor_holds": bool(heights[k] >= spec.alpha * spec.scale / 2),
        "small_alpha_regime": bool(spec.alpha <= SMALL_ALPHA),
    }


def verify_tbar_bound(spec: KAlphaSpec, n_directions: int, profiles=None) -> dict:
    """Axis reach of deepest foldable caps that strictly contain the apex z1.

    For every sampled direction whose maximal foldable cap contains
    z1 = (0, alpha, 0) (local coordinates), the cap's intersection with the
    x1 axis must stop below alpha (sqrt(2 alpha^2 + 1) - alpha).
    """
    if profiles is None:
        body, dirs, profiles = sweep_profiles(spec, n_directions)
    z1 = _axis_point(spec, 0.0) + spec.scale * np.array([0.0, spec.alpha, 0.0])
    t0 = np.asarray(spec.offset, dtype=float)
    bound = tbar_bound(spec.alpha)
    tol = 1e-9 * max(1.0, spec.scale)
    worst = -np.inf
    n_with_z1 = 0
    for p in profiles:
        if float(z1 @ p.omega) <= p.lambda_min + tol:
            continue  # cap does not hold the apex
        n_with_z1 += 1
        w1 = float(p.omega[0])
        lam_local = (p.lambda_min - float(t0 @ p.omega)) / spec.scale
        if w1 > 1e-12:
            sup_t = 1.0 if w1 >= lam_local else -np.inf
        elif w1 >= -1e-12:
            # cut nearly parallel to the axis: all-or-nothing
            sup_t = 1.0 if lam_local <= 0 else -np.inf
        else:
            t_star = lam_local / w1
            sup_t = min(1.0, t_star) if t_star >= 0 else -np.inf
        worst = max(worst, sup_t)
    return {
        "alpha": spec.alpha,
        "n_directions": len(profiles),
        "caps_with_apex": n_with_z1,
        "bound": float(bound),
        "max_axis_reach": float(worst),
        "bound_holds": bool(worst <= bound + 1e-6),
        "small_alpha_regime": bool(spec.alpha <= SMALL_ALPHA),
    }


def verify_heart_segment(spec: KAlphaSpec, n_directions: int, n_points: int = 101, profiles=None) -> dict:
    """No sampled foldable cap removes any point of the central axis segment.

    Tests <x, omega> <= lambda_min(omega) for x = (t, 0, 0) local,
    t in [2 alpha, 1 - 2 alpha], against every sampled direction.
    """
    if profiles is None:
        body, dirs, profiles = sweep_profiles(spec, n_directions)
    a = spec.alpha
    ts = np.linspace(2 * a, 1 - 2 * a, n_points)
    pts = np.array([_axis_point(spec, t) for t in ts])
    tol = 1e-9 * max(1.0, spec.scale)
    worst_excess = -np.inf
    for p in profiles:
        excess = float(np.max(pts @ p.omega) - p.lambda_min)
        worst_excess = max(worst_excess, excess)
    return {
        "alpha": spec.alpha,
        "n_directions": len(profiles),
        "n_points": int(n_points),
        "segment_local": [float(2 * a), float(1 - 2 * a)],
        "worst_excess": float(worst_excess),
        "contained": bool(worst_excess <= tol),
        "small_alpha_regime": bool(spec.alpha <= SMALL_ALPHA),
    }


def find_cap_removing_point(spec: KAlphaSpec, point, profiles) -> dict | None:
    """First sampled foldable cap containing the given global point, if any."""
    point = np.asarray(point, dtype=float)
    tol = 1e-9 * max(1.0, spec.scale)
    for p in profiles:
        if float(point @ p.omega) >= p.lambda_min - tol:
            return {
                "omega": [float(c) for c in p.omega],
                "lambda_min": float(p.lambda_min),
                "excess": float(point @ p.omega - p.lambda_min),
            }
    return None


def sequence_spec(n: int) -> KAlphaSpec:
    """Member n of the converging family: scale 1 + 1/n, extremal alpha.

    alpha_n = (l_n - 1) / (4 l_n^2) is the largest value with
    l_n (1 - 4 alpha_n l_n) = 1, fixed for reproducibility.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    l = 1.0 + 1.0 / n
    alpha = (l - 1.0) / (4.0 * l * l)
    return KAlphaSpec(alpha=alpha, scale=l, offset=(-2.0 * alpha * l, 0.0, 0.0))


def build_sequence_example(n: int, n_directions: int = 5000) -> tuple[ConvexPolytope, dict]:
    """Body K_n plus a report on convergence and cap disjointness from the axis segment.

    Checks that K_n is Hausdorff-close to the unit axis segment while every
    sampled foldable cap stays strictly on one side of it.
    """
    spec = sequence_spec(n)
    body, dirs, profiles = sweep_profiles(spec, n_directions)
    segment = Segment(np.zeros(3), np.array([1.0, 0.0, 0.0]))
    hd = hausdorff_distance(body, segment)
    seg_pts = segment.vertices
    margins = np.array([p.lambda_min - float(np.max(seg_pts @ p.omega)) for p in profiles])
    return body, {
        "n": int(n),
        "scale": spec.scale,
        "alpha": spec.alpha,
        "n_directions": len(profiles),
        "hausdorff_to_segment": float(hd),
        "min_cap_margin": float(margins.min()),
        "all_caps_disjoint": bool(margins.min() > 1e-9),
        "extremality_identity": float(spec.scale * (1 - 4 * spec.alpha * spec.scale)),
    }
