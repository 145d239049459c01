import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convexfold.errors import EmptyBody, NoIntersection
from convexfold.geometry import (
    ConvexPolygon,
    Cut,
    Segment,
    breadth,
    hausdorff_distance,
    project,
    section,
    shadow_section_for_min_breadth,
    support,
    support_vertex,
    width,
)
from convexfold.kalpha import KAlphaSpec, build_kalpha

SQ2 = np.sqrt(2.0)


def brute_force_width(poly, n_angles=20000):
    """Independent oracle: minimal breadth over a dense angle grid."""
    th = np.pi * np.arange(n_angles) / n_angles
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    vals = poly.vertices @ dirs.T
    return float((vals.max(axis=0) - vals.min(axis=0)).min())


def dense_boundary(poly, n=2000):
    pts = []
    for a, b in poly.edges():
        ts = np.linspace(0, 1, max(2, n // poly.n_vertices), endpoint=False)
        pts.append(a + ts[:, None] * (b - a))
    return np.vstack(pts)


# ---------------------------------------------------------------------------
# support / breadth


def test_support_square(unit_square):
    assert support(unit_square, [1, 0]) == pytest.approx(1.0)
    v = support_vertex(unit_square, [1, 0])
    assert v[0] == pytest.approx(1.0)


def test_support_kalpha_apex_direction():
    body = build_kalpha(KAlphaSpec(alpha=0.1))
    assert support(body, [0, 1, 0]) == pytest.approx(0.1)


def test_support_triangle_diagonal():
    tri = ConvexPolygon([[0, 0], [1, 0], [0, 1]])
    assert support(tri, [1 / SQ2, 1 / SQ2]) == pytest.approx(1 / SQ2)


def test_support_empty_body():
    with pytest.raises(EmptyBody):
        ConvexPolygon(np.zeros((0, 2)))


def test_breadth_examples(unit_square, shear_parallelogram):
    assert breadth(unit_square, [1, 0]) == pytest.approx(1.0)
    assert breadth(shear_parallelogram, [1, 0]) == pytest.approx(2.0)
    seg = ConvexPolygon([[0, 0], [1, 0]], check=False)
    assert breadth(seg, [0, 1]) == pytest.approx(0.0)


# ---------------------------------------------------------------------------
# width


def test_width_square_tie_breaks_to_x_axis(unit_square):
    w, d = width(unit_square)
    assert w == pytest.approx(1.0)
    assert np.allclose(np.abs(d), [1, 0])


def test_width_parallelogram(shear_parallelogram):
    w, d = width(shear_parallelogram)
    assert w == pytest.approx(1 / SQ2, abs=1e-12)
    assert w == pytest.approx(brute_force_width(shear_parallelogram), abs=1e-6)
    assert abs(abs(float(d @ [1 / SQ2, -1 / SQ2])) - 1.0) < 1e-12


def test_width_equilateral_triangle():
    tri = ConvexPolygon([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
    w, d = width(tri)
    assert w == pytest.approx(np.sqrt(3) / 2, abs=1e-12)
    assert w == pytest.approx(brute_force_width(tri), abs=1e-6)


def test_width_degenerate_segment():
    seg = ConvexPolygon([[0, 0], [2, 0]], check=False)
    w, d = width(seg)
    assert w == 0.0
    assert np.allclose(np.abs(d), [0, 1])


# ---------------------------------------------------------------------------
# sections, projections, shadow chords


def test_section_square_vertical_chord(unit_square):
    seg = section(unit_square, Cut(0.5, [1, 0]))
    ys = sorted([seg.a[1], seg.b[1]])
    assert np.allclose([seg.a[0], seg.b[0]], 0.5)
    assert ys == pytest.approx([0.0, 1.0])


def test_section_misses_body(unit_square):
    with pytest.raises(NoIntersection):
        section(unit_square, Cut(2.0, [1, 0]))


def test_project_kalpha_axis_is_diamond():
    # hull-of-projected-vertices oracle: the shadow along the long axis is the
    # diamond |x2| + |x3| <= alpha, with vertices on the coordinate axes
    body = build_kalpha(KAlphaSpec(alpha=0.1))
    shadow = project(body, [1, 0, 0])
    expect = {(-0.1, 0.0), (0.1, 0.0), (0.0, -0.1), (0.0, 0.1)}
    got = {(round(float(x), 12), round(float(y), 12)) for x, y in shadow.vertices}
    assert got == expect


def test_shadow_section_square(unit_square):
    cut, chord, verified = shadow_section_for_min_breadth(unit_square)
    assert verified
    assert np.allclose(np.abs(cut.omega), [0, 1])
    xs = sorted([chord.a[0], chord.b[0]])
    assert xs == pytest.approx([0.0, 1.0])
    assert chord.a[1] == pytest.approx(chord.b[1])
    assert 0.0 <= chord.a[1] <= 1.0


def test_shadow_section_equilateral_triangle_is_altitude():
    tri = ConvexPolygon([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
    cut, chord, verified = shadow_section_for_min_breadth(tri)
    assert verified
    assert chord.length == pytest.approx(np.sqrt(3) / 2, abs=1e-12)
    # brute force: every boundary point projects into the chord's cut line segment
    d = cut.omega
    bnd = dense_boundary(tri)
    proj = bnd - np.outer(bnd @ d - cut.lam, d)
    seg_dir = chord.b - chord.a
    t = (proj - chord.a) @ seg_dir / (seg_dir @ seg_dir)
    assert (t > -1e-9).all() and (t < 1 + 1e-9).all()


def test_shadow_section_parallelogram(shear_parallelogram):
    cut, chord, verified = shadow_section_for_min_breadth(shear_parallelogram)
    assert verified
    assert chord.length == pytest.approx(1 / SQ2, abs=1e-9)
    d = (chord.b - chord.a) / chord.length
    assert abs(abs(float(d @ [1 / SQ2, -1 / SQ2])) - 1.0) < 1e-9
    # orientation convention: offset at most the mid-level
    assert cut.lam <= (support(shear_parallelogram, cut.omega)
                       - support(shear_parallelogram, -cut.omega)) / 2 + 1e-12


# ---------------------------------------------------------------------------
# hausdorff distance


def test_hausdorff_identity(unit_square):
    assert hausdorff_distance(unit_square, unit_square) == 0.0


def test_hausdorff_translation(unit_square):
    moved = ConvexPolygon(unit_square.vertices + [0.3, 0.0])
    assert hausdorff_distance(unit_square, moved) == pytest.approx(0.3)


def test_hausdorff_square_vs_segment(unit_square):
    seg = Segment(np.array([0.0, 0.5]), np.array([1.0, 0.5]))
    assert hausdorff_distance(unit_square, seg) == pytest.approx(0.5)
    # dense boundary sampling oracle
    bnd = dense_boundary(unit_square, 4000)
    seg_pts = np.stack([np.linspace(0, 1, 2000), np.full(2000, 0.5)], axis=1)
    d2 = ((bnd[:, None, :] - seg_pts[None, :, :]) ** 2).sum(axis=2)
    oracle = max(np.sqrt(d2.min(axis=1)).max(), 0.0)
    assert oracle == pytest.approx(0.5, abs=1e-3)


def test_hausdorff_triangle_inequality_random():
    rng = np.random.default_rng(42)
    from convexfold.domains import random_convex_polygon

    for _ in range(25):
        a = random_convex_polygon(rng, int(rng.integers(3, 9)))
        b = random_convex_polygon(rng, int(rng.integers(3, 9)))
        c = random_convex_polygon(rng, int(rng.integers(3, 9)))
        dab = hausdorff_distance(a, b)
        dbc = hausdorff_distance(b, c)
        dac = hausdorff_distance(a, c)
        assert dac <= dab + dbc + 1e-9


# ---------------------------------------------------------------------------
# structural properties


coords = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@given(
    s=st.floats(min_value=0.01, max_value=100, allow_nan=False),
    angle=st.floats(min_value=0, max_value=2 * np.pi, allow_nan=False),
)
@settings(max_examples=200, deadline=None)
def test_support_positively_homogeneous(s, angle):
    poly = ConvexPolygon([[0, 0], [1.3, 0.1], [1.1, 0.9], [0.2, 1.2]])
    omega = np.array([np.cos(angle), np.sin(angle)])
    scaled = ConvexPolygon(poly.vertices * s)
    assert support(scaled, omega) == pytest.approx(s * support(poly, omega), rel=1e-12)


@given(angle=st.floats(min_value=0, max_value=2 * np.pi, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_breadth_symmetric_and_above_width(angle):
    poly = ConvexPolygon([[0, 0], [1.3, 0.1], [1.1, 0.9], [0.2, 1.2]])
    omega = np.array([np.cos(angle), np.sin(angle)])
    assert breadth(poly, omega) == pytest.approx(breadth(poly, -omega), rel=1e-12)
    assert breadth(poly, omega) >= width(poly)[0] - 1e-12


@given(
    angle=st.floats(min_value=0, max_value=2 * np.pi, allow_nan=False),
    wa=st.floats(min_value=0, max_value=1),
    wb=st.floats(min_value=0, max_value=1),
)
@settings(max_examples=200, deadline=None)
def test_support_dominates_members(angle, wa, wb):
    poly = ConvexPolygon([[0, 0], [1.3, 0.1], [1.1, 0.9], [0.2, 1.2]])
    omega = np.array([np.cos(angle), np.sin(angle)])
    # random convex combination of vertices lies in the polygon
    w = np.array([wa, wb, 1 - wa * 0.5, 1 - wb * 0.5])
    w = w / w.sum()
    x = w @ poly.vertices
    assert float(x @ omega) <= support(poly, omega) + 1e-12
