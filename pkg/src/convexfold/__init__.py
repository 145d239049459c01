"""Convex folding geometry and a p-Laplacian solver for concavity experiments.

Core objects: convex polygons/polytopes with support and folding queries, the
thin tetrahedron family in 3D, a piecewise-linear Dirichlet solver, and the
verifiers tying them together (quasi-concavity, critical-point uniqueness,
strict concavity of transformed solutions).
"""

from .errors import (
    ConvexFoldError,
    DivergentIntegral,
    EmptyBody,
    EmptyLevel,
    FoldFailed,
    InvalidAlpha,
    InvalidReaction,
    NoIntersection,
    NonConvergence,
    NonPositiveField,
    NotAShadow,
    UnsupportedReaction,
)
from .geometry import (
    ConvexPolygon,
    ConvexPolytope,
    Cut,
    Segment,
    breadth,
    hausdorff_distance,
    project,
    section,
    shadow_section_for_min_breadth,
    support,
    width,
)
from .folding import (
    FoldProfile,
    HeartApprox,
    cap,
    folding_profile,
    heart,
    is_foldable,
    lemma_fold_check,
    rectangle_rigidity_check,
    reflect,
)
from .kalpha import KAlphaSpec, build_kalpha, build_sequence_example
from .solver import Reaction, ScalarField, argmax_set, level_set, radial_oracle, solve
from .analysis import (
    check_hypotheses,
    check_quasiconcave,
    check_strict_concavity,
    count_critical_points,
    phi_transform,
    picone_check,
    reflection_comparison_experiment,
)

__version__ = "0.1.0"
