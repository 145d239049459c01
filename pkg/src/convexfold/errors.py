"""Exception types shared across the package."""


class ConvexFoldError(Exception):
    """Base class for all package errors."""


class EmptyBody(ConvexFoldError):
    """A query was made against an empty convex body."""


class NoIntersection(ConvexFoldError):
    """A cutting plane misses the body."""


class NotAShadow(ConvexFoldError):
    """The section at the given cut is not a shadow of the body."""


class FoldFailed(ConvexFoldError):
    """A fold that should succeed is not numerically foldable."""


class EmptyLevel(ConvexFoldError):
    """Requested level is at or above the field maximum."""


class InvalidAlpha(ConvexFoldError):
    """Tetrahedron family parameter must be positive."""


class InvalidReaction(ConvexFoldError):
    """Reaction parameters outside the supported regime."""


class UnsupportedReaction(ConvexFoldError):
    """Operation not available for this reaction kind."""


class DivergentIntegral(ConvexFoldError):
    """The transform integral diverges near zero."""


class NonPositiveField(ConvexFoldError):
    """Field must be positive on the evaluation region."""


class NonConvergence(ConvexFoldError):
    """Iteration budget exhausted; carries the last iterate and diagnostics."""

    def __init__(self, message, field=None, diagnostics=None):
        super().__init__(message)
        self.field = field
        self.diagnostics = diagnostics or {}
