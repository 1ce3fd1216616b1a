"""Exception hierarchy shared across the package."""


class QuadmapError(Exception):
    """Base class for all quadmap-specific errors."""


class DimensionError(QuadmapError):
    """Input dimensions are unusable (not divisible, odd where even is required, ...)."""


class LevelError(QuadmapError):
    """A quadtree level index is out of range."""


class ShapeError(QuadmapError):
    """Two inputs that must agree in shape do not."""


class FormatError(QuadmapError):
    """A byte stream or file does not follow the expected format."""


class InvariantError(QuadmapError):
    """A decoded or constructed forest violates a structural invariant."""


class DegenerateError(QuadmapError):
    """An operation has no usable data (all pixels invalid, zero-mean disparity, ...)."""


class EmptyError(QuadmapError):
    """A required collection of inputs is empty."""


class EmptyMaskError(QuadmapError):
    """A validity mask selects no pixels."""
