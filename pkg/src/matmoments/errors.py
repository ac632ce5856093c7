"""Exception types shared across the package."""


class MatMomentsError(Exception):
    """Base class for all package-specific errors."""


class TriangleViolation(MatMomentsError):
    """Degrees (a, b, l) do not satisfy |a - b| <= l <= a + b."""


class NonOrthogonalRotation(MatMomentsError):
    """A rotation matrix failed the orthogonality check."""


class ShapeMismatch(MatMomentsError):
    """Array shapes are inconsistent with the declared block layout."""


class UnknownColor(MatMomentsError):
    """A color index is outside the declared palette."""


class SingularSystem(MatMomentsError):
    """A radial interpolation system is numerically rank deficient."""


class MalformedSpec(MatMomentsError):
    """A tensor contraction spec does not use every index exactly twice."""


class DimensionTooSmall(MatMomentsError):
    """Requested projection target dimension is not below the source dimension."""


class NonDifferentiablePoint(MatMomentsError):
    """Gradients were requested at a point where the radial basis is not differentiable."""


class DivergenceDetected(MatMomentsError):
    """Training loss exceeded the divergence threshold."""


class ParseError(MatMomentsError):
    """A configuration file could not be parsed.

    Attributes:
        line: 1-based line number where parsing failed, or None.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
