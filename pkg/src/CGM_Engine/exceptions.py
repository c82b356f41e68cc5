"""
Custom exceptions for the conformal Gauss map lab.

This module defines a hierarchy of exceptions used throughout the engine
to report numerical and geometric failures in a clear and structured way.
"""


class GeometryError(Exception):
    """
    Base exception for all errors raised by the geometry engine.

    Use this as a catch-all when you want to handle any numerical or
    geometric failure without caring about the specific type.
    """

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.context = context


class JetDomainError(GeometryError):
    """
    Raised when a jet is evaluated outside the domain of a function.

    Example:
        Composing the reciprocal with a jet whose value is 0, or asking
        a chart for a point outside its parameter box.
    """

    pass


class JetOrderError(GeometryError):
    """
    Raised when an operation needs more derivatives than the jet carries.

    Example:
        Asking for the Simons residual from a jet of order 3.
    """

    pass


class DegeneracyError(GeometryError):
    """
    Raised when a map or a frame degenerates.

    Example:
        Rank-deficient Jacobian of a chart, or f = H^2 + |grad H|^2 below
        its tolerance so that the dual null vector is not defined.
    """

    pass


class SingularityError(GeometryError):
    """
    Raised when the traceless second fundamental form is not invertible.

    Attributes:
        det: the offending value of det_g(A_ring)

    Example:
        Evaluating the inverse of A_ring at an umbilic point.
    """

    def __init__(self, message: str = "", det: float = 0.0, **context):
        super().__init__(message, det=det, **context)
        self.det = det


class UnsupportedHypothesisError(GeometryError):
    """
    Raised when an operation needs a hypothesis the surface does not meet.

    Example:
        The scalar-curvature energy requested on a surface with umbilic
        points, or a closed-surface identity requested on an open patch.
    """

    pass


class SurfaceValidationError(GeometryError):
    """
    Raised when surface parameters are invalid.

    Example:
        Torus of revolution with R <= a, or a perturbation amplitude so
        large that the chart stops being an immersion.
    """

    pass


class MoebiusValidityError(GeometryError):
    """
    Raised when a Moebius map is not smooth on the surface.

    Attributes:
        node: parameter point of the offending quadrature node (or None)

    Example:
        Inversion whose centre lies on (or too close to) the surface.
    """

    def __init__(self, message: str = "", node=None, **context):
        super().__init__(message, node=node, **context)
        self.node = node


class FitRankError(GeometryError):
    """
    Raised when the equivariance fit has too few independent samples.

    Example:
        Round sphere, whose conformal Gauss map is constant.
    """

    pass


class NodeEvaluationError(GeometryError):
    """
    Raised when a field fails at a quadrature node.

    Attributes:
        chart: name of the chart holding the node
        node: parameter point of the node
        cause: the original GeometryError

    Example:
        Singular A_ring at one node of the scalar-curvature energy.
    """

    def __init__(self, message: str = "", chart: str = "", node=None, cause=None):
        super().__init__(message, chart=chart, node=node)
        self.chart = chart
        self.node = node
        self.cause = cause


class ConfigError(Exception):
    """
    Raised when a run configuration is invalid.

    Example:
        Unknown key in the JSON config, or an unparsable --tol flag.
    """

    pass


class ReportError(Exception):
    """
    Raised when a report cannot be written.

    Example:
        Output path inside a read-only directory.
    """

    def __init__(self, message: str = "", path: str = None):
        super().__init__(message)
        self.path = path
