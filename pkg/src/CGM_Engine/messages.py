"""
Message catalog for the conformal Gauss map lab.

This module centralizes every error and status message so that the engine,
the services and the CLI report the same wording for the same condition.
"""


class JetMessages:
    """Messages raised by the jet calculus."""

    ORDER_OUT_OF_RANGE = "Jet order must be between 0 and {max_order}, got {order}."
    ORDER_TOO_LOW = "{operation} needs a jet of order >= {required}, got {order}."
    SHAPE_MISMATCH = "Jet shapes {left} and {right} cannot be combined elementwise."
    BATCH_MISMATCH = "Jet batches of size {left} and {right} cannot be combined."
    DOMAIN = "{function} is not smooth at {value:.3e}."
    SINGULAR_MATRIX = "Matrix jet is singular at its base point (condition {cond:.3e})."
    UNKNOWN_FUNCTION = "Unknown scalar function '{function}'."


class ChartMessages:
    """Messages about charts and parameter domains."""

    OUTSIDE_DOMAIN = "Point {point} lies outside the domain of chart '{chart}'."
    RANK_DEFICIENT = (
        "Chart '{chart}' is not an immersion at {point}: "
        "Jacobian singular values ratio {ratio:.3e}."
    )
    FD_STENCIL_OUTSIDE = (
        "Finite-difference stencil of half-width {width:.3e} leaves chart '{chart}' at {point}."
    )


class SurfaceMessages:
    """Messages about surface specifications and atlases."""

    UNKNOWN_KIND = "Unknown surface kind '{kind}'."
    NON_POSITIVE = "{name} must be positive, got {value}."
    TORUS_NOT_EMBEDDED = "Torus needs R > a(1 + |amplitude|), got R={R}, a={a}, amplitude={amplitude}."
    AMPLITUDE_TOO_LARGE = "Perturbation amplitude {amplitude} is too large (limit {limit})."
    UNKNOWN_PERTURBATION = "Unknown perturbation '{pid}'; choose one of {choices}."
    NO_REFERENCE = "Surface kind '{kind}' has no closed-form reference."
    CUSTOM_FROM_CONFIG = "Custom charts cannot be built from a configuration file."
    CENTER_DIMENSION = "Centre must have 5 coordinates, got {count}."


class GeometryMessages:
    """Messages about shape data and the conformal Gauss map frame."""

    SINGULAR_A_RING = "A_ring is singular: |det| = {det:.3e} below threshold {threshold:.3e}."
    F_DEGENERATE = "f = H^2 + |grad H|^2 = {f:.3e} is below its tolerance {tolerance:.3e}."
    NOT_TRACE_FREE = "A_ring is not trace-free: |tr| = {trace:.3e}."
    UMBILIC_POINT = "Umbilic (or det A_ring = 0) point encountered at {node}."
    MIXED_SIGN = "det A_ring changes sign on the surface ({positive} positive, {negative} negative nodes)."
    OPEN_SURFACE = "{operation} needs a closed surface; '{surface}' is an open patch."
    NODE_FAILED = "Evaluation failed at node {node} of chart '{chart}': {reason}"


class MoebiusMessages:
    """Messages about conformal transformations."""

    UNKNOWN_PRIMITIVE = "Unknown Moebius primitive '{kind}'."
    BAD_DILATION = "Dilation factor must be positive, got {factor}."
    BAD_ROTATION = "Rotation matrix is not in SO(5) (residual {residual:.3e})."
    INVERSION_TOO_CLOSE = (
        "Inversion centre {center} is within {radius:.1e} of the surface at node {node}."
    )
    FIT_RANK = (
        "Equivariance fit needs 7 independent samples of Y; rank is {rank}. "
        "The conformal Gauss map of this surface is degenerate (constant for a round sphere)."
    )


class RunMessages:
    """Messages used by the command line front end."""

    SUITE_STARTED = "Running '{command}' on {surface} (level {level}, order {order})."
    SUITE_FINISHED = "Finished '{command}': {passed}/{total} residuals within tolerance."
    REPORT_WRITTEN = "Report written to {path}."
    REPORT_FAILED = "Could not write report to {path}: {reason}."
    CONFIG_INVALID = "Invalid configuration: {reason}."
    CONFIG_UNREADABLE = "Could not read configuration file {path}: {reason}."
    BAD_TOLERANCE_FLAG = "Tolerance override must look like suite=value, got '{flag}'."
    UNSUPPORTED = "Unsupported combination: {reason}."
    HIGH_ORDER_SKIPPED = "Order-6 suites skipped (run with --order 6 to include them)."


class ErrorTypes:
    """Error type identifiers carried by service responses."""

    VALIDATION = "validation"
    DEGENERACY = "degeneracy"
    SINGULARITY = "singularity"
    HYPOTHESIS = "hypothesis"
    MOEBIUS = "moebius"
    RANK = "rank"
    IO = "io"
    UNKNOWN = "unknown"


def format_message(message: str, **kwargs) -> str:
    """
    Format a message template with provided values.

    Args:
        message: Message template with {placeholders}
        **kwargs: Values to fill in the placeholders

    Returns:
        Formatted message string

    Example:
        >>> format_message(SurfaceMessages.NON_POSITIVE, name="radius", value=-1)
        'radius must be positive, got -1.'
    """
    try:
        return message.format(**kwargs)
    except (KeyError, IndexError, ValueError):
        # Missing placeholder or bad format spec: keep the template readable
        return message
