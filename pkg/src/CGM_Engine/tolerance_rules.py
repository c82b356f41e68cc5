"""
Centralized numerical rules for the conformal Gauss map lab.

=============================================================================
PURPOSE:
=============================================================================
This file is the SINGLE SOURCE OF TRUTH for every threshold, tolerance and
discretization constant. The jet calculus, the geometry layer, the services
and the CLI all import from here.

This ensures:
1. A residual is always judged against the same tolerance
2. Changing a threshold in one place applies everywhere
3. The CLI --tol overrides have one table to patch

=============================================================================
HOW TO USE:
=============================================================================

    from CGM_Engine.tolerance_rules import SuiteTolerances, TracelessRules

    if abs(det) <= TracelessRules.singular_threshold(norm2):
        # raise SingularityError

=============================================================================
"""

import math
from typing import Dict


class JetRules:
    """
    Limits of the jet calculus.

    The Euler-Lagrange relations apply a Laplacian to quantities already
    holding fourth derivatives of the chart (order 6). The metric stress
    balance differentiates the Paneitz density twice more in the metric
    and needs order 7.
    """

    MIN_ORDER = 0
    MAX_ORDER = 7
    N_VARIABLES = 4

    # Nodes per evaluation chunk, by jet order (product tables grow fast)
    CHUNK_SIZES = {0: 1024, 1: 1024, 2: 512, 3: 512, 4: 128, 5: 48, 6: 16, 7: 8}

    # Jacobian rank test: smallest / largest singular value
    RANK_RATIO = 1e-10

    ERRORS = {
        "order": f"Jet order must lie in [{MIN_ORDER}, {MAX_ORDER}].",
    }

    @classmethod
    def chunk_size(cls, order: int) -> int:
        return cls.CHUNK_SIZES.get(order, cls.CHUNK_SIZES[cls.MAX_ORDER])


class TracelessRules:
    """
    Rules for the traceless second fundamental form.

    All traces and determinants are those of the endomorphism g^{-1} A_ring.
    """

    # |tr_g A_ring| must stay below this fraction of |A_ring|_g
    TRACE_FREE = 1e-10

    # |det_g A_ring| <= SINGULAR_FACTOR * (|A_ring|^2_g / 4)^2 counts as singular
    SINGULAR_FACTOR = 1e-10

    # Absolute floor used when A_ring vanishes altogether
    ABSOLUTE_FLOOR = 1e-300

    # |A_ring|^2_g <= UMBILIC_FACTOR * |A|^2_g is an umbilic point
    UMBILIC_FACTOR = 1e-16

    @classmethod
    def singular_threshold(cls, norm2):
        """Scale-aware cutoff for det_g A_ring given |A_ring|^2_g."""
        return cls.SINGULAR_FACTOR * (norm2 / 4.0) ** 2 + cls.ABSOLUTE_FLOOR

    @classmethod
    def umbilic(cls, a_ring_norm2, a_norm2):
        """Umbilic mask: A_ring negligible against the full second fundamental form."""
        return a_ring_norm2 <= cls.UMBILIC_FACTOR * a_norm2 + cls.ABSOLUTE_FLOOR


class FrameRules:
    """Rules for the dual null frame of the conformal Gauss map."""

    # f <= F_FACTOR * (1 + |A_ring|^2_g) is degenerate
    F_FACTOR = 1e-10

    @classmethod
    def f_tolerance(cls, norm2):
        return cls.F_FACTOR * (1.0 + norm2)


class QuadratureRules:
    """
    Product quadrature on chart boxes.

    Node counts per axis grow geometrically: n(level) = ceil(base * GROWTH**level).
    """

    GROWTH = 1.5
    PERIODIC_BASE = 6
    LEGENDRE_BASE = 4

    @classmethod
    def node_count(cls, base: int, level: int) -> int:
        if level < 0:
            raise ValueError("Quadrature level must be non-negative")
        return int(math.ceil(base * cls.GROWTH ** level))


class SamplingRules:
    """Seeded random sampling of chart points for pointwise suites."""

    # Points stay this fraction of each axis length away from chart edges
    MARGIN = 1e-2
    DEFAULT_POINTS = 100
    DEFAULT_SEED = 20240917


class MoebiusRules:
    """Rules for conformal transformations of R^5."""

    # Inversion centres closer than this to a node are rejected
    INVERSION_RADIUS = 1e-3
    FIT_RANK = 7

    ERRORS = {
        "dilation": "Dilation factor must be positive.",
        "rotation": "Rotation must be a 5x5 orthogonal matrix with determinant 1.",
        "translation": "Translation must have 5 components.",
        "center": "Inversion centre must have 5 components.",
    }


class SuiteTolerances:
    """
    Default pass/fail tolerances for every residual reported by the CLI.

    Pointwise residuals are relative to the largest term in the identity
    (with a unit floor); integral residuals are relative to the largest of
    the compared values and the volume.
    """

    DEFAULTS: Dict[str, float] = {
        # pointwise: hypersurface geometry
        "codazzi": 1e-7,
        "simons": 1e-7,
        "laplace_scal": 1e-6,
        "curvature_routes": 1e-8,
        "egr_forms": 1e-12,
        "ep_forms": 1e-7,
        # pointwise: traceless algebra
        "ch_pack": 1e-10,
        "det_expansion": 1e-10,
        "inverse": 1e-9,
        # pointwise: conformal Gauss map
        "frame_relations": 1e-10,
        "g_bar": 1e-10,
        "dy_closed_form": 1e-9,
        "nu_nu_star": 1e-9,
        "dual_relations": 1e-9,
        "b_closed": 1e-7,
        "gamma_bar": 1e-7,
        "scal_bar": 1e-6,
        "g_nu": 1e-6,
        "orientation": 1e-8,
        "fd_jets": 1e-4,
        # integrals
        "gauss_bonnet": 1e-5,
        "duality_P": 1e-5,
        "duality_S": 1e-5,
        "grad_h_identity": 1e-5,
        "scal_bar_integral": 1e-5,
        "ep_lower_bound": 1e-6,
        "energy_reference": 1e-6,
        # high order (order-6 jets)
        "ey_nu": 1e-5,
        "ey_tangent": 1e-6,
        "noether": 1e-4,
        "lcgm": 1e-8,
        "conservation_flux": 1e-4,
        "variation_constraints": 1e-4,
        # Moebius harness
        "invariance": 1e-5,
        "lorentz": 1e-6,
        "equivariance_fit": 1e-6,
        # neck scan
        "neck_fit": 1e-6,
    }

    ERRORS = {
        "unknown": "Unknown tolerance suite '{suite}'.",
        "non_positive": "Tolerance for '{suite}' must be positive.",
    }

    @classmethod
    def merged(cls, overrides: Dict[str, float] = None) -> Dict[str, float]:
        """Defaults patched with per-suite overrides."""
        table = dict(cls.DEFAULTS)
        for suite, value in (overrides or {}).items():
            if suite not in table:
                raise KeyError(cls.ERRORS["unknown"].format(suite=suite))
            if not value > 0:
                raise ValueError(cls.ERRORS["non_positive"].format(suite=suite))
            table[suite] = float(value)
        return table
