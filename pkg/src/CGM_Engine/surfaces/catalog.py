"""Catalog of model hypersurfaces of R^5 with analytic charts.

Parameter conventions (every chart has four parameters):

    S^3 factor  (psi, theta, phi) -> (sin psi sin theta cos phi, sin psi sin theta sin phi,
                                      sin psi cos theta, cos psi)
    sphere      (chi, psi, theta, phi), chi in (0, pi/2), one chart per hemisphere
    torus       (t, psi, theta, phi):  ((R + rho cos t) omega, rho sin t)
    R^2 x S^2   (x, y, theta, phi)
    R x S^3     (s, psi, theta, phi)

Unit normals point toward the centre (spheres), the tube core (tori) or the
axis (patches); SurfaceSpec.normal_sign = -1 flips all of them.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from CGM_Engine.calculus.jets import Jet, stack
from CGM_Engine.geometry.hypersurface import unit_normal
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import SurfaceMessages, format_message
from models.chart_map import ChartMap, chart_jet
from models.surface_atlas import SurfaceAtlas
from models.surface_spec import (
    CUSTOM,
    PATCH_R2XS2,
    PATCH_RXS3,
    PERTURBED_SPHERE,
    SPHERE,
    TORUS,
    SurfaceSpec,
)

logger = get_logger(__name__)

PI = np.pi
S3_LOWER = [0.0, 0.0, 0.0]
S3_UPPER = [PI, PI, 2.0 * PI]
S3_RULES = ["legendre", "cos", "periodic"]

SPHERE_VOLUME_S3 = 2.0 * PI ** 2
SPHERE_VOLUME_S2 = 4.0 * PI


def s3_point(psi: Jet, theta: Jet, phi: Jet) -> List[Jet]:
    """Coordinates of omega in S^3 as four scalar jets."""
    sp = psi.sin()
    st = theta.sin()
    return [sp * st * phi.cos(), sp * st * phi.sin(), sp * theta.cos(), psi.cos()]


def s2_point(theta: Jet, phi: Jet) -> List[Jet]:
    st = theta.sin()
    return [st * phi.cos(), st * phi.sin(), theta.cos()]


def perturbation(pid: str, x: List[Jet]) -> Jet:
    """Polynomial p in the ambient coordinates of a point of the unit sphere."""
    if pid == "x1x2":
        return x[0] * x[1]
    if pid == "x1":
        return x[0]
    if pid == "x5":
        return x[4]
    if pid == "x1x1-x2x2":
        return x[0] * x[0] - x[1] * x[1]
    raise ValueError(f"Unknown perturbation '{pid}'")


# ----------------------------------------------------------------------
# evaluators
# ----------------------------------------------------------------------
def _hemisphere(u: Jet, side: float) -> List[Jet]:
    chi = u[0]
    s = chi.sin()
    return [s * w for w in s3_point(u[1], u[2], u[3])] + [side * chi.cos()]


def sphere_evaluator(radius: float, center, side: float) -> Callable[[Jet], Jet]:
    center = np.asarray(center, dtype=float)

    def evaluate(u: Jet) -> Jet:
        return radius * stack(_hemisphere(u, side)) + center

    return evaluate


def perturbed_sphere_evaluator(radius: float, center, side: float, amplitude: float, pid: str):
    center = np.asarray(center, dtype=float)

    def evaluate(u: Jet) -> Jet:
        x = _hemisphere(u, side)
        graph = radius * (1.0 + amplitude * perturbation(pid, x))
        return graph * stack(x) + center

    return evaluate


def torus_evaluator(major: float, minor: float, amplitude: float = 0.0):
    def evaluate(u: Jet) -> Jet:
        t = u[0]
        omega = s3_point(u[1], u[2], u[3])
        rho = minor * (1.0 + amplitude * omega[0]) if amplitude else minor
        radial = major + rho * t.cos()
        return stack([radial * w for w in omega] + [rho * t.sin()])

    return evaluate


def r2xs2_evaluator(u: Jet) -> Jet:
    return stack([u[0], u[1]] + s2_point(u[2], u[3]))


def rxs3_evaluator(u: Jet) -> Jet:
    return stack([u[0]] + s3_point(u[1], u[2], u[3]))


# ----------------------------------------------------------------------
# orientation
# ----------------------------------------------------------------------
def _inward_sphere(center):
    center = np.asarray(center, dtype=float)
    return lambda x: center - x


def _inward_torus(major):
    def inward(x):
        radial = x[..., :4]
        core = major * radial / np.linalg.norm(radial, axis=-1, keepdims=True)
        return np.concatenate([core, np.zeros(x.shape[:-1] + (1,))], axis=-1) - x

    return inward


def _inward_r2xs2(x):
    out = -x.copy()
    out[..., :2] = 0.0
    return out


def _inward_rxs3(x):
    out = -x.copy()
    out[..., 0] = 0.0
    return out


def orient(chart: ChartMap, inward: Callable[[np.ndarray], np.ndarray], flip: int) -> ChartMap:
    """Fix the chart's normal sign so that n points along `inward` at the box centre, times flip."""
    middle = 0.5 * (chart.lower + chart.upper)
    phi = chart_jet(chart, middle[None], 1)
    raw = unit_normal(phi.gradient()).value[0]
    sign = 1.0 if float(np.dot(raw, inward(phi.value)[0])) > 0 else -1.0
    chart.normal_sign = sign * flip
    return chart


# ----------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------
def make_surface(spec: SurfaceSpec) -> SurfaceAtlas:
    """Build the atlas of a SurfaceSpec; raises SurfaceValidationError on bad parameters."""
    spec.validate()
    kind = spec.kind
    flip = spec.normal_sign
    if kind in (SPHERE, PERTURBED_SPHERE):
        charts = []
        for name, side in (("north", 1.0), ("south", -1.0)):
            if kind == SPHERE:
                evaluator = sphere_evaluator(spec.radius, spec.center, side)
            else:
                evaluator = perturbed_sphere_evaluator(spec.radius, spec.center, side, spec.amplitude, spec.perturbation)
            chart = ChartMap(name, [0.0] + S3_LOWER, [PI / 2] + S3_UPPER, ["legendre"] + S3_RULES, evaluator)
            charts.append(orient(chart, _inward_sphere(spec.center), flip))
        volume = 8.0 * PI ** 2 * spec.radius ** 4 / 3.0 if kind == SPHERE or spec.amplitude == 0 else None
        atlas = SurfaceAtlas(spec.label, charts, 2, True, spec, volume)
    elif kind == TORUS:
        R, a = spec.major_radius, spec.minor_radius
        chart = ChartMap(
            "torus", [0.0] + S3_LOWER, [2.0 * PI] + S3_UPPER, ["periodic"] + S3_RULES, torus_evaluator(R, a, spec.amplitude)
        )
        volume = 4.0 * PI ** 3 * a * (R ** 3 + 1.5 * R * a ** 2) if spec.amplitude == 0 else None
        atlas = SurfaceAtlas(spec.label, [orient(chart, _inward_torus(R), flip)], 0, True, spec, volume)
    elif kind == PATCH_R2XS2:
        L = spec.length
        chart = ChartMap(
            "patch", [0.0, 0.0, 0.0, 0.0], [L, L, PI, 2.0 * PI], ["legendre", "legendre", "cos", "periodic"], r2xs2_evaluator
        )
        atlas = SurfaceAtlas(spec.label, [orient(chart, _inward_r2xs2, flip)], None, False, spec, L ** 2 * SPHERE_VOLUME_S2)
    elif kind == PATCH_RXS3:
        L = spec.length
        chart = ChartMap("patch", [0.0] + S3_LOWER, [L] + S3_UPPER, ["legendre"] + S3_RULES, rxs3_evaluator)
        atlas = SurfaceAtlas(spec.label, [orient(chart, _inward_rxs3, flip)], None, False, spec, L * SPHERE_VOLUME_S3)
    elif kind == CUSTOM:
        custom = spec.custom
        chart = ChartMap(custom.name, custom.lower, custom.upper, custom.axis_rules, custom.evaluator, flip)
        atlas = SurfaceAtlas(custom.name, [chart], custom.euler_characteristic, custom.closed, spec)
    else:
        raise ValueError(format_message(SurfaceMessages.UNKNOWN_KIND, kind=kind))
    logger.debug(f"Built {atlas!r}")
    return atlas


@dataclass(frozen=True)
class ReferenceShape:
    """Closed-form shape data at a point, in an adapted frame."""

    principal_curvatures: np.ndarray  # ascending
    H: float
    A_norm2: float
    a_ring_eigenvalues: np.ndarray

    @classmethod
    def from_curvatures(cls, kappas) -> "ReferenceShape":
        kappas = np.sort(np.asarray(kappas, dtype=float))
        H = float(np.mean(kappas))
        return cls(
            principal_curvatures=kappas,
            H=H,
            A_norm2=float(np.sum(kappas ** 2)),
            a_ring_eigenvalues=kappas - H,
        )


def exact_reference(spec: SurfaceSpec, point) -> Optional[ReferenceShape]:
    """Principal curvatures, H and |A|^2 where a closed form is known, else None.

    Custom charts and genuinely perturbed surfaces have no reference.
    """
    point = np.asarray(point, dtype=float).ravel()
    kind = spec.kind
    if kind == SPHERE or (kind == PERTURBED_SPHERE and spec.amplitude == 0):
        kappas = [1.0 / spec.radius] * 4
    elif kind == TORUS and spec.amplitude == 0:
        R, a = spec.major_radius, spec.minor_radius
        c = np.cos(point[0])
        kappas = [1.0 / a] + [c / (R + a * c)] * 3
    elif kind == PATCH_R2XS2:
        kappas = [0.0, 0.0, 1.0, 1.0]
    elif kind == PATCH_RXS3:
        kappas = [0.0, 1.0, 1.0, 1.0]
    else:
        logger.debug(format_message(SurfaceMessages.NO_REFERENCE, kind=kind))
        return None
    return ReferenceShape.from_curvatures(spec.normal_sign * np.asarray(kappas))
