# services/energy_service.py
"""
Pointwise integrands and global values of the conformally invariant energies.

    E_GR = int |grad H|^2 - H^2 |A|^2 + 7 H^4
    E_P  = int <Y, P_g Y>
    P    = 1/4 int <Y, P_g Y> - 4/3 |grad Y|^4 - 4 det_g A_ring
    S    = eps/2 int (6 (2 - eps) - Scal_{g_bar}) dvol_{g_bar}

On a closed hypersurface E_GR = 4 pi^2 chi + P, and E_GR = 4 pi^2 chi + S
when A_ring is invertible everywhere (eps = sign det A_ring).
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from CGM_Engine.calculus.jets import Jet, jet_einsum
from CGM_Engine.exceptions import GeometryError, NodeEvaluationError, UnsupportedHypothesisError
from CGM_Engine.geometry.conformal_gauss import CgmFrame, eta_pair
from CGM_Engine.geometry.covariant import divergence, laplacian, raise_first
from CGM_Engine.geometry.hypersurface import ShapeData, relative_residual
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import ErrorTypes, GeometryMessages, format_message
from CGM_Engine.surfaces.catalog import make_surface
from CGM_Engine.surfaces.quadrature import (
    IntegralResult,
    NodeContext,
    evaluate_nodes,
    integrate_many,
    quadrature_grid,
    volume,
)
from CGM_Engine.utils.threading_utils import SafeThreadExecutor
from models.surface_atlas import SurfaceAtlas
from models.surface_spec import PATCH_R2XS2, PATCH_RXS3, PERTURBED_SPHERE, SPHERE, SurfaceSpec

logger = get_logger(__name__)

FOUR_PI_SQUARED = 4.0 * np.pi ** 2
# constant E_GR densities of the product patches
PATCH_DENSITIES = {PATCH_R2XS2: -1.0 / 16.0, PATCH_RXS3: 135.0 / 256.0}


# ----------------------------------------------------------------------
# pointwise integrands
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class EgrDensity:
    seven: np.ndarray
    three: np.ndarray
    residual: np.ndarray


def egr_forms(sd: ShapeData) -> EgrDensity:
    """The |A|^2 + 7H^4 and |A_ring|^2 + 3H^4 forms of the E_GR density."""
    grad = sd.grad_H_norm2.value
    H2 = sd.H.value ** 2
    seven = grad - H2 * sd.A_norm2.value + 7.0 * H2 ** 2
    three = grad - H2 * sd.a_ring_norm2.value + 3.0 * H2 ** 2
    residual = relative_residual((seven - three)[:, None], seven[:, None], three[:, None], (7.0 * H2 ** 2)[:, None])
    return EgrDensity(seven=seven, three=three, residual=residual)


def egr_integrand(sd: ShapeData) -> np.ndarray:
    return egr_forms(sd).three


def paneitz_closed(sd: ShapeData) -> Jet:
    """4|grad H|^2 + 1/3|A_ring|^4 + 2H^2|A_ring|^2 - 4H tr A_ring^3 + 2 tr A_ring^4."""
    norm2 = sd.a_ring_norm2
    return (
        4.0 * sd.grad_H_norm2
        + (1.0 / 3.0) * norm2 * norm2
        + 2.0 * sd.H * sd.H * norm2
        - 4.0 * sd.H * sd.tr3
        + 2.0 * sd.tr4
    )


def grad_y_upper(frame: CgmFrame) -> Jet:
    """(grad^g Y)^i = g^{ij} d_j Y."""
    return raise_first(frame.dY, frame.sd.g_inv)


def laplace_y(frame: CgmFrame) -> Jet:
    frame.sd.phi.require(4, "laplace_y")
    return laplacian(frame.Y, frame.sd.gamma, frame.sd.g_inv)


def ricci_upper(sd: ShapeData) -> Jet:
    return jet_einsum("ib,bj->ij", jet_einsum("ia,ab->ib", sd.g_inv, sd.ric), sd.g_inv)


def paneitz_flux(frame: CgmFrame) -> Jet:
    """((2/3) Scal g - 2 Ric)(grad Y) with the slot index raised."""
    sd = frame.sd
    upper = grad_y_upper(frame)
    return (2.0 / 3.0) * sd.scal * upper - 2.0 * jet_einsum("ij,ja->ia", ricci_upper(sd), frame.dY)


def paneitz_raw(frame: CgmFrame) -> Jet:
    """|Delta Y|^2 + (2 Scal / 3)|grad Y|^2 - 2 Ric(grad Y, grad Y)."""
    sd = frame.sd
    lap = laplace_y(frame)
    gram = frame.g_bar_gram
    grad_norm2 = jet_einsum("ij,ij->", sd.g_inv, gram)
    ricci_term = jet_einsum("ij,ij->", ricci_upper(sd), gram)
    return eta_pair("a,a->", lap, lap) + (2.0 / 3.0) * sd.scal * grad_norm2 - 2.0 * ricci_term


def paneitz_operator(frame: CgmFrame) -> Jet:
    """P_g Y = Delta^2 Y - div(((2/3) Scal g - 2 Ric) grad Y); needs an order-6 jet."""
    sd = frame.sd
    sd.phi.require(6, "paneitz_operator")
    lap = laplace_y(frame)
    return laplacian(lap, sd.gamma, sd.g_inv) - divergence(paneitz_flux(frame), sd.gamma)


@dataclass(frozen=True)
class EpDensity:
    closed: np.ndarray
    raw: np.ndarray
    residual: np.ndarray


def ep_integrand(frame: CgmFrame) -> EpDensity:
    """Closed and raw forms of the positive Paneitz density (raw form needs order 4)."""
    sd = frame.sd
    closed = paneitz_closed(sd).value
    raw = paneitz_raw(frame).value
    norm2 = sd.a_ring_norm2.value
    scale = np.maximum.reduce([np.abs(closed), 4.0 * sd.grad_H_norm2.value, norm2 ** 2 / 3.0, 2.0 * np.abs(sd.tr4.value)])
    residual = relative_residual((closed - raw)[:, None], closed[:, None], raw[:, None], scale[:, None])
    return EpDensity(closed=closed, raw=raw, residual=residual)


def pcal_integrand(sd: ShapeData) -> np.ndarray:
    """1/4 (<Y, P_g Y> - 4/3 |grad Y|^4 - 4 det_g A_ring) with the closed Paneitz density."""
    norm2 = sd.a_ring_norm2.value
    return 0.25 * (paneitz_closed(sd).value - (4.0 / 3.0) * norm2 ** 2 - 4.0 * sd.det_a_ring.value)


def scal_integrand(frame: CgmFrame, epsilon: int) -> np.ndarray:
    """eps/2 (6(2 - eps) - Scal_{g_bar}) |det_g A_ring| (density against dvol_g)."""
    scal = frame.scal_bar_gauss.value
    return 0.5 * epsilon * (6.0 * (2.0 - epsilon) - scal) * np.abs(frame.det_a.value)


def grad_h_sides(sd: ShapeData):
    """Both sides of int |grad H|^2 = 1/12 int |grad A_ring|^2 + 4H^2|A_ring|^2 + 4H tr A_ring^3 - |A_ring|^4."""
    H = sd.H.value
    norm2 = sd.a_ring_norm2.value
    rhs = (sd.nabla_A_ring_norm2.value + 4.0 * H ** 2 * norm2 + 4.0 * H * sd.tr3.value - norm2 ** 2) / 12.0
    return sd.grad_H_norm2.value, rhs


# ----------------------------------------------------------------------
# sign census of det A_ring
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SignCensus:
    positive: int
    negative: int
    singular: int
    first_singular: Optional[List[float]]

    @property
    def umbilic_free(self) -> bool:
        return self.singular == 0 and (self.positive == 0 or self.negative == 0)

    @property
    def epsilon(self) -> int:
        return 1 if self.positive >= self.negative else -1

    def require_constant_sign(self) -> int:
        if self.singular:
            raise UnsupportedHypothesisError(format_message(GeometryMessages.UMBILIC_POINT, node=self.first_singular))
        if self.positive and self.negative:
            raise UnsupportedHypothesisError(
                format_message(GeometryMessages.MIXED_SIGN, positive=self.positive, negative=self.negative)
            )
        return self.epsilon


def _sign_field(context: NodeContext) -> np.ndarray:
    sd = context.shape
    return np.where(sd.singular_mask, 0.0, np.sign(sd.det_a_ring.value))


def det_sign_census(atlas: SurfaceAtlas, level: int, executor: Optional[SafeThreadExecutor] = None) -> SignCensus:
    """Count the signs of det_g A_ring over the quadrature nodes; zero counts as singular."""
    grid = quadrature_grid(atlas, level)
    blocks = evaluate_nodes(_sign_field, grid, 2, executor)
    signs = np.concatenate(blocks)
    first = None
    for block, values in zip(grid.nodes, blocks):
        zero = np.flatnonzero(values == 0.0)
        if zero.size:
            first = block.points[zero[0]].tolist()
            break
    return SignCensus(
        positive=int(np.sum(signs > 0)),
        negative=int(np.sum(signs < 0)),
        singular=int(np.sum(signs == 0)),
        first_singular=first,
    )


# ----------------------------------------------------------------------
# global values
# ----------------------------------------------------------------------
def _egr_field(context: NodeContext) -> np.ndarray:
    return egr_integrand(context.shape)


def _ep_field(context: NodeContext) -> np.ndarray:
    return paneitz_closed(context.shape).value


def _pcal_field(context: NodeContext) -> np.ndarray:
    return pcal_integrand(context.shape)


def _gauss_bonnet_field(context: NodeContext) -> np.ndarray:
    return context.shape.det_A


def _signed_volume_field(context: NodeContext) -> np.ndarray:
    return context.shape.det_a_ring.value


def _scal_field(epsilon: int):
    def evaluate(context: NodeContext) -> np.ndarray:
        return scal_integrand(context.frame, epsilon)

    return evaluate


def _relative(a: float, b: float, *scales: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), *[abs(s) for s in scales], 1e-300)


@dataclass
class EnergyReport:
    surface: str
    level: int
    euler_characteristic: Optional[int]
    epsilon: Optional[int]
    umbilic_free: bool
    functionals: Dict[str, IntegralResult] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def value(self, name: str) -> Optional[float]:
        result = self.functionals.get(name)
        return None if result is None else result.value

    def to_dict(self) -> Dict[str, Any]:
        return {
            "surface": self.surface,
            "level": self.level,
            "euler_characteristic": self.euler_characteristic,
            "epsilon": self.epsilon,
            "umbilic_free": self.umbilic_free,
            "functionals": {name: result.to_dict() for name, result in self.functionals.items()},
            "residuals": dict(self.residuals),
            "notes": list(self.notes),
        }


def functional_values(
    atlas: SurfaceAtlas,
    level: int,
    require_scal: bool = False,
    executor: Optional[SafeThreadExecutor] = None,
    estimate_error: bool = True,
) -> EnergyReport:
    """E_GR, E_P, P, S, Gauss-Bonnet and signed volume with the duality residuals.

    S is only evaluated on closed surfaces where det A_ring keeps one sign.
    With require_scal=True a surface failing that hypothesis raises
    UnsupportedHypothesisError; otherwise S is left out and noted.
    """
    census = det_sign_census(atlas, level, executor)
    fields = {
        "E_GR": _egr_field,
        "E_P": _ep_field,
        "P": _pcal_field,
        "gauss_bonnet": _gauss_bonnet_field,
        "signed_volume_bar": _signed_volume_field,
        "volume": volume,
    }
    order = 3
    epsilon = census.epsilon if census.positive or census.negative else None
    notes: List[str] = []
    scal_ready = atlas.closed and census.umbilic_free
    if require_scal and not atlas.closed:
        raise UnsupportedHypothesisError(
            format_message(GeometryMessages.OPEN_SURFACE, operation="S", surface=atlas.name)
        )
    if require_scal:
        epsilon = census.require_constant_sign()
    if scal_ready:
        fields["S"] = _scal_field(census.epsilon)
        order = 4
    else:
        notes.append("S skipped: det A_ring vanishes or changes sign on the grid")

    try:
        values = integrate_many(fields, atlas, level, order, executor, estimate_error)
    except NodeEvaluationError as error:
        if "S" in fields and require_scal:
            raise UnsupportedHypothesisError(str(error), node=error.node) from error
        raise

    report = EnergyReport(
        surface=atlas.name,
        level=level,
        euler_characteristic=atlas.euler_characteristic,
        epsilon=epsilon,
        umbilic_free=census.umbilic_free,
        functionals=values,
        notes=notes,
    )
    if atlas.closed:
        chi = atlas.euler_characteristic
        egr = values["E_GR"].value
        vol = values["volume"].value
        topological = FOUR_PI_SQUARED * chi
        report.residuals["duality_P"] = _relative(egr, topological + values["P"].value, 1.0)
        if "S" in values:
            report.residuals["duality_S"] = _relative(egr, topological + values["S"].value, 1.0)
        report.residuals["gauss_bonnet"] = abs(values["gauss_bonnet"].value - FOUR_PI_SQUARED * chi / 3.0) / max(
            1.0, vol
        )
    logger.info(
        f"Energies of {atlas.name} at level {level}: "
        + ", ".join(f"{name}={result.value:.10g}" for name, result in values.items())
    )
    return report


def _require_closed(atlas: SurfaceAtlas, operation: str) -> None:
    if not atlas.closed:
        raise UnsupportedHypothesisError(
            format_message(GeometryMessages.OPEN_SURFACE, operation=operation, surface=atlas.name)
        )


def grad_h_identity_residual(atlas: SurfaceAtlas, level: int, executor=None) -> Dict[str, float]:
    """int |grad H|^2 against 1/12 int (|grad A_ring|^2 + 4H^2|A_ring|^2 + 4H tr A_ring^3 - |A_ring|^4)."""
    _require_closed(atlas, "grad_h_identity")
    fields = {
        "lhs": lambda c: grad_h_sides(c.shape)[0],
        "rhs": lambda c: grad_h_sides(c.shape)[1],
        "volume": volume,
    }
    values = integrate_many(fields, atlas, level, 3, executor, estimate_error=False)
    lhs, rhs, vol = values["lhs"].value, values["rhs"].value, values["volume"].value
    return {"lhs": lhs, "rhs": rhs, "residual": _relative(lhs, rhs, vol)}


def scal_bar_integral_residual(atlas: SurfaceAtlas, level: int, executor=None) -> Dict[str, float]:
    """int Scal_{g_bar} dvol_{g_bar} against 12 vol_{g_bar} - eps int (2|grad H|^2 + H^2|A_ring|^2 - 2H tr A_ring^3)."""
    _require_closed(atlas, "scal_bar_integral")
    epsilon = det_sign_census(atlas, level, executor).require_constant_sign()

    def rhs_density(context: NodeContext) -> np.ndarray:
        sd = context.shape
        H = sd.H.value
        return 2.0 * sd.grad_H_norm2.value + H ** 2 * sd.a_ring_norm2.value - 2.0 * H * sd.tr3.value

    fields = {
        "scal_bar": lambda c: c.frame.scal_bar_gauss.value * np.abs(c.frame.det_a.value),
        "volume_bar": lambda c: np.abs(c.frame.det_a.value),
        "density": rhs_density,
    }
    values = integrate_many(fields, atlas, level, 4, executor, estimate_error=False)
    lhs = values["scal_bar"].value
    vol_bar = values["volume_bar"].value
    rhs = 12.0 * vol_bar - epsilon * values["density"].value
    return {"lhs": lhs, "rhs": rhs, "epsilon": epsilon, "residual": _relative(lhs, rhs, vol_bar)}


def ep_lower_bound_check(atlas: SurfaceAtlas, level: int, executor=None) -> Dict[str, float]:
    """E_P against its lower bound int 4|grad H|^2 + 1/3|A_ring|^4."""
    _require_closed(atlas, "ep_lower_bound")
    fields = {
        "E_P": _ep_field,
        "lower_bound": lambda c: 4.0 * c.shape.grad_H_norm2.value + c.shape.a_ring_norm2.value ** 2 / 3.0,
        "volume": volume,
    }
    values = integrate_many(fields, atlas, level, 3, executor, estimate_error=False)
    ep, bound = values["E_P"].value, values["lower_bound"].value
    scale = max(abs(ep), 1.0)
    return {
        "E_P": ep,
        "lower_bound": bound,
        # positive part of (bound - E_P) and of the negative parts, relative
        "violation": max(bound - ep, -bound, -ep, 0.0) / scale,
    }


def reference_energies(atlas: SurfaceAtlas) -> Dict[str, float]:
    """Closed-form energies where known: round spheres and the product patches."""
    spec = atlas.spec
    if spec is None:
        return {}
    if spec.kind == SPHERE or (spec.kind == PERTURBED_SPHERE and spec.amplitude == 0):
        return {"E_GR": 2.0 * FOUR_PI_SQUARED, "E_P": 0.0, "P": 0.0}
    if spec.kind in PATCH_DENSITIES and atlas.reference_volume is not None:
        return {"E_GR": PATCH_DENSITIES[spec.kind] * atlas.reference_volume}
    return {}


def neck_scaling(length: float, level: int, executor=None) -> IntegralResult:
    """E_GR of the patch [0, L]^2 x S^2 (asymptotically -(pi/4) L^2)."""
    atlas = make_surface(SurfaceSpec(PATCH_R2XS2, length=length))
    return integrate_many({"E_GR": _egr_field}, atlas, level, 3, executor)["E_GR"]


def neck_fit(lengths: List[float], values: List[float]) -> Dict[str, float]:
    """Least-squares fit of values = c L^2; returns c, the relative misfit and R^2."""
    L2 = np.asarray(lengths, dtype=float) ** 2
    y = np.asarray(values, dtype=float)
    c = float(L2 @ y / (L2 @ L2))
    fitted = c * L2
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return {
        "coefficient": c,
        "expected": -np.pi / 4.0,
        "relative_error": abs(c + np.pi / 4.0) / (np.pi / 4.0),
        "max_misfit": float(np.max(np.abs(y - fitted) / np.maximum(np.abs(y), 1e-300))),
        "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
    }


def energy_summary(atlas: SurfaceAtlas, level: int, require_scal: bool = False, executor=None) -> Dict[str, Any]:
    """
    High-level wrapper around functional_values for the CLI.

    Returns:
        {"success": bool, "message": str, "report": EnergyReport or None, "error_type": str (only on failure)}
    """
    try:
        report = functional_values(atlas, level, require_scal, executor)
        return {"success": True, "message": f"Energies computed for {atlas.name}.", "report": report}
    except UnsupportedHypothesisError as e:
        logger.warning(f"Energy run refused on {atlas.name}: {e}")
        return {"success": False, "message": str(e), "report": None, "error_type": ErrorTypes.HYPOTHESIS}
    except GeometryError as e:
        logger.error(f"Energy run failed on {atlas.name}: {e}", exc_info=True)
        return {"success": False, "message": str(e), "report": None, "error_type": ErrorTypes.DEGENERACY}
