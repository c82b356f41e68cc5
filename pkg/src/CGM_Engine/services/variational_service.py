# services/variational_service.py
"""
Euler-Lagrange machinery of the scalar-curvature and Paneitz energies.

Everything here is pointwise on a batch of chart points except the weak
conservation residual, which integrates over the atlas. The E_Y, C_Y and
Euler-Lagrange quantities need order-6 jets; the metric stress balance of
the tangential part of E_Y needs order 7.

    E_Y = 16/3 Delta_4 Y + 2 P_g Y + 4 |det_g(A_ring)| tr_{g_bar} B
    V   = -grad Delta Y + 2/3 Scal grad Y - 2 Ric grad Y - 8/3 |grad Y|^2 grad Y
    C_Y(Mdot)^i = 2 [<Mdot Y, V^i - 2 |det_g(A_ring)| (grad^{g_bar} Y)^i> + <Mdot (grad Y)^i, Delta Y>]

and <Mdot Y, E_Y> + div_g C_Y(Mdot) = 0 for every Mdot in so(6,1). Along the
surface <d_l Y, E_Y> sqrt(det g) = 2 g_lj nabla_i T^{ij}, T the metric
Euler-Lagrange density of the Paneitz energy.
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from CGM_Engine.calculus.jets import Jet, jet_einsum, n_coefficients, stack
from CGM_Engine.calculus.minkowski import so61_residual, wedge
from CGM_Engine.exceptions import GeometryError, UnsupportedHypothesisError
from CGM_Engine.geometry.conformal_gauss import CgmFrame, cgm_basic, eta_pair
from CGM_Engine.geometry.covariant import (
    christoffel_from_metric,
    divergence,
    hessian,
    laplacian,
    raise_first,
    ricci_from_riemann,
    riemann_from_christoffel,
    scalar_from_ricci,
)
from CGM_Engine.geometry.hypersurface import ShapeData, relative_residual, volume_density
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import ErrorTypes, GeometryMessages, format_message
from CGM_Engine.services.energy_service import (
    grad_y_upper,
    laplace_y,
    paneitz_flux,
    paneitz_operator,
)
from CGM_Engine.surfaces.quadrature import NodeContext, integrate_many
from models.chart_map import ChartMap, chart_jet
from models.surface_atlas import SurfaceAtlas

logger = get_logger(__name__)

HIGH_ORDER = 6


# ----------------------------------------------------------------------
# G vector of the scalar-curvature energy
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class GVector:
    G: Jet
    nu_G: np.ndarray
    nu_G_closed: np.ndarray
    residuals: Dict[str, np.ndarray]


def _bar_contraction(frame: CgmFrame, T: Jet, S: Jet) -> Jet:
    """g_bar^{ia} g_bar^{jb} T_ij S_ab... (S may carry one ambient axis)."""
    raised = jet_einsum("ia,jb->ijab", frame.g_bar_inv, frame.g_bar_inv)
    upper = jet_einsum("ijab,ij->ab", raised, T)
    if len(S.shape) == 3:
        return jet_einsum("ab,abu->u", upper, S)
    return jet_einsum("ab,ab->", upper, S)


def _g_coefficient(frame: CgmFrame) -> Jet:
    """Scal_{g_bar}/2 - 3(2 - eps)."""
    return 0.5 * frame.scal_bar_christoffel - 3.0 * (2.0 - frame.epsilon)


def g_vector(frame: CgmFrame) -> GVector:
    """G = -<Ric_{g_bar}, B>_{g_bar} + 4 (Scal_{g_bar}/2 - 3(2 - eps)) b.

    Residuals: <nu, G> against -<Ric_{g_bar}, A_ring> + tr_{g_bar} A_ring (Scal/2 - 3(2 - eps)),
    orthogonality of G to Y and dY, and tr_{g_bar} A_ring = tr A_ring^3 / (3 det A_ring).
    """
    frame.sd.phi.require(4, "g_vector")
    coefficient = _g_coefficient(frame)
    G = -_bar_contraction(frame, frame.ric_bar, frame.B) + 4.0 * coefficient * frame.b_vec
    nu_G = eta_pair("a,a->", frame.nu, G).value
    ricci_term = _bar_contraction(frame, frame.ric_bar, frame.sd.A_ring).value
    trace = frame.tr_bar_a_ring.value
    closed = -ricci_term + trace * coefficient.value
    g_values = G.value
    tangent = np.abs(eta_pair("ia,a->i", frame.dY, G).value)
    scale = np.maximum(1.0, np.max(np.abs(g_values), axis=1) * np.max(np.abs(frame.dY.value), axis=(1, 2)))
    y_pair = np.abs(eta_pair("a,a->", frame.Y, G).value)
    sd = frame.sd
    trace_closed = sd.tr3.value / (3.0 * frame.det_a.value)
    residuals = {
        "g_nu": relative_residual((nu_G - closed)[:, None], nu_G[:, None], ricci_term[:, None], closed[:, None]),
        "g_normal": np.maximum(np.max(tangent, axis=1), y_pair) / scale,
        "tr_bar": relative_residual((trace - trace_closed)[:, None], trace[:, None]),
    }
    return GVector(G=G, nu_G=nu_G, nu_G_closed=closed, residuals=residuals)


def el_residual_S(frame: CgmFrame) -> np.ndarray:
    """Absolute value of the pointwise Euler-Lagrange expression of S (order 6)."""
    sd = frame.sd
    sd.phi.require(HIGH_ORDER, "el_residual_S")
    G = g_vector(frame).G
    nu_G = eta_pair("a,a->", frame.nu, G)
    nu_star = frame.nu_star
    det = frame.det_a
    grad_norm2 = sd.a_ring_norm2
    first = frame.epsilon * (eta_pair("a,a->", nu_star, G) - 0.25 * frame.nu_nu_star * grad_norm2 * nu_G) * det
    weighted = det * nu_G
    second = eta_pair("a,a->", laplacian(weighted * frame.nu, sd.gamma, sd.g_inv), nu_star)
    third = eta_pair("a,a->", divergence(nu_G * raise_first(frame.dnu, sd.g_inv), sd.gamma), nu_star)
    direction = weighted * jet_einsum("kl,l->k", sd.a_mixed, frame.grad_bar_H)
    fourth = eta_pair("a,a->", divergence(jet_einsum("k,a->ka", direction, frame.nu), sd.gamma), nu_star)
    value = first - 0.25 * second + 0.5 * third - fourth
    return np.abs(value.value)


# ----------------------------------------------------------------------
# Paneitz Euler-Lagrange field
# ----------------------------------------------------------------------
def _on_regular(sd: ShapeData, build: Callable[[CgmFrame], Jet], order: int, shape: tuple) -> Jet:
    """Evaluate a det-weighted field on the points where A_ring is invertible; zero elsewhere."""
    regular = np.flatnonzero(~sd.singular_mask)
    if regular.size == sd.batch:
        return build(cgm_basic(sd))
    coeffs = np.zeros((n_coefficients(order), sd.batch) + shape)
    if regular.size:
        sub = cgm_basic(ShapeData(sd.phi.select(regular), sd.normal_sign))
        part = build(sub).truncate(order)
        coeffs[:, regular] = part.coeffs
    return Jet(coeffs, order)


@dataclass(frozen=True)
class EyField:
    E_Y: Jet
    V: Jet
    lap_Y: Jet
    grad_Y: Jet
    det_grad_bar_Y: Jet
    P_Y: Jet
    lap4_Y: Jet

    def noether_flux(self, frame: CgmFrame, Mdot: np.ndarray) -> Jet:
        """C_Y(Mdot)^i as a jet of shape (4,)."""
        Mdot = np.asarray(Mdot, dtype=float)
        my = jet_einsum("a,ba->b", frame.Y, Mdot)
        mgrad = jet_einsum("ia,ba->ib", self.grad_Y, Mdot)
        first = eta_pair("a,ia->i", my, self.V - 2.0 * self.det_grad_bar_Y)
        second = eta_pair("ia,a->i", mgrad, self.lap_Y)
        return 2.0 * (first + second)

    def wedge_field(self, frame: CgmFrame) -> np.ndarray:
        """C_Y^i = 2 [Y ^ (V^i - 2 |det| grad^{g_bar} Y^i) + grad^i Y ^ Delta Y] at the base points."""
        Y = frame.Y.value[:, None, :]
        first = wedge(np.broadcast_to(Y, self.V.value.shape), (self.V - 2.0 * self.det_grad_bar_Y).value)
        second = wedge(self.grad_Y.value, np.broadcast_to(self.lap_Y.value[:, None, :], self.grad_Y.value.shape))
        return 2.0 * (first + second)


def ey_field(frame: CgmFrame) -> EyField:
    """E_Y, V and the pieces of C_Y.

    The det-weighted terms carry |det_g A_ring| (16 |det| b = 4 |det| tr_{g_bar} B)
    and vanish where A_ring is singular.
    """
    sd = frame.sd
    sd.phi.require(HIGH_ORDER, "ey_field")
    upper = grad_y_upper(frame)
    lap = laplace_y(frame)
    grad_norm2 = jet_einsum("ij,ij->", sd.g_inv, frame.g_bar_gram)
    quartic = grad_norm2 * upper
    V = -raise_first(lap.gradient(), sd.g_inv) + paneitz_flux(frame) - (8.0 / 3.0) * quartic
    lap4 = divergence(quartic, sd.gamma)
    P_Y = paneitz_operator(frame)
    det_b = _on_regular(sd, lambda f: (f.det_a * f.epsilon) * f.b_vec, 0, (7,))
    det_grad_bar = _on_regular(
        sd, lambda f: (f.det_a * f.epsilon) * jet_einsum("ij,ja->ia", f.g_bar_inv, f.dY), sd.order - 3, (4, 7)
    )
    E_Y = (16.0 / 3.0) * lap4 + 2.0 * P_Y + 16.0 * det_b
    return EyField(E_Y=E_Y, V=V, lap_Y=lap, grad_Y=upper, det_grad_bar_Y=det_grad_bar, P_Y=P_Y, lap4_Y=lap4)


def noether_residual(frame: CgmFrame, field: EyField, Mdot: np.ndarray) -> np.ndarray:
    """<Mdot Y, E_Y> + div_g C_Y(Mdot), relative to its terms."""
    if so61_residual(Mdot) > 1e-12:
        raise ValueError("Generator is not in so(6,1)")
    my = jet_einsum("a,ba->b", frame.Y, np.asarray(Mdot, dtype=float))
    source = eta_pair("a,a->", my, field.E_Y).value
    flux = divergence(field.noether_flux(frame, Mdot), frame.sd.gamma).value
    return relative_residual((source + flux)[:, None], source[:, None], flux[:, None])


def tangent_residual(frame: CgmFrame, field: EyField) -> np.ndarray:
    """|<d_i Y, E_Y>| normalized by |E_Y| |dY|; zero where the metric stress is divergence free."""
    pairing = eta_pair("ia,a->i", frame.dY, field.E_Y).value
    scale = np.maximum(
        1e-300, np.max(np.abs(field.E_Y.value), axis=1) * np.max(np.abs(frame.dY.value), axis=(1, 2))
    )
    return np.max(np.abs(pairing), axis=1) / np.maximum(scale, 1e-12)


@dataclass(frozen=True)
class EyNuResult:
    nu_E: np.ndarray
    predicted: np.ndarray
    X: np.ndarray
    residual: np.ndarray


def ey_nu_residual(frame: CgmFrame, field: Optional[EyField] = None) -> EyNuResult:
    """<nu, E_Y> against 4 div X + (-4 + 4 eps / 3) tr_g A_ring^3, X^i = g^{ia} A_ring^{jk} <d_a nu, nabla^2_jk nu>.

    eps = sign det_g A_ring, taken as 0 where A_ring is singular (the det term
    of E_Y is switched off there).
    """
    sd = frame.sd
    field = field or ey_field(frame)
    eps = np.where(sd.singular_mask, 0.0, frame.epsilon)
    nu_E = eta_pair("a,a->", frame.nu, field.E_Y).value
    hess_nu = hessian(frame.nu, sd.gamma)
    a_upper = jet_einsum("ij,jk->ik", sd.a_mixed, sd.g_inv)
    contracted = eta_pair("jku,au->jka", hess_nu, frame.dnu)
    X = raise_first(jet_einsum("jk,jka->a", a_upper, contracted), sd.g_inv)
    div_X = divergence(X, sd.gamma).value
    predicted = 4.0 * div_X + (-4.0 + 4.0 * eps / 3.0) * sd.tr3.value
    residual = relative_residual((nu_E - predicted)[:, None], nu_E[:, None], predicted[:, None])
    return EyNuResult(nu_E=nu_E, predicted=predicted, X=X.value, residual=residual)


# ----------------------------------------------------------------------
# metric stress of the Paneitz energy
# ----------------------------------------------------------------------
STRESS_ORDER = HIGH_ORDER + 1
STRESS_STEP = 1e-4
STRESS_BATCH = 2

# () value, (k,) first and (k, l) second derivatives of a metric variation
_SLOTS = [()] + [(k,) for k in range(4)] + [(k, l) for k in range(4) for l in range(k, 4)]


def paneitz_density(Y: Jet, metric: Jet) -> Jet:
    """(|Delta Y|^2 + 2/3 Scal |grad Y|^2 - 2 Ric(grad Y, grad Y) - 4/3 |grad Y|^4) sqrt(det metric).

    Y and the metric are independent here. Its Y-variation under the induced
    metric is 2 P_g Y + 16/3 Delta_4 Y. The result has order min(Y, metric) - 2.
    """
    inverse = metric.inverse_matrix()
    gamma = christoffel_from_metric(metric, inverse)
    ric = ricci_from_riemann(riemann_from_christoffel(gamma, metric), inverse)
    dY = Y.gradient()
    gram = eta_pair("ia,ja->ij", dY, dY)
    lap = laplacian(Y, gamma, inverse)
    grad_norm2 = jet_einsum("ij,ij->", inverse, gram)
    ric_upper = jet_einsum("ib,bj->ij", jet_einsum("ia,ab->ib", inverse, ric), inverse)
    density = (
        eta_pair("a,a->", lap, lap)
        + (2.0 / 3.0) * scalar_from_ricci(ric, inverse) * grad_norm2
        - 2.0 * jet_einsum("ij,ij->", ric_upper, gram)
        - (4.0 / 3.0) * grad_norm2 * grad_norm2
    )
    return density * volume_density(metric)


def _tile(jet: Jet, copies: int) -> Jet:
    return Jet(np.concatenate([jet.coeffs] * copies, axis=1), jet.order)


def _slot_monomials(batch: int, order: int) -> List[Jet]:
    """(u - x)^alpha / alpha! around every base point x, one per slot."""
    s = Jet.variables(np.zeros((batch, 4)), order)
    monomials = []
    for slot in _SLOTS:
        if not slot:
            monomials.append(Jet.constant(np.ones(batch), order))
        elif len(slot) == 1:
            monomials.append(s[slot[0]])
        else:
            k, l = slot
            monomials.append(s[k] * s[l] * (0.5 if k == l else 1.0))
    return monomials


def _euler_lagrange(slopes: Dict[tuple, Jet]) -> Jet:
    """c0 - d_k c^k + d_k d_l c^{kl} from the slopes of the density along each slot monomial."""
    c0 = slopes[()]
    s = Jet.variables(np.zeros((c0.batch, 4)), c0.order)
    first = {k: slopes[(k,)] - c0 * s[k] for k in range(4)}
    result = c0
    for k in range(4):
        result = result - first[k].derivative(k)
    for k, l in _SLOTS[5:]:
        monomial = s[k] * s[l] * (0.5 if k == l else 1.0)
        c = slopes[(k, l)] - c0 * monomial - first[k] * s[l]
        if k != l:
            c = c - first[l] * s[k]
        result = result + c.derivative(k).derivative(l)
    return result


def metric_stress(Y: Jet, metric: Jet, step: float = STRESS_STEP) -> Jet:
    """
    Euler-Lagrange density T^{ij} of the Paneitz density with respect to the metric.

    Each component is read off central differences in `step` of the density
    under metric variations m(u) e_ij, with m running over the slot monomials;
    the jet coefficients of those slopes give the partial derivatives in h,
    dh and d^2 h. The result is a (4, 4) jet of order metric.order - 4.
    """
    batch, order = metric.batch, metric.order
    monomials = _slot_monomials(batch, order)
    copies = 2 * len(_SLOTS)
    Y_tiled = _tile(Y.truncate(min(Y.order, order)), copies)
    components = {}
    for i in range(4):
        for j in range(i, 4):
            unit = np.zeros((4, 4))
            unit[i, j] = unit[j, i] = step
            shifted = [
                metric + jet_einsum(",ij->ij", monomial, sign * unit)
                for sign in (1.0, -1.0)
                for monomial in monomials
            ]
            varied = Jet(np.concatenate([h.coeffs for h in shifted], axis=1), order)
            density = paneitz_density(Y_tiled, varied).coeffs
            density = density.reshape((density.shape[0], 2, len(_SLOTS), batch))
            dense_order = order - 2
            slopes = {
                slot: Jet((density[:, 0, q] - density[:, 1, q]) / (2.0 * step), dense_order)
                for q, slot in enumerate(_SLOTS)
            }
            value = _euler_lagrange(slopes)
            components[i, j] = components[j, i] = value if i == j else 0.5 * value
    return stack([stack([components[i, j] for j in range(4)]) for i in range(4)])


@dataclass(frozen=True)
class TangentBalance:
    pairing: np.ndarray
    stress: np.ndarray
    residual: np.ndarray


def tangent_balance(sd: ShapeData, step: float = STRESS_STEP) -> TangentBalance:
    """
    <d_l Y, E_Y> against 2 g_lj nabla_i T^{ij} / sqrt(det g).

    Reparametrizations leave the Paneitz energy unchanged, so the tangential
    part of E_Y is the divergence of the metric stress; the det term of E_Y is
    normal to dY and drops out. Residual is relative to |E_Y| |dY|. Needs an
    order-7 chart jet.
    """
    sd.phi.require(STRESS_ORDER, "tangent_balance")
    frame = cgm_basic(ShapeData(sd.phi.truncate(HIGH_ORDER), sd.normal_sign))
    field = ey_field(frame)
    pairing = eta_pair("ia,a->i", frame.dY, field.E_Y).value
    Y = cgm_basic(sd).Y
    stress = metric_stress(Y, sd.g.truncate(STRESS_ORDER - 2), step)
    div = stress.gradient().contract("iij->j") + jet_einsum("jik,ik->j", sd.gamma, stress)
    predicted = 2.0 * np.einsum("blj,bj->bl", sd.g.value, div.value) / sd.sqrt_det_g[:, None]
    scale = np.max(np.abs(field.E_Y.value), axis=1) * np.max(np.abs(frame.dY.value), axis=(1, 2))
    residual = np.max(np.abs(pairing - predicted), axis=1) / np.maximum(scale, 1e-12)
    return TangentBalance(pairing=pairing, stress=predicted, residual=residual)


def tangent_balance_residual(chart: ChartMap, points: np.ndarray, step: float = STRESS_STEP) -> np.ndarray:
    """tangent_balance residual at chart points, STRESS_BATCH points per jet evaluation."""
    parts = []
    for start in range(0, len(points), STRESS_BATCH):
        block = points[start:start + STRESS_BATCH]
        sd = ShapeData(chart_jet(chart, block, STRESS_ORDER), chart.normal_sign)
        parts.append(tangent_balance(sd, step).residual)
    return np.concatenate(parts)


# ----------------------------------------------------------------------
# lcgm identities and the variation constraints
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class LcgmResult:
    alpha_residual: np.ndarray
    beta_residual: np.ndarray


def lcgm_test_identities(frame: CgmFrame, alpha: Jet, beta: Jet) -> LcgmResult:
    """<nu, Delta(a^k d_k nu) - |grad Y|^2 a^k d_k nu> = -2 div a and <nu, Delta(b nu) - |grad Y|^2 b nu> = -4 b.

    alpha is a jet of shape (4,) (upper index) and beta a scalar jet on the same batch.
    """
    sd = frame.sd
    grad_norm2 = sd.a_ring_norm2
    moved = jet_einsum("k,ka->a", alpha, frame.dnu)
    lhs_alpha = eta_pair("a,a->", frame.nu, laplacian(moved, sd.gamma, sd.g_inv) - grad_norm2 * moved).value
    rhs_alpha = -2.0 * divergence(alpha, sd.gamma).value
    scaled = beta * frame.nu
    lhs_beta = eta_pair("a,a->", frame.nu, laplacian(scaled, sd.gamma, sd.g_inv) - grad_norm2 * scaled).value
    rhs_beta = -4.0 * beta.value
    return LcgmResult(
        alpha_residual=relative_residual((lhs_alpha - rhs_alpha)[:, None], lhs_alpha[:, None], rhs_alpha[:, None]),
        beta_residual=relative_residual((lhs_beta - rhs_beta)[:, None], lhs_beta[:, None], rhs_beta[:, None]),
    )


def _constraints(base: CgmFrame, Z: Jet):
    """|<nu, Delta Z - |grad Y|^2 Z>| and max_i |<nu, d_i Z>| per point, relative."""
    sd = base.sd
    second = eta_pair("a,a->", base.nu, laplacian(Z, sd.gamma, sd.g_inv) - sd.a_ring_norm2 * Z).value
    first = eta_pair("ia,a->i", Z.gradient(), base.nu).value
    scale = np.maximum(1.0, np.max(np.abs(Z.value), axis=1))
    return np.abs(second) / scale, np.max(np.abs(first), axis=1) / scale


def _normal_push(chart: ChartMap, points: np.ndarray, r: Callable[[Jet], Jet], t: float) -> ShapeData:
    phi = chart_jet(chart, points, 5)
    sd = ShapeData(phi, chart.normal_sign)
    u = Jet.variables(points, 4)
    pushed = phi.truncate(4) + t * r(u) * sd.n
    return ShapeData(pushed, chart.normal_sign)


def variation_constraint_check(
    atlas: SurfaceAtlas,
    r: Callable[[Jet], Jet],
    dt: float,
    points_per_chart: int = 8,
    seed: int = 0,
    margin: float = 1e-2,
) -> Dict[str, float]:
    """Constraints on the central difference Ydot of Y along Phi_t = Phi + t r n.

    r maps the coordinate jet u (shape (4,)) to a scalar jet. Returns the max
    of both constraint residuals over seeded sample points.
    """
    rng = np.random.default_rng(seed)
    worst_lap, worst_grad = 0.0, 0.0
    for chart in atlas.charts:
        points = chart.sample(rng, points_per_chart, margin)
        base = cgm_basic(ShapeData(chart_jet(chart, points, 4), chart.normal_sign))
        plus = cgm_basic(_normal_push(chart, points, r, dt))
        minus = cgm_basic(_normal_push(chart, points, r, -dt))
        Z = (plus.Y - minus.Y) * (0.5 / dt)
        lap_part, grad_part = _constraints(base, Z)
        worst_lap = max(worst_lap, float(np.max(lap_part)))
        worst_grad = max(worst_grad, float(np.max(grad_part)))
    return {"laplacian_constraint": worst_lap, "gradient_constraint": worst_grad}


def richardson_ratio(atlas: SurfaceAtlas, r: Callable[[Jet], Jet], dt: float, **kwargs) -> Dict[str, float]:
    """Ratio of constraint residuals at dt and dt/2 (about 4 for a second-order difference)."""
    coarse = variation_constraint_check(atlas, r, dt, **kwargs)
    fine = variation_constraint_check(atlas, r, dt / 2.0, **kwargs)
    ratios = {}
    for key in coarse:
        ratios[key] = coarse[key] / fine[key] if fine[key] > 0 else float("nan")
    return {"coarse": coarse, "fine": fine, "ratio": ratios}


# ----------------------------------------------------------------------
# weak conservation law
# ----------------------------------------------------------------------
def gaussian_cutoff(center: np.ndarray, width: float) -> Callable[[Jet], Jet]:
    """chi(x) = exp(-|x - c|^2 / (2 width^2)) composed with the chart."""
    center = np.asarray(center, dtype=float)

    def cutoff(phi: Jet) -> Jet:
        shifted = phi - center
        return (jet_einsum("a,a->", shifted, shifted) * (-0.5 / width ** 2)).exp()

    return cutoff


def _conservation_fields(Mdot: np.ndarray, cutoff: Callable[[Jet], Jet]):
    Mdot = np.asarray(Mdot, dtype=float)

    def pieces(context: NodeContext):
        cached = context.__dict__.get("_conservation")
        if cached is not None:
            return cached
        frame = context.frame
        sd = frame.sd
        field = ey_field(frame)
        my = jet_einsum("a,ba->b", frame.Y, Mdot)
        my_nu = eta_pair("a,a->", my, frame.nu)
        nu_E = eta_pair("a,a->", frame.nu, field.E_Y)
        grad_nu_E = eta_pair("ia,a->i", frame.dnu, field.E_Y)
        flux = field.noether_flux(frame, Mdot)
        Q = (
            0.5 * nu_E * raise_first(my_nu.gradient(), sd.g_inv)
            - my_nu * raise_first(grad_nu_E, sd.g_inv)
            - flux
        )
        chi = cutoff(sd.phi)
        weak = -jet_einsum("i,i->", chi.gradient(), Q).value - 0.25 * (
            laplacian(chi, sd.gamma, sd.g_inv) * my_nu * nu_E
        ).value
        div_flux = divergence(flux, sd.gamma).value
        source = eta_pair("a,a->", my, field.E_Y).value
        noether = relative_residual((source + div_flux)[:, None], source[:, None], div_flux[:, None])
        context.__dict__["_conservation"] = (weak, div_flux, noether)
        return weak, div_flux, noether

    return pieces


def conservation_residual(
    atlas: SurfaceAtlas,
    Mdot: np.ndarray,
    level: int,
    center: Optional[np.ndarray] = None,
    width: float = 1.0,
    executor=None,
) -> Dict[str, float]:
    """Weak conservation residual against a Gaussian cutoff, the flux of div C_Y and the worst Noether residual."""
    if not atlas.closed:
        raise UnsupportedHypothesisError(
            format_message(GeometryMessages.OPEN_SURFACE, operation="conservation", surface=atlas.name)
        )
    if so61_residual(Mdot) > 1e-12:
        raise ValueError("Generator is not in so(6,1)")
    if center is None:
        chart = atlas.charts[0]
        center = chart.evaluate(0.5 * (chart.lower + chart.upper)[None])[0]
    pieces = _conservation_fields(Mdot, gaussian_cutoff(center, width))
    worst = []

    def weak(context):
        return pieces(context)[0]

    def flux(context):
        _, div_flux, noether = pieces(context)
        worst.append(float(np.max(noether)))
        return div_flux

    values = integrate_many({"weak": weak, "flux": flux}, atlas, level, HIGH_ORDER, executor, estimate_error=False)
    return {
        "weak": values["weak"].value,
        "flux": values["flux"].value,
        "noether_max": max(worst) if worst else 0.0,
    }


def variational_summary(frame: CgmFrame, Mdot: np.ndarray) -> Dict[str, Any]:
    """
    Pointwise Euler-Lagrange diagnostics for the CLI.

    Returns:
        {"success": bool, "message": str, "residuals": dict, "error_type": str (only on failure)}
    """
    try:
        field = ey_field(frame)
        residuals = {
            "noether": noether_residual(frame, field, Mdot),
            "ey_nu": ey_nu_residual(frame, field).residual,
            "ey_tangent_raw": tangent_residual(frame, field),
        }
        if frame.sd.order >= STRESS_ORDER:
            residuals["ey_tangent"] = tangent_balance(frame.sd).residual
        return {"success": True, "message": "Euler-Lagrange residuals evaluated.", "residuals": residuals}
    except GeometryError as e:
        logger.warning(f"Euler-Lagrange diagnostics failed: {e}")
        return {"success": False, "message": str(e), "residuals": {}, "error_type": ErrorTypes.SINGULARITY}
