"""The conformal Gauss map Y of a hypersurface and its dual null frame.

    nu = (Phi, (|Phi|^2 - 1)/2, (|Phi|^2 + 1)/2)          null lift of Phi
    Y  = H nu + (n, <n, Phi>, <n, Phi>)                     |Y|^2_eta = 1
    d_i Y = (d_i H) nu - A_ring_i^l d_l nu
    g_bar = Y^* eta = A_ring g^{-1} A_ring

Where A_ring is invertible and f = H^2 + |grad H|^2_{g_bar} > 0, the normal
bundle of Y in de Sitter space is spanned by nu and nu* = lift(Phi*), with

    Phi* = Phi + (2H/f) n - (2/f) (A_ring^{-1})^{ki} d_i H d_k Phi,
    <nu, nu*>_eta = -2/f,

and the second fundamental form of Y splits as B = B^nu nu + B^* nu*.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from CGM_Engine.calculus.jets import Jet, concatenate, jet_einsum
from CGM_Engine.calculus.minkowski import ETA_DIAGONAL
from CGM_Engine.exceptions import DegeneracyError, SingularityError
from CGM_Engine.geometry.covariant import ricci_from_riemann, riemann_from_christoffel, scalar_from_ricci
from CGM_Engine.geometry.hypersurface import ShapeData, relative_residual
from CGM_Engine.messages import GeometryMessages, format_message
from CGM_Engine.tolerance_rules import FrameRules

NULL_DIRECTION = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0])


def eta_pair(subscripts: str, u: Jet, v: Jet) -> Jet:
    """jet_einsum with eta inserted on the last axis of v."""
    return jet_einsum(subscripts, u, v.apply(lambda c: c * ETA_DIAGONAL))


def null_lift(x: Jet) -> Jet:
    """(x, (|x|^2 - 1)/2, (|x|^2 + 1)/2) for a jet of points of R^5."""
    q = jet_einsum("a,a->", x, x)
    return concatenate([x, ((q - 1.0) * 0.5).reshape(1), ((q + 1.0) * 0.5).reshape(1)])


class CgmFrame:
    """Conformal Gauss map frame over the batch of a ShapeData.

    Y, dY, nu, g_bar, det_a and epsilon exist for every immersion. The
    dual fields (a_ring_inverse, f, phi_star, nu_star) and everything built
    on them raise SingularityError / DegeneracyError at umbilic points or
    where f falls below its tolerance.
    """

    def __init__(self, sd: ShapeData):
        sd.phi.require(3, "cgm_basic")
        self.sd = sd
        phi = sd.phi
        self.nu = null_lift(phi)
        normal_height = jet_einsum("a,a->", sd.n, phi)
        self.Y = sd.H * self.nu + concatenate([sd.n, normal_height.reshape(1), normal_height.reshape(1)])
        self.dY = self.Y.gradient()
        self.dnu = self.nu.gradient()
        self.g_bar = jet_einsum("ik,kj->ij", sd.A_ring, sd.a_mixed)
        self.det_a = sd.det_a_ring
        self.epsilon = np.sign(np.linalg.det(sd.a_mixed.value))

    @property
    def batch(self) -> int:
        return self.sd.batch

    # ------------------------------------------------------------------
    # basic relations
    # ------------------------------------------------------------------
    @cached_property
    def g_bar_gram(self) -> Jet:
        """<d_i Y, d_j Y>_eta."""
        return eta_pair("ia,ja->ij", self.dY, self.dY)

    @cached_property
    def dY_closed(self) -> Jet:
        """(d_i H) nu - A_ring_i^l d_l nu."""
        sd = self.sd
        lowered_mixed = jet_einsum("ik,kl->il", sd.A_ring, sd.g_inv)
        return jet_einsum("i,a->ia", sd.grad_H, self.nu) - jet_einsum("il,la->ia", lowered_mixed, self.dnu)

    def basic_residuals(self) -> dict:
        """Per-point residuals of the orthogonality relations and of g_bar = A_ring^2."""
        Y = self.Y.value
        nu = self.nu.value
        dY = self.dY.value
        eta = ETA_DIAGONAL
        y_norm = np.einsum("ba,ba->b", Y * eta, Y) - 1.0
        y_nu = np.einsum("ba,ba->b", Y * eta, nu)
        dy_nu = np.einsum("bia,ba->bi", dY * eta, nu)
        nu_norm = np.einsum("ba,ba->b", nu * eta, nu)
        relations = np.max(np.abs(np.stack([y_norm, y_nu, nu_norm], axis=1)), axis=1)
        scale = np.maximum(1.0, np.max(np.abs(nu), axis=1) * np.max(np.abs(Y), axis=1))
        relations = np.maximum(relations, np.max(np.abs(dy_nu), axis=1) / scale)
        g_bar = self.g_bar.value
        gram = self.g_bar_gram.value
        dy_closed = self.dY_closed.value
        return {
            "frame_relations": relations,
            "g_bar": relative_residual(gram - g_bar, g_bar),
            "dy_closed_form": relative_residual(dY - dy_closed, dY),
        }

    # ------------------------------------------------------------------
    # dual null frame
    # ------------------------------------------------------------------
    @cached_property
    def a_ring_inverse(self) -> Jet:
        """(A_ring^{-1})^{ij}; raises SingularityError near umbilic points."""
        sd = self.sd
        if np.any(sd.singular_mask):
            k = int(np.argmax(sd.singular_mask))
            raise SingularityError(
                format_message(GeometryMessages.UMBILIC_POINT, node=k), det=float(sd.det_a_ring.value[k])
            )
        return sd.A_ring.inverse_matrix()

    @cached_property
    def g_bar_inv(self) -> Jet:
        inv = self.a_ring_inverse
        return jet_einsum("il,lj->ij", jet_einsum("ik,kl->il", inv, self.sd.g), inv)

    @cached_property
    def grad_bar_H(self) -> Jet:
        """(nabla^{g_bar} H)^k = g_bar^{kj} d_j H."""
        return jet_einsum("kj,j->k", self.g_bar_inv, self.sd.grad_H)

    @cached_property
    def f(self) -> Jet:
        sd = self.sd
        f = sd.H * sd.H + jet_einsum("k,k->", self.grad_bar_H, sd.grad_H)
        tolerance = FrameRules.f_tolerance(sd.a_ring_norm2.value)
        bad = f.value <= tolerance
        if np.any(bad):
            k = int(np.argmax(bad))
            raise DegeneracyError(
                format_message(GeometryMessages.F_DEGENERATE, f=float(f.value[k]), tolerance=float(tolerance[k]))
            )
        return f

    @cached_property
    def f_inverse(self) -> Jet:
        return self.f.reciprocal()

    @cached_property
    def phi_star(self) -> Jet:
        sd = self.sd
        direction = jet_einsum("ki,i->k", self.a_ring_inverse, sd.grad_H)
        tangential = jet_einsum("k,ka->a", direction, sd.dphi)
        return sd.phi + 2.0 * sd.H * self.f_inverse * sd.n - 2.0 * self.f_inverse * tangential

    @cached_property
    def nu_star(self) -> Jet:
        return null_lift(self.phi_star)

    @cached_property
    def nu_nu_star(self) -> Jet:
        return eta_pair("a,a->", self.nu, self.nu_star)

    # ------------------------------------------------------------------
    # second fundamental form of Y
    # ------------------------------------------------------------------
    @cached_property
    def ddY(self) -> Jet:
        self.sd.phi.require(4, "second_form_Y")
        return self.dY.gradient()

    @cached_property
    def nu_component(self) -> Jet:
        """<d_ij Y, nu>_eta (equals A_ring_ij)."""
        return eta_pair("ija,a->ij", self.ddY, self.nu)

    @cached_property
    def a_ring_inverse_mixed(self) -> Jet:
        """(A_ring^{-1})^k_i = (A_ring^{-1})^{km} g_mi."""
        return jet_einsum("km,mi->ki", self.a_ring_inverse, self.sd.g)

    @cached_property
    def gamma_bar(self) -> Jet:
        """Christoffel symbols of g_bar in closed form."""
        sd = self.sd
        t1 = jet_einsum("kb,ijb->kij", self.a_ring_inverse, sd.nabla_A_ring)
        t2 = jet_einsum("k,ij->kij", self.grad_bar_H, sd.A_ring)
        t3 = jet_einsum("ki,j->kij", self.a_ring_inverse_mixed, sd.grad_H)
        return sd.gamma + t1 + t2 - t3

    @cached_property
    def gamma_bar_raw(self) -> Jet:
        """g_bar^{kl} <d_ij Y, d_l Y>_eta."""
        lowered = eta_pair("ija,la->ijl", self.ddY, self.dY)
        return jet_einsum("kl,ijl->kij", self.g_bar_inv, lowered)

    @cached_property
    def hess_bar_H(self) -> Jet:
        sd = self.sd
        return sd.grad_H.gradient() - jet_einsum("kij,k->ij", self.gamma_bar, sd.grad_H)

    @cached_property
    def B_star(self) -> Jet:
        return -0.5 * self.f * self.sd.A_ring

    @cached_property
    def B_nu(self) -> Jet:
        return self.hess_bar_H + self.sd.H * self.g_bar + 0.5 * self.f * self.sd.A_ring

    @cached_property
    def B_star_raw(self) -> Jet:
        return self.nu_component / self.nu_nu_star

    @cached_property
    def B_nu_raw(self) -> Jet:
        return eta_pair("ija,a->ij", self.ddY, self.nu_star) / self.nu_nu_star

    @cached_property
    def B(self) -> Jet:
        """B_ij as a vector of R^{6,1}: B^nu_ij nu + B^*_ij nu*."""
        return jet_einsum("ij,a->ija", self.B_nu, self.nu) + jet_einsum("ij,a->ija", self.B_star, self.nu_star)

    @cached_property
    def b_vec(self) -> Jet:
        """Mean curvature vector 1/4 tr_{g_bar} B."""
        return 0.25 * jet_einsum("ij,ija->a", self.g_bar_inv, self.B)

    @cached_property
    def tr_bar_a_ring(self) -> Jet:
        """tr_{g_bar} A_ring = tr_g A_ring^{-1}."""
        return jet_einsum("ij,ij->", self.g_bar_inv, self.sd.A_ring)

    @cached_property
    def B_norm2(self) -> Jet:
        """|B|^2 = 2 <nu,nu*> g_bar^{ij} g_bar^{kl} B^nu_ik B^*_jl."""
        left = jet_einsum("ij,ik->jk", self.g_bar_inv, self.B_nu)
        left = jet_einsum("kl,jk->jl", self.g_bar_inv, left)
        return 2.0 * self.nu_nu_star * jet_einsum("jl,jl->", left, self.B_star)

    @cached_property
    def b_norm2(self) -> Jet:
        return eta_pair("a,a->", self.b_vec, self.b_vec)

    @cached_property
    def scal_bar_gauss(self) -> Jet:
        return 12.0 - self.B_norm2 + 16.0 * self.b_norm2

    @cached_property
    def riem_bar(self) -> Jet:
        return riemann_from_christoffel(self.gamma_bar, self.g_bar)

    @cached_property
    def ric_bar(self) -> Jet:
        return ricci_from_riemann(self.riem_bar, self.g_bar_inv)

    @cached_property
    def scal_bar_christoffel(self) -> Jet:
        return scalar_from_ricci(self.ric_bar, self.g_bar_inv)

    @cached_property
    def sqrt_det_g_bar(self) -> np.ndarray:
        return np.abs(self.det_a.value) * self.sd.sqrt_det_g

    def __repr__(self):
        return f"CgmFrame(batch={self.batch}, order={self.sd.order})"


# ----------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------
def cgm_basic(sd: ShapeData) -> CgmFrame:
    """Y, dY, nu, g_bar, det A_ring and its sign (no invertibility needed)."""
    return CgmFrame(sd)


@dataclass(frozen=True)
class DualFrame:
    phi_star: Jet
    nu_star: Jet
    f: Jet
    residuals: dict


def dual_null_frame(frame: CgmFrame) -> DualFrame:
    """Phi*, nu*, f and the residuals of <nu,nu*> = -2/f, <Y,nu*> = 0, <dY,nu*> = 0, |nu*|^2 = 0."""
    nu_star = frame.nu_star.value
    f = frame.f.value
    eta = ETA_DIAGONAL
    pairing = frame.nu_nu_star.value
    expected = -2.0 / f
    normalization = np.abs(pairing - expected) / np.maximum(np.abs(expected), 1.0)
    scale = np.maximum(1.0, np.max(np.abs(nu_star), axis=1))
    y_star = np.abs(np.einsum("ba,ba->b", frame.Y.value * eta, nu_star)) / scale
    dy_star = np.max(np.abs(np.einsum("bia,ba->bi", frame.dY.value * eta, nu_star)), axis=1) / (
        scale * np.maximum(1.0, np.max(np.abs(frame.dY.value), axis=(1, 2)))
    )
    null = np.abs(np.einsum("ba,ba->b", nu_star * eta, nu_star)) / scale ** 2
    residuals = {
        "nu_nu_star": normalization,
        "dual_relations": np.maximum(np.maximum(y_star, dy_star), null),
    }
    return DualFrame(phi_star=frame.phi_star, nu_star=frame.nu_star, f=frame.f, residuals=residuals)


@dataclass(frozen=True)
class SecondForm:
    B_star: Jet
    B_nu: Jet
    b_vec: Jet
    residuals: dict


def second_form_Y(frame: CgmFrame) -> SecondForm:
    """Closed forms of B^*, B^nu against the raw jets, and <d_ij Y, nu> = A_ring_ij."""
    b_star = frame.B_star.value
    b_nu = frame.B_nu.value
    raw_star = frame.B_star_raw.value
    raw_nu = frame.B_nu_raw.value
    closed = np.maximum(
        relative_residual(raw_star - b_star, raw_star, b_star),
        relative_residual(raw_nu - b_nu, raw_nu, b_nu),
    )
    a_ring = frame.sd.A_ring.value
    nu_component = relative_residual(frame.nu_component.value - a_ring, a_ring)
    trace_b = jet_einsum("ij,ija->a", frame.g_bar_inv, frame.B).value
    four_b = 4.0 * frame.b_vec.value
    gamma_closed = frame.gamma_bar.value
    gamma_raw = frame.gamma_bar_raw.value
    residuals = {
        "b_closed": np.maximum(closed, relative_residual(trace_b - four_b, trace_b)),
        "nu_component": nu_component,
        "gamma_bar": relative_residual(gamma_raw - gamma_closed, gamma_raw, gamma_closed),
    }
    return SecondForm(B_star=frame.B_star, B_nu=frame.B_nu, b_vec=frame.b_vec, residuals=residuals)


@dataclass(frozen=True)
class ScalBar:
    gauss: np.ndarray
    christoffel: np.ndarray
    residual: np.ndarray
    norm_residual: np.ndarray


def scal_bar(frame: CgmFrame) -> ScalBar:
    """Scal_{g_bar} = 12 - |B|^2 + 16|b|^2 against the Christoffel route."""
    gauss = frame.scal_bar_gauss.value
    christoffel = frame.scal_bar_christoffel.value
    residual = relative_residual((gauss - christoffel)[:, None], gauss[:, None], christoffel[:, None])
    # |B|^2 from the closed norm formula
    g_bar_inv = frame.g_bar_inv.value
    a_ring = frame.sd.A_ring.value
    hess = frame.hess_bar_H.value
    bar_pair = lambda X, Z: np.einsum("bia,bjc,bij,bac->b", g_bar_inv, g_bar_inv, X, Z)
    closed = 2.0 * (bar_pair(a_ring, hess) + frame.sd.H.value * frame.tr_bar_a_ring.value) + frame.f.value * bar_pair(
        a_ring, a_ring
    )
    vector = eta_pair("ija,ija->", _raise_pair(frame), frame.B).value
    contraction = frame.B_norm2.value
    norm_residual = np.maximum(
        relative_residual((closed - contraction)[:, None], closed[:, None], contraction[:, None]),
        relative_residual((vector - contraction)[:, None], vector[:, None], contraction[:, None]),
    )
    return ScalBar(gauss=gauss, christoffel=christoffel, residual=residual, norm_residual=norm_residual)


def _raise_pair(frame: CgmFrame) -> Jet:
    """B^{ij} with both indices raised by g_bar."""
    raised = jet_einsum("ia,ajc->ijc", frame.g_bar_inv, frame.B)
    return jet_einsum("jb,ibc->ijc", frame.g_bar_inv, raised)


@dataclass(frozen=True)
class OrientationResult:
    det: np.ndarray
    predicted: np.ndarray
    residual: np.ndarray


def orientation_det(frame: CgmFrame) -> OrientationResult:
    """det[Y, d_1Y, ..., d_4Y, nu, (0,...,0,1,1)] against -sign * det_g A_ring * sqrt(det g)."""
    Y = frame.Y.value
    dY = frame.dY.value
    nu = frame.nu.value
    columns = [Y] + [dY[:, i] for i in range(4)] + [nu, np.broadcast_to(NULL_DIRECTION, Y.shape)]
    matrix = np.stack(columns, axis=-1)
    det = np.linalg.det(matrix)
    predicted = -frame.sd.normal_sign * frame.det_a.value * frame.sd.sqrt_det_g
    scale = np.maximum(np.abs(predicted), 1.0)
    return OrientationResult(det=det, predicted=predicted, residual=np.abs(det - predicted) / scale)
