"""Extrinsic and intrinsic geometry of a hypersurface from the jet of its chart.

Conventions:
    g_ij = <d_i Phi, d_j Phi>
    n = sign * (unit cross product of the four Jacobian columns)
    A_ij = <d_ij Phi, n> = -<d_i Phi, d_j n>
    H = 1/4 tr_g A,  A_ring = A - H g
    Gamma^k_ij = g^kl <d_ij Phi, d_l Phi>

Every field of ShapeData is a Jet over the same batch of base points. A
jet of order K for Phi gives g and n to order K-1, A and Gamma to order
K-2, and each further derivative costs one order.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations

import numpy as np

from CGM_Engine.calculus.jets import Jet, jet_einsum
from CGM_Engine.exceptions import DegeneracyError
from CGM_Engine.geometry.covariant import (
    covariant_derivative,
    hessian,
    ricci_from_riemann,
    riemann_from_christoffel,
    scalar_from_ricci,
)
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import ChartMessages, format_message
from CGM_Engine.tolerance_rules import JetRules, TracelessRules

logger = get_logger(__name__)

DEPTHS = {"basic": 2, "with_derivatives": 3}


def _levi_civita(dim):
    eps = np.zeros((dim,) * dim)
    for perm in permutations(range(dim)):
        inversions = sum(1 for a in range(dim) for b in range(a + 1, dim) if perm[a] > perm[b])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


LEVI_CIVITA_4 = _levi_civita(4)
LEVI_CIVITA_5 = _levi_civita(5)


def volume_density(metric: Jet) -> Jet:
    """sqrt(det metric) as a jet, for any positive definite 4x4 metric jet."""
    t = jet_einsum("abcd,a->bcd", LEVI_CIVITA_4, metric[0])
    t = jet_einsum("bcd,b->cd", t, metric[1])
    t = jet_einsum("cd,c->d", t, metric[2])
    return jet_einsum("d,d->", t, metric[3]).sqrt()


def unit_normal(dphi: Jet, sign: float = 1.0) -> Jet:
    """n_a = eps_{abcde} d_1Phi^b d_2Phi^c d_3Phi^d d_4Phi^e, normalized, times sign."""
    t = jet_einsum("abcde,b->acde", LEVI_CIVITA_5, dphi[0])
    t = jet_einsum("acde,c->ade", t, dphi[1])
    t = jet_einsum("ade,d->ae", t, dphi[2])
    raw = jet_einsum("ae,e->a", t, dphi[3])
    norm2 = jet_einsum("a,a->", raw, raw)
    return raw * norm2.power(-0.5) * float(sign)


def check_immersion(dphi_value: np.ndarray, chart_name: str = "chart", points=None) -> None:
    """Raise DegeneracyError when a Jacobian (batch, 4, 5) loses rank."""
    singular_values = np.linalg.svd(dphi_value, compute_uv=False)
    ratio = singular_values[..., -1] / np.maximum(singular_values[..., 0], 1e-300)
    bad = ratio < JetRules.RANK_RATIO
    if np.any(bad):
        k = int(np.argmax(bad))
        point = None if points is None else np.asarray(points)[k].tolist()
        raise DegeneracyError(
            format_message(ChartMessages.RANK_DEFICIENT, chart=chart_name, point=point, ratio=float(ratio[k])),
            point=point,
        )


class ShapeData:
    """Shape quantities of an immersion over a batch of base points.

    Attributes g, g_inv, n, A, H, A_ring, gamma are computed eagerly; the
    derivative fields (grad_H, hess_H, nabla_A, nabla_A_ring) and curvature
    on first access.
    """

    def __init__(self, phi: Jet, normal_sign: float = 1.0):
        phi.require(2, "shape_data")
        self.phi = phi
        self.normal_sign = float(normal_sign)
        self.dphi = phi.gradient()
        check_immersion(self.dphi.value)
        self.ddphi = self.dphi.gradient()
        self.g = jet_einsum("ia,ja->ij", self.dphi, self.dphi)
        self.g_inv = self.g.inverse_matrix()
        self.n = unit_normal(self.dphi, self.normal_sign)
        self.A = jet_einsum("ija,a->ij", self.ddphi, self.n)
        self.H = 0.25 * jet_einsum("ij,ij->", self.g_inv, self.A)
        self.A_ring = self.A - self.H * self.g
        self.gamma = jet_einsum("kl,ijl->kij", self.g_inv, jet_einsum("ija,la->ijl", self.ddphi, self.dphi))

    @property
    def order(self) -> int:
        return self.phi.order

    @property
    def batch(self) -> int:
        return self.phi.batch

    @cached_property
    def sqrt_det_g(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.g.value))

    # ------------------------------------------------------------------
    # traceless invariants (jets)
    # ------------------------------------------------------------------
    @cached_property
    def a_mixed(self) -> Jet:
        """A_ring^i_j = g^ik A_ring_kj."""
        return jet_einsum("ik,kj->ij", self.g_inv, self.A_ring)

    @cached_property
    def a_mixed_sq(self) -> Jet:
        return jet_einsum("ij,jk->ik", self.a_mixed, self.a_mixed)

    @cached_property
    def a_ring_norm2(self) -> Jet:
        """|A_ring|^2_g = tr_g A_ring^2."""
        return self.a_mixed_sq.contract("ii->")

    @cached_property
    def tr3(self) -> Jet:
        return jet_einsum("ij,ji->", self.a_mixed_sq, self.a_mixed)

    @cached_property
    def tr4(self) -> Jet:
        return jet_einsum("ij,ji->", self.a_mixed_sq, self.a_mixed_sq)

    @cached_property
    def det_a_ring(self) -> Jet:
        """det_g A_ring through 8 det = |A|^4 - 2 tr A^4 (trace-free Cayley-Hamilton)."""
        return (self.a_ring_norm2 * self.a_ring_norm2 - 2.0 * self.tr4) * 0.125

    @cached_property
    def A_norm2(self) -> Jet:
        return self.a_ring_norm2 + 4.0 * self.H * self.H

    @cached_property
    def singular_mask(self) -> np.ndarray:
        """Base points where A_ring is not invertible (umbilic or det_g A_ring below threshold)."""
        norm2 = self.a_ring_norm2.value
        singular = np.abs(self.det_a_ring.value) <= TracelessRules.singular_threshold(norm2)
        return singular | TracelessRules.umbilic(norm2, self.A_norm2.value)

    @cached_property
    def det_A(self) -> np.ndarray:
        """det_g A at the base points."""
        return np.linalg.det(np.linalg.solve(self.g.value, self.A.value))

    # ------------------------------------------------------------------
    # derivative fields
    # ------------------------------------------------------------------
    @cached_property
    def grad_H(self) -> Jet:
        self.phi.require(3, "grad_H")
        return self.H.gradient()

    @cached_property
    def grad_H_norm2(self) -> Jet:
        return jet_einsum("i,i->", jet_einsum("ij,j->i", self.g_inv, self.grad_H), self.grad_H)

    @cached_property
    def hess_H(self) -> Jet:
        self.phi.require(4, "hess_H")
        return hessian(self.H, self.gamma)

    @cached_property
    def nabla_A(self) -> Jet:
        """nabla_i A_jk."""
        self.phi.require(3, "nabla_A")
        return covariant_derivative(self.A, self.gamma)

    @cached_property
    def nabla_A_ring(self) -> Jet:
        """nabla_i A_ring_jk."""
        self.phi.require(3, "nabla_A_ring")
        return covariant_derivative(self.A_ring, self.gamma)

    @cached_property
    def nabla_A_ring_norm2(self) -> Jet:
        raised = jet_einsum("ia,ajk->ijk", self.g_inv, self.nabla_A_ring)
        raised = jet_einsum("jb,ibk->ijk", self.g_inv, raised)
        raised = jet_einsum("kc,ijc->ijk", self.g_inv, raised)
        return jet_einsum("ijk,ijk->", raised, self.nabla_A_ring)

    @cached_property
    def nabla_A_norm2(self) -> Jet:
        raised = jet_einsum("ia,ajk->ijk", self.g_inv, self.nabla_A)
        raised = jet_einsum("jb,ibk->ijk", self.g_inv, raised)
        raised = jet_einsum("kc,ijc->ijk", self.g_inv, raised)
        return jet_einsum("ijk,ijk->", raised, self.nabla_A)

    # ------------------------------------------------------------------
    # curvature (Gauss equation)
    # ------------------------------------------------------------------
    @cached_property
    def riem(self) -> Jet:
        return curvature_from_gauss(self).riem

    @cached_property
    def ric(self) -> Jet:
        return curvature_from_gauss(self).ric

    @cached_property
    def scal(self) -> Jet:
        return curvature_from_gauss(self).scal

    def principal_curvatures(self) -> np.ndarray:
        """Sorted eigenvalues of g^{-1} A at the base points, shape (batch, 4)."""
        return np.sort(np.linalg.eigvals(np.linalg.solve(self.g.value, self.A.value)).real, axis=-1)

    def __repr__(self):
        return f"ShapeData(order={self.order}, batch={self.batch}, normal_sign={self.normal_sign:+.0f})"


def shape_data(phi: Jet, normal_sign: float = 1.0, depth: str = "basic") -> ShapeData:
    """Build ShapeData; depth 'with_derivatives' also evaluates grad_H and nabla_A_ring."""
    if depth not in DEPTHS:
        raise ValueError(f"depth must be one of {sorted(DEPTHS)}, got '{depth}'")
    phi.require(DEPTHS[depth], f"shape_data(depth={depth})")
    sd = ShapeData(phi, normal_sign)
    if depth == "with_derivatives":
        _ = sd.grad_H
        _ = sd.nabla_A_ring
    return sd


@dataclass(frozen=True)
class CurvatureSet:
    riem: Jet
    ric: Jet
    scal: Jet


def curvature_from_gauss(sd: ShapeData) -> CurvatureSet:
    """Riem_ijkl = A_ik A_jl - A_il A_jk, Ric = 4H A - A g^{-1} A, Scal = 16H^2 - |A|^2."""
    riem = jet_einsum("ik,jl->ijkl", sd.A, sd.A) - jet_einsum("il,jk->ijkl", sd.A, sd.A)
    a_sq = jet_einsum("ik,kj->ij", sd.A, jet_einsum("kl,lj->kj", sd.g_inv, sd.A))
    ric = 4.0 * sd.H * sd.A - a_sq
    scal = 16.0 * sd.H * sd.H - sd.A_norm2
    return CurvatureSet(riem=riem, ric=ric, scal=scal)


def curvature_from_christoffel(sd: ShapeData) -> CurvatureSet:
    """Riemann from d Gamma + Gamma Gamma of the induced metric (needs order >= 3)."""
    sd.phi.require(3, "curvature_from_christoffel")
    riem = riemann_from_christoffel(sd.gamma, sd.g)
    ric = ricci_from_riemann(riem, sd.g_inv)
    scal = scalar_from_ricci(ric, sd.g_inv)
    return CurvatureSet(riem=riem, ric=ric, scal=scal)


# ----------------------------------------------------------------------
# identity residuals (per base point)
# ----------------------------------------------------------------------
def relative_residual(difference, *terms) -> np.ndarray:
    """max |difference| / max(1, max |term|) over the tensor axes, per base point."""
    diff = np.asarray(difference, dtype=float)
    batch = diff.shape[0]
    numerator = np.max(np.abs(diff.reshape(batch, -1)), axis=1)
    scale = np.ones(batch)
    for term in terms:
        term = np.asarray(term, dtype=float)
        scale = np.maximum(scale, np.max(np.abs(term.reshape(batch, -1)), axis=1))
    return numerator / scale


def codazzi_residual(sd: ShapeData) -> np.ndarray:
    """max |nabla_i A_jk - nabla_j A_ik| and |div A_ring - 3 grad H|, relative."""
    nabla_A = sd.nabla_A.value
    symmetric = relative_residual(nabla_A - np.swapaxes(nabla_A, 1, 2), nabla_A)
    div_a_ring = jet_einsum("ij,ijk->k", sd.g_inv, sd.nabla_A_ring).value
    three_grad = 3.0 * sd.grad_H.value
    divergence = relative_residual(div_a_ring - three_grad, div_a_ring, three_grad)
    return np.maximum(symmetric, divergence)


def simons_residual(sd: ShapeData) -> np.ndarray:
    """Delta A - 4 hess H - 4H A^2 + |A|^2 A, relative to the largest term."""
    nabla2_A = covariant_derivative(sd.nabla_A, sd.gamma)
    lap_A = jet_einsum("kl,klij->ij", sd.g_inv, nabla2_A).value
    A = sd.A.value
    g_inv = sd.g_inv.value
    H = sd.H.value[:, None, None]
    a_sq = np.einsum("bik,bkl,blj->bij", A, g_inv, A)
    a_norm2 = sd.A_norm2.value[:, None, None]
    hess = 4.0 * sd.hess_H.value
    quad = 4.0 * H * a_sq
    cubic = a_norm2 * A
    return relative_residual(lap_A - hess - quad + cubic, lap_A, hess, quad, cubic)


def laplace_scal_residual(sd: ShapeData) -> np.ndarray:
    """Delta Scal against -8 nabla_i nabla_j (A^ij H - 4H^2 g^ij) + 32|dH|^2 - 2|nabla A|^2
    - 8H^2|A_ring|^2 - 8H tr A_ring^3 + 2|A_ring|^4."""
    scal = sd.scal
    lap_scal = jet_einsum("ij,ij->", sd.g_inv, hessian(scal, sd.gamma)).value
    T = sd.H * sd.A - 4.0 * sd.H * sd.H * sd.g
    nabla2_T = covariant_derivative(covariant_derivative(T, sd.gamma), sd.gamma)
    raised = jet_einsum("ia,ijab->jb", sd.g_inv, nabla2_T)
    double_div = jet_einsum("jb,jb->", sd.g_inv, raised).value
    H = sd.H.value
    norm2 = sd.a_ring_norm2.value
    terms = [
        -8.0 * double_div,
        32.0 * sd.grad_H_norm2.value,
        -2.0 * sd.nabla_A_norm2.value,
        -8.0 * H ** 2 * norm2,
        -8.0 * H * sd.tr3.value,
        2.0 * norm2 ** 2,
    ]
    rhs = sum(terms)
    return relative_residual((lap_scal - rhs)[:, None], lap_scal[:, None], *[t[:, None] for t in terms])


def curvature_routes_residual(sd: ShapeData) -> np.ndarray:
    """Gauss-equation curvature against the Christoffel route."""
    gauss = curvature_from_gauss(sd)
    chris = curvature_from_christoffel(sd)
    riem = relative_residual(gauss.riem.value - chris.riem.value, gauss.riem.value)
    ric = relative_residual(gauss.ric.value - chris.ric.value, gauss.ric.value)
    scal = relative_residual((gauss.scal.value - chris.scal.value)[:, None], gauss.scal.value[:, None])
    return np.maximum(np.maximum(riem, ric), scal)
