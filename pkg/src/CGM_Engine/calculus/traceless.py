"""Closed-form algebra of 4x4 g-symmetric traceless endomorphisms.

Every trace and determinant below is taken of the endomorphism g^{-1} A_ring,
so det means det_g. All functions accept stacked inputs of shape (..., 4, 4)
and return arrays over the leading axes.
"""

from dataclasses import dataclass

import numpy as np

from CGM_Engine.exceptions import GeometryError, SingularityError
from CGM_Engine.messages import GeometryMessages, format_message
from CGM_Engine.tolerance_rules import TracelessRules

IDENTITY = np.eye(4)


def _max_abs(x):
    return np.max(np.abs(x), axis=(-2, -1))


@dataclass(frozen=True)
class TracelessPair:
    """A metric and a symmetric bilinear form that is trace-free with respect to it."""

    g: np.ndarray
    a_ring: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        a_ring = np.asarray(self.a_ring, dtype=float)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "a_ring", a_ring)
        mixed = np.linalg.solve(g, a_ring)
        trace = np.trace(mixed, axis1=-2, axis2=-1)
        norm = np.sqrt(np.abs(np.trace(mixed @ mixed, axis1=-2, axis2=-1)))
        if np.any(np.abs(trace) > TracelessRules.TRACE_FREE * np.maximum(norm, 1.0)):
            raise GeometryError(
                format_message(GeometryMessages.NOT_TRACE_FREE, trace=float(np.max(np.abs(trace))))
            )
        object.__setattr__(self, "_mixed", mixed)

    @classmethod
    def from_second_form(cls, g, A):
        """Split A into its traceless part; returns (pair, H)."""
        g = np.asarray(g, dtype=float)
        A = np.asarray(A, dtype=float)
        H = 0.25 * np.trace(np.linalg.solve(g, A), axis1=-2, axis2=-1)
        return cls(g, A - H[..., None, None] * g), H

    @property
    def mixed(self) -> np.ndarray:
        """The endomorphism g^{-1} A_ring."""
        return self._mixed

    def traces(self):
        m = self._mixed
        m2 = m @ m
        m3 = m2 @ m
        tr = lambda x: np.trace(x, axis1=-2, axis2=-1)
        return tr(m2), tr(m3), tr(m3 @ m), np.linalg.det(m)


@dataclass(frozen=True)
class ChPack:
    tr2: np.ndarray
    tr3: np.ndarray
    tr4: np.ndarray
    det: np.ndarray
    residual: np.ndarray
    tr4_residual: np.ndarray
    det_residual: np.ndarray


def ch_pack(pair: TracelessPair) -> ChPack:
    """Traces, determinant and the Cayley-Hamilton residuals of A_ring.

    Checks A^4 - 1/2 tr(A^2) A^2 - 1/3 tr(A^3) A + det(A) g = 0 (indices lowered
    with g), tr A^4 = 1/2 (tr A^2)^2 - 4 det A and 8 det A = |A|^4 - 2 tr A^4.
    """
    m = pair.mixed
    tr2, tr3, tr4, det = pair.traces()
    m2 = m @ m
    cayley = m2 @ m2 - 0.5 * tr2[..., None, None] * m2 - (tr3 / 3.0)[..., None, None] * m + det[..., None, None] * IDENTITY
    residual = _max_abs(pair.g @ cayley)
    return ChPack(
        tr2=tr2,
        tr3=tr3,
        tr4=tr4,
        det=det,
        residual=residual,
        tr4_residual=np.abs(tr4 - (0.5 * tr2 ** 2 - 4.0 * det)),
        det_residual=np.abs(8.0 * det - (tr2 ** 2 - 2.0 * tr4)),
    )


@dataclass(frozen=True)
class TracelessInverse:
    inverse: np.ndarray  # (A_ring^{-1})^{ij}, both indices up
    mixed_inverse: np.ndarray
    identity_residual: np.ndarray
    direct_residual: np.ndarray
    trace_residual: np.ndarray
    norm_residual: np.ndarray


def singular_mask(pair: TracelessPair) -> np.ndarray:
    tr2, _, _, det = pair.traces()
    return np.abs(det) <= TracelessRules.singular_threshold(tr2)


def inv_traceless(pair: TracelessPair) -> TracelessInverse:
    """Inverse of A_ring from the Cayley-Hamilton closed form.

    A^{-1} = -1/det [A^3 - 1/2 tr(A^2) A - 1/3 tr(A^3) g], raised with g.

    Raises:
        SingularityError: |det_g A_ring| at or below the scale-aware threshold
    """
    m = pair.mixed
    tr2, tr3, _, det = pair.traces()
    bad = np.abs(det) <= TracelessRules.singular_threshold(tr2)
    if np.any(bad):
        worst = float(np.ravel(det)[np.argmax(np.ravel(bad))])
        raise SingularityError(
            format_message(
                GeometryMessages.SINGULAR_A_RING,
                det=abs(worst),
                threshold=float(np.max(TracelessRules.singular_threshold(tr2))),
            ),
            det=worst,
        )
    m3 = m @ m @ m
    mixed_inverse = -(m3 - 0.5 * tr2[..., None, None] * m - (tr3 / 3.0)[..., None, None] * IDENTITY) / det[..., None, None]
    g_inv = np.linalg.inv(pair.g)
    inverse = mixed_inverse @ g_inv
    direct = np.linalg.inv(pair.a_ring)
    scale = np.maximum(_max_abs(direct), 1.0)
    trace_inverse = np.trace(mixed_inverse, axis1=-2, axis2=-1)
    norm_inverse = np.trace(mixed_inverse @ mixed_inverse, axis1=-2, axis2=-1)
    norm_closed = (tr2 * det + tr3 ** 2 / 9.0) / det ** 2
    return TracelessInverse(
        inverse=inverse,
        mixed_inverse=mixed_inverse,
        identity_residual=_max_abs(pair.a_ring @ inverse - IDENTITY),
        direct_residual=_max_abs(inverse - direct) / scale,
        trace_residual=np.abs(trace_inverse - tr3 / (3.0 * det)) / np.maximum(np.abs(trace_inverse), 1.0),
        norm_residual=np.abs(norm_inverse - norm_closed) / np.maximum(np.abs(norm_inverse), 1.0),
    )


@dataclass(frozen=True)
class DetExpansion:
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray


def det_A_expansion(H, pair: TracelessPair) -> DetExpansion:
    """det_g(A_ring + H g) against H^4 - 1/2 H^2|A|^2 + 1/3 H trA^3 + 1/8 |A|^4 - 1/4 trA^4."""
    H = np.asarray(H, dtype=float)
    tr2, tr3, tr4, _ = pair.traces()
    lhs = np.linalg.det(pair.mixed + H[..., None, None] * IDENTITY)
    rhs = H ** 4 - 0.5 * H ** 2 * tr2 + H * tr3 / 3.0 + tr2 ** 2 / 8.0 - 0.25 * tr4
    return DetExpansion(lhs=lhs, rhs=rhs, residual=np.abs(lhs - rhs))


@dataclass(frozen=True)
class PatternResult:
    matches: np.ndarray
    omega: np.ndarray
    residual: np.ndarray


def conformal_pattern_predicate(pair: TracelessPair, tolerance: float = 1e-8) -> PatternResult:
    """Test A_ring^2 = omega^2 g, i.e. eigenvalues (omega, omega, -omega, -omega)."""
    m = pair.mixed
    tr2 = np.trace(m @ m, axis1=-2, axis2=-1)
    omega2 = np.maximum(tr2 / 4.0, 0.0)
    residual = _max_abs(m @ m - omega2[..., None, None] * IDENTITY)
    matches = residual <= tolerance * np.maximum(omega2, 1e-300)
    return PatternResult(matches=matches, omega=np.sqrt(omega2), residual=residual)
