import numpy as np
import pytest

from CGM_Engine.calculus.traceless import (
    TracelessPair,
    ch_pack,
    conformal_pattern_predicate,
    det_A_expansion,
    inv_traceless,
    singular_mask,
)
from CGM_Engine.exceptions import GeometryError, SingularityError


def random_pairs(rng, count=8):
    """Random SPD metrics with random symmetric forms, made trace-free."""
    B = rng.normal(size=(count, 4, 4))
    g = B @ np.swapaxes(B, -1, -2) + 4.0 * np.eye(4)
    S = rng.normal(size=(count, 4, 4))
    A = S + np.swapaxes(S, -1, -2)
    return TracelessPair.from_second_form(g, A)


class TestPair:
    def test_split_removes_the_trace(self, rng):
        pair, H = random_pairs(rng)
        np.testing.assert_allclose(np.trace(pair.mixed, axis1=-2, axis2=-1), 0.0, atol=1e-12)
        assert H.shape == (8,)

    def test_trace_full_form_rejected(self):
        with pytest.raises(GeometryError):
            TracelessPair(np.eye(4), np.diag([1.0, 0.0, 0.0, 0.0]))


class TestCayleyHamilton:
    def test_diagonal_values(self):
        pack = ch_pack(TracelessPair(np.eye(4), np.diag([1.0, 2.0, -1.0, -2.0])))
        assert pack.tr2 == pytest.approx(10.0)
        assert pack.tr3 == pytest.approx(0.0, abs=1e-12)
        assert pack.tr4 == pytest.approx(34.0)
        assert pack.det == pytest.approx(4.0)

    def test_residuals_vanish_for_random_pairs(self, rng):
        pair, _ = random_pairs(rng)
        pack = ch_pack(pair)
        scale = np.maximum(1.0, pack.tr2 ** 2)
        assert np.max(pack.residual / scale) < 1e-12
        assert np.max(pack.tr4_residual / scale) < 1e-12
        assert np.max(pack.det_residual / scale) < 1e-12

    def test_det_expansion(self, rng):
        pair, H = random_pairs(rng)
        expansion = det_A_expansion(H, pair)
        scale = np.maximum.reduce([np.ones_like(H), np.abs(expansion.lhs), H ** 4])
        assert np.max(expansion.residual / scale) < 1e-12

    def test_det_expansion_on_a_diagonal(self):
        pair = TracelessPair(np.eye(4), np.diag([1.0, 2.0, -1.0, -2.0]))
        expansion = det_A_expansion(np.array(0.5), pair)
        assert expansion.lhs == pytest.approx(1.5 * 2.5 * -0.5 * -1.5)
        assert expansion.residual < 1e-12


class TestInverse:
    def test_closed_form_matches_direct_inverse(self, rng):
        pair, _ = random_pairs(rng)
        inverse = inv_traceless(pair)
        assert np.max(inverse.identity_residual) < 1e-10
        assert np.max(inverse.direct_residual) < 1e-10
        assert np.max(inverse.trace_residual) < 1e-10
        assert np.max(inverse.norm_residual) < 1e-10

    def test_singular_form_raises(self):
        pair = TracelessPair(np.eye(4), np.diag([1.0, -1.0, 0.0, 0.0]))
        assert singular_mask(pair)
        with pytest.raises(SingularityError):
            inv_traceless(pair)


class TestConformalPattern:
    def test_pattern_detected(self):
        g = np.diag([1.0, 2.0, 3.0, 4.0])
        a_ring = 0.3 * np.diag([1.0, 2.0, -3.0, -4.0])
        result = conformal_pattern_predicate(TracelessPair(g, a_ring))
        assert result.matches
        assert result.omega == pytest.approx(0.3)

    def test_generic_form_does_not_match(self):
        result = conformal_pattern_predicate(TracelessPair(np.eye(4), np.diag([1.0, 2.0, -1.0, -2.0])))
        assert not result.matches
