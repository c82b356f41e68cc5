import numpy as np
import pytest

from CGM_Engine.calculus.minkowski import (
    ETA,
    boost_generator,
    boost_matrix,
    eta_dot,
    eta_norm2,
    generator_pairing,
    lorentz_residual,
    rotation_generator,
    rotation_matrix,
    so61_residual,
    wedge,
)


def _exp(Mdot, t, terms=40):
    """Truncated exponential series of t * Mdot."""
    result = np.eye(7)
    term = np.eye(7)
    for k in range(1, terms):
        term = term @ (t * Mdot) / k
        result = result + term
    return result


class TestPairing:
    def test_signature(self):
        e7 = np.zeros(7)
        e7[6] = 1.0
        e1 = np.zeros(7)
        e1[0] = 1.0
        assert eta_norm2(e7) == -1.0
        assert eta_norm2(e1) == 1.0
        assert eta_dot(e1, e7) == 0.0

    def test_batched_pairing(self, rng):
        u = rng.normal(size=(5, 7))
        v = rng.normal(size=(5, 7))
        np.testing.assert_allclose(eta_dot(u, v), np.einsum("bi,ij,bj->b", u, ETA, v))

    def test_wedge_is_antisymmetric(self, rng):
        a, b = rng.normal(size=(2, 7))
        C = wedge(a, b)
        np.testing.assert_allclose(C, -C.T)
        np.testing.assert_allclose(wedge(a, a), np.zeros((7, 7)))


class TestGroup:
    @pytest.mark.parametrize("Mdot", [rotation_generator(0, 1), rotation_generator(3, 5), boost_generator(2)])
    def test_generators_lie_in_the_algebra(self, Mdot):
        assert so61_residual(Mdot) == 0.0

    def test_finite_rotation_and_boost_are_lorentz(self):
        assert lorentz_residual(rotation_matrix(1, 4, 0.7)) < 1e-15
        assert lorentz_residual(boost_matrix(3, 1.3)) < 1e-14
        assert lorentz_residual(boost_matrix(0, 0.4) @ rotation_matrix(2, 5, -1.1)) < 1e-14

    def test_finite_maps_exponentiate_generators(self):
        np.testing.assert_allclose(_exp(rotation_generator(1, 4), 0.7), rotation_matrix(1, 4, 0.7), atol=1e-13)
        np.testing.assert_allclose(_exp(boost_generator(3), 0.5), boost_matrix(3, 0.5), atol=1e-13)

    def test_non_lorentz_matrix_detected(self):
        M = np.eye(7)
        M[0, 0] = 1.1
        assert lorentz_residual(M) == pytest.approx(0.21)

    def test_invalid_axes_rejected(self):
        with pytest.raises(ValueError):
            rotation_generator(2, 2)
        with pytest.raises(ValueError):
            rotation_generator(0, 6)
        with pytest.raises(ValueError):
            boost_generator(6)


class TestGeneratorPairing:
    @pytest.mark.parametrize("Mdot", [rotation_generator(0, 2), boost_generator(4)])
    def test_pairing_of_a_wedge(self, rng, Mdot):
        a, b = rng.normal(size=(2, 7))
        assert generator_pairing(Mdot, wedge(a, b)) == pytest.approx(eta_dot(Mdot @ a, b))

    def test_pairing_is_batched(self, rng):
        a = rng.normal(size=(3, 7))
        b = rng.normal(size=(3, 7))
        Mdot = boost_generator(1)
        expected = eta_dot(a @ Mdot.T, b)
        np.testing.assert_allclose(generator_pairing(Mdot, wedge(a, b)), expected)
