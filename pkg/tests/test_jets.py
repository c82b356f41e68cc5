import math

import numpy as np
import pytest

from CGM_Engine.calculus.compensated_sum import neumaier_sum, ordered_sum
from CGM_Engine.calculus.jets import Jet, jet_einsum, n_coefficients, stack
from CGM_Engine.exceptions import DegeneracyError, JetDomainError, JetOrderError

POINTS = np.array([[0.3, -0.2, 0.7, 1.1], [1.0, 0.5, -0.4, 0.2]])


# ----------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------
class TestConstruction:
    def test_coefficient_count(self):
        assert n_coefficients(0) == 1
        assert n_coefficients(1) == 5
        assert n_coefficients(4) == 70
        assert n_coefficients(6) == 210

    def test_variables_have_unit_gradient(self):
        u = Jet.variables(POINTS, 3)
        assert u.shape == (4,)
        assert u.batch == 2
        np.testing.assert_allclose(u.value, POINTS)
        grad = u.gradient().value
        np.testing.assert_allclose(grad, np.broadcast_to(np.eye(4), (2, 4, 4)))

    def test_wrong_coefficient_count_rejected(self):
        with pytest.raises(ValueError):
            Jet(np.zeros((3, 2)), 1)

    def test_partial_above_order_raises(self):
        u = Jet.variables(POINTS, 1)
        with pytest.raises(JetOrderError):
            u[0].partial((2, 0, 0, 0))


# ----------------------------------------------------------------------
# arithmetic and composition
# ----------------------------------------------------------------------
class TestCalculus:
    def test_product_rule(self):
        u = Jet.variables(POINTS, 3)
        f = u[0] * u[0] * u[1]
        x, y = POINTS[:, 0], POINTS[:, 1]
        np.testing.assert_allclose(f.partial((1, 0, 0, 0)), 2 * x * y)
        np.testing.assert_allclose(f.partial((2, 1, 0, 0)), 2.0 * np.ones(2))
        np.testing.assert_allclose(f.partial((3, 0, 0, 0)), np.zeros(2))

    def test_sin_derivatives(self):
        u = Jet.variables(POINTS, 5)
        f = u[2].sin()
        z = POINTS[:, 2]
        expected = [np.sin(z), np.cos(z), -np.sin(z), -np.cos(z), np.sin(z), np.cos(z)]
        for k, value in enumerate(expected):
            np.testing.assert_allclose(f.partial((0, 0, k, 0)), value, atol=1e-12)

    def test_composition_of_exp_and_log(self):
        u = Jet.variables(POINTS, 4)
        f = (u[0] + 2.0).log().exp()
        np.testing.assert_allclose(f.value, POINTS[:, 0] + 2.0)
        np.testing.assert_allclose(f.partial((1, 0, 0, 0)), np.ones(2), atol=1e-12)
        np.testing.assert_allclose(f.partial((2, 0, 0, 0)), np.zeros(2), atol=1e-12)

    def test_sqrt_of_square(self):
        u = Jet.variables(POINTS, 3)
        r2 = jet_einsum("a,a->", u, u)
        r = r2.sqrt()
        norm = np.linalg.norm(POINTS, axis=1)
        np.testing.assert_allclose(r.value, norm)
        np.testing.assert_allclose(r.gradient().value, POINTS / norm[:, None])

    def test_log_of_zero_is_a_domain_error(self):
        u = Jet.variables(np.zeros((1, 4)), 2)
        with pytest.raises(JetDomainError):
            u[0].log()

    def test_reciprocal_with_ndarray_operands(self):
        u = Jet.variables(POINTS, 2)
        f = 1.0 / (u[1] + np.array([2.0, 3.0]))
        np.testing.assert_allclose(f.value, 1.0 / (POINTS[:, 1] + [2.0, 3.0]))

    def test_truncation_is_a_prefix(self):
        u = Jet.variables(POINTS, 4)
        f = (u[0] * u[3]).cos()
        low = f.truncate(2)
        assert low.order == 2
        np.testing.assert_allclose(low.coeffs, f.coeffs[: n_coefficients(2)])

    def test_gradient_lowers_order(self):
        u = Jet.variables(POINTS, 3)
        assert (u[0] * u[1]).gradient().order == 2

    def test_derivative_needs_order(self):
        u = Jet.variables(POINTS, 0)
        with pytest.raises(JetOrderError):
            u.derivative(0)


# ----------------------------------------------------------------------
# tensors
# ----------------------------------------------------------------------
class TestTensors:
    def test_inverse_matrix_jet(self):
        u = Jet.variables(POINTS, 3)
        M = stack([stack([2.0 + u[0] * u[0], u[1]]), stack([u[1], 1.0 + u[2] * u[2]])])
        inverse = M.inverse_matrix()
        product = jet_einsum("ij,jk->ik", M, inverse)
        identity = np.zeros_like(product.coeffs)
        identity[0] = np.eye(2)
        np.testing.assert_allclose(product.coeffs, identity, atol=1e-12)

    def test_singular_matrix_refused(self):
        u = Jet.variables(POINTS, 1)
        M = stack([stack([u[0], u[0]]), stack([u[0], u[0]])])
        with pytest.raises(DegeneracyError):
            M.inverse_matrix()

    def test_einsum_with_constant_operand(self):
        u = Jet.variables(POINTS, 2)
        weights = np.array([1.0, 2.0, 3.0, 4.0])
        f = jet_einsum("a,a->", u, weights)
        np.testing.assert_allclose(f.value, POINTS @ weights)
        np.testing.assert_allclose(f.gradient().value, np.broadcast_to(weights, (2, 4)))

    def test_select_sub_batch(self):
        u = Jet.variables(POINTS, 2)
        one = u.select([1])
        assert one.batch == 1
        np.testing.assert_allclose(one.value[0], POINTS[1])


# ----------------------------------------------------------------------
# compensated summation
# ----------------------------------------------------------------------
class TestCompensatedSum:
    def test_cancellation_is_recovered(self):
        values = np.array([1e16, 1.0, -1e16, 1.0])
        assert neumaier_sum(values) == 2.0

    def test_ordered_sum_matches_fsum(self, rng):
        values = rng.normal(size=10_000) * 10.0 ** rng.integers(-8, 8, size=10_000)
        assert ordered_sum(values) == pytest.approx(math.fsum(values), rel=1e-15, abs=1e-300)
