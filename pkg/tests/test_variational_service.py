import numpy as np
import pytest

from CGM_Engine.calculus.jets import stack
from CGM_Engine.calculus.minkowski import boost_generator, rotation_generator
from CGM_Engine.exceptions import JetOrderError, UnsupportedHypothesisError
from CGM_Engine.geometry.conformal_gauss import cgm_basic
from CGM_Engine.geometry.hypersurface import ShapeData
from CGM_Engine.services.variational_service import (
    HIGH_ORDER,
    STRESS_ORDER,
    conservation_residual,
    ey_field,
    ey_nu_residual,
    g_vector,
    lcgm_test_identities,
    noether_residual,
    paneitz_density,
    richardson_ratio,
    tangent_balance,
    tangent_residual,
    variational_summary,
)
from CGM_Engine.services.energy_service import paneitz_raw
from CGM_Engine.services.verification_service import lcgm_fields
from CGM_Engine.surfaces.catalog import make_surface
from models.chart_map import chart_jet
from models.surface_spec import CustomChartSpec, SurfaceSpec
from tests.conftest import interior_points


def frame_at(atlas, rng, order, count=3):
    chart = atlas.charts[0]
    points = interior_points(chart, rng, count)
    return cgm_basic(ShapeData(chart_jet(chart, points, order), chart.normal_sign)), points


def bump(u):
    return 0.1 * u[0].sin()


def tube_times_line():
    """Inner side of a unit tube around a circle of radius 3 in R^4, times a line; det A_ring > 0 there."""

    def evaluator(u):
        radius = 3.0 + u[1].cos() * u[2].cos()
        return stack([radius * u[0].cos(), radius * u[0].sin(), u[2].sin(), u[1].sin() * u[2].cos(), u[3]])

    custom = CustomChartSpec(
        evaluator, [0.0, np.pi - 0.3, -0.3, 0.0], [1.0, np.pi + 0.3, 0.3, 1.0], name="tube-x-line"
    )
    return make_surface(SurfaceSpec("custom", custom=custom))


# ----------------------------------------------------------------------
# order-4 identities
# ----------------------------------------------------------------------
class TestLowOrder:
    def test_lcgm_identities_on_the_torus(self, torus, rng):
        frame, points = frame_at(torus, rng, 4)
        alpha, beta = lcgm_fields(points, 4)
        result = lcgm_test_identities(frame, alpha, beta)
        assert np.max(result.alpha_residual) < 1e-8
        assert np.max(result.beta_residual) < 1e-8

    def test_g_vector_relations_on_the_torus(self, torus, rng):
        frame, _ = frame_at(torus, rng, 4)
        residuals = g_vector(frame).residuals
        assert np.max(residuals["g_nu"]) < 1e-6
        assert np.max(residuals["g_normal"]) < 1e-6
        assert np.max(residuals["tr_bar"]) < 1e-8

    def test_variation_constraints_converge(self, torus):
        ratio = richardson_ratio(torus, bump, 1e-3, seed=3)
        assert max(ratio["coarse"].values()) < 1e-4
        assert max(ratio["fine"].values()) < max(ratio["coarse"].values())

    def test_paneitz_density_on_the_induced_metric(self, torus, rng):
        frame, _ = frame_at(torus, rng, 4)
        sd = frame.sd
        grad_norm2 = np.einsum("bij,bij->b", sd.g_inv.value, frame.g_bar_gram.value)
        expected = (paneitz_raw(frame).value - (4.0 / 3.0) * grad_norm2 ** 2) * sd.sqrt_det_g
        np.testing.assert_allclose(paneitz_density(frame.Y, sd.g).value, expected, rtol=1e-7, atol=1e-9)

    def test_order_six_required(self, torus, rng):
        frame, _ = frame_at(torus, rng, 4)
        summary = variational_summary(frame, rotation_generator(0, 1))
        assert not summary["success"]

    def test_conservation_needs_a_closed_surface(self, patch_rxs3):
        with pytest.raises(UnsupportedHypothesisError):
            conservation_residual(patch_rxs3, rotation_generator(0, 1), 0)

    def test_generator_outside_the_algebra_rejected(self, torus):
        with pytest.raises(ValueError):
            conservation_residual(torus, np.eye(7), 0)


# ----------------------------------------------------------------------
# order-6 Euler-Lagrange quantities
# ----------------------------------------------------------------------
@pytest.mark.slow
class TestHighOrder:
    def test_nu_component_on_rxs3(self, patch_rxs3, rng):
        frame, _ = frame_at(patch_rxs3, rng, HIGH_ORDER, count=2)
        result = ey_nu_residual(frame)
        np.testing.assert_allclose(result.nu_E, 2.0, rtol=1e-6)
        assert np.max(result.residual) < 1e-5

    def test_nu_component_where_det_is_positive(self, rng):
        frame, _ = frame_at(tube_times_line(), rng, HIGH_ORDER, count=2)
        assert np.all(frame.epsilon > 0)
        assert not np.any(frame.sd.singular_mask)
        assert np.min(np.abs(frame.sd.tr3.value)) > 1e-2
        result = ey_nu_residual(frame)
        assert np.max(result.residual) < 1e-5

    def test_round_sphere_is_critical(self, sphere, rng):
        frame, _ = frame_at(sphere, rng, HIGH_ORDER, count=2)
        field = ey_field(frame)
        assert np.max(np.abs(field.E_Y.value)) < 1e-8
        assert np.max(np.abs(ey_nu_residual(frame, field).predicted)) < 1e-8

    def test_homogeneous_patch_is_tangent_free(self, patch_rxs3, rng):
        frame, _ = frame_at(patch_rxs3, rng, HIGH_ORDER, count=2)
        assert np.max(tangent_residual(frame, ey_field(frame))) < 1e-6

    @pytest.mark.parametrize("Mdot", [rotation_generator(0, 1), boost_generator(0), rotation_generator(2, 5)])
    def test_noether_identity_on_the_torus(self, torus, rng, Mdot):
        frame, _ = frame_at(torus, rng, HIGH_ORDER, count=2)
        assert np.max(noether_residual(frame, ey_field(frame), Mdot)) < 1e-4

    def test_noether_rejects_a_non_generator(self, torus, rng):
        frame, _ = frame_at(torus, rng, HIGH_ORDER, count=1)
        with pytest.raises(ValueError):
            noether_residual(frame, ey_field(frame), np.eye(7))

    def test_summary_on_the_torus(self, torus, rng):
        frame, _ = frame_at(torus, rng, HIGH_ORDER, count=2)
        summary = variational_summary(frame, boost_generator(3))
        assert summary["success"]
        assert np.max(summary["residuals"]["noether"]) < 1e-4
        assert np.max(summary["residuals"]["ey_nu"]) < 1e-5
        assert "ey_tangent_raw" in summary["residuals"]
        assert "ey_tangent" not in summary["residuals"]

    def test_weak_conservation_on_the_torus(self, torus, executor):
        result = conservation_residual(torus, rotation_generator(0, 1), 0, executor=executor)
        assert result["noether_max"] < 1e-4
        assert abs(result["weak"]) < 1e-4


# ----------------------------------------------------------------------
# tangential part of E_Y against the metric stress (order 7)
# ----------------------------------------------------------------------
def balance_at(atlas, rng, count=2):
    chart = atlas.charts[0]
    points = interior_points(chart, rng, count)
    return tangent_balance(ShapeData(chart_jet(chart, points, STRESS_ORDER), chart.normal_sign))


@pytest.mark.slow
class TestTangentBalance:
    @pytest.fixture(scope="class")
    def wavy_torus(self):
        return make_surface(SurfaceSpec("torus", major_radius=2.0, minor_radius=1.0, amplitude=0.1))

    def test_perturbed_torus(self, wavy_torus, rng):
        balance = balance_at(wavy_torus, rng)
        assert np.max(balance.residual) < 1e-6
        # the pairing itself is far from zero here
        assert np.max(np.abs(balance.pairing)) > 100.0 * np.max(np.abs(balance.pairing - balance.stress))

    def test_perturbed_sphere(self, perturbed_sphere, rng):
        balance = balance_at(perturbed_sphere, rng)
        assert np.max(balance.residual) < 1e-6
        assert np.max(np.abs(balance.pairing)) > 100.0 * np.max(np.abs(balance.pairing - balance.stress))

    def test_homogeneous_patch_has_no_stress_divergence(self, patch_rxs3, rng):
        balance = balance_at(patch_rxs3, rng)
        assert np.max(balance.residual) < 1e-6
        assert np.max(np.abs(balance.stress)) < 1e-6

    def test_needs_order_seven(self, torus, rng):
        chart = torus.charts[0]
        sd = ShapeData(chart_jet(chart, interior_points(chart, rng, 1), HIGH_ORDER), chart.normal_sign)
        with pytest.raises(JetOrderError):
            tangent_balance(sd)

    def test_summary_gates_the_balance_at_order_seven(self, wavy_torus, rng):
        chart = wavy_torus.charts[0]
        sd = ShapeData(chart_jet(chart, interior_points(chart, rng, 1), STRESS_ORDER), chart.normal_sign)
        summary = variational_summary(cgm_basic(sd), rotation_generator(0, 1))
        assert summary["success"]
        assert np.max(summary["residuals"]["ey_tangent"]) < 1e-6
