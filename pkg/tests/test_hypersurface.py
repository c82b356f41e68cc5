import numpy as np
import pytest

from CGM_Engine.geometry.hypersurface import (
    ShapeData,
    codazzi_residual,
    curvature_from_christoffel,
    curvature_from_gauss,
    curvature_routes_residual,
    laplace_scal_residual,
    shape_data,
    simons_residual,
    volume_density,
)
from CGM_Engine.surfaces.catalog import exact_reference
from models.chart_map import chart_jet
from tests.conftest import interior_points


def shape_at(atlas, rng, order=4, count=6, chart_index=0):
    chart = atlas.charts[chart_index]
    points = interior_points(chart, rng, count)
    return ShapeData(chart_jet(chart, points, order), chart.normal_sign), points


class TestReferenceShapes:
    def test_unit_sphere_has_inward_unit_curvatures(self, sphere, rng):
        for index in range(2):
            sd, _ = shape_at(sphere, rng, order=2, chart_index=index)
            np.testing.assert_allclose(sd.H.value, 1.0, rtol=1e-10)
            np.testing.assert_allclose(sd.principal_curvatures(), 1.0, rtol=1e-10)
            np.testing.assert_allclose(sd.a_ring_norm2.value, 0.0, atol=1e-10)

    def test_torus_matches_closed_form(self, torus, rng):
        sd, points = shape_at(torus, rng, order=2)
        for k, point in enumerate(points):
            reference = exact_reference(torus.spec, point)
            np.testing.assert_allclose(sd.principal_curvatures()[k], reference.principal_curvatures, atol=1e-10)
            assert sd.H.value[k] == pytest.approx(reference.H, abs=1e-10)
            assert sd.A_norm2.value[k] == pytest.approx(reference.A_norm2, abs=1e-10)

    def test_patches_match_closed_form(self, patch_r2xs2, patch_rxs3, rng):
        for atlas in (patch_r2xs2, patch_rxs3):
            sd, points = shape_at(atlas, rng, order=2, count=3)
            reference = exact_reference(atlas.spec, points[0])
            np.testing.assert_allclose(sd.principal_curvatures(), np.tile(reference.principal_curvatures, (3, 1)), atol=1e-10)

    def test_flipped_normal_negates_the_second_form(self, torus, rng):
        chart = torus.charts[0]
        points = interior_points(chart, rng)
        phi = chart_jet(chart, points, 2)
        up = ShapeData(phi, chart.normal_sign)
        down = ShapeData(phi, -chart.normal_sign)
        np.testing.assert_allclose(down.A.value, -up.A.value)
        np.testing.assert_allclose(down.g.value, up.g.value)

    def test_perturbed_sphere_has_no_reference(self, perturbed_sphere):
        assert exact_reference(perturbed_sphere.spec, np.full(4, 0.5)) is None

    def test_unknown_depth_rejected(self, torus, rng):
        chart = torus.charts[0]
        with pytest.raises(ValueError):
            shape_data(chart_jet(chart, interior_points(chart, rng), 2), depth="everything")


class TestIdentities:
    @pytest.mark.parametrize("name", ["torus", "perturbed_sphere"])
    def test_codazzi_and_simons(self, name, request, rng):
        sd, _ = shape_at(request.getfixturevalue(name), rng)
        assert np.max(codazzi_residual(sd)) < 1e-9
        assert np.max(simons_residual(sd)) < 1e-9

    @pytest.mark.parametrize("name", ["torus", "perturbed_sphere", "patch_rxs3"])
    def test_curvature_routes_agree(self, name, request, rng):
        sd, _ = shape_at(request.getfixturevalue(name), rng, order=3)
        assert np.max(curvature_routes_residual(sd)) < 1e-9

    def test_gauss_scalar_curvature(self, torus, rng):
        sd, _ = shape_at(torus, rng, order=3)
        gauss = curvature_from_gauss(sd)
        chris = curvature_from_christoffel(sd)
        expected = 16.0 * sd.H.value ** 2 - sd.A_norm2.value
        np.testing.assert_allclose(gauss.scal.value, expected)
        np.testing.assert_allclose(chris.scal.value, expected, rtol=1e-9, atol=1e-9)

    def test_round_sphere_scalar_curvature(self, sphere, rng):
        sd, _ = shape_at(sphere, rng, order=2)
        np.testing.assert_allclose(sd.scal.value, 12.0, rtol=1e-10)

    def test_laplace_of_scalar_curvature(self, perturbed_sphere, rng):
        sd, _ = shape_at(perturbed_sphere, rng)
        assert np.max(laplace_scal_residual(sd)) < 1e-8

    def test_volume_density_matches_the_determinant(self, torus, rng):
        sd, _ = shape_at(torus, rng, order=3)
        density = volume_density(sd.g)
        np.testing.assert_allclose(density.value, sd.sqrt_det_g, rtol=1e-12)
        # d_i sqrt(det g) = sqrt(det g) Gamma^k_ki
        expected = sd.sqrt_det_g[:, None] * np.einsum("bkki->bi", sd.gamma.value)
        np.testing.assert_allclose(density.gradient().value, expected, rtol=1e-9, atol=1e-12)
