import numpy as np
import pytest

from CGM_Engine.exceptions import UnsupportedHypothesisError
from CGM_Engine.messages import ErrorTypes
from CGM_Engine.services.energy_service import (
    det_sign_census,
    energy_summary,
    ep_lower_bound_check,
    functional_values,
    grad_h_identity_residual,
    neck_fit,
    neck_scaling,
    reference_energies,
    scal_bar_integral_residual,
)
from CGM_Engine.surfaces.catalog import make_surface
from models.surface_spec import SurfaceSpec

EIGHT_PI_SQUARED = 8.0 * np.pi ** 2


# ----------------------------------------------------------------------
# round sphere
# ----------------------------------------------------------------------
class TestSphere:
    def test_energies_at_level_one(self, sphere, executor):
        report = functional_values(sphere, 1, executor=executor)
        assert report.value("E_GR") == pytest.approx(EIGHT_PI_SQUARED, rel=1e-5)
        assert abs(report.value("E_P")) < 1e-10
        assert abs(report.value("P")) < 1e-10
        assert "S" not in report.functionals
        assert report.notes
        assert report.residuals["duality_P"] < 1e-5
        assert report.residuals["gauss_bonnet"] < 1e-5
        assert not report.umbilic_free

    @pytest.mark.slow
    def test_energies_at_level_two(self, sphere, executor):
        report = functional_values(sphere, 2, executor=executor)
        assert report.value("E_GR") == pytest.approx(EIGHT_PI_SQUARED, rel=1e-8)
        assert report.residuals["duality_P"] < 1e-8

    def test_energy_does_not_depend_on_the_radius(self, executor):
        small = functional_values(make_surface(SurfaceSpec("sphere", radius=0.5)), 1, executor=executor)
        large = functional_values(make_surface(SurfaceSpec("sphere", radius=3.0)), 1, executor=executor)
        assert small.value("E_GR") == pytest.approx(large.value("E_GR"), rel=1e-10)

    def test_scal_functional_refused(self, sphere, executor):
        with pytest.raises(UnsupportedHypothesisError):
            functional_values(sphere, 0, require_scal=True, executor=executor)

    def test_summary_reports_the_refusal(self, sphere, executor):
        summary = energy_summary(sphere, 0, require_scal=True, executor=executor)
        assert summary["success"] is False
        assert summary["error_type"] == ErrorTypes.HYPOTHESIS
        assert summary["report"] is None

    def test_reference_values(self, sphere):
        assert reference_energies(sphere) == {"E_GR": pytest.approx(EIGHT_PI_SQUARED), "E_P": 0.0, "P": 0.0}


# ----------------------------------------------------------------------
# product patches and the neck scan
# ----------------------------------------------------------------------
class TestPatches:
    def test_r2xs2_density(self, patch_r2xs2, executor):
        report = functional_values(patch_r2xs2, 0, executor=executor)
        assert report.value("E_GR") == pytest.approx(-np.pi / 4.0, rel=1e-12)
        assert report.residuals == {}
        assert reference_energies(patch_r2xs2)["E_GR"] == pytest.approx(-np.pi / 4.0)

    @pytest.mark.slow
    def test_rxs3_density(self, patch_rxs3, executor):
        report = functional_values(patch_rxs3, 2, executor=executor)
        volume = 2.0 * np.pi ** 2
        assert report.value("E_GR") == pytest.approx(135.0 / 256.0 * volume, rel=1e-8)
        assert report.value("P") == pytest.approx(135.0 / 256.0 * volume, rel=1e-8)
        assert report.value("E_P") == pytest.approx(45.0 / 16.0 * volume, rel=1e-8)

    def test_open_surface_refuses_scal(self, patch_rxs3, executor):
        with pytest.raises(UnsupportedHypothesisError):
            functional_values(patch_rxs3, 0, require_scal=True, executor=executor)

    def test_open_surface_refuses_integral_identities(self, patch_rxs3):
        with pytest.raises(UnsupportedHypothesisError):
            grad_h_identity_residual(patch_rxs3, 0)

    def test_neck_scaling_is_exact(self, executor):
        for length in (1.0, 2.0, 4.0):
            value = neck_scaling(length, 0, executor).value
            assert value == pytest.approx(-np.pi / 4.0 * length ** 2, rel=1e-12)

    def test_neck_fit(self):
        lengths = [1.0, 2.0, 4.0, 8.0]
        fit = neck_fit(lengths, [-np.pi / 4.0 * L ** 2 for L in lengths])
        assert fit["coefficient"] == pytest.approx(-np.pi / 4.0)
        assert fit["relative_error"] < 1e-12
        assert fit["r_squared"] == pytest.approx(1.0)

    def test_neck_fit_detects_a_wrong_law(self):
        lengths = [1.0, 2.0, 4.0, 8.0]
        fit = neck_fit(lengths, [-np.pi / 4.0 * L ** 3 for L in lengths])
        assert fit["relative_error"] > 0.1


# ----------------------------------------------------------------------
# torus
# ----------------------------------------------------------------------
class TestTorus:
    def test_sign_census(self, torus, executor):
        census = det_sign_census(torus, 0, executor)
        assert census.umbilic_free
        assert census.epsilon == -1
        assert census.require_constant_sign() == -1
        assert census.first_singular is None

    def test_ep_lower_bound_holds(self, torus, executor):
        check = ep_lower_bound_check(torus, 1, executor)
        assert check["violation"] == 0.0
        assert check["E_P"] > check["lower_bound"] > 0.0

    @pytest.mark.slow
    def test_duality_identities(self, torus, executor):
        report = functional_values(torus, 2, require_scal=True, executor=executor)
        assert report.epsilon == -1
        assert report.euler_characteristic == 0
        assert report.residuals["duality_P"] < 1e-5
        assert report.residuals["duality_S"] < 1e-5
        assert report.residuals["gauss_bonnet"] < 1e-5

    @pytest.mark.slow
    def test_integral_identities(self, torus, executor):
        assert grad_h_identity_residual(torus, 2, executor)["residual"] < 1e-5
        scal = scal_bar_integral_residual(torus, 2, executor)
        assert scal["epsilon"] == -1
        assert scal["residual"] < 1e-5
