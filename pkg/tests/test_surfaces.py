import numpy as np
import pytest

from CGM_Engine.calculus.jets import stack
from CGM_Engine.exceptions import JetDomainError, NodeEvaluationError, SurfaceValidationError
from CGM_Engine.surfaces.catalog import make_surface
from CGM_Engine.surfaces.quadrature import integrate, quadrature_grid, volume
from CGM_Engine.utils.threading_utils import SafeThreadExecutor
from models.chart_map import chart_jet, fd_validate
from models.surface_spec import CustomChartSpec, SurfaceSpec
from tests.conftest import interior_points


# ----------------------------------------------------------------------
# catalog
# ----------------------------------------------------------------------
class TestCatalog:
    @pytest.mark.parametrize(
        "spec",
        [
            SurfaceSpec("sphere", radius=-1.0),
            SurfaceSpec("torus", major_radius=1.0, minor_radius=1.0),
            SurfaceSpec("torus", major_radius=2.0, minor_radius=1.0, amplitude=0.6),
            SurfaceSpec("perturbed-sphere", amplitude=1.0, perturbation="x1x2"),
            SurfaceSpec("perturbed-sphere", amplitude=0.1, perturbation="x9"),
            SurfaceSpec("patch-rxs3", length=0.0),
        ],
    )
    def test_invalid_parameters_rejected(self, spec):
        with pytest.raises(SurfaceValidationError):
            make_surface(spec)

    def test_cli_forms(self):
        spec = SurfaceSpec.from_cli("torus:3,1,0.1", normal_sign=-1)
        assert (spec.major_radius, spec.minor_radius, spec.amplitude) == (3.0, 1.0, 0.1)
        assert spec.normal_sign == -1
        assert SurfaceSpec.from_cli("patch-r2xs2:4").length == 4.0
        with pytest.raises(SurfaceValidationError):
            SurfaceSpec.from_cli("klein-bottle")
        with pytest.raises(SurfaceValidationError):
            SurfaceSpec.from_cli("sphere:abc")

    def test_topology(self, sphere, torus, patch_rxs3):
        assert sphere.closed and sphere.euler_characteristic == 2
        assert len(sphere.charts) == 2
        assert torus.closed and torus.euler_characteristic == 0
        assert not patch_rxs3.closed

    def test_flipped_normal_sign(self):
        up = make_surface(SurfaceSpec("torus"))
        down = make_surface(SurfaceSpec("torus", normal_sign=-1))
        assert up.charts[0].normal_sign == -down.charts[0].normal_sign

    def test_chart_jet_outside_the_box(self, torus):
        with pytest.raises(JetDomainError):
            chart_jet(torus.charts[0], np.array([[1.0, 4.0, 1.0, 1.0]]), 2)

    @pytest.mark.parametrize("name", ["sphere", "torus", "perturbed_sphere", "patch_r2xs2"])
    def test_jets_match_finite_differences(self, name, request, rng):
        atlas = request.getfixturevalue(name)
        chart = atlas.charts[0]
        point = interior_points(chart, rng, 1)[0]
        report = fd_validate(chart, point, 2, 1e-3)
        assert report.residual < 1e-4
        assert set(report.by_order) == {1, 2}


# ----------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------
class TestQuadrature:
    def test_node_counts_grow_with_level(self, torus):
        counts = [quadrature_grid(torus, level).node_count for level in range(3)]
        assert counts == [6 * 4 * 4 * 6, 9 * 6 * 6 * 9, 14 * 9 * 9 * 14]

    def test_negative_level_rejected(self, torus):
        with pytest.raises(ValueError):
            quadrature_grid(torus, -1)

    def test_patch_volume_is_exact_at_level_zero(self, patch_r2xs2):
        result = integrate(volume, patch_r2xs2, 0, order=2)
        assert result.value == pytest.approx(4.0 * np.pi, rel=1e-12)
        assert result.error is None

    def test_sphere_volume(self, sphere):
        result = integrate(volume, sphere, 2, order=2)
        assert result.value == pytest.approx(8.0 * np.pi ** 2 / 3.0, rel=1e-8)
        assert result.error is not None

    def test_error_is_the_step_from_the_previous_level(self, sphere):
        fine = integrate(volume, sphere, 2, order=2)
        coarse = integrate(volume, sphere, 1, order=2)
        assert fine.error == abs(fine.value - coarse.value)

    def test_torus_volume(self, torus):
        result = integrate(volume, torus, 2, order=2)
        assert result.value == pytest.approx(torus.reference_volume, rel=1e-10)
        assert torus.reference_volume == pytest.approx(44.0 * np.pi ** 3)

    def test_result_does_not_depend_on_worker_count(self, torus):
        values = []
        for workers in (1, 4):
            with SafeThreadExecutor(workers) as pool:
                values.append(integrate(volume, torus, 1, order=2, executor=pool).value)
        assert values[0] == values[1]

    def test_failing_node_is_reported(self, sphere):
        def needs_dual_frame(context):
            return context.frame.f.value

        with pytest.raises(NodeEvaluationError) as info:
            integrate(needs_dual_frame, sphere, 0, order=3)
        assert info.value.node is not None


# ----------------------------------------------------------------------
# supplemented kinds
# ----------------------------------------------------------------------
class TestCustomAndPerturbed:
    def test_custom_flat_chart(self):
        def flat(u):
            return stack([u[0], u[1], u[2], u[3], u[0] * 0.0])

        custom = CustomChartSpec(flat, [0.0] * 4, [1.0, 2.0, 1.0, 0.5], name="slab")
        atlas = make_surface(SurfaceSpec("custom", custom=custom))
        assert not atlas.closed
        assert integrate(volume, atlas, 0, order=2).value == pytest.approx(1.0, rel=1e-12)

    def test_custom_needs_a_chart(self):
        with pytest.raises(SurfaceValidationError):
            make_surface(SurfaceSpec("custom"))

    def test_custom_evaluator_must_be_callable(self):
        with pytest.raises(TypeError):
            CustomChartSpec("not a function", [0.0] * 4, [1.0] * 4)

    def test_perturbed_torus(self, rng):
        atlas = make_surface(SurfaceSpec("torus", major_radius=3.0, minor_radius=1.0, amplitude=0.2))
        assert atlas.reference_volume is None
        chart = atlas.charts[0]
        report = fd_validate(chart, interior_points(chart, rng, 1)[0], 2, 1e-3)
        assert report.residual < 1e-4
