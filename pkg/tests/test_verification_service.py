import numpy as np
import pytest

from CGM_Engine.geometry.hypersurface import ShapeData
from CGM_Engine.services.verification_service import pointwise_suites, regular_mask, sample_points
from CGM_Engine.tolerance_rules import SuiteTolerances
from models.chart_map import chart_jet


def over_tolerance(outcome):
    return {name: value for name, value in outcome.residuals.items() if not value <= SuiteTolerances.DEFAULTS[name]}


class TestSampling:
    def test_points_are_seeded(self, torus):
        first = sample_points(torus, 6, seed=11)
        second = sample_points(torus, 6, seed=11)
        np.testing.assert_array_equal(first[0][1], second[0][1])

    def test_points_split_across_charts(self, sphere):
        blocks = sample_points(sphere, 6, seed=1)
        assert [len(points) for _, points in blocks] == [3, 3]

    def test_sphere_points_are_singular(self, sphere):
        chart, points = sample_points(sphere, 2, seed=0)[0]
        sd = ShapeData(chart_jet(chart, points, 3), chart.normal_sign)
        assert not np.any(regular_mask(sd))


class TestSuites:
    def test_torus_passes_every_suite(self, torus, executor):
        outcome = pointwise_suites(torus, count=6, seed=5, executor=executor)
        assert outcome.skipped == {}
        assert {"codazzi", "simons", "ch_pack", "inverse", "nu_nu_star", "scal_bar", "lcgm"} <= set(outcome.residuals)
        assert over_tolerance(outcome) == {}

    def test_sphere_skips_the_dual_frame(self, sphere, executor):
        outcome = pointwise_suites(sphere, count=4, seed=2, executor=executor)
        assert "inverse" in outcome.skipped
        assert "nu_nu_star" in outcome.skipped
        assert "nu_nu_star" not in outcome.residuals
        assert over_tolerance(outcome) == {}

    def test_perturbed_sphere(self, perturbed_sphere, executor):
        outcome = pointwise_suites(perturbed_sphere, count=4, seed=3, executor=executor)
        assert outcome.residuals["codazzi"] <= SuiteTolerances.DEFAULTS["codazzi"]
        assert outcome.residuals["laplace_scal"] <= SuiteTolerances.DEFAULTS["laplace_scal"]

    def test_fields_keep_the_sample_points(self, torus, executor):
        outcome = pointwise_suites(torus, count=4, seed=1, executor=executor)
        chart_name, points, values = outcome.fields["codazzi"][0]
        assert chart_name == torus.charts[0].name
        assert len(points) == len(values)
        assert set(outcome.to_dict()) == {"residuals", "skipped", "diagnostics"}

    @pytest.mark.slow
    def test_high_order_suites_on_the_torus(self, torus, executor):
        outcome = pointwise_suites(torus, count=2, seed=4, order=6, executor=executor)
        assert outcome.residuals["noether"] < 1e-4
        assert outcome.residuals["ey_nu"] < 1e-5
        assert outcome.residuals["variation_constraints"] < 1e-4
        assert outcome.residuals["ey_tangent"] < SuiteTolerances.DEFAULTS["ey_tangent"]
        assert "ey_tangent_raw" in outcome.diagnostics
        assert "ey_tangent" not in outcome.diagnostics
