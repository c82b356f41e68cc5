# services/verification_service.py
"""
Pointwise identity suites at seeded sample points of an atlas.

Each suite reports the worst residual over all sampled points; suites that
need an invertible A_ring run on the non-umbilic points only and are skipped
(with a reason) when there are none.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from CGM_Engine.calculus.jets import Jet, stack
from CGM_Engine.calculus.minkowski import boost_generator, rotation_generator
from CGM_Engine.calculus.traceless import TracelessPair, ch_pack, det_A_expansion, inv_traceless
from CGM_Engine.exceptions import GeometryError
from CGM_Engine.geometry.conformal_gauss import (
    cgm_basic,
    dual_null_frame,
    orientation_det,
    scal_bar,
    second_form_Y,
)
from CGM_Engine.geometry.hypersurface import (
    ShapeData,
    codazzi_residual,
    curvature_routes_residual,
    laplace_scal_residual,
    simons_residual,
)
from CGM_Engine.logging_config import get_logger
from CGM_Engine.services.energy_service import egr_forms, ep_integrand
from CGM_Engine.services.variational_service import (
    HIGH_ORDER,
    el_residual_S,
    ey_field,
    ey_nu_residual,
    g_vector,
    lcgm_test_identities,
    noether_residual,
    richardson_ratio,
    tangent_balance_residual,
    tangent_residual,
)
from CGM_Engine.tolerance_rules import JetRules, SamplingRules
from CGM_Engine.utils.threading_utils import SafeThreadExecutor
from models.chart_map import ChartMap, chart_jet, fd_validate
from models.surface_atlas import SurfaceAtlas

logger = get_logger(__name__)

BASE_ORDER = 4
# residual over the sample points: one array per chart
FieldValues = List[Tuple[str, np.ndarray, np.ndarray]]


@dataclass
class SuiteOutcome:
    residuals: Dict[str, float] = field(default_factory=dict)
    skipped: Dict[str, str] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)
    fields: Dict[str, FieldValues] = field(default_factory=dict)

    def record(self, name: str, chart: ChartMap, points: np.ndarray, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size == 0:
            return
        self.residuals[name] = max(self.residuals.get(name, 0.0), float(np.max(values)))
        self.fields.setdefault(name, []).append((chart.name, points, values))
        self.skipped.pop(name, None)

    def skip(self, name: str, reason: str) -> None:
        if name not in self.residuals:
            self.skipped[name] = reason

    def to_dict(self) -> Dict[str, Any]:
        return {"residuals": dict(self.residuals), "skipped": dict(self.skipped), "diagnostics": dict(self.diagnostics)}


def sample_points(atlas: SurfaceAtlas, count: int, seed: int) -> List[Tuple[ChartMap, np.ndarray]]:
    """Seeded uniform points split evenly across charts, away from chart edges."""
    rng = np.random.default_rng(seed)
    per_chart = max(1, int(np.ceil(count / len(atlas.charts))))
    return [(chart, chart.sample(rng, per_chart, SamplingRules.MARGIN)) for chart in atlas.charts]


def regular_mask(sd: ShapeData) -> np.ndarray:
    """Points where A_ring is invertible."""
    return ~sd.singular_mask


def lcgm_fields(points: np.ndarray, order: int) -> Tuple[Jet, Jet]:
    """A vector field alpha^k and a scalar beta in chart coordinates for the lcgm identities."""
    u = Jet.variables(points, order)
    alpha = stack([u[1].sin(), u[0].cos(), 0.1 * u[2] * u[3], u[0] * 0.0 + 1.0])
    beta = 1.0 + 0.5 * u[0].sin()
    return alpha, beta


def _traceless_suites(outcome: SuiteOutcome, chart, points, sd: ShapeData, regular: np.ndarray) -> None:
    H, g, a_ring = sd.H.value, sd.g.value, sd.A_ring.value
    pair = TracelessPair(g, a_ring)
    pack = ch_pack(pair)
    scale = np.maximum(1.0, pack.tr2 ** 2)
    outcome.record("ch_pack", chart, points, np.maximum.reduce([pack.residual, pack.tr4_residual, pack.det_residual]) / scale)
    expansion = det_A_expansion(H, pair)
    outcome.record(
        "det_expansion", chart, points, expansion.residual / np.maximum.reduce([np.ones_like(H), np.abs(expansion.lhs), H ** 4])
    )
    if np.any(regular):
        inverse = inv_traceless(TracelessPair(g[regular], a_ring[regular]))
        worst = np.maximum.reduce(
            [inverse.identity_residual, inverse.direct_residual, inverse.trace_residual, inverse.norm_residual]
        )
        outcome.record("inverse", chart, points[regular], worst)
    else:
        outcome.skip("inverse", "A_ring is singular at every sampled point")


def _frame_suites(outcome: SuiteOutcome, chart, points, sd: ShapeData, regular: np.ndarray) -> None:
    """Relations of Y and nu everywhere; the dual frame only where A_ring is invertible."""
    frame = cgm_basic(sd)
    for name, values in frame.basic_residuals().items():
        outcome.record(name, chart, points, values)
    outcome.record("orientation", chart, points, orientation_det(frame).residual)
    outcome.record("ep_forms", chart, points, ep_integrand(frame).residual)
    dual_names = ("nu_nu_star", "dual_relations", "b_closed", "gamma_bar", "scal_bar", "g_nu")
    if not np.any(regular):
        for name in dual_names:
            outcome.skip(name, "umbilic points only: the dual null frame is undefined")
        return
    sub_points = points[regular]
    sub = cgm_basic(ShapeData(sd.phi.select(np.flatnonzero(regular)), sd.normal_sign))
    dual = dual_null_frame(sub)
    outcome.record("nu_nu_star", chart, sub_points, dual.residuals["nu_nu_star"])
    outcome.record("dual_relations", chart, sub_points, dual.residuals["dual_relations"])
    second = second_form_Y(sub)
    outcome.record("b_closed", chart, sub_points, np.maximum(second.residuals["b_closed"], second.residuals["nu_component"]))
    outcome.record("gamma_bar", chart, sub_points, second.residuals["gamma_bar"])
    scal = scal_bar(sub)
    outcome.record("scal_bar", chart, sub_points, np.maximum(scal.residual, scal.norm_residual))
    gv = g_vector(sub)
    outcome.record("g_nu", chart, sub_points, np.maximum.reduce(list(gv.residuals.values())))


def _high_order_suites(outcome: SuiteOutcome, chart, points, sd: ShapeData, regular: np.ndarray) -> None:
    frame = cgm_basic(sd)
    field_y = ey_field(frame)
    generators = [rotation_generator(0, 1), boost_generator(0), rotation_generator(2, 5)]
    noether = np.maximum.reduce([noether_residual(frame, field_y, Mdot) for Mdot in generators])
    outcome.record("noether", chart, points, noether)
    outcome.record("ey_nu", chart, points, ey_nu_residual(frame, field_y).residual)
    outcome.record("ey_tangent", chart, points, tangent_balance_residual(chart, points))
    raw = float(np.max(tangent_residual(frame, field_y)))
    outcome.diagnostics["ey_tangent_raw"] = max(outcome.diagnostics.get("ey_tangent_raw", 0.0), raw)
    if np.any(regular):
        sub = cgm_basic(ShapeData(sd.phi.select(np.flatnonzero(regular)), sd.normal_sign))
        el = el_residual_S(sub)
        outcome.diagnostics["el_S_max"] = max(outcome.diagnostics.get("el_S_max", 0.0), float(np.max(el)))


def _bump(u: Jet) -> Jet:
    return 0.1 * u[0].sin()


def _evaluate_block(chart: ChartMap, points: np.ndarray, order: int) -> SuiteOutcome:
    outcome = SuiteOutcome()
    sd = ShapeData(chart_jet(chart, points, order), chart.normal_sign)
    regular = regular_mask(sd)
    outcome.record("codazzi", chart, points, codazzi_residual(sd))
    outcome.record("simons", chart, points, simons_residual(sd))
    outcome.record("laplace_scal", chart, points, laplace_scal_residual(sd))
    outcome.record("curvature_routes", chart, points, curvature_routes_residual(sd))
    outcome.record("egr_forms", chart, points, egr_forms(sd).residual)
    _traceless_suites(outcome, chart, points, sd, regular)
    _frame_suites(outcome, chart, points, sd, regular)
    alpha, beta = lcgm_fields(points, order)
    lcgm = lcgm_test_identities(cgm_basic(sd), alpha, beta)
    outcome.record("lcgm", chart, points, np.maximum(lcgm.alpha_residual, lcgm.beta_residual))
    if order >= HIGH_ORDER:
        _high_order_suites(outcome, chart, points, sd, regular)
    return outcome


def _merge(into: SuiteOutcome, part: SuiteOutcome) -> None:
    for name, values in part.fields.items():
        for chart_name, points, v in values:
            into.residuals[name] = max(into.residuals.get(name, 0.0), float(np.max(v)))
            into.fields.setdefault(name, []).append((chart_name, points, v))
            into.skipped.pop(name, None)
    for name, reason in part.skipped.items():
        if name not in into.residuals:
            into.skipped[name] = reason
    for name, value in part.diagnostics.items():
        into.diagnostics[name] = max(into.diagnostics.get(name, 0.0), value)


def pointwise_suites(
    atlas: SurfaceAtlas,
    count: int = SamplingRules.DEFAULT_POINTS,
    seed: int = SamplingRules.DEFAULT_SEED,
    order: int = BASE_ORDER,
    executor: SafeThreadExecutor = None,
) -> SuiteOutcome:
    """Run every pointwise suite at `count` seeded points; order 6 adds the Euler-Lagrange suites."""
    order = max(order, BASE_ORDER)
    size = JetRules.chunk_size(order)
    blocks = []
    for chart, points in sample_points(atlas, count, seed):
        blocks.extend((chart, points[start : start + size]) for start in range(0, len(points), size))
    own_executor = executor is None
    executor = executor or SafeThreadExecutor()
    try:
        parts = executor.map_ordered(lambda block: _evaluate_block(block[0], block[1], order), blocks)
    finally:
        if own_executor:
            executor.shutdown(wait=True)
    outcome = SuiteOutcome()
    for part in parts:
        _merge(outcome, part)
    outcome.residuals["fd_jets"] = fd_suite(atlas, seed)
    if order >= HIGH_ORDER:
        try:
            ratio = richardson_ratio(atlas, _bump, 1e-3, seed=seed)
            outcome.residuals["variation_constraints"] = max(ratio["coarse"].values())
            outcome.diagnostics["richardson_ratio"] = min(ratio["ratio"].values())
        except GeometryError as e:
            outcome.skip("variation_constraints", str(e))
    logger.info(f"Pointwise suites on {atlas.name}: {len(outcome.residuals)} run, {len(outcome.skipped)} skipped")
    return outcome


def fd_suite(atlas: SurfaceAtlas, seed: int = SamplingRules.DEFAULT_SEED, order: int = 2, h: float = 1e-3) -> float:
    """Worst finite-difference check of the chart jets, one point per chart."""
    worst = 0.0
    for chart, points in sample_points(atlas, len(atlas.charts), seed):
        worst = max(worst, fd_validate(chart, points[0], order, h).residual)
    return worst
