# services/moebius_service.py
"""
Moebius maps acting on atlases, and the invariance / equivariance harness.

A Moebius map Theta acts on a chart by composition, Phi -> Theta o Phi. The
conformal Gauss map then transforms by a Lorentz matrix, Y' = M Y, so the
induced metric g_bar and every energy are unchanged.
"""
from typing import Any, Dict, Optional

import numpy as np

from CGM_Engine.calculus.minkowski import lorentz_residual
from CGM_Engine.exceptions import FitRankError, GeometryError, MoebiusValidityError
from CGM_Engine.geometry.conformal_gauss import cgm_basic
from CGM_Engine.geometry.hypersurface import ShapeData
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import ErrorTypes, MoebiusMessages, format_message
from CGM_Engine.services.energy_service import functional_values
from CGM_Engine.surfaces.quadrature import quadrature_grid
from CGM_Engine.tolerance_rules import MoebiusRules, SamplingRules
from models.chart_map import ChartMap, chart_jet
from models.moebius_map import DILATION, MoebiusMap
from models.surface_atlas import SurfaceAtlas

logger = get_logger(__name__)

ENERGIES = ("E_GR", "E_P", "P", "S", "signed_volume_bar")


def _composed(chart: ChartMap, m: MoebiusMap) -> ChartMap:
    inner = chart.evaluator
    return chart.with_evaluator(lambda u: m.apply(inner(u)), chart.normal_sign * m.orientation)


def _reference_volume(atlas: SurfaceAtlas, m: MoebiusMap) -> Optional[float]:
    if atlas.reference_volume is None or any(p.kind != DILATION for p in m.primitives):
        return None
    scale = float(np.prod([p.value for p in m.primitives])) if m.primitives else 1.0
    return atlas.reference_volume * scale ** 4


def apply_moebius(m: MoebiusMap, atlas: SurfaceAtlas, level: int = 0) -> SurfaceAtlas:
    """Compose every chart with m after checking validity at the quadrature nodes of `level`.

    The unit normal of Theta o Phi is the push-forward of n times the orientation of Theta.

    Raises:
        MoebiusValidityError: an inversion centre is too close to a node
    """
    if m.is_identity:
        return atlas
    for block in quadrature_grid(atlas, level).nodes:
        m.check_valid(block.chart.evaluate(block.points), block.points)
    charts = [_composed(chart, m) for chart in atlas.charts]
    logger.debug(f"Applied {m!r} to {atlas.name}")
    return atlas.with_charts(charts, name=f"{atlas.name} | {m!r}", reference_volume=_reference_volume(atlas, m))


def _drift(before: Optional[float], after: Optional[float]) -> Optional[float]:
    if before is None or after is None:
        return None
    return abs(after - before) / max(abs(before), abs(after), 1.0)


def g_bar_drift(m: MoebiusMap, atlas: SurfaceAtlas, count: int = 16, seed: int = SamplingRules.DEFAULT_SEED) -> float:
    """Entrywise drift of g_bar between Phi and Theta o Phi at matched parameter points."""
    moved = apply_moebius(m, atlas)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for chart, image in zip(atlas.charts, moved.charts):
        points = chart.sample(rng, count, SamplingRules.MARGIN)
        before = cgm_basic(ShapeData(chart_jet(chart, points, 3), chart.normal_sign)).g_bar.value
        after = cgm_basic(ShapeData(chart_jet(image, points, 3), image.normal_sign)).g_bar.value
        scale = max(1.0, float(np.max(np.abs(before))))
        worst = max(worst, float(np.max(np.abs(after - before))) / scale)
    return worst


def invariance_check(m: MoebiusMap, atlas: SurfaceAtlas, level: int, executor=None) -> Dict[str, Any]:
    """Relative drift of every defined energy under m, plus the pointwise g_bar drift."""
    moved = apply_moebius(m, atlas, level)
    before = functional_values(atlas, level, executor=executor, estimate_error=False)
    after = functional_values(moved, level, executor=executor, estimate_error=False)
    drifts = {name: _drift(before.value(name), after.value(name)) for name in ENERGIES}
    return {
        "before": {name: before.value(name) for name in ENERGIES},
        "after": {name: after.value(name) for name in ENERGIES},
        "drift": drifts,
        "g_bar_drift": g_bar_drift(m, atlas),
        "notes": before.notes + after.notes,
    }


def _sample_y(atlas: SurfaceAtlas, count: int, seed: int):
    rng = np.random.default_rng(seed)
    per_chart = max(1, int(np.ceil(count / len(atlas.charts))))
    samples = [(chart, chart.sample(rng, per_chart, SamplingRules.MARGIN)) for chart in atlas.charts]
    return samples


def _y_values(chart: ChartMap, points: np.ndarray) -> np.ndarray:
    return cgm_basic(ShapeData(chart_jet(chart, points, 3), chart.normal_sign)).Y.value


def fit_lorentz(source: np.ndarray, target: np.ndarray) -> Dict[str, Any]:
    """Least-squares M with M source_k = target_k; eta-orthogonality is checked, not imposed.

    Raises:
        FitRankError: the stacked source vectors span fewer than 7 dimensions
    """
    rank = int(np.linalg.matrix_rank(source, tol=1e-8 * max(1.0, float(np.max(np.abs(source))))))
    if rank < MoebiusRules.FIT_RANK:
        raise FitRankError(format_message(MoebiusMessages.FIT_RANK, rank=rank, samples=source.shape[0]))
    solution, *_ = np.linalg.lstsq(source, target, rcond=None)
    M = solution.T
    misfit = float(np.max(np.abs(source @ M.T - target))) / max(1.0, float(np.max(np.abs(target))))
    return {"M": M, "fit_residual": misfit, "lorentz_residual": lorentz_residual(M), "rank": rank}


def equivariance_check(
    m: MoebiusMap, atlas: SurfaceAtlas, count: int = 32, seed: int = SamplingRules.DEFAULT_SEED
) -> Dict[str, Any]:
    """Fit M from Y(p_k) to Y_Theta(p_k) and compare with the analytic Lorentz matrix of m."""
    moved = apply_moebius(m, atlas)
    source, target = [], []
    for (chart, points), image in zip(_sample_y(atlas, count, seed), moved.charts):
        source.append(_y_values(chart, points))
        target.append(_y_values(image, points))
    fit = fit_lorentz(np.concatenate(source), np.concatenate(target))
    analytic = m.lorentz_matrix()
    # the analytic matrix acts on Y up to an overall sign fixed by orientation conventions
    scale = max(1.0, float(np.max(np.abs(analytic))))
    fit["analytic_residual"] = min(
        float(np.max(np.abs(fit["M"] - analytic))), float(np.max(np.abs(fit["M"] + analytic)))
    ) / scale
    return fit


def composition_check(
    first: MoebiusMap,
    second: MoebiusMap,
    atlas: SurfaceAtlas,
    count: int = 32,
    seed: int = SamplingRules.DEFAULT_SEED,
) -> Dict[str, float]:
    """M of (second o first) against M(second) M(first), all fitted."""
    m1 = equivariance_check(first, atlas, count, seed)["M"]
    m2 = equivariance_check(second, apply_moebius(first, atlas), count, seed)["M"]
    m12 = equivariance_check(first.then(second), atlas, count, seed)["M"]
    product = m2 @ m1
    return {"residual": float(np.max(np.abs(m12 - product))) / max(1.0, float(np.max(np.abs(product))))}


def moebius_summary(m: MoebiusMap, atlas: SurfaceAtlas, level: int, executor=None) -> Dict[str, Any]:
    """
    Invariance and equivariance harness for the CLI.

    Returns:
        {"success": bool, "message": str, "invariance": dict, "equivariance": dict or None,
         "error_type": str (only on failure)}
    """
    try:
        invariance = invariance_check(m, atlas, level, executor)
    except MoebiusValidityError as e:
        logger.warning(f"Moebius map rejected on {atlas.name}: {e}")
        return {"success": False, "message": str(e), "invariance": {}, "equivariance": None,
                "error_type": ErrorTypes.MOEBIUS}
    except GeometryError as e:
        logger.error(f"Invariance check failed on {atlas.name}: {e}", exc_info=True)
        return {"success": False, "message": str(e), "invariance": {}, "equivariance": None,
                "error_type": ErrorTypes.DEGENERACY}
    try:
        equivariance = equivariance_check(m, atlas)
        message = "Invariance and equivariance checked."
    except FitRankError as e:
        logger.info(f"Equivariance fit skipped on {atlas.name}: {e}")
        equivariance = None
        message = str(e)
    return {"success": True, "message": message, "invariance": invariance, "equivariance": equivariance}

