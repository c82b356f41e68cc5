"""Product quadrature over atlases and deterministic parallel integration.

Nodes of each chart are split into fixed chunks whose size depends only on
the jet order. Chunks are evaluated on a worker pool; every chunk returns the
compensated sum of its node contributions in node order and the chunk sums
are reduced in chunk order, so the result does not depend on the number of
workers.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional

import numpy as np

from CGM_Engine.calculus.compensated_sum import neumaier_columns, ordered_sum
from CGM_Engine.exceptions import GeometryError, NodeEvaluationError
from CGM_Engine.geometry.conformal_gauss import CgmFrame, cgm_basic
from CGM_Engine.geometry.hypersurface import ShapeData
from CGM_Engine.logging_config import get_logger
from CGM_Engine.messages import GeometryMessages, format_message
from CGM_Engine.tolerance_rules import JetRules, QuadratureRules
from CGM_Engine.utils.threading_utils import SafeThreadExecutor
from models.chart_map import ChartMap, chart_jet
from models.surface_atlas import ChartNodes, QuadratureGrid, SurfaceAtlas

logger = get_logger(__name__)


def _axis_rule(rule: str, lower: float, upper: float, level: int):
    """Nodes and weights of one parameter axis."""
    if rule == "periodic":
        n = QuadratureRules.node_count(QuadratureRules.PERIODIC_BASE, level)
        h = (upper - lower) / n
        return lower + h * (np.arange(n) + 0.5), np.full(n, h)
    n = QuadratureRules.node_count(QuadratureRules.LEGENDRE_BASE, level)
    x, w = np.polynomial.legendre.leggauss(n)
    if rule == "legendre":
        half = 0.5 * (upper - lower)
        return lower + half * (x + 1.0), half * w
    # Gauss-Legendre in t = cos(angle): d(angle) = -dt / sin(angle)
    t_low, t_high = np.cos(upper), np.cos(lower)
    half = 0.5 * (t_high - t_low)
    t = t_low + half * (x + 1.0)
    angle = np.arccos(t)
    order = np.argsort(angle)
    return angle[order], (half * w / np.sin(angle))[order]


def chart_nodes(chart: ChartMap, level: int) -> ChartNodes:
    lower, upper = chart.lower, chart.upper
    rules = [_axis_rule(rule, lower[k], upper[k], level) for k, rule in enumerate(chart.axis_rules)]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    weights = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([x.ravel() for x in weights], axis=1), axis=1)
    return ChartNodes(chart=chart, points=points, weights=w * chart.weight(points))


def quadrature_grid(atlas: SurfaceAtlas, level: int) -> QuadratureGrid:
    """Tensor-product grid on every chart; node counts grow like GROWTH**level."""
    if level < 0:
        raise ValueError("Quadrature level must be non-negative")
    return QuadratureGrid(level=level, nodes=[chart_nodes(chart, level) for chart in atlas.charts])


class NodeContext:
    """Lazily built geometry at a chunk of nodes, shared by all fields of one pass."""

    def __init__(self, chart: ChartMap, points: np.ndarray, order: int):
        self.chart = chart
        self.points = points
        self.order = order

    @cached_property
    def jet(self):
        return chart_jet(self.chart, self.points, self.order)

    @cached_property
    def shape(self) -> ShapeData:
        return ShapeData(self.jet, self.chart.normal_sign)

    @cached_property
    def frame(self) -> CgmFrame:
        return cgm_basic(self.shape)

    def __repr__(self):
        return f"NodeContext(chart='{self.chart.name}', nodes={len(self.points)}, order={self.order})"


# A field maps a NodeContext to per-node values; integration uses dvol_g.
Field = Callable[[NodeContext], np.ndarray]


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: Optional[float]
    level: int
    nodes: int

    def to_dict(self):
        return {"value": self.value, "error": self.error, "level": self.level, "nodes": self.nodes}


@dataclass
class _Chunk:
    chart: ChartMap
    points: np.ndarray
    weights: np.ndarray
    index: int = field(default=0)


def _evaluate(fields: Dict[str, Field], chunk: _Chunk, order: int) -> np.ndarray:
    context = NodeContext(chunk.chart, chunk.points, order)
    columns = []
    for name, fn in fields.items():
        values = np.asarray(fn(context), dtype=float).reshape(-1)
        columns.append(values * context.shape.sqrt_det_g * chunk.weights)
    return np.ascontiguousarray(np.stack(columns, axis=1))


def _locate_failure(fields: Dict[str, Field], chunk: _Chunk, order: int, error: GeometryError):
    """Re-run a failed chunk node by node and wrap the first failure with its node."""
    for k in range(chunk.points.shape[0]):
        single = _Chunk(chunk.chart, chunk.points[k : k + 1], chunk.weights[k : k + 1])
        try:
            _evaluate(fields, single, order)
        except GeometryError as cause:
            node = chunk.points[k].tolist()
            raise NodeEvaluationError(
                format_message(GeometryMessages.NODE_FAILED, node=node, chart=chunk.chart.name, reason=cause),
                chart=chunk.chart.name,
                node=node,
                cause=cause,
            ) from cause
    raise NodeEvaluationError(
        format_message(GeometryMessages.NODE_FAILED, node=None, chart=chunk.chart.name, reason=error),
        chart=chunk.chart.name,
        cause=error,
    ) from error


def _chunk_sums(fields: Dict[str, Field], chunk: _Chunk, order: int) -> np.ndarray:
    try:
        contributions = _evaluate(fields, chunk, order)
    except GeometryError as error:
        _locate_failure(fields, chunk, order, error)
    return neumaier_columns(contributions)


def integrate_grid(
    fields: Dict[str, Field],
    grid: QuadratureGrid,
    order: int,
    executor: Optional[SafeThreadExecutor] = None,
) -> Dict[str, float]:
    """Integrate several fields in one pass over a grid."""
    chunks = _chunks(grid, order)
    logger.debug(f"Integrating {list(fields)} over {grid.node_count} nodes in {len(chunks)} chunks (order {order})")
    own_executor = executor is None
    executor = executor or SafeThreadExecutor()
    try:
        partials = executor.map_ordered(lambda chunk: _chunk_sums(fields, chunk, order), chunks)
    finally:
        if own_executor:
            executor.shutdown(wait=True)
    partials = np.array(partials).reshape(len(chunks), len(fields))
    return {name: ordered_sum(partials[:, j]) for j, name in enumerate(fields)}


def _chunks(grid: QuadratureGrid, order: int) -> List[_Chunk]:
    size = JetRules.chunk_size(order)
    chunks: List[_Chunk] = []
    for block in grid.nodes:
        for start in range(0, block.size, size):
            chunks.append(
                _Chunk(block.chart, block.points[start : start + size], block.weights[start : start + size], len(chunks))
            )
    return chunks


def evaluate_nodes(
    field: Field,
    grid: QuadratureGrid,
    order: int,
    executor: Optional[SafeThreadExecutor] = None,
) -> List[np.ndarray]:
    """Per-node values of a field, one array per chart block in grid order (no weights)."""
    chunks = _chunks(grid, order)

    def run(chunk: _Chunk) -> np.ndarray:
        context = NodeContext(chunk.chart, chunk.points, order)
        return np.asarray(field(context), dtype=float).reshape(-1)

    own_executor = executor is None
    executor = executor or SafeThreadExecutor()
    try:
        values = executor.map_ordered(run, chunks)
    finally:
        if own_executor:
            executor.shutdown(wait=True)
    blocks = []
    for block in grid.nodes:
        parts = [v for c, v in zip(chunks, values) if c.chart is block.chart]
        blocks.append(np.concatenate(parts) if parts else np.zeros(0))
    return blocks


def integrate_many(
    fields: Dict[str, Field],
    atlas: SurfaceAtlas,
    level: int,
    order: int = 3,
    executor: Optional[SafeThreadExecutor] = None,
    estimate_error: bool = True,
) -> Dict[str, IntegralResult]:
    """Integrate fields at `level`; the error estimate is |I(level) - I(level - 1)| (None at level 0)."""
    grid = quadrature_grid(atlas, level)
    values = integrate_grid(fields, grid, order, executor)
    previous = None
    if estimate_error and level > 0:
        previous = integrate_grid(fields, quadrature_grid(atlas, level - 1), order, executor)
    return {
        name: IntegralResult(
            value=values[name],
            error=abs(values[name] - previous[name]) if previous is not None else None,
            level=level,
            nodes=grid.node_count,
        )
        for name in fields
    }


def integrate(field: Field, atlas: SurfaceAtlas, level: int, order: int = 3, executor=None) -> IntegralResult:
    """Sum of weights * field * sqrt(det g) over the atlas with a refinement error estimate."""
    return integrate_many({"field": field}, atlas, level, order, executor)["field"]


def volume(context: NodeContext) -> np.ndarray:
    """Constant field 1."""
    return np.ones(context.points.shape[0])
