from .chart_map import ChartMap, chart_jet, fd_validate
from .moebius_map import MoebiusMap, MoebiusPrimitive
from .surface_atlas import ChartNodes, QuadratureGrid, SurfaceAtlas
from .surface_spec import CustomChartSpec, SurfaceSpec

__all__ = [
    'ChartMap',
    'chart_jet',
    'fd_validate',
    'MoebiusMap',
    'MoebiusPrimitive',
    'ChartNodes',
    'QuadratureGrid',
    'SurfaceAtlas',
    'CustomChartSpec',
    'SurfaceSpec',
]
