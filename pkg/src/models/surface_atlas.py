# surface_atlas.py
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from .chart_map import ChartMap
from .surface_spec import SurfaceSpec


class SurfaceAtlas:
    def __init__(
        self,
        name: str,
        charts: List[ChartMap],
        euler_characteristic: Optional[int],
        closed: bool,
        spec: Optional[SurfaceSpec] = None,
        reference_volume: Optional[float] = None,
    ):
        if not charts:
            raise ValueError("An atlas needs at least one chart")
        if closed and euler_characteristic is None:
            raise ValueError("A closed atlas must carry its Euler characteristic")
        self._name = name
        self._charts: List[ChartMap] = list(charts)
        self._euler_characteristic = euler_characteristic
        self._closed = bool(closed)
        self._spec = spec
        self._reference_volume = reference_volume

    # Properties (read-only: atlases are immutable after construction)
    @property
    def name(self) -> str:
        return self._name

    @property
    def charts(self) -> List[ChartMap]:
        """Get charts list (read-only)"""
        return self._charts.copy()

    @property
    def euler_characteristic(self) -> Optional[int]:
        """Euler characteristic from the catalog, None for open patches"""
        return self._euler_characteristic

    @property
    def closed(self) -> bool:
        return self._closed

    @property
    def spec(self) -> Optional[SurfaceSpec]:
        return self._spec

    @property
    def reference_volume(self) -> Optional[float]:
        """Closed-form volume where known"""
        return self._reference_volume

    def get_chart(self, chart_name: str) -> Optional[ChartMap]:
        """Get a chart by name"""
        for chart in self._charts:
            if chart.name == chart_name:
                return chart
        return None

    def with_charts(self, charts: List[ChartMap], name: str, reference_volume: Optional[float] = None) -> "SurfaceAtlas":
        """Atlas over the same parameter boxes with new immersions"""
        return SurfaceAtlas(name, charts, self._euler_characteristic, self._closed, self._spec, reference_volume)

    def __repr__(self):
        return f"SurfaceAtlas(name='{self._name}', charts={len(self._charts)}, chi={self._euler_characteristic}, closed={self._closed})"

    def to_dict(self) -> Dict[str, Any]:
        """Convert SurfaceAtlas to dictionary"""
        return {
            "name": self._name,
            "closed": self._closed,
            "euler_characteristic": self._euler_characteristic,
            "reference_volume": self._reference_volume,
            "spec": self._spec.to_dict() if self._spec is not None else None,
            "charts": [chart.to_dict() for chart in self._charts],
        }


@dataclass(frozen=True)
class ChartNodes:
    chart: ChartMap
    points: np.ndarray  # (n, 4)
    weights: np.ndarray  # (n,), includes the chart weight

    @property
    def size(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class QuadratureGrid:
    level: int
    nodes: List[ChartNodes]

    @property
    def node_count(self) -> int:
        return sum(block.size for block in self.nodes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "charts": {block.chart.name: block.size for block in self.nodes},
        }
