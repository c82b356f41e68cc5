from .hypersurface import ShapeData, shape_data
from .conformal_gauss import CgmFrame, cgm_basic

__all__ = [
    "ShapeData",
    "shape_data",
    "CgmFrame",
    "cgm_basic",
]
