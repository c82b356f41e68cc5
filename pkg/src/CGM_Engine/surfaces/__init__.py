from .catalog import make_surface, exact_reference
from .quadrature import integrate, integrate_many, quadrature_grid

__all__ = [
    "make_surface",
    "exact_reference",
    "integrate",
    "integrate_many",
    "quadrature_grid",
]
