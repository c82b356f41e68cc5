from .jets import Jet, jet_einsum, n_coefficients, stack
from .minkowski import eta_dot, lorentz_residual, so61_residual, wedge
from .compensated_sum import neumaier_sum

__all__ = [
    "Jet",
    "jet_einsum",
    "n_coefficients",
    "stack",
    "eta_dot",
    "lorentz_residual",
    "so61_residual",
    "wedge",
    "neumaier_sum",
]
