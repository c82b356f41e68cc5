from .energy_service import energy_summary, functional_values
from .moebius_service import moebius_summary
from .verification_service import pointwise_suites
from . import variational_service

__all__ = [
    "energy_summary",
    "functional_values",
    "moebius_summary",
    "pointwise_suites",
    "variational_service",
]
