# chart_map.py
import math
from dataclasses import dataclass
from itertools import product
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from CGM_Engine.calculus.jets import Jet, multi_indices
from CGM_Engine.exceptions import JetDomainError
from CGM_Engine.geometry.hypersurface import check_immersion
from CGM_Engine.messages import ChartMessages, format_message

# Quadrature rule per parameter axis:
#   periodic - equispaced trapezoid nodes
#   legendre - Gauss-Legendre in the parameter
#   cos      - Gauss-Legendre in cos(parameter) (colatitudes of sphere factors)
AXIS_RULES = ("periodic", "legendre", "cos")


class ChartMap:
    def __init__(
        self,
        name: str,
        lower: Sequence[float],
        upper: Sequence[float],
        axis_rules: Sequence[str],
        evaluator: Callable[[Jet], Jet],
        normal_sign: float = 1.0,
        weight: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        self.name = name
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != (4,) or upper.shape != (4,) or np.any(upper <= lower):
            raise ValueError(f"Chart '{name}' needs a box with lower < upper on four axes")
        self._lower = lower
        self._upper = upper
        self.axis_rules = axis_rules
        self._evaluator = evaluator
        self.normal_sign = normal_sign
        self._weight = weight

    # Properties (Getters/Setters)
    @property
    def name(self) -> str:
        """Get chart name"""
        return self._name

    @name.setter
    def name(self, value: str) -> None:
        """Set chart name with validation"""
        if not value or not isinstance(value, str):
            raise ValueError("Chart name must be a non-empty string")
        self._name = value

    @property
    def lower(self) -> np.ndarray:
        return self._lower.copy()

    @property
    def upper(self) -> np.ndarray:
        return self._upper.copy()

    @property
    def axis_rules(self) -> Tuple[str, ...]:
        return self._axis_rules

    @axis_rules.setter
    def axis_rules(self, value: Sequence[str]) -> None:
        rules = tuple(value)
        if len(rules) != 4 or any(rule not in AXIS_RULES for rule in rules):
            raise ValueError(f"Axis rules must be four of {AXIS_RULES}, got {rules}")
        self._axis_rules = rules

    @property
    def periodic(self) -> Tuple[bool, ...]:
        return tuple(rule == "periodic" for rule in self._axis_rules)

    @property
    def normal_sign(self) -> float:
        """Get orientation of the unit normal relative to the raw cross product"""
        return self._normal_sign

    @normal_sign.setter
    def normal_sign(self, value: float) -> None:
        """Set orientation with validation"""
        if value not in (1, -1, 1.0, -1.0):
            raise ValueError("Normal sign must be +1 or -1")
        self._normal_sign = float(value)

    @property
    def evaluator(self) -> Callable[[Jet], Jet]:
        return self._evaluator

    def weight(self, points: np.ndarray) -> np.ndarray:
        """Partition-of-unity weight at the given parameter points (1 for disjoint charts)"""
        points = np.atleast_2d(points)
        if self._weight is None:
            return np.ones(points.shape[0])
        return np.asarray(self._weight(points), dtype=float)

    def contains(self, points: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Mask of points inside the open box (periodic axes are unrestricted)"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        pad = margin * (self._upper - self._lower)
        inside = (points > self._lower + pad) & (points < self._upper - pad)
        inside |= np.array(self.periodic)
        return np.all(inside, axis=1)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values of the immersion at parameter points, shape (n, 5)"""
        return self._evaluator(Jet.variables(points, 0)).value

    def sample(self, rng: np.random.Generator, count: int, margin: float) -> np.ndarray:
        """Uniform random parameter points keeping a relative margin from the box edges"""
        pad = margin * (self._upper - self._lower)
        return rng.uniform(self._lower + pad, self._upper - pad, size=(count, 4))

    def with_evaluator(self, evaluator: Callable[[Jet], Jet], normal_sign: float, name: Optional[str] = None) -> "ChartMap":
        """Same box and rules, new immersion"""
        return ChartMap(
            name or self._name,
            self._lower,
            self._upper,
            self._axis_rules,
            evaluator,
            normal_sign,
            self._weight,
        )

    def __repr__(self):
        return f"ChartMap(name='{self._name}', rules={self._axis_rules}, normal_sign={self._normal_sign:+.0f})"

    def to_dict(self) -> Dict[str, Any]:
        """Convert ChartMap to dictionary (the evaluator is not serialized)"""
        return {
            "name": self._name,
            "lower": self._lower.tolist(),
            "upper": self._upper.tolist(),
            "axis_rules": list(self._axis_rules),
            "normal_sign": self._normal_sign,
        }


def chart_jet(chart: ChartMap, points, order: int, check: bool = True) -> Jet:
    """K-jet of the chart's immersion at a batch of parameter points.

    Raises:
        JetDomainError: a point outside the chart box
        DegeneracyError: the Jacobian loses rank (only with check=True and order >= 1)
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    inside = chart.contains(points)
    if not np.all(inside):
        k = int(np.argmin(inside))
        raise JetDomainError(
            format_message(ChartMessages.OUTSIDE_DOMAIN, point=points[k].tolist(), chart=chart.name),
            point=points[k].tolist(),
        )
    phi = chart.evaluator(Jet.variables(points, order))
    if phi.shape != (5,):
        raise ValueError(f"Chart '{chart.name}' must map into R^5, got tensor shape {phi.shape}")
    if check and order >= 1:
        check_immersion(phi.gradient().value, chart.name, points)
    return phi


@dataclass(frozen=True)
class FdReport:
    residual: float
    by_order: Dict[int, float]
    step: float


def _difference_weights(m: int, h: float):
    """Offsets and weights of the central difference delta_h^m (half-integer shifts for odd m)."""
    offsets = [(m / 2.0 - j) * h for j in range(m + 1)]
    weights = [(-1.0) ** j * math.comb(m, j) for j in range(m + 1)]
    return offsets, weights


def fd_validate(chart: ChartMap, point, order: int, h: float) -> FdReport:
    """Compare every partial derivative of the jet with tensor-product central differences.

    The error is O(h^2) for each derivative; residuals are relative to max(1, |exact|).
    """
    point = np.asarray(point, dtype=float).ravel()
    width = order * h / 2.0
    corners = np.array([point - width, point + width])
    if not np.all(chart.contains(corners)):
        raise JetDomainError(
            format_message(ChartMessages.FD_STENCIL_OUTSIDE, width=width, chart=chart.name, point=point.tolist())
        )
    jet = chart_jet(chart, point[None], order, check=False)
    by_order: Dict[int, float] = {}
    for alpha in multi_indices(order):
        degree = sum(alpha)
        if degree == 0:
            continue
        stencils = [_difference_weights(m, h) for m in alpha]
        shifts, coefficients = [], []
        for combo in product(*[range(m + 1) for m in alpha]):
            shifts.append([stencils[axis][0][j] for axis, j in enumerate(combo)])
            coefficients.append(math.prod(stencils[axis][1][j] for axis, j in enumerate(combo)))
        values = chart.evaluate(point + np.array(shifts))
        approx = np.einsum("s,sa->a", np.array(coefficients), values) / h ** degree
        exact = jet.partial(alpha)[0]
        error = float(np.max(np.abs(approx - exact)) / max(1.0, float(np.max(np.abs(exact)))))
        by_order[degree] = max(by_order.get(degree, 0.0), error)
    residual = max(by_order.values()) if by_order else 0.0
    return FdReport(residual=residual, by_order=by_order, step=h)
