"""Truncated Taylor expansions ("jets") in four variables.

A jet of order K holds, for every multi-index alpha with |alpha| <= K, the
normalized coefficient d^alpha f / alpha! of a tensor-valued function at a
batch of base points. Coefficients live in one array of shape

    (n_coefficients(K), batch, *shape)

with multi-indices in graded lexicographic order, so truncating to a lower
order is a slice of the first axis.

Calling and combining jets
==========================

Standard operators work elementwise and broadcast over the tensor part the
way numpy does (a scalar jet times a vector jet is fine)::

    x = Jet.variables(points, order=4)       # shape (4,), the chart parameters
    r2 = jet_einsum("a,a->", x, x)           # |u|^2
    f = (r2 + 1.0).sqrt() * x[0]

Tensor contractions between two jets go through ``jet_einsum``, which takes
numpy subscripts written WITHOUT the coefficient and batch axes (the letter
``Z`` is reserved). Contractions with a constant tensor use ``Jet.apply`` or
``jet_einsum`` with a plain array operand.

Binary operations truncate both operands to the lower order. Products are
Cauchy products over multi-indices and never read a coefficient above the
result order; ``gradient`` lowers the order by one and puts the derivative
index first.
"""

import math
from functools import lru_cache

import numpy as np

from CGM_Engine.exceptions import DegeneracyError, JetDomainError, JetOrderError
from CGM_Engine.messages import JetMessages, format_message
from CGM_Engine.tolerance_rules import JetRules

N_VARS = JetRules.N_VARIABLES

# Inverse of a matrix jet is refused above this condition number
MAX_CONDITION = 1e14


def n_coefficients(order: int) -> int:
    """Number of multi-indices with |alpha| <= order in four variables."""
    return math.comb(order + N_VARS, N_VARS)


def _compositions(total, parts):
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def multi_indices(order: int):
    """Multi-indices of degree <= order in graded lexicographic order."""
    out = []
    for degree in range(order + 1):
        out.extend(_compositions(degree, N_VARS))
    return out


class JetSpace:
    """Index tables shared by all jets of one order."""

    def __init__(self, order: int):
        self.order = order
        alphas = multi_indices(order)
        self.alphas = np.array(alphas, dtype=np.int64).reshape(-1, N_VARS)
        self.size = len(alphas)
        self.index = {alpha: k for k, alpha in enumerate(alphas)}
        self.degrees = self.alphas.sum(axis=1)
        self.factorials = np.array(
            [math.prod(math.factorial(x) for x in alpha) for alpha in alphas], dtype=float
        )

        # Cauchy product pairs (p, q) -> p + q, grouped by target for reduceat
        left, right, target = [], [], []
        for p, a in enumerate(alphas):
            for q, b in enumerate(alphas):
                if self.degrees[p] + self.degrees[q] <= order:
                    left.append(p)
                    right.append(q)
                    target.append(self.index[tuple(x + y for x, y in zip(a, b))])
        target = np.array(target, dtype=np.int64)
        ordering = np.argsort(target, kind="stable")
        self.left = np.array(left, dtype=np.int64)[ordering]
        self.right = np.array(right, dtype=np.int64)[ordering]
        sorted_target = target[ordering]
        self.starts = np.flatnonzero(np.r_[True, sorted_target[1:] != sorted_target[:-1]])

        # d/du_i of sum c_beta u^beta: coefficient of beta is (beta_i + 1) c_{beta + e_i}
        self.shifts = []
        if order >= 1:
            lower = alphas[: n_coefficients(order - 1)]
            for var in range(N_VARS):
                sources, factors = [], []
                for beta in lower:
                    raised = list(beta)
                    raised[var] += 1
                    sources.append(self.index[tuple(raised)])
                    factors.append(beta[var] + 1.0)
                self.shifts.append((np.array(sources, dtype=np.int64), np.array(factors)))


@lru_cache(maxsize=None)
def jet_space(order: int) -> JetSpace:
    if not JetRules.MIN_ORDER <= order <= JetRules.MAX_ORDER:
        raise JetOrderError(
            format_message(JetMessages.ORDER_OUT_OF_RANGE, max_order=JetRules.MAX_ORDER, order=order)
        )
    return JetSpace(order)


def _expand(coeffs, ndim):
    """Insert singleton tensor axes after the batch axis up to `ndim` tensor axes."""
    missing = ndim - (coeffs.ndim - 2)
    if missing <= 0:
        return coeffs
    return coeffs.reshape(coeffs.shape[:2] + (1,) * missing + coeffs.shape[2:])


def _broadcast(a, b):
    ndim = max(a.ndim, b.ndim) - 2
    return _expand(a, ndim), _expand(b, ndim)


def _cauchy(a, b, order, combine):
    space = jet_space(order)
    terms = combine(a[space.left], b[space.right])
    return np.add.reduceat(terms, space.starts, axis=0)


def _multiply(a, b, order):
    a, b = _broadcast(a, b)
    return _cauchy(a, b, order, np.multiply)


def _binomial(p, k):
    out = 1.0
    for j in range(k):
        out *= (p - j) / (j + 1)
    return out


def _domain_error(function, values):
    offending = float(np.ravel(values)[0]) if np.size(values) else float("nan")
    return JetDomainError(format_message(JetMessages.DOMAIN, function=function, value=offending))


def _taylor_factors(function, x, order, exponent=None):
    """phi^(k)(x) / k! for k = 0..order."""
    if function == "power":
        p = float(exponent)
        integral = p == int(p)
        if integral and p >= 0:
            pass
        elif integral:
            if np.any(x == 0.0):
                raise _domain_error(f"x**{exponent}", x[x == 0.0])
        else:
            bad = x <= 0.0 if (order > 0 or p < 0) else x < 0.0
            if np.any(bad):
                raise _domain_error(f"x**{exponent}", x[bad])
        factors = []
        for k in range(order + 1):
            c = _binomial(p, k)
            if integral and p >= 0 and k > p:
                factors.append(np.zeros_like(x))
            else:
                factors.append(c * np.power(x, p - k) if c != 0.0 else np.zeros_like(x))
        return factors
    if function == "exp":
        e = np.exp(x)
        return [e / math.factorial(k) for k in range(order + 1)]
    if function == "log":
        if np.any(x <= 0.0):
            raise _domain_error("log", x[x <= 0.0])
        return [np.log(x)] + [(-1.0) ** (k + 1) / (k * x ** k) for k in range(1, order + 1)]
    if function == "sin":
        return [np.sin(x + k * np.pi / 2) / math.factorial(k) for k in range(order + 1)]
    if function == "cos":
        return [np.cos(x + k * np.pi / 2) / math.factorial(k) for k in range(order + 1)]
    raise JetDomainError(format_message(JetMessages.UNKNOWN_FUNCTION, function=function))


class Jet:
    """Batch of tensor-valued K-jets in four variables."""

    __slots__ = ("_coeffs", "_order")

    # numpy must hand mixed operations back to Jet
    __array_ufunc__ = None

    def __init__(self, coeffs, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        space = jet_space(order)
        if coeffs.ndim < 2 or coeffs.shape[0] != space.size:
            raise ValueError(
                f"Coefficient array of shape {coeffs.shape} does not fit a jet of order {order}"
            )
        self._coeffs = coeffs
        self._order = order

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int, batch: int = None) -> "Jet":
        """Jet with zero derivatives. Without `batch`, value carries the batch axis first."""
        value = np.asarray(value, dtype=float)
        if batch is not None:
            value = np.broadcast_to(value, (batch,) + value.shape)
        coeffs = np.zeros((n_coefficients(order),) + value.shape)
        coeffs[0] = value
        return cls(coeffs, order)

    @classmethod
    def variables(cls, points, order: int) -> "Jet":
        """Coordinate jet u -> u at each base point; points has shape (batch, 4)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[-1] != N_VARS:
            raise ValueError(f"Expected points with {N_VARS} coordinates, got shape {points.shape}")
        space = jet_space(order)
        coeffs = np.zeros((space.size, points.shape[0], N_VARS))
        coeffs[0] = points
        if order >= 1:
            for var in range(N_VARS):
                unit = tuple(1 if k == var else 0 for k in range(N_VARS))
                coeffs[space.index[unit], :, var] = 1.0
        return cls(coeffs, order)

    # ------------------------------------------------------------------
    # inspection
    # ------------------------------------------------------------------
    @property
    def order(self) -> int:
        return self._order

    @property
    def coeffs(self) -> np.ndarray:
        view = self._coeffs.view()
        view.flags.writeable = False
        return view

    @property
    def batch(self) -> int:
        return self._coeffs.shape[1]

    @property
    def shape(self) -> tuple:
        return self._coeffs.shape[2:]

    @property
    def value(self) -> np.ndarray:
        return self._coeffs[0]

    def partial(self, alpha) -> np.ndarray:
        """Value of the partial derivative d^alpha f (not divided by alpha!)."""
        space = jet_space(self._order)
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) > self._order:
            raise JetOrderError(
                format_message(
                    JetMessages.ORDER_TOO_LOW, operation="partial", required=sum(alpha), order=self._order
                )
            )
        k = space.index[alpha]
        return self._coeffs[k] * space.factorials[k]

    def require(self, order: int, operation: str) -> None:
        if self._order < order:
            raise JetOrderError(
                format_message(JetMessages.ORDER_TOO_LOW, operation=operation, required=order, order=self._order)
            )

    def truncate(self, order: int) -> "Jet":
        if order > self._order:
            self.require(order, "truncate")
        if order == self._order:
            return self
        return Jet(self._coeffs[: n_coefficients(order)], order)

    def select(self, indices) -> "Jet":
        """Sub-batch of base points."""
        return Jet(self._coeffs[:, indices], self._order)

    # ------------------------------------------------------------------
    # linear structure
    # ------------------------------------------------------------------
    def apply(self, fn) -> "Jet":
        """Apply a linear map acting on the coefficient array (leading axes: coefficient, batch)."""
        return Jet(fn(self._coeffs), self._order)

    def _aligned(self, other):
        order = min(self._order, other._order)
        a = self._coeffs[: n_coefficients(order)]
        b = other._coeffs[: n_coefficients(order)]
        return a, b, order

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, order = self._aligned(other)
            a, b = _broadcast(a, b)
            return Jet(a + b, order)
        value = self._coeffs[0] + np.asarray(other, dtype=float)
        coeffs = np.zeros((self._coeffs.shape[0],) + value.shape)
        coeffs[1:] = self._coeffs[1:]
        coeffs[0] = value
        return Jet(coeffs, self._order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self._coeffs, self._order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, order = self._aligned(other)
            return Jet(_multiply(a, b, order), order)
        return Jet(self._coeffs * np.asarray(other, dtype=float), self._order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self._coeffs / np.asarray(other, dtype=float), self._order)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)) and exponent >= 1:
            result = self
            for _ in range(int(exponent) - 1):
                result = result * self
            return result
        return self.power(exponent)

    # ------------------------------------------------------------------
    # tensor manipulation
    # ------------------------------------------------------------------
    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self._coeffs[(slice(None), slice(None)) + key], self._order)

    def transpose(self, *axes) -> "Jet":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        perm = (0, 1) + tuple(2 + a for a in axes)
        return Jet(np.transpose(self._coeffs, perm), self._order)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Jet(self._coeffs.reshape(self._coeffs.shape[:2] + tuple(shape)), self._order)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(len(self.shape)))
        elif isinstance(axis, int):
            axis = (axis,)
        return Jet(self._coeffs.sum(axis=tuple(2 + a for a in axis)), self._order)

    def contract(self, subscripts: str) -> "Jet":
        """Single-operand einsum on the tensor part, e.g. 'ii->' for a trace."""
        inputs, output = subscripts.split("->")
        return Jet(np.einsum(f"Z...{inputs}->Z...{output}", self._coeffs), self._order)

    # ------------------------------------------------------------------
    # calculus
    # ------------------------------------------------------------------
    def derivative(self, var: int) -> "Jet":
        self.require(1, "derivative")
        sources, factors = jet_space(self._order).shifts[var]
        scale = factors.reshape((-1,) + (1,) * (self._coeffs.ndim - 1))
        return Jet(self._coeffs[sources] * scale, self._order - 1)

    def gradient(self) -> "Jet":
        """Jet of the partial derivatives; the new index is the first tensor axis."""
        parts = [self.derivative(var)._coeffs for var in range(N_VARS)]
        return Jet(np.stack(parts, axis=2), self._order - 1)

    def compose(self, function: str, exponent=None) -> "Jet":
        """Elementwise phi(f) for phi in {power, exp, log, sin, cos}."""
        x = self._coeffs[0]
        factors = _taylor_factors(function, x, self._order, exponent)
        if self._order == 0:
            return Jet(factors[0][None], 0)
        delta = self._coeffs.copy()
        delta[0] = 0.0
        # Horner: sum_k phi^(k)(x)/k! delta^k
        result = np.zeros_like(self._coeffs)
        result[0] = factors[self._order]
        for k in range(self._order - 1, -1, -1):
            result = _cauchy(result, delta, self._order, np.multiply)
            result[0] = result[0] + factors[k]
        return Jet(result, self._order)

    def power(self, exponent) -> "Jet":
        return self.compose("power", exponent)

    def sqrt(self) -> "Jet":
        return self.compose("power", 0.5)

    def reciprocal(self) -> "Jet":
        return self.compose("power", -1)

    def exp(self) -> "Jet":
        return self.compose("exp")

    def log(self) -> "Jet":
        return self.compose("log")

    def sin(self) -> "Jet":
        return self.compose("sin")

    def cos(self) -> "Jet":
        return self.compose("cos")

    def inverse_matrix(self) -> "Jet":
        """Inverse of a square-matrix jet: sum_k (-M0^{-1} N)^k M0^{-1}."""
        base = self._coeffs[0]
        try:
            cond = np.linalg.cond(base)
            inv0 = np.linalg.inv(base)
        except np.linalg.LinAlgError as e:
            raise DegeneracyError(format_message(JetMessages.SINGULAR_MATRIX, cond=float("inf"))) from e
        worst = float(np.max(cond)) if np.size(cond) else 0.0
        if not np.isfinite(worst) or worst > MAX_CONDITION:
            raise DegeneracyError(format_message(JetMessages.SINGULAR_MATRIX, cond=worst))
        inverse = Jet.constant(inv0, self._order)
        if self._order == 0:
            return inverse
        nilpotent = self._coeffs.copy()
        nilpotent[0] = 0.0
        step = Jet(-np.einsum("b...ij,zb...jk->zb...ik", inv0, nilpotent), self._order)
        result = inverse
        for _ in range(self._order):
            result = inverse + jet_einsum("...ij,...jk->...ik", step, result)
        return result

    def __repr__(self):
        return f"Jet(order={self._order}, batch={self.batch}, shape={self.shape})"


def jet_einsum(subscripts: str, a, b) -> Jet:
    """Two-operand einsum on the tensor part of jets (or one jet and a constant array).

    Subscripts omit the coefficient and batch axes; ``...`` in them refers to
    extra leading tensor axes only when both operands are jets.
    """
    inputs, output = subscripts.split("->")
    sa, sb = inputs.split(",")
    if "..." in subscripts:
        sa, sb, output = (s.replace("...", "") for s in (sa, sb, output))
    if isinstance(a, Jet) and isinstance(b, Jet):
        x, y, order = a._aligned(b)
        space = jet_space(order)
        terms = np.einsum(f"Z...{sa},Z...{sb}->Z...{output}", x[space.left], y[space.right])
        return Jet(np.add.reduceat(terms, space.starts, axis=0), order)
    if isinstance(a, Jet):
        const = np.asarray(b, dtype=float)
        return Jet(np.einsum(f"Z...{sa},{sb}->Z...{output}", a._coeffs, const), a._order)
    if isinstance(b, Jet):
        const = np.asarray(a, dtype=float)
        return Jet(np.einsum(f"{sa},Z...{sb}->Z...{output}", const, b._coeffs), b._order)
    raise TypeError("jet_einsum needs at least one Jet operand")


def stack(jets, axis: int = 0) -> Jet:
    """Stack jets along a new tensor axis (orders truncated to the lowest)."""
    order = min(j.order for j in jets)
    parts = [j.truncate(order)._coeffs for j in jets]
    ndim = max(p.ndim for p in parts) - 2
    parts = [np.broadcast_to(_expand(p, ndim), np.broadcast_shapes(*[_expand(q, ndim).shape for q in parts])) for p in parts]
    return Jet(np.stack(parts, axis=2 + axis), order)


def concatenate(jets, axis: int = 0) -> Jet:
    """Concatenate jets along an existing tensor axis."""
    order = min(j.order for j in jets)
    parts = [j.truncate(order)._coeffs for j in jets]
    return Jet(np.concatenate(parts, axis=2 + axis), order)
