"""Deterministic compensated summation.

The kernels run with strict IEEE-754 semantics (fastmath=False): reassociation
would change the low-order bits from run to run and break report determinism.
"""

import numpy as np
from numba import njit


@njit(fastmath=False)
def neumaier_sum(values):
    """
    Neumaier (improved Kahan) sum of a 1-D float64 array, in array order.
    """
    total = 0.0
    compensation = 0.0
    for x in values:
        t = total + x
        if abs(total) >= abs(x):
            compensation += (total - t) + x
        else:
            compensation += (x - t) + total
        total = t
    return total + compensation


@njit(fastmath=False)
def neumaier_columns(values):
    """Column-wise Neumaier sums of a 2-D float64 array (rows summed in order)."""
    n_rows, n_cols = values.shape
    out = np.zeros(n_cols)
    for j in range(n_cols):
        total = 0.0
        compensation = 0.0
        for i in range(n_rows):
            x = values[i, j]
            t = total + x
            if abs(total) >= abs(x):
                compensation += (total - t) + x
            else:
                compensation += (x - t) + total
            total = t
        out[j] = total + compensation
    return out


def ordered_sum(partials) -> float:
    """Sum partial results in the given order with compensation."""
    return float(neumaier_sum(np.ascontiguousarray(np.asarray(partials, dtype=np.float64).ravel())))
