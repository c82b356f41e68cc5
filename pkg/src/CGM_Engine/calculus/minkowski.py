"""Linear algebra on R^{6,1} (signature (6,1), timelike last coordinate).

Vectors are numpy arrays of shape (..., 7); the first six coordinates are
spacelike and the seventh is timelike:

    <u, v>_eta = u_1 v_1 + ... + u_6 v_6 - u_7 v_7

Wedge matrices keep raw upper indices, (a ^ b)^{ij} = a^i b^j - a^j b^i; any
contraction with eta is written out at the call site.
"""

import numpy as np

DIM = 7
SPACELIKE = 6

ETA = np.diag([1.0] * SPACELIKE + [-1.0])
ETA_DIAGONAL = np.diag(ETA).copy()


def eta_dot(u, v):
    """Compute the Minkowski pairing of u and v.

    Args:
        u, v: arrays of shape (..., 7)

    Returns:
        array of shape (...)
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sum(u[..., :SPACELIKE] * v[..., :SPACELIKE], axis=-1) - u[..., SPACELIKE] * v[..., SPACELIKE]


def eta_norm2(u):
    """Squared Minkowski norm |u|^2_eta (may be negative)."""
    return eta_dot(u, u)


def wedge(a, b):
    """Antisymmetric matrix (a ^ b)^{ij} = a^i b^j - a^j b^i.

    Args:
        a, b: arrays of shape (..., 7)

    Returns:
        array of shape (..., 7, 7)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    outer = np.einsum("...i,...j->...ij", a, b)
    return outer - np.swapaxes(outer, -1, -2)


def lorentz_residual(M):
    """Max-norm of M^T eta M - eta; zero iff M preserves eta."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.abs(np.swapaxes(M, -1, -2) @ ETA @ M - ETA)))


def so61_residual(Mdot):
    """Max-norm of Mdot^T eta + eta Mdot; zero iff Mdot lies in so(6,1)."""
    Mdot = np.asarray(Mdot, dtype=float)
    return float(np.max(np.abs(np.swapaxes(Mdot, -1, -2) @ ETA + ETA @ Mdot)))


def rotation_generator(i, j):
    """Generator of the rotation in the spacelike plane (e_i, e_j), 0-based indices."""
    if not (0 <= i < SPACELIKE and 0 <= j < SPACELIKE) or i == j:
        raise ValueError(f"Rotation plane needs two distinct spacelike axes, got ({i}, {j})")
    Mdot = np.zeros((DIM, DIM))
    Mdot[i, j] = -1.0
    Mdot[j, i] = 1.0
    return Mdot


def boost_generator(i):
    """Generator of the boost mixing the spacelike axis e_i with the timelike axis."""
    if not 0 <= i < SPACELIKE:
        raise ValueError(f"Boost axis must be spacelike (0..5), got {i}")
    Mdot = np.zeros((DIM, DIM))
    Mdot[i, SPACELIKE] = 1.0
    Mdot[SPACELIKE, i] = 1.0
    return Mdot


def rotation_matrix(i, j, angle):
    """Finite rotation by `angle` in the plane (e_i, e_j)."""
    M = np.eye(DIM)
    c, s = np.cos(angle), np.sin(angle)
    M[i, i] = c
    M[j, j] = c
    M[i, j] = -s
    M[j, i] = s
    return M


def boost_matrix(i, rapidity):
    """Finite boost with the given rapidity along the spacelike axis e_i."""
    M = np.eye(DIM)
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    M[i, i] = ch
    M[SPACELIKE, SPACELIKE] = ch
    M[i, SPACELIKE] = sh
    M[SPACELIKE, i] = sh
    return M


def generator_pairing(Mdot, C):
    """Contract a wedge field with a generator: C(Mdot) = -1/2 <eta Mdot, C>_F.

    For C = a ^ b this returns <Mdot a, b>_eta.

    Args:
        Mdot: (7, 7) element of so(6,1)
        C: array of shape (..., 7, 7)

    Returns:
        array of shape (...)
    """
    weight = ETA @ np.asarray(Mdot, dtype=float)
    return -0.5 * np.einsum("ij,...ij->...", weight, np.asarray(C, dtype=float))
