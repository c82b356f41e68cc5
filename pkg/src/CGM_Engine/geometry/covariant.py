"""Covariant calculus on jets of tensor fields.

One implementation serves every metric in the engine (the induced metric g
and the metric of the conformal Gauss map). Christoffel symbols are stored
as gamma[k, i, j] = Gamma^k_{ij}; covariant derivatives put the derivative
index first. Tensors may carry trailing "ambient" axes (for instance the
seven components of a map into R^{6,1}) that the connection does not touch.
"""

from CGM_Engine.calculus.jets import Jet, jet_einsum

SLOT_LETTERS = "abcdefgh"
AMBIENT_LETTERS = "uvwxy"


def _split(T: Jet, rank):
    if rank is None:
        rank = len(T.shape)
    ambient = len(T.shape) - rank
    return SLOT_LETTERS[:rank], AMBIENT_LETTERS[:ambient]


def covariant_derivative(T: Jet, gamma: Jet, rank: int = None) -> Jet:
    """nabla_p T_{a b ...} for a tensor with `rank` lower indices (then ambient axes)."""
    slots, amb = _split(T, rank)
    result = T.gradient()
    for s, letter in enumerate(slots):
        replaced = slots[:s] + "q" + slots[s + 1:]
        result = result - jet_einsum(f"qp{letter},{replaced}{amb}->p{slots}{amb}", gamma, T)
    return result


def divergence(V: Jet, gamma: Jet) -> Jet:
    """div V = d_i V^i + Gamma^i_{ik} V^k for a vector field with upper first index."""
    amb = AMBIENT_LETTERS[: len(V.shape) - 1]
    dV = V.gradient()
    return dV.contract(f"ii{amb}->{amb}") + jet_einsum(f"iik,k{amb}->{amb}", gamma, V)


def hessian(f: Jet, gamma: Jet) -> Jet:
    """Covariant Hessian d_ij f - Gamma^k_ij d_k f (ambient axes allowed)."""
    return covariant_derivative(f.gradient(), gamma, rank=1)


def laplacian(f: Jet, gamma: Jet, metric_inverse: Jet) -> Jet:
    """Trace of the covariant Hessian."""
    amb = AMBIENT_LETTERS[: len(f.shape)]
    return jet_einsum(f"pa,pa{amb}->{amb}", metric_inverse, hessian(f, gamma))


def raise_first(T: Jet, metric_inverse: Jet) -> Jet:
    """Raise the first index of T with the inverse metric."""
    rest = (SLOT_LETTERS[1:] + AMBIENT_LETTERS)[: len(T.shape) - 1]
    return jet_einsum(f"pa,a{rest}->p{rest}", metric_inverse, T)


def christoffel_from_metric(metric: Jet, metric_inverse: Jet) -> Jet:
    """Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)."""
    dg = metric.gradient()  # [i, j, l] = d_i g_jl
    lowered = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
    return 0.5 * jet_einsum("kl,ijl->kij", metric_inverse, lowered)


def riemann_from_christoffel(gamma: Jet, metric: Jet) -> Jet:
    """All-lower Riemann tensor riem[i,j,k,l] = g_km R^m_{ijl}.

    R^m_{ijl} = d_i Gamma^m_jl - d_j Gamma^m_il + Gamma^m_ip Gamma^p_jl - Gamma^m_jp Gamma^p_il,
    so that the unit sphere gives riem = g_ik g_jl - g_il g_jk.
    """
    dgamma = gamma.gradient()  # [i, m, j, l]
    first = dgamma.transpose(1, 0, 2, 3)
    second = dgamma.transpose(1, 2, 0, 3)
    quadratic = jet_einsum("mip,pjl->mijl", gamma, gamma)
    rup = first - second + quadratic - quadratic.transpose(0, 2, 1, 3)
    return jet_einsum("km,mijl->ijkl", metric, rup)


def ricci_from_riemann(riem: Jet, metric_inverse: Jet) -> Jet:
    return jet_einsum("ik,ijkl->jl", metric_inverse, riem)


def scalar_from_ricci(ric: Jet, metric_inverse: Jet) -> Jet:
    return jet_einsum("jl,jl->", metric_inverse, ric)
