"""Exact tests comparing two population discriminant coefficients.

The statistic ``T`` is Student-t with ``n1 + n2 - p - 1`` degrees of freedom
whenever ``a_i = a_j``; off the null its density is a mixture of noncentral
t densities over a noncentral F law, see :func:`density_T`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from . import distributions as dist
from .model import PooledEstimates, PopulationModel, ProblemDims
from .rng import RngStream
from .stochastic import simulate_training


class Side(str, enum.Enum):
    TWO_SIDED = "two_sided"
    ONE_SIDED = "one_sided"


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, abserr):
        super().__init__(f"{message} (estimated error {abserr:.3g})")
        self.abserr = abserr


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    p_value: float
    reject: bool
    alpha: float
    side: Side

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        out = asdict(self)
        out["side"] = self.side.value
        return out


@dataclass(frozen=True)
class FTDensityParams:
    """Parameters of the law of ``T``.

    eta : l' sigma^{-1}(mu1 - mu2) / sqrt(l' sigma^{-1} l)  (normalised)
    s : (mu1 - mu2)' R_l (mu1 - mu2)
    """

    eta: float
    s: float
    dims: ProblemDims

    def __post_init__(self):
        if not self.s >= 0:
            raise ValueError("s must be nonnegative")


def contrast_vector(p: int, i: int, j: int) -> np.ndarray:
    """``e_i - e_j`` with 1-based ``i`` and ``j``."""
    if not (1 <= i <= p and 1 <= j <= p) or i == j:
        raise ValueError(f"need distinct coefficient indices in 1..{p}, got {i}, {j}")
    l = np.zeros(p)
    l[i - 1] = 1.0
    l[j - 1] = -1.0
    return l


def test_statistic(est: PooledEstimates, l) -> float:
    """The standardised contrast ``T`` of the coefficient estimates."""
    dims = est.dims
    l = np.asarray(l, dtype=float).reshape(-1)
    if l.shape[0] != dims.p or not np.any(l):
        raise ValueError("l must be a nonzero vector of length p")
    x = est.mean_diff
    sinv_l = est.solve(l)
    l_quad = float(l @ sinv_l)
    if not l_quad > 0:
        raise np.linalg.LinAlgError("l' S_pl^{-1} l is not positive")
    num = float(sinv_l @ x)
    resid = max(float(x @ est.solve(x)) - num**2 / l_quad, 0.0)
    denom = math.sqrt(l_quad) * math.sqrt((dims.n - 2) * dims.lam + resid)
    return math.sqrt(dims.xi_dof) * num / denom


test_statistic.__test__ = False


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")


def two_sided_test(t_value: float, dims: ProblemDims, alpha: float = 0.05) -> TestResult:
    """Reject ``a_i = a_j`` when ``|T|`` strictly exceeds the t quantile."""
    _check_alpha(alpha)
    dof = dims.xi_dof
    crit = dist.student_t_quantile(1 - alpha / 2, dof)
    p_value = min(1.0, 2.0 * dist.student_t_cdf(-abs(t_value), dof))
    return TestResult(float(t_value), dof, p_value, bool(abs(t_value) > crit), alpha, Side.TWO_SIDED)


def one_sided_test(t_value: float, dims: ProblemDims, alpha: float = 0.05) -> TestResult:
    """Reject ``a_i <= a_j`` when ``T`` strictly exceeds the t quantile."""
    _check_alpha(alpha)
    dof = dims.xi_dof
    crit = dist.student_t_quantile(1 - alpha, dof)
    p_value = dist.student_t_cdf(-t_value, dof)
    return TestResult(float(t_value), dof, p_value, bool(t_value > crit), alpha, Side.ONE_SIDED)


def _density_T_scalar(x, params, epsabs, epsrel):
    dims = params.dims
    n, p, lam = dims.n, dims.p, dims.lam
    dof = dims.xi_dof
    if p == 1:
        return dist.noncentral_t_pdf(x, dof, params.eta / math.sqrt(lam))
    scale = (n - p) / (lam * (p - 1))
    ncp = params.s / lam

    def integrand(t):
        if t >= 1.0:
            return 0.0
        y = t / (1.0 - t)
        jac = 1.0 / (1.0 - t) ** 2
        f_mix = dist.noncentral_f_pdf(scale * y, p - 1, n - p, ncp)
        if f_mix == 0.0:
            return 0.0
        return jac * f_mix * dist.noncentral_t_pdf(x, dof, params.eta / math.sqrt(lam + y))

    val, err, info = integrate.quad(
        integrand, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, limit=200, full_output=True
    )[:3]
    if err > max(epsabs, epsrel * abs(val)) * 10:
        raise QuadratureError("density of T did not converge", err)
    return max(scale * val, 0.0)


def density_T(x, params: FTDensityParams, epsabs: float = 1e-9, epsrel: float = 1e-6):
    """Density of ``T`` at ``x`` by adaptive quadrature over the F mixture.

    The half line of the mixing variable is mapped onto ``(0, 1)``.
    """
    xs = np.asarray(x, dtype=float)
    out = np.array([_density_T_scalar(v, params, epsabs, epsrel) for v in xs.reshape(-1)])
    return float(out[0]) if xs.ndim == 0 else out.reshape(xs.shape)


def simulate_test_statistic(stream: RngStream, model: PopulationModel, l, dims: ProblemDims, size: int):
    """Values of ``T`` computed from ``size`` simulated raw data sets."""
    l = np.asarray(l, dtype=float).reshape(-1)
    out = []
    for xbar1, xbar2, s_pl in simulate_training(stream, model, dims, size):
        x = xbar1 - xbar2
        b = x.shape[0]
        rhs = np.concatenate([np.broadcast_to(l, (b, dims.p))[..., None], x[..., None]], axis=2)
        sol = np.linalg.solve(s_pl, rhs)
        sinv_l, sinv_x = sol[..., 0], sol[..., 1]
        l_quad = sinv_l @ l
        num = np.einsum("bi,bi->b", sinv_l, x)
        resid = np.einsum("bi,bi->b", x, sinv_x) - num**2 / l_quad
        out.append(
            math.sqrt(dims.xi_dof) * num
            / (np.sqrt(l_quad) * np.sqrt((dims.n - 2) * dims.lam + np.maximum(resid, 0.0)))
        )
    return np.concatenate(out)


def model_for_density(eta: float, s: float, p: int, i: int = 1, j: int = 2):
    """A population (identity covariance) whose ``T`` law has the given
    normalised ``eta`` and ``s`` for the contrast ``e_i - e_j``.

    Needs ``p >= 3`` when ``s > 0``.
    """
    if s > 0 and p < 3:
        raise ValueError("s > 0 needs p >= 3")
    l = contrast_vector(p, i, j)
    d = eta * l / math.sqrt(2.0)
    if s > 0:
        k = next(idx for idx in range(p) if idx not in (i - 1, j - 1))
        d[k] = math.sqrt(s)
    return PopulationModel(d, np.zeros(p), np.eye(p)), l
