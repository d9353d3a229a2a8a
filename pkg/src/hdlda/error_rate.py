"""Misclassification rates of the optimal and the plug-in linear rule.

Group priors are equal.  The optimal rule knows ``(mu1, mu2, sigma)`` and
errs with probability ``Phi(-Delta / 2)``; the plug-in rule uses
``(xbar1, xbar2, S_pl)`` and its rate is estimated by simulating the
classification score, or approximated by its high-dimensional limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import standard_normal_cdf
from .model import PooledEstimates, PopulationModel, ProblemDims
from .rng import RngStream, replicate
from .stochastic import DHatParams, brute_force_d_hat, sample_d_hat

DEFAULT_B = 100_000


class Method(str, enum.Enum):
    POPULATION = "population"
    MC_FINITE = "mc_finite"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class ErrorRateEstimate:
    """Monte Carlo error rate with its binomial standard error.

    ``miss1`` is the share of group-1 draws sent to group 2, ``miss2`` the
    share of group-2 draws sent to group 1.
    """

    value: float
    se: float
    miss1: float
    miss2: float
    n_draws: int

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class AsymptoticErParams:
    """``b_i`` are the limits of ``lam * n_i``; they satisfy ``1/b1 + 1/b2 = 1``."""

    gamma: float
    c: float
    b1: float = 2.0
    b2: float = 2.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be nonnegative")
        if not 0 <= self.c < 1:
            raise ValueError("c must lie in [0, 1)")
        if not (self.b1 > 0 and self.b2 > 0) or abs(1 / self.b1 + 1 / self.b2 - 1) > 1e-9:
            raise ValueError("b1, b2 must be positive with 1/b1 + 1/b2 = 1")

    @classmethod
    def from_dims(cls, dims: ProblemDims, gamma: float) -> "AsymptoticErParams":
        return cls(gamma, dims.c, dims.lam * dims.n1, dims.lam * dims.n2)


@dataclass
class ErrorRateCurve:
    deltas: np.ndarray
    er_values: np.ndarray
    method: Method
    config: dict = field(default_factory=dict)
    se: np.ndarray | None = None

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.er_values = np.asarray(self.er_values, dtype=float)
        self.method = Method(self.method)
        if self.deltas.shape != self.er_values.shape:
            raise ValueError("deltas and er_values differ in length")
        if np.any((self.er_values < 0) | (self.er_values > 1)):
            raise ValueError("error rates must lie in [0, 1]")


def er_population(delta):
    """``Phi(-Delta / 2)``."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0):
        raise ValueError("delta must be nonnegative")
    return standard_normal_cdf(-delta / 2)


def _binomial_se(miss1, miss2, b):
    return 0.5 * math.sqrt((miss1 * (1 - miss1) + miss2 * (1 - miss2)) / b)


def er_sample_mc(
    delta: float,
    dims: ProblemDims,
    B: int = DEFAULT_B,
    stream: RngStream | None = None,
    threads: int = 1,
) -> ErrorRateEstimate:
    """Error rate of the plug-in rule from ``B`` score draws per group.

    Group ``i`` draws come from ``stream.substream(i)``.  A score of exactly
    zero counts as an assignment to group 2.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    stream = RngStream(0) if stream is None else stream
    draws = {}
    for group in (1, 2):
        params = DHatParams(delta, dims, group)
        draws[group] = replicate(
            lambda s, m, params=params: sample_d_hat(s, params, m), B, stream.substream(group), threads
        )
    miss1 = float(np.mean(draws[1] <= 0))
    miss2 = float(np.mean(draws[2] > 0))
    return ErrorRateEstimate(0.5 * (miss1 + miss2), _binomial_se(miss1, miss2, B), miss1, miss2, B)


def er_sample_raw(
    model: PopulationModel,
    dims: ProblemDims,
    B: int,
    stream: RngStream | None = None,
    threads: int = 1,
) -> ErrorRateEstimate:
    """Error rate of the plug-in rule by direct simulation: train on fresh
    data, classify one fresh observation, count mistakes."""
    stream = RngStream(0) if stream is None else stream
    draws = {}
    for group in (1, 2):
        draws[group] = replicate(
            lambda s, m, g=group: brute_force_d_hat(s, model, dims, g, m), B, stream.substream(group), threads
        )
    miss1 = float(np.mean(draws[1] <= 0))
    miss2 = float(np.mean(draws[2] > 0))
    return ErrorRateEstimate(0.5 * (miss1 + miss2), _binomial_se(miss1, miss2, B), miss1, miss2, B)


def _phi_ratio(num, den):
    if den > 0:
        return standard_normal_cdf(num / den)
    if num == 0:
        return 0.5
    return 1.0 if num > 0 else 0.0


def er_sample_asymptotic(delta: float, p: int, params: AsymptoticErParams) -> float:
    """High-dimensional approximation of the plug-in error rate.

    ``Delta~^2`` is replaced by ``p^-gamma Delta^2`` and the finite ratio
    ``(n - 2)/(n - p - 1)`` by ``1 / (1 - c)``.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    g, c, b1, b2 = params.gamma, params.c, params.b1, params.b2
    d2 = p ** (-g) * delta**2
    a = d2 / (2 * (1 - c))
    scale = p ** (min(g, 1) / 2)
    at_zero = 1.0 if g == 0 else 0.0
    m1 = c / (1 - c) * (b1 - 2) / (2 * b1) * (b1 + b2) * at_zero
    m2 = -c / (1 - c) * (b2 - 2) / (2 * b2) * (b1 + b2) * at_zero
    v2 = c / (2 * (1 - c) ** 3) * d2**2 * (g >= 1) + (c * (b1 + b2) * at_zero + d2 * (g <= 1)) / (1 - c) ** 3
    v = math.sqrt(v2)
    return 0.5 * (1 - _phi_ratio(a * scale - m2, v)) + 0.5 * _phi_ratio(-a * scale - m1, v)


def h_c_factor(delta: float, p: int, c: float, gamma: float) -> float:
    """Shrinkage of ``Delta`` in the balanced-sample asymptotic error rate,
    ``ER_s = Phi(-h_c Delta / 2)``.

    For ``gamma`` in ``(0, 1)`` this is ``sqrt(1 - c)``.
    """
    if not 0 <= c < 1:
        raise ValueError("c must lie in [0, 1)")
    if not gamma >= 0 or not delta >= 0:
        raise ValueError("gamma and delta must be nonnegative")
    d2 = p ** (-gamma) * delta**2
    den = c * d2**2 * (gamma >= 1) / 2 + 4 * c * (gamma == 0) + d2 * (gamma <= 1)
    if den <= 0:
        raise ValueError("h_c is undefined here (zero asymptotic variance)")
    return p ** ((min(gamma, 1) - gamma) / 2) * math.sqrt(1 - c) * math.sqrt(d2) / math.sqrt(den)


def classify(x_new, est: PooledEstimates) -> int:
    """Plug-in rule: group 1 iff the estimated score is strictly positive."""
    x_new = np.asarray(x_new, dtype=float).reshape(-1)
    if x_new.shape[0] != est.dims.p:
        raise ValueError("x_new has the wrong dimension")
    score = float(est.solve(est.mean_diff) @ (x_new - 0.5 * (est.xbar1 + est.xbar2)))
    return 1 if score > 0 else 2


def classify_population(x_new, model: PopulationModel) -> int:
    """Optimal rule with known parameters."""
    x_new = np.asarray(x_new, dtype=float).reshape(-1)
    if x_new.shape[0] != model.p:
        raise ValueError("x_new has the wrong dimension")
    score = float(model.coefficients @ (x_new - 0.5 * (model.mu1 + model.mu2)))
    return 1 if score > 0 else 2


def error_rate_curve(deltas, method, dims: ProblemDims | None = None, *, B=DEFAULT_B,
                     stream: RngStream | None = None, gamma: float = 0.0, threads: int = 1) -> ErrorRateCurve:
    """Evaluate one of the three error rates on a grid of distances.

    Monte Carlo points use ``stream.substream(k)`` for the k-th distance.
    """
    method = Method(method)
    deltas = np.asarray(deltas, dtype=float)
    se = None
    config = {"method": method.value}
    if dims is not None:
        config.update(p=dims.p, n1=dims.n1, n2=dims.n2)
    if method is Method.POPULATION:
        values = er_population(deltas)
    elif method is Method.MC_FINITE:
        if dims is None:
            raise ValueError("Monte Carlo error rates need dims")
        stream = RngStream(0) if stream is None else stream
        ests = [er_sample_mc(d, dims, B, stream.substream(k), threads) for k, d in enumerate(deltas)]
        values = np.array([e.value for e in ests])
        se = np.array([e.se for e in ests])
        config.update(B=B, seed=stream.seed)
    else:
        if dims is None:
            raise ValueError("asymptotic error rates need dims")
        params = AsymptoticErParams.from_dims(dims, gamma)
        values = np.array([er_sample_asymptotic(d, dims.p, params) for d in deltas])
        config.update(gamma=gamma)
    return ErrorRateCurve(deltas, np.atleast_1d(values), method, config, se)
