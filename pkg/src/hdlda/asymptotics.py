"""High-dimensional limits for ``p / (n1 + n2) -> c`` in ``[0, 1)``.

``gamma`` is the growth exponent of the Mahalanobis distance,
``Delta^2 = O(p^gamma)``; it is a modelling input and never estimated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import ProblemDims
from .stochastic import McSample, SampleKind, ThetaScalarParams


def _check_c(c):
    if not 0 <= c < 1:
        raise ValueError(f"concentration ratio c must lie in [0, 1), got {c!r}")


def _check_gamma(gamma):
    if not gamma >= 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma!r}")


@dataclass(frozen=True)
class CoefficientLimitParams:
    """Inputs of the asymptotic variance of ``l' a_hat``.

    lambda_n is ``(1/n1 + 1/n2) (n1 + n2)``, equal to 4 for balanced groups.
    """

    eta: float
    l_quad: float
    delta_sq: float
    c: float
    gamma: float
    lambda_n: float

    def __post_init__(self):
        _check_c(self.c)
        _check_gamma(self.gamma)
        if not self.l_quad > 0:
            raise ValueError("l_quad must be positive")
        if self.delta_sq < self.eta**2 / self.l_quad - 1e-10 * max(1.0, self.delta_sq):
            raise ValueError("delta_sq violates the Cauchy-Schwarz bound eta^2 / l_quad")

    @classmethod
    def from_theta(cls, params: ThetaScalarParams, gamma: float, c: float | None = None):
        """Use ``c = p / (n1 + n2)`` of the instance unless given."""
        dims = params.dims
        return cls(
            eta=params.eta,
            l_quad=params.l_quad,
            delta_sq=params.delta_sq,
            c=dims.c if c is None else c,
            gamma=gamma,
            lambda_n=dims.lam * dims.n,
        )


@dataclass(frozen=True)
class ScoreLimit:
    mean: float
    variance: float
    group: int


def sigma_gamma_sq(params: CoefficientLimitParams) -> float:
    """Asymptotic variance of ``sqrt(n1 + n2) (l' a_hat - eta / (1 - c))``."""
    _check_c(params.c)
    extra = params.lambda_n * params.l_quad if params.gamma == 0 else 0.0
    return (params.eta**2 + params.l_quad * params.delta_sq + extra) / (1 - params.c) ** 3


def standardize_theta(draws: McSample, params: CoefficientLimitParams, n_total: int) -> McSample:
    """Map ``theta`` to ``sqrt(n_total) / sigma_gamma * (theta - eta / (1 - c))``."""
    if draws.kind not in (SampleKind.THETA_REP, SampleKind.THETA_ORACLE):
        raise ValueError(f"cannot standardise draws of kind {draws.kind.value}")
    sigma = np.sqrt(sigma_gamma_sq(params))
    if sigma == 0:
        raise ValueError("sigma_gamma is zero")
    centre = params.eta / (1 - params.c)
    z = np.sqrt(n_total) / sigma * (draws.draws - centre)
    meta = {**draws.meta, "standardized": True, "gamma": params.gamma, "sigma_gamma": float(sigma)}
    return replace(draws, draws=z, meta=meta)


def unstandardize_theta(draws: McSample, params: CoefficientLimitParams, n_total: int) -> McSample:
    """Inverse of :func:`standardize_theta`."""
    sigma = np.sqrt(sigma_gamma_sq(params))
    theta = draws.draws * sigma / np.sqrt(n_total) + params.eta / (1 - params.c)
    meta = {k: v for k, v in draws.meta.items() if k not in ("standardized", "sigma_gamma")}
    return replace(draws, draws=theta, meta=meta)


def score_limit(gamma, c, b1, b2, delta_tilde_sq, group) -> ScoreLimit:
    """Limiting normal law of the rescaled, centred score ``d_hat``.

    ``b_i`` is the limit of ``lam * n_i``, so ``1/b1 + 1/b2 = 1``.  At
    ``gamma = 1`` both the ``[1, inf)`` and ``[0, 1]`` variance terms apply.
    """
    _check_c(c)
    _check_gamma(gamma)
    if group not in (1, 2):
        raise ValueError("group must be 1 or 2")
    if not (b1 > 0 and b2 > 0) or abs(1 / b1 + 1 / b2 - 1) > 1e-9:
        raise ValueError("b1, b2 must be positive with 1/b1 + 1/b2 = 1")
    if delta_tilde_sq < 0:
        raise ValueError("delta_tilde_sq must be nonnegative")
    b_i = b1 if group == 1 else b2
    sign = 1.0 if group == 1 else -1.0
    at_zero = 1.0 if gamma == 0 else 0.0
    mean = sign * c / (1 - c) * (b_i - 2) / (2 * b_i) * (b1 + b2) * at_zero
    variance = (
        c / (2 * (1 - c) ** 3) * delta_tilde_sq**2 * (gamma >= 1)
        + (c * (b1 + b2) * at_zero + delta_tilde_sq * (gamma <= 1)) / (1 - c) ** 3
    )
    if not variance > 0:
        raise ValueError("limit law is degenerate (zero variance)")
    return ScoreLimit(float(mean), float(variance), group)


def rescaled_score(d_hat, delta: float, dims: ProblemDims, gamma: float, group: int):
    """``p^{min(gamma,1)/2} (d_hat / p^gamma - r (-1)^{i-1} p^{-gamma} Delta^2 / 2)``
    with the finite-sample ratio ``r = (n - 2) / (n - p - 1)``."""
    p = dims.p
    sign = 1.0 if group == 1 else -1.0
    ratio = (dims.n - 2) / dims.xi_dof
    centre = ratio * sign * 0.5 * p ** (-gamma) * delta**2
    return p ** (min(gamma, 1) / 2) * (np.asarray(d_hat) / p**gamma - centre)
