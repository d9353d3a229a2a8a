"""Two-group Gaussian model: dimensions, estimators and linear algebra.

Observation matrices follow the p x n convention: each column is one
observation vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .rng import RngStream

#: Smallest acceptable reciprocal condition estimate for S_pl.
RCOND_MIN = 1e-12


class SingularCovarianceError(np.linalg.LinAlgError):
    """A covariance matrix is singular or too ill-conditioned to factor."""


@dataclass(frozen=True)
class ProblemDims:
    """Dimension ``p`` and group sizes ``n1``, ``n2``.

    Requires ``p < n1 + n2 - 2`` so that the pooled covariance is almost
    surely nonsingular.
    """

    p: int
    n1: int
    n2: int

    def __post_init__(self):
        for name in ("p", "n1", "n2"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("each group needs at least two observations")
        if not self.p < self.n1 + self.n2 - 2:
            raise ValueError(
                f"need p < n1 + n2 - 2, got p={self.p}, n1={self.n1}, n2={self.n2}"
            )

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def lam(self) -> float:
        return 1.0 / self.n1 + 1.0 / self.n2

    @property
    def c(self) -> float:
        return self.p / self.n

    @property
    def xi_dof(self) -> int:
        """Degrees of freedom n1 + n2 - p - 1."""
        return self.n - self.p - 1


@dataclass(frozen=True)
class PopulationModel:
    mu1: np.ndarray
    mu2: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu1 = np.asarray(self.mu1, dtype=float).reshape(-1)
        mu2 = np.asarray(self.mu2, dtype=float).reshape(-1)
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        p = mu1.shape[0]
        if mu2.shape != (p,) or sigma.shape != (p, p):
            raise ValueError("mu1, mu2 and sigma have inconsistent shapes")
        if not (np.all(np.isfinite(mu1)) and np.all(np.isfinite(mu2))):
            raise ValueError("mean vectors must be finite")
        if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
            raise ValueError("sigma must be symmetric")
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "mu2", mu2)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_chol", cholesky(sigma))

    @property
    def p(self) -> int:
        return self.mu1.shape[0]

    @property
    def mean_diff(self) -> np.ndarray:
        return self.mu1 - self.mu2

    @property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor of sigma."""
        return self._chol

    def solve(self, b):
        """``sigma^{-1} b``."""
        return linalg.cho_solve((self._chol, True), b)

    def sigma_inv(self) -> np.ndarray:
        return self.solve(np.eye(self.p))

    @property
    def coefficients(self) -> np.ndarray:
        """Population discriminant coefficients ``sigma^{-1}(mu1 - mu2)``."""
        return self.solve(self.mean_diff)


@dataclass(frozen=True)
class GroupSample:
    observations: np.ndarray
    group_label: int = 1

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.observations, dtype=float))
        if x.shape[1] < 2:
            raise ValueError("a group sample needs at least two observations")
        if not np.all(np.isfinite(x)):
            raise ValueError("observations contain non-finite entries")
        if self.group_label not in (1, 2):
            raise ValueError("group_label must be 1 or 2")
        object.__setattr__(self, "observations", x)

    @property
    def p(self) -> int:
        return self.observations.shape[0]

    @property
    def n(self) -> int:
        return self.observations.shape[1]


@dataclass(frozen=True)
class PooledEstimates:
    xbar1: np.ndarray
    xbar2: np.ndarray
    s_pl: np.ndarray
    dims: ProblemDims
    chol: np.ndarray

    @property
    def mean_diff(self) -> np.ndarray:
        return self.xbar1 - self.xbar2

    def solve(self, b):
        """``S_pl^{-1} b`` through the stored Cholesky factor."""
        return linalg.cho_solve((self.chol, True), b)


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with a conditioning guard.

    Raises :class:`SingularCovarianceError` when the factorisation fails or
    the squared ratio of extreme diagonal entries of the factor (a cheap
    reciprocal-condition estimate) falls below ``RCOND_MIN``.
    """
    try:
        low = linalg.cholesky(m, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularCovarianceError("matrix is not positive definite") from exc
    d = np.abs(np.diag(low))
    if d.min() == 0 or (d.min() / d.max()) ** 2 < RCOND_MIN:
        raise SingularCovarianceError("matrix is numerically singular")
    return low


def pooled_estimates(x1: GroupSample, x2: GroupSample) -> PooledEstimates:
    """Group means and the pooled covariance ``S_pl``."""
    if x1.p != x2.p:
        raise ValueError(f"dimension mismatch: {x1.p} vs {x2.p}")
    dims = ProblemDims(x1.p, x1.n, x2.n)
    xbar1 = x1.observations.mean(axis=1)
    xbar2 = x2.observations.mean(axis=1)
    c1 = x1.observations - xbar1[:, None]
    c2 = x2.observations - xbar2[:, None]
    s_pl = (c1 @ c1.T + c2 @ c2.T) / (dims.n - 2)
    s_pl = 0.5 * (s_pl + s_pl.T)
    return PooledEstimates(xbar1, xbar2, s_pl, dims, cholesky(s_pl))


def discriminant_coefficients(est: PooledEstimates) -> np.ndarray:
    """Sample coefficients ``S_pl^{-1}(xbar1 - xbar2)`` by Cholesky solve."""
    return est.solve(est.mean_diff)


def mahalanobis_delta_sq(model: PopulationModel) -> float:
    d = model.mean_diff
    return max(float(d @ model.solve(d)), 0.0)


def projection_residual_matrix(sigma_inv: np.ndarray, l: np.ndarray) -> np.ndarray:
    """``R_l = S - S l l' S / (l' S l)`` for ``S = sigma_inv``."""
    sigma_inv = np.atleast_2d(np.asarray(sigma_inv, dtype=float))
    l = np.asarray(l, dtype=float).reshape(-1)
    sl = sigma_inv @ l
    q = float(l @ sl)
    if not np.any(l) or q <= 0:
        raise ValueError("l must be nonzero with l' sigma^{-1} l > 0")
    r = sigma_inv - np.outer(sl, sl) / q
    return 0.5 * (r + r.T)


def spd_sqrt(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric square root of a positive semi-definite matrix.

    Eigenvalues in ``[-tol * ||m||, 0)`` are clamped to zero; anything more
    negative raises ``ValueError``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    scale = max(np.linalg.norm(m, 2), np.finfo(float).tiny)
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * scale):
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    if w.min() < -tol * scale:
        raise ValueError(f"matrix has a negative eigenvalue {w.min():.3g}")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return 0.5 * (root + root.T)


def sample_mvn(stream: RngStream, mean, cov, size=None):
    """Multivariate normal draws ``mean + chol(cov) z``.

    With ``size=None`` a single vector is returned, otherwise an array of
    shape ``(size, p)``.
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    low = cholesky(np.atleast_2d(np.asarray(cov, dtype=float)))
    z = stream.generator.standard_normal((1 if size is None else size, mean.shape[0]))
    out = mean + z @ low.T
    return out[0] if size is None else out
