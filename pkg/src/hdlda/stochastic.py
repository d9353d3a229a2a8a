"""Exact samplers for linear combinations of discriminant coefficients and
for the plug-in classification score, with raw-data oracles.

The representation samplers need only a handful of univariate draws per
replication, so they are cheap even when ``p`` is in the hundreds.  The
``brute_force_*`` oracles regenerate complete training samples every time
and serve as the independent reference for the representations.

Substream layout (fixed, part of the reproducibility contract):

=========  ======================================================
sampler    substreams
=========  ======================================================
theta      0: xi, 1: z0, 2: u
theta_vec  0: xi, 1: x-check, 2: t0 normal part, 3: t0 chi-square
d_hat      0: xi, 1: z0, 2: w0, 3: xi2, 4: xi1, 5: u
raw data   0: group-1 sample, 1: group-2 sample, 2: new observation
=========  ======================================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import distributions as dist
from .model import PopulationModel, ProblemDims, projection_residual_matrix
from .rng import RngStream

# Raw-data oracles work in chunks of about this many matrix entries.
_CHUNK_ENTRIES = 2_000_000


class SampleKind(str, enum.Enum):
    THETA_REP = "theta_rep"
    THETA_ORACLE = "theta_oracle"
    DHAT_REP = "dhat_rep"
    DHAT_ORACLE = "dhat_oracle"
    T_STAT = "t_stat"


@dataclass
class McSample:
    """Draws tagged with how they were produced."""

    draws: np.ndarray
    kind: SampleKind
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.asarray(self.draws, dtype=float)
        self.kind = SampleKind(self.kind)
        if not np.all(np.isfinite(self.draws)):
            raise ValueError("draws must be finite")

    def __len__(self):
        return self.draws.shape[0]


@dataclass(frozen=True)
class ThetaScalarParams:
    """Parameters of the law of ``l' a_hat``.

    eta : l' sigma^{-1} (mu1 - mu2)
    l_quad : l' sigma^{-1} l
    s : (mu1 - mu2)' R_l (mu1 - mu2)
    """

    eta: float
    l_quad: float
    s: float
    dims: ProblemDims

    def __post_init__(self):
        if not self.l_quad > 0:
            raise ValueError("l_quad must be positive")
        if self.s < -1e-10:
            raise ValueError("s must be nonnegative")
        object.__setattr__(self, "s", max(float(self.s), 0.0))

    @classmethod
    def from_model(cls, model: PopulationModel, l, dims: ProblemDims) -> "ThetaScalarParams":
        l = np.asarray(l, dtype=float).reshape(-1)
        if l.shape[0] != model.p or dims.p != model.p:
            raise ValueError("l, model and dims disagree on p")
        d = model.mean_diff
        sinv_l = model.solve(l)
        eta = float(sinv_l @ d)
        l_quad = float(l @ sinv_l)
        s = float(d @ projection_residual_matrix(model.sigma_inv(), l) @ d)
        return cls(eta, l_quad, s, dims)

    @property
    def delta_sq(self) -> float:
        """Mahalanobis distance implied by eta, l_quad and s."""
        return self.s + self.eta**2 / self.l_quad


@dataclass(frozen=True)
class DHatParams:
    delta: float
    dims: ProblemDims
    true_group: int = 1

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be nonnegative")
        if self.true_group not in (1, 2):
            raise ValueError("true_group must be 1 or 2")


def _scalar(out, size):
    return float(out[0]) if size is None else out


def sample_theta_scalar(stream: RngStream, params: ThetaScalarParams, size=None):
    """Draws of ``l' a_hat`` from its three-variable representation.

    ``(n-2)/xi * (eta + sqrt((lam + lam (p-1) u / (n-p)) l_quad) z0)`` with
    ``xi ~ chi2(n-p-1)``, ``z0 ~ N(0,1)`` and ``u`` noncentral
    ``F(p-1, n-p, s/lam)``.  For ``p = 1`` the F term is identically zero.
    """
    dims = params.dims
    n, p, lam = dims.n, dims.p, dims.lam
    m = 1 if size is None else size
    xi = dist.sample_chi_square(stream.substream(0), dims.xi_dof, m)
    z0 = dist.sample_standard_normal(stream.substream(1), m)
    if p > 1:
        u = dist.sample_noncentral_f(stream.substream(2), p - 1, n - p, params.s / lam, m)
    else:
        u = np.zeros(m)
    scale = np.sqrt((lam + lam * (p - 1) * u / (n - p)) * params.l_quad)
    return _scalar((n - 2) / xi * (params.eta + scale * z0), size)


def _check_rank(l_mat: np.ndarray, p: int) -> int:
    k = l_mat.shape[0]
    if l_mat.shape[1] != p:
        raise ValueError(f"L must have {p} columns")
    if k >= p:
        raise ValueError("L must have fewer rows than columns")
    r = linalg.qr(l_mat.T, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    if diag.size < k or diag[-1] <= 1e-10 * max(diag[0], 1e-300):
        raise ValueError("L is rank deficient")
    return k


def _batched_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return np.einsum("bij,bj,bkj->bik", v, np.sqrt(w), v)


def sample_theta_vector(stream: RngStream, model: PopulationModel, l_mat, dims: ProblemDims, size=None):
    """Draws of ``L a_hat`` for a ``k x p`` matrix ``L`` of rank ``k < p``.

    Returns shape ``(k,)`` when ``size`` is None, else ``(size, k)``.
    """
    l_mat = np.atleast_2d(np.asarray(l_mat, dtype=float))
    if dims.p != model.p:
        raise ValueError("dims and model disagree on p")
    k = _check_rank(l_mat, dims.p)
    n, p, lam = dims.n, dims.p, dims.lam
    m = 1 if size is None else size
    xi = dist.sample_chi_square(stream.substream(0), dims.xi_dof, m)
    z = stream.substream(1).generator.standard_normal((m, p))
    x_check = model.mean_diff + np.sqrt(lam) * z @ model.chol.T
    sinv_x = model.solve(x_check.T).T
    q = np.einsum("bi,bi->b", x_check, sinv_x)
    a = sinv_x @ l_mat.T
    lsl = l_mat @ model.solve(l_mat.T)
    core = lsl[None] - a[:, :, None] * a[:, None, :] / q[:, None, None]
    core = 0.5 * (core + np.swapaxes(core, 1, 2))
    z_t = stream.substream(2).generator.standard_normal((m, k))
    w = dist.sample_chi_square(stream.substream(3), n - p, m)
    t0 = z_t / np.sqrt(w / (n - p))[:, None]
    spread = np.einsum("bij,bj->bi", _batched_sqrt(core), t0)
    out = (n - 2) / xi[:, None] * (a + np.sqrt(q / (n - p))[:, None] * spread)
    return out[0] if size is None else out


def sample_d_hat(stream: RngStream, params: DHatParams, size=None):
    """Draws of the plug-in score ``d_hat`` for a new observation of group i.

    Follows the six-variable representation: ``xi``, ``xi2``, ``z0``, ``w0``
    are independent; ``xi1`` is noncentral chi-square given ``(xi2, w0)``
    and ``u`` is noncentral F given ``xi1``.  For ``p = 1`` the terms in
    ``xi2`` and ``u`` vanish.
    """
    dims = params.dims
    n, p, lam = dims.n, dims.p, dims.lam
    n_i = dims.n1 if params.true_group == 1 else dims.n2
    sign = 1.0 if params.true_group == 1 else -1.0
    delta = float(params.delta)
    m = 1 if size is None else size

    xi = dist.sample_chi_square(stream.substream(0), dims.xi_dof, m)
    z0 = dist.sample_standard_normal(stream.substream(1), m)
    w0 = dist.sample_standard_normal(stream.substream(2), m)
    shifted = (delta + np.sqrt(lam) * w0) ** 2
    if p > 1:
        xi2 = dist.sample_chi_square(stream.substream(3), p - 1, m)
        quad = lam * xi2 + shifted
        with np.errstate(invalid="ignore", divide="ignore"):
            ncp = np.where(quad > 0, dims.n1 * dims.n2 / n_i**2 * delta**2 * xi2 / quad, 0.0)
        xi1 = dist.sample_noncentral_chi_square(stream.substream(4), p - 1, ncp, m)
        u = dist.sample_noncentral_f(stream.substream(5), p - 1, n - p, xi1 / n, m)
    else:
        quad = shifted
        u = np.zeros(m)

    lead = sign * (lam * n_i - 2) / (2 * lam * n_i) * quad
    cross = sign / (lam * n_i) * (delta**2 + np.sqrt(lam) * delta * w0)
    noise = np.sqrt((1 + 1 / n + (p - 1) / (n - p) * u) * quad) * z0
    return _scalar((n - 2) / xi * (lead + cross + noise), size)


def _chunks(total: int, per_item: int):
    step = max(1, _CHUNK_ENTRIES // max(per_item, 1))
    start = 0
    while start < total:
        yield min(step, total - start)
        start += step


def simulate_training(stream: RngStream, model: PopulationModel, dims: ProblemDims, size: int):
    """Yield chunks ``(xbar1, xbar2, s_pl)`` of freshly simulated training sets.

    Shapes are ``(b, p)``, ``(b, p)`` and ``(b, p, p)``; chunk sizes sum to
    ``size``.  Group samples come from substreams 0 and 1.
    """
    if dims.p != model.p:
        raise ValueError("dims and model disagree on p")
    p, n1, n2 = dims.p, dims.n1, dims.n2
    g1 = stream.substream(0).generator
    g2 = stream.substream(1).generator
    low = model.chol
    for b in _chunks(size, dims.n * p):
        x1 = model.mu1 + g1.standard_normal((b, n1, p)) @ low.T
        x2 = model.mu2 + g2.standard_normal((b, n2, p)) @ low.T
        xbar1 = x1.mean(axis=1)
        xbar2 = x2.mean(axis=1)
        c1 = x1 - xbar1[:, None, :]
        c2 = x2 - xbar2[:, None, :]
        s_pl = (np.swapaxes(c1, 1, 2) @ c1 + np.swapaxes(c2, 1, 2) @ c2) / (dims.n - 2)
        yield xbar1, xbar2, s_pl


def brute_force_theta(stream: RngStream, model: PopulationModel, l, dims: ProblemDims, size=None):
    """``l' S_pl^{-1}(xbar1 - xbar2)`` computed from simulated raw data."""
    l = np.asarray(l, dtype=float).reshape(-1)
    m = 1 if size is None else size
    out = []
    for xbar1, xbar2, s_pl in simulate_training(stream, model, dims, m):
        a_hat = np.linalg.solve(s_pl, (xbar1 - xbar2)[..., None])[..., 0]
        out.append(a_hat @ l)
    return _scalar(np.concatenate(out), size)


def brute_force_d_hat(stream: RngStream, model: PopulationModel, dims: ProblemDims, true_group: int, size=None):
    """The plug-in score of a fresh observation from ``true_group``,
    computed from simulated training data."""
    if true_group not in (1, 2):
        raise ValueError("true_group must be 1 or 2")
    m = 1 if size is None else size
    gx = stream.substream(2).generator
    mu = model.mu1 if true_group == 1 else model.mu2
    out = []
    for xbar1, xbar2, s_pl in simulate_training(stream, model, dims, m):
        b = xbar1.shape[0]
        x = mu + gx.standard_normal((b, dims.p)) @ model.chol.T
        a_hat = np.linalg.solve(s_pl, (xbar1 - xbar2)[..., None])[..., 0]
        out.append(np.einsum("bi,bi->b", a_hat, x - 0.5 * (xbar1 + xbar2)))
    return _scalar(np.concatenate(out), size)


def brute_force_xi(stream: RngStream, model: PopulationModel, dims: ProblemDims, size: int):
    """``(n-2) x' sigma^{-1} x / x' S_pl^{-1} x`` with ``x = xbar1 - xbar2``
    from raw data; chi-square with ``n-p-1`` degrees of freedom."""
    out = []
    for xbar1, xbar2, s_pl in simulate_training(stream, model, dims, size):
        x = xbar1 - xbar2
        num = np.einsum("bi,bi->b", x, model.solve(x.T).T)
        den = np.einsum("bi,bi->b", x, np.linalg.solve(s_pl, x[..., None])[..., 0])
        out.append((dims.n - 2) * num / den)
    return np.concatenate(out)


def delta_sq_noncentrality(n1: int, n2: int, group: int) -> tuple[float, float]:
    """Both forms of the d_hat noncentrality prefactor:
    ``(n1+n2) lam / (lam n_i)^2`` and ``n1 n2 / n_i^2``."""
    n_i = n1 if group == 1 else n2
    lam = 1 / n1 + 1 / n2
    return (n1 + n2) / (lam**2 * n_i**2) * lam, n1 * n2 / n_i**2
