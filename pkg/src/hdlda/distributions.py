"""Univariate samplers and density evaluators.

Only the laws that the stochastic representations need are covered:
standard normal, central and noncentral chi-square, noncentral F and the
noncentral t density.  Samplers take an :class:`~hdlda.rng.RngStream` and an
optional ``size``; with ``size=None`` they return a Python float.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy import special, stats

from .rng import RngStream

#: Poisson tail mass dropped from the noncentral F density series.
SERIES_TAIL = 1e-12


def _check_dof(df, name="df"):
    arr = np.asarray(df)
    if np.any(arr < 1) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be >= 1, got {df!r}")
    return df


def _check_ncp(ncp):
    arr = np.asarray(ncp, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"noncentrality must be finite and >= 0, got {ncp!r}")
    return arr


def _scalar(out, size):
    return float(out) if size is None else out


def standard_normal_cdf(x):
    """Standard normal distribution function.

    Evaluated through the complementary error function, which keeps full
    relative accuracy in the lower tail (absolute error well below 1e-15).
    """
    out = special.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def sample_standard_normal(stream: RngStream, size=None):
    return _scalar(stream.generator.standard_normal(size), size)


def sample_chi_square(stream: RngStream, df, size=None):
    _check_dof(df)
    return _scalar(stream.generator.chisquare(df, size), size)


def sample_noncentral_chi_square(stream: RngStream, df, ncp, size=None):
    """Noncentral chi-square as a Poisson mixture of central chi-squares.

    Draws ``K ~ Poisson(ncp / 2)`` and returns a central chi-square with
    ``df + 2K`` degrees of freedom.  When every ``ncp`` is zero no Poisson
    variate is consumed, so the output coincides draw for draw with
    :func:`sample_chi_square` on the same stream.

    ``ncp`` may be an array; it is broadcast against ``size``.
    """
    _check_dof(df)
    ncp = _check_ncp(ncp)
    gen = stream.generator
    if not np.any(ncp):
        return _scalar(gen.chisquare(df, size), size)
    shape = size if size is not None else (np.shape(ncp) or None)
    k = gen.poisson(ncp / 2.0, shape)
    return _scalar(gen.chisquare(np.asarray(df) + 2 * k, shape), size)


def sample_noncentral_f(stream: RngStream, d1, d2, ncp, size=None):
    """Noncentral F: ``(chi2_{d1}(ncp) / d1) / (chi2_{d2} / d2)``.

    Numerator and denominator come from substreams 0 and 1 of ``stream``.
    """
    _check_dof(d1, "d1")
    _check_dof(d2, "d2")
    num = sample_noncentral_chi_square(stream.substream(0), d1, ncp, size)
    den = sample_chi_square(stream.substream(1), d2, np.shape(num) or None)
    return _scalar((np.asarray(num) / d1) / (np.asarray(den) / d2), size)


def noncentral_t_pdf(x, df, ncp):
    """Density of the noncentral t distribution (``ncp`` may be negative)."""
    _check_dof(df)
    out = stats.nct.pdf(np.asarray(x, dtype=float), df, np.asarray(ncp, dtype=float))
    out = np.where(np.isfinite(out), np.maximum(out, 0.0), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def central_f_pdf(x, d1, d2):
    """Density of the central F distribution, computed in log space."""
    x = np.asarray(x, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (
            0.5 * d1 * np.log(d1 / d2)
            + (0.5 * d1 - 1.0) * np.log(x)
            - 0.5 * (d1 + d2) * np.log1p(d1 * x / d2)
            - special.betaln(0.5 * d1, 0.5 * d2)
        )
    at_zero = np.where(d1 > 2, 0.0, np.where(d1 == 2, 1.0, np.inf))
    return np.where(x > 0, np.exp(np.where(x > 0, logpdf, 0.0)), at_zero)


def _poisson_window(mean):
    """Index range of a Poisson(mean) law holding all but SERIES_TAIL mass."""
    if mean == 0:
        return 0, 0
    lo = int(stats.poisson.ppf(SERIES_TAIL / 2, mean))
    hi = int(stats.poisson.isf(SERIES_TAIL / 2, mean)) + 1
    return max(lo, 0), hi


@functools.lru_cache(maxsize=256)
def _poisson_series(mean):
    lo, hi = _poisson_window(mean)
    ks = np.arange(lo, hi + 1)
    weights = stats.poisson.pmf(ks, mean) if mean > 0 else np.ones(1)
    return ks, weights


def noncentral_f_pdf(x, d1, d2, ncp):
    """Density of the noncentral F distribution.

    Poisson(ncp/2)-weighted series of scaled central F densities:
    given ``K = k`` the variate is ``(d1 + 2k)/d1`` times an
    ``F(d1 + 2k, d2)`` variate.  Terms outside the central Poisson window
    carry less than ``SERIES_TAIL`` total weight and are dropped.
    """
    _check_dof(d1, "d1")
    _check_dof(d2, "d2")
    ncp = float(_check_ncp(ncp))
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("noncentral F density is supported on x >= 0")
    ks, weights = _poisson_series(ncp / 2.0)
    xs = x[..., None]
    dk = d1 + 2.0 * ks
    terms = (d1 / dk) * central_f_pdf(d1 * xs / dk, dk, d2)
    out = np.sum(weights * terms, axis=-1)
    return float(out) if out.ndim == 0 else out


def student_t_cdf(x, df):
    _check_dof(df)
    out = special.stdtr(df, np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def student_t_quantile(prob, df):
    """Quantile of the central t distribution.

    Raises ``ValueError`` unless ``0 < prob < 1``.
    """
    _check_dof(df)
    p = np.asarray(prob, dtype=float)
    if np.any(~(p > 0)) or np.any(~(p < 1)):
        raise ValueError(f"prob must lie strictly inside (0, 1), got {prob!r}")
    # Invert the smaller tail and reflect: exact antisymmetry, exact median.
    lower = np.minimum(p, 1 - p)
    out = np.where(p == 0.5, 0.0, np.sign(p - 0.5) * -special.stdtrit(df, lower))
    return float(out) if np.ndim(out) == 0 else out


def chi_square_cdf(x, df):
    return special.chdtr(df, np.asarray(x, dtype=float))


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
