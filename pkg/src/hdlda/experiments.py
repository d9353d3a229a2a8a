"""Figure-reproduction pipelines.

Each experiment returns a :class:`ResultTable`, which writes CSV with the
full configuration embedded as ``#`` comment lines.  Random populations
for the density figures come from ``RngStream(seed).substream(0)``;
Monte Carlo draws from ``RngStream(seed).substream(1)``; cell ``k`` of
either uses ``.substream(k)`` below that.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .asymptotics import CoefficientLimitParams, standardize_theta
from .diagnostics import (
    GRID_POINTS,
    epanechnikov_bandwidth,
    epanechnikov_kde,
    ks_statistic,
)
from .distributions import normal_pdf, standard_normal_cdf
from .error_rate import AsymptoticErParams, er_population, er_sample_asymptotic, er_sample_mc
from .model import PopulationModel, ProblemDims
from .rng import RngStream, replicate
from .stochastic import McSample, SampleKind, ThetaScalarParams, sample_theta_scalar

#: Nominal positive growth exponent; the variance formula only depends on
#: whether gamma is zero, so any positive value gives the same output.
GAMMA_POSITIVE = 0.5


class ExperimentKind(str, enum.Enum):
    FIG_ERROR_SMALL_DIM = "fig_error_small_dim"
    FIG_ERROR_ASYMPTOTIC = "fig_error_asymptotic"
    FIG_DENSITY_GAMMA0 = "fig_density_gamma0"
    FIG_DENSITY_GAMMA_POS = "fig_density_gamma_pos"
    FIG_DENSITY_UNBALANCED = "fig_density_unbalanced"


_DENSITY_KINDS = {
    ExperimentKind.FIG_DENSITY_GAMMA0,
    ExperimentKind.FIG_DENSITY_GAMMA_POS,
    ExperimentKind.FIG_DENSITY_UNBALANCED,
}


def default_deltas(delta_max=6.0, step=0.25):
    return np.round(np.arange(0.0, delta_max + step / 2, step), 10)


@dataclass
class ExperimentConfig:
    kind: ExperimentKind
    dims: list = field(default_factory=list)
    deltas: np.ndarray | None = None
    cs: list = field(default_factory=list)
    B: int = 100_000
    seed: int = 42
    threads: int = 1

    def __post_init__(self):
        self.kind = ExperimentKind(self.kind)
        self.dims = [d if isinstance(d, ProblemDims) else ProblemDims(*d) for d in self.dims]
        if self.deltas is None:
            self.deltas = default_deltas()
        self.deltas = np.asarray(self.deltas, dtype=float)
        if np.any(self.deltas < 0):
            raise ValueError("distances must be nonnegative")
        if self.B < 2:
            raise ValueError("B must be at least 2")
        if self.kind is ExperimentKind.FIG_ERROR_ASYMPTOTIC:
            if not self.cs or any(not 0 <= c < 1 for c in self.cs):
                raise ValueError("asymptotic error figure needs c values in [0, 1)")
        elif not self.dims:
            raise ValueError(f"{self.kind.value} needs at least one (p, n1, n2)")

    def as_meta(self) -> dict:
        return {
            "kind": self.kind.value,
            "dims": [[d.p, d.n1, d.n2] for d in self.dims],
            "deltas": [float(x) for x in self.deltas] if self.kind not in _DENSITY_KINDS else None,
            "cs": list(self.cs),
            "B": self.B,
            "seed": self.seed,
        }


@dataclass
class ResultTable:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def to_csv(self, deterministic: bool = True) -> str:
        buf = io.StringIO()
        buf.write(f"# hdlda {__version__}\n")
        if not deterministic:
            buf.write(f"# timestamp: {time.strftime('%Y-%m-%dT%H:%M:%S%z')}\n")
        for key in sorted(self.meta):
            buf.write(f"# {key}: {json.dumps(self.meta[key], sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def generate_population(stream: RngStream, p: int, recipe: str) -> PopulationModel:
    """Random population used by the density figures.

    ``recipe="gamma0"``: the first ten entries of mu1 and the last ten of
    mu2 are uniform on [-1, 1], all other entries zero (bounded distance).
    ``recipe="gamma_pos"``: every mean entry uniform on [-1, 1].
    In both cases sigma is diagonal with entries uniform on (0, 1].
    """
    gen = stream.generator
    if recipe == "gamma0":
        k = min(10, p)
        mu1 = np.zeros(p)
        mu2 = np.zeros(p)
        mu1[:k] = gen.uniform(-1, 1, k)
        mu2[p - k:] = gen.uniform(-1, 1, k)
    elif recipe == "gamma_pos":
        mu1 = gen.uniform(-1, 1, p)
        mu2 = gen.uniform(-1, 1, p)
    else:
        raise ValueError(f"unknown recipe {recipe!r}")
    diag = 1.0 - gen.random(p)
    return PopulationModel(mu1, mu2, np.diag(diag))


def standardized_theta_draws(model: PopulationModel, dims: ProblemDims, B: int, stream: RngStream,
                             threads: int = 1):
    """Representation draws of ``1' a_hat`` standardised under ``gamma = 0``
    and under ``gamma > 0``.  Returns ``(z_gamma0, z_gamma_pos, params)``."""
    params = ThetaScalarParams.from_model(model, np.ones(dims.p), dims)
    theta = replicate(lambda s, m: sample_theta_scalar(s, params, m), B, stream, threads)
    sample = McSample(theta, SampleKind.THETA_REP, {"p": dims.p, "n1": dims.n1, "n2": dims.n2})
    z0 = standardize_theta(sample, CoefficientLimitParams.from_theta(params, 0.0), dims.n).draws
    zp = standardize_theta(sample, CoefficientLimitParams.from_theta(params, GAMMA_POSITIVE), dims.n).draws
    return z0, zp, params


def _run_error_small_dim(cfg):
    root = RngStream(cfg.seed).substream(1)
    rows = []
    for k, dims in enumerate(cfg.dims):
        cell = root.substream(k)
        for j, delta in enumerate(cfg.deltas):
            est = er_sample_mc(float(delta), dims, cfg.B, cell.substream(j), cfg.threads)
            rows.append((dims.p, dims.n1, dims.n2, float(delta), float(er_population(delta)), est.value, est.se))
    return ResultTable(["p", "n1", "n2", "delta", "er_population", "er_sample", "se"], rows)


def _run_error_asymptotic(cfg):
    rows = []
    for c in cfg.cs:
        params = AsymptoticErParams(0.0, c, 2.0, 2.0)
        for delta in cfg.deltas:
            rows.append((c, float(delta), float(er_population(delta)), er_sample_asymptotic(float(delta), 1, params)))
    return ResultTable(["c", "delta", "er_population", "er_sample_asymptotic"], rows)


def _run_density(cfg):
    recipe = "gamma0" if cfg.kind is ExperimentKind.FIG_DENSITY_GAMMA0 else "gamma_pos"
    pop_root = RngStream(cfg.seed).substream(0)
    mc_root = RngStream(cfg.seed).substream(1)
    rows, cells = [], []
    for k, dims in enumerate(cfg.dims):
        model = generate_population(pop_root.substream(k), dims.p, recipe)
        z0, zp, params = standardized_theta_draws(model, dims, cfg.B, mc_root.substream(k), cfg.threads)
        h0, hp = epanechnikov_bandwidth(z0), epanechnikov_bandwidth(zp)
        lo = min(z0.min(), zp.min()) - 4 * max(h0, hp)
        hi = max(z0.max(), zp.max()) + 4 * max(h0, hp)
        grid = np.linspace(lo, hi, GRID_POINTS)
        k0 = epanechnikov_kde(z0, grid, h0)
        kp = epanechnikov_kde(zp, grid, hp)
        phi = normal_pdf(grid)
        for g, a, b, c in zip(grid, k0.density, kp.density, phi):
            rows.append((dims.p, dims.n1, dims.n2, float(g), float(a), float(b), float(c)))
        cells.append({
            "p": dims.p, "n1": dims.n1, "n2": dims.n2, "c": dims.c,
            "eta": params.eta, "l_quad": params.l_quad, "s": params.s,
            "bandwidth_gamma0": h0, "bandwidth_gamma_pos": hp,
            "ks_gamma0": ks_statistic(z0, standard_normal_cdf),
            "ks_gamma_pos": ks_statistic(zp, standard_normal_cdf),
            "sup_gap_gamma0": float(np.max(np.abs(k0.density - phi))),
            "sup_gap_gamma_pos": float(np.max(np.abs(kp.density - phi))),
        })
    table = ResultTable(["p", "n1", "n2", "x", "kde_gamma0", "kde_gamma_pos", "normal_pdf"], rows)
    table.meta["cells"] = cells
    table.meta["recipe"] = recipe
    table.meta["bandwidth_rule"] = "2.345*min(sd,iqr/1.349)*n^-0.2"
    table.meta["l"] = "ones"
    return table


def run_experiment(config: ExperimentConfig) -> ResultTable:
    if config.kind is ExperimentKind.FIG_ERROR_SMALL_DIM:
        table = _run_error_small_dim(config)
    elif config.kind is ExperimentKind.FIG_ERROR_ASYMPTOTIC:
        table = _run_error_asymptotic(config)
    else:
        table = _run_density(config)
    table.meta["config"] = config.as_meta()
    return table


#: Named presets for the standard experiments (fig1 ... fig5).
PRESETS = {
    "fig1": dict(
        kind=ExperimentKind.FIG_ERROR_SMALL_DIM,
        dims=[(p, n, n) for p in (10, 25, 50, 75) for n in (50, 100, 150, 250)],
    ),
    "fig2": dict(
        kind=ExperimentKind.FIG_ERROR_ASYMPTOTIC,
        cs=[0.1, 0.5, 0.8, 0.95],
        deltas=np.linspace(0.0, 100.0, 401),
    ),
    "fig3": dict(kind=ExperimentKind.FIG_DENSITY_GAMMA0, dims=[(p, 250, 250) for p in (50, 250, 400, 475)]),
    "fig4": dict(kind=ExperimentKind.FIG_DENSITY_GAMMA_POS, dims=[(p, 250, 250) for p in (50, 250, 400, 475)]),
    "fig5": dict(kind=ExperimentKind.FIG_DENSITY_UNBALANCED, dims=[(p, 25, 475) for p in (50, 250, 400, 475)]),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kw = dict(PRESETS[name])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)
