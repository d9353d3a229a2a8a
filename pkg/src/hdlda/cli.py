"""Command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 usage error.  Every output
carries the effective configuration as a header (``#`` lines for CSV, a
``meta`` object for JSON, an XML comment for SVG).  The worker count is
left out of the header because results do not depend on it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, svg
from .diagnostics import epanechnikov_bandwidth, epanechnikov_kde
from .error_rate import AsymptoticErParams, classify, er_population, er_sample_asymptotic
from .experiments import (
    PRESETS,
    ExperimentConfig,
    ExperimentKind,
    ResultTable,
    default_deltas,
    preset,
    run_experiment,
)
from .inference import QuadratureError, contrast_vector, one_sided_test, test_statistic, two_sided_test
from .model import GroupSample, ProblemDims, pooled_estimates
from .rng import RngStream, replicate
from .stochastic import DHatParams, sample_d_hat

DEFAULT_SEED = 42
_NOT_IN_HEADER = {"func", "output", "threads", "format", "deterministic"}


class UsageError(ValueError):
    pass


def _default_seed() -> int:
    raw = os.environ.get("HDLDA_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"HDLDA_SEED must be an integer, got {raw!r}") from None
    if not 0 <= seed < 2**64:
        raise UsageError("HDLDA_SEED must lie in [0, 2**64)")
    return seed


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _read_matrix(path: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if data.size == 0:
        raise UsageError(f"{path} is empty")
    return data


def _dims(args) -> ProblemDims:
    return ProblemDims(args.p, args.n1, args.n2)


def _header_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_IN_HEADER}


# ---------------------------------------------------------------- commands


def _cmd_error_rate(args):
    deltas = default_deltas(args.delta_max, args.delta_step)
    cfg = ExperimentConfig(ExperimentKind.FIG_ERROR_SMALL_DIM, [_dims(args)], deltas, B=args.B,
                           seed=args.seed, threads=args.threads)
    table = run_experiment(cfg)
    return table, ("delta", ["er_population", "er_sample"], ["p", "n1", "n2"])


def _cmd_error_rate_asymptotic(args):
    have_dims = None not in (args.p, args.n1, args.n2)
    if args.c:
        cs = list(args.c)
        b1 = args.b1
    elif have_dims:
        dims = _dims(args)
        cs = [dims.c]
        b1 = dims.lam * dims.n1
    else:
        raise UsageError("give --c, or all of --p --n1 --n2")
    if b1 <= 1:
        raise UsageError("--b1 must exceed 1")
    b2 = b1 / (b1 - 1)
    if args.gamma > 0 and args.p is None:
        raise UsageError("--gamma > 0 needs --p to scale the distance")
    p = args.p if args.p is not None else 1
    deltas = default_deltas(args.delta_max, args.delta_step)
    rows = []
    for c in cs:
        params = AsymptoticErParams(args.gamma, c, b1, b2)
        for d in deltas:
            rows.append((c, float(d), float(er_population(d)), er_sample_asymptotic(float(d), p, params)))
    table = ResultTable(["c", "delta", "er_population", "er_sample_asymptotic"], rows,
                        {"b1": b1, "b2": b2})
    return table, ("delta", ["er_sample_asymptotic"], ["c"])


def _cmd_coef_dist(args):
    kind = ExperimentKind.FIG_DENSITY_GAMMA0 if args.gamma == 0 else ExperimentKind.FIG_DENSITY_GAMMA_POS
    cfg = ExperimentConfig(kind, [_dims(args)], B=args.B, seed=args.seed, threads=args.threads)
    return run_experiment(cfg), ("x", ["kde_gamma0", "kde_gamma_pos", "normal_pdf"], [])


def _cmd_dhat_dist(args):
    dims = _dims(args)
    if args.delta < 0:
        raise UsageError("--delta must be nonnegative")
    root = RngStream(args.seed).substream(1)
    draws, summary = {}, {}
    for g in (1, 2):
        params = DHatParams(args.delta, dims, g)
        draws[g] = replicate(lambda s, m, params=params: sample_d_hat(s, params, m), args.B,
                             root.substream(g), args.threads)
        wrong = draws[g] <= 0 if g == 1 else draws[g] > 0
        summary[f"group{g}"] = {"mean": float(draws[g].mean()), "sd": float(draws[g].std(ddof=1)),
                                "misclassified": float(wrong.mean())}
    h = {g: epanechnikov_bandwidth(draws[g]) for g in (1, 2)}
    lo = min(draws[g].min() - 4 * h[g] for g in (1, 2))
    hi = max(draws[g].max() + 4 * h[g] for g in (1, 2))
    grid = np.linspace(lo, hi, 512)
    k1 = epanechnikov_kde(draws[1], grid, h[1]).density
    k2 = epanechnikov_kde(draws[2], grid, h[2]).density
    rows = [(float(x), float(a), float(b)) for x, a, b in zip(grid, k1, k2)]
    meta = {"summary": summary, "bandwidths": [h[1], h[2]], "er_population": float(er_population(args.delta))}
    return ResultTable(["x", "kde_group1", "kde_group2"], rows, meta), ("x", ["kde_group1", "kde_group2"], [])


def _training(args):
    x1, x2 = _read_matrix(args.data1), _read_matrix(args.data2)
    if x1.shape[0] != x2.shape[0]:
        raise UsageError(f"groups disagree on p: {x1.shape[0]} vs {x2.shape[0]}")
    return pooled_estimates(GroupSample(x1, 1), GroupSample(x2, 2))


def _cmd_test(args):
    est = _training(args)
    t = test_statistic(est, contrast_vector(est.dims.p, args.i, args.j))
    run = two_sided_test if args.side == "two" else one_sided_test
    res = run(t, est.dims, args.alpha).to_dict()
    table = ResultTable(list(res), [tuple(res.values())], {"dims": [est.dims.p, est.dims.n1, est.dims.n2]})
    return table, None


def _cmd_classify(args):
    est = _training(args)
    x = _read_matrix(args.x)
    if x.shape[0] != est.dims.p:
        raise UsageError(f"--x has {x.shape[0]} rows, expected p = {est.dims.p}")
    coef = est.solve(est.mean_diff)
    centre = 0.5 * (est.xbar1 + est.xbar2)
    rows = [(k + 1, float(coef @ (x[:, k] - centre)), classify(x[:, k], est)) for k in range(x.shape[1])]
    return ResultTable(["observation", "score", "group"], rows), None


def _cmd_reproduce(args):
    cfg = preset(args.figure, B=args.B, seed=args.seed, threads=args.threads)
    table = run_experiment(cfg)
    if cfg.kind is ExperimentKind.FIG_ERROR_SMALL_DIM:
        plot = ("delta", ["er_sample"], ["p", "n1"])
    elif cfg.kind is ExperimentKind.FIG_ERROR_ASYMPTOTIC:
        plot = ("delta", ["er_sample_asymptotic"], ["c"])
    else:
        plot = ("x", ["kde_gamma0", "kde_gamma_pos"], ["p"])
    return table, plot


# ------------------------------------------------------------------ output


def _to_json(table: ResultTable, deterministic: bool) -> str:
    meta = dict(table.meta)
    meta["version"] = __version__
    if not deterministic:
        meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    rows = [dict(zip(table.columns, (v.item() if isinstance(v, np.generic) else v for v in r)))
            for r in table.rows]
    payload = rows[0] if len(rows) == 1 else rows
    return json.dumps({"meta": meta, "result": payload}, indent=2, sort_keys=True) + "\n"


def _to_svg(table: ResultTable, plot, title: str, deterministic: bool) -> str:
    if plot is None:
        raise UsageError("this command has no plot; use --format csv or json")
    xcol, ycols, groupby = plot
    x = table.column(xcol)
    keys = [tuple(table.column(g)) for g in groupby]
    labels = list(zip(*keys)) if keys else [()] * len(x)
    series = {}
    for y in ycols:
        yv = table.column(y)
        for key in dict.fromkeys(labels):
            mask = np.array([lab == key for lab in labels])
            name = y + "".join(f" {g}={v:g}" for g, v in zip(groupby, key))
            series[name] = (x[mask], yv[mask])
    comment = json.dumps(table.meta.get("cli", {}), sort_keys=True).replace("--", "- -")
    body = svg.line_chart(series, title=title, xlabel=xcol)
    stamp = "" if deterministic else f" timestamp={time.strftime('%Y-%m-%dT%H:%M:%S%z')}"
    return f"<!-- hdlda {__version__}{stamp} config: {comment} -->\n" + body


def _emit(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    seed_default = _default_seed()
    parser = argparse.ArgumentParser(prog="hdlda", description="Fisher discriminant analysis in high dimensions")
    parser.add_argument("--version", action="version", version=f"hdlda {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("-o", "--output", help="output file (default: stdout)")
    out.add_argument("--format", choices=["csv", "json", "svg"], default=None)
    out.add_argument("--deterministic", action="store_true", help="omit the timestamp")

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--B", type=_positive_int, default=100_000, help="replications per group")
    mc.add_argument("--seed", type=_seed, default=seed_default)
    mc.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)

    dims = argparse.ArgumentParser(add_help=False)
    dims.add_argument("--p", type=_positive_int, required=True)
    dims.add_argument("--n1", type=_positive_int, required=True)
    dims.add_argument("--n2", type=_positive_int, required=True)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--delta-max", type=float, default=6.0)
    grid.add_argument("--delta-step", type=float, default=0.25)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data1", required=True, help="group-1 CSV, one observation per column")
    data.add_argument("--data2", required=True, help="group-2 CSV, one observation per column")

    p = sub.add_parser("error-rate", parents=[dims, grid, mc, out], help="ER_p and Monte Carlo ER_s curve")
    p.set_defaults(func=_cmd_error_rate)

    p = sub.add_parser("error-rate-asymptotic", parents=[grid, out], help="high-dimensional ER_s approximation")
    p.add_argument("--c", type=float, nargs="+")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--b1", type=float, default=2.0, help="limit of lam*n1 (2 for balanced groups)")
    p.add_argument("--p", type=_positive_int)
    p.add_argument("--n1", type=_positive_int)
    p.add_argument("--n2", type=_positive_int)
    p.set_defaults(func=_cmd_error_rate_asymptotic)

    p = sub.add_parser("coef-dist", parents=[dims, mc, out], help="density of the standardised 1' a_hat")
    p.add_argument("--gamma", type=float, default=0.0, help="0 for bounded distance, > 0 for growing")
    p.set_defaults(func=_cmd_coef_dist)

    p = sub.add_parser("dhat-dist", parents=[dims, mc, out], help="density of the plug-in score")
    p.add_argument("--delta", type=float, required=True)
    p.set_defaults(func=_cmd_dhat_dist)

    p = sub.add_parser("test", parents=[data, out], help="exact test of a_i = a_j")
    p.add_argument("--i", type=_positive_int, required=True)
    p.add_argument("--j", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--side", choices=["two", "one"], default="two")
    p.set_defaults(func=_cmd_test, default_format="json")

    p = sub.add_parser("classify", parents=[data, out], help="classify new observations")
    p.add_argument("--x", required=True, help="CSV of observations to classify, one per column")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("reproduce", parents=[mc, out], help="regenerate a figure's data")
    p.add_argument("figure", choices=sorted(PRESETS))
    p.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except UsageError as exc:
        print(f"hdlda: error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    fmt = args.format or getattr(args, "default_format", "csv")
    if hasattr(args, "default_format"):
        del args.default_format
    try:
        table, plot = args.func(args)
        table.meta["cli"] = {"command": args.command, **_header_config(args)}
        if fmt == "csv":
            text = table.to_csv(deterministic=args.deterministic)
        elif fmt == "json":
            text = _to_json(table, args.deterministic)
        else:
            text = _to_svg(table, plot, args.command, args.deterministic)
        _emit(text, args.output)
    except (np.linalg.LinAlgError, QuadratureError, FloatingPointError) as exc:
        print(f"hdlda: numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"hdlda: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
