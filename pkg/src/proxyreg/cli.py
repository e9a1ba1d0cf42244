"""Command-line front end.

Subcommands: simulate, estimate, predict, sweep-gamma, sweep-eta,
sweep-n, diagnose, plot.  Settings resolve as CLI flag > config file
(flat TOML key/value, --config) > built-in default.  Exit codes: 0 ok,
2 invalid configuration, 3 numerical failure in a non-sweep command.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import tomli

from .baseline import GcnConfig
from .diagnostics import (degree_stats, degrees_csv_lines,
                          proxy_error_csv_lines, proxy_error_stats)
from .harness import (InvalidConfig, SweepConfig, emit_plots,
                      read_sweep_csv, run_estimation_sweep,
                      run_prediction_sweep, write_sweep_csv)
from .matio import write_graph_dump, write_matrix
from .model import ModelParams, sample_graph
from .predict import EmptySubgraph, evaluate_prediction_mse
from .proxy import ScreenConfig, compute_all_proxies, screen_counts_csv_lines
from .regress import (RankDeficient, ESTIMATE_CSV_HEADER, naive_estimate,
                      proxy_estimate, report_csv_row)
from .rng import seed_schedule

DESK_SCALE = {"n": 10000, "d": 100}
FULL_SCALE = {"n": 30000, "d": 250}

GAMMA_GRID = tuple(round(0.70 + 0.005 * k, 3) for k in range(11))
ETA_GRID = tuple(0.25 * k for k in range(1, 13))
N_GRID = (4000, 10000, 25000)

_NUMERICAL_FAILURES = (RankDeficient, EmptySubgraph,
                       np.linalg.LinAlgError, FloatingPointError)


def load_config(path) -> dict:
    """Flat key/value TOML; nested tables are rejected."""
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    for key, value in data.items():
        if isinstance(value, dict):
            raise InvalidConfig(f"config must be flat, found table [{key}]")
    return data


class Options:
    """CLI flag > config-file key > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(args.config) if args.config else {}

    def get(self, key, default=None):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return default


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--d", type=int, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--gamma", type=float, default=None)
    parser.add_argument("--sigma-x2", type=float, default=None)
    parser.add_argument("--sigma-eta2", type=float, default=None)
    parser.add_argument("--sigma-eps2", type=float, default=None)


def _gcn_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gcn-layers", type=str, default=None,
                        help="comma-separated layer depths, e.g. 0,1,2,3")
    parser.add_argument("--gcn-self-weight", type=float, default=None)
    parser.add_argument("--gcn-activation", choices=("identity", "tanh"),
                        default=None)


def build_params(opt: Options, seed: int | None = None) -> ModelParams:
    scale = FULL_SCALE if opt.get("full_scale", False) else DESK_SCALE
    try:
        return ModelParams(
            n=int(opt.get("n", scale["n"])),
            d=int(opt.get("d", scale["d"])),
            alpha=float(opt.get("alpha", 0.72)),
            gamma=float(opt.get("gamma", 0.725)),
            sigma_x2=float(opt.get("sigma_x2", 1.0)),
            sigma_eta2=float(opt.get("sigma_eta2", 1.0)),
            sigma_eps2=float(opt.get("sigma_eps2", 1.0)),
            seed=int(seed if seed is not None else opt.get("seed", 1)),
        )
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from exc


def build_gcn(opt: Options) -> tuple[GcnConfig, tuple]:
    raw = opt.get("gcn_layers", "2")
    layers = tuple(int(v) for v in str(raw).split(","))
    if not layers or any(v < 0 for v in layers):
        raise InvalidConfig(f"bad --gcn-layers {raw!r}")
    cfg = GcnConfig(layers=max(layers),
                    self_weight=float(opt.get("gcn_self_weight", 0.5)),
                    activation=str(opt.get("gcn_activation", "identity")))
    return cfg, layers


def _out_dir(opt: Options) -> Path:
    out = Path(opt.get("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_out(opt: Options, name: str) -> Path:
    path = Path(name)
    return path if path.is_absolute() else _out_dir(opt) / path


def _params_comments(p: ModelParams, **extra) -> list:
    items = [("n", p.n), ("d", p.d), ("alpha", repr(p.alpha)),
             ("gamma", repr(p.gamma)), ("sigma_x2", repr(p.sigma_x2)),
             ("sigma_eta2", repr(p.sigma_eta2)),
             ("sigma_eps2", repr(p.sigma_eps2)), ("seed", p.seed)]
    items += list(extra.items())
    return [f"# {k} = {v}" for k, v in items]


def cmd_simulate(opt: Options, args) -> int:
    params = build_params(opt)
    sample = sample_graph(params)
    der = sample.derived
    deg = sample.adj.deg_union
    print(f"n={params.n} d={params.d} alpha={params.alpha} "
          f"gamma={params.gamma} t_n={der.t_n:.6f} p_n={der.p_n:.6g}")
    print(f"edges: geometric={len(sample.edges_geo)} "
          f"er={len(sample.edges_er)} union={sample.adj.indices.size // 2}")
    print(f"degree: mean={deg.mean():.2f} min={deg.min()} max={deg.max()}")
    if args.dump:
        prefix = str(_resolve_out(opt, args.dump))
        write_graph_dump(prefix + ".edges.txt", sample)
        write_matrix(prefix + ".X.mat", sample.X)
        write_matrix(prefix + ".Z.mat", sample.Z)
        write_matrix(prefix + ".Y.mat", sample.Y.reshape(-1, 1))
        print(f"dumped {prefix}.edges.txt and .X/.Z/.Y.mat")
    return 0


def cmd_estimate(opt: Options, args) -> int:
    base = build_params(opt)
    n_seeds = int(args.seeds if args.seeds is not None
                  else opt.get("n_seeds", 1))
    seeds = seed_schedule(base.seed, n_seeds)
    lines = _params_comments(base, n_seeds=n_seeds,
                             drop_fallback_rows=bool(args.drop_fallback_rows))
    lines.append(ESTIMATE_CSV_HEADER)
    for k, s in enumerate(seeds):
        p = replace(base, seed=int(s))
        sample = sample_graph(p)
        proxies = compute_all_proxies(sample, ScreenConfig.from_params(p))
        naive = naive_estimate(sample)
        prox = proxy_estimate(sample, proxies,
                              drop_fallback_rows=args.drop_fallback_rows)
        lines.append(report_csv_row(naive, p))
        lines.append(report_csv_row(prox, p))
        print(f"seed[{k}]={s}: rel_error naive={naive.rel_error:.4f} "
              f"proxy={prox.rel_error:.4f} "
              f"fallback_rate={proxies.fallback_rate:.4f}")
        if args.dump:
            suffix = f".seed{k}" if n_seeds > 1 else ""
            prefix = str(_resolve_out(opt, args.dump)) + suffix
            write_matrix(prefix + ".lambda.mat", proxies.Lambda)
            counts = "\n".join(screen_counts_csv_lines(proxies)) + "\n"
            Path(prefix + ".screen_counts.csv").write_text(counts)
    out = _resolve_out(opt, "estimates.csv")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")
    return 0


def cmd_predict(opt: Options, args) -> int:
    base = build_params(opt)
    n_seeds = int(args.seeds if args.seeds is not None
                  else opt.get("n_seeds", 1))
    holdouts = int(opt.get("holdouts", 200))
    gcn_cfg, layer_list = build_gcn(opt)
    seeds = seed_schedule(base.seed, n_seeds)
    lines = _params_comments(base, holdouts=holdouts, n_seeds=n_seeds,
                             gcn_layers=",".join(map(str, layer_list)),
                             gcn_self_weight=repr(gcn_cfg.self_weight),
                             gcn_activation=gcn_cfg.activation)
    lines.append("seed,method,layers,mse,stderr,fallbacks,skipped")
    for s in seeds:
        p = replace(base, seed=int(s))
        summary = evaluate_prediction_mse(p, holdouts, gcn_cfg=gcn_cfg,
                                          gcn_layers=layer_list)
        lines.append(f"{s},attention_predict,,{summary.attention_mse!r},"
                     f"{summary.attention_stderr!r},"
                     f"{summary.fallback_count},{summary.skipped}")
        for L in layer_list:
            lines.append(f"{s},gcn,{L},{summary.gcn_mse[L]!r},"
                         f"{summary.gcn_stderr[L]!r},,{summary.skipped}")
        gcn_txt = " ".join(f"L={L}:{summary.gcn_mse[L]:.4f}"
                           for L in layer_list)
        print(f"seed={s}: attention mse={summary.attention_mse:.4f} "
              f"gcn {gcn_txt} (skipped={summary.skipped})")
    out = _resolve_out(opt, args.out)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")
    return 0


def _sweep_cfg(opt: Options, args, grid_param: str, default_grid) -> SweepConfig:
    base = build_params(opt)
    if args.grid:
        conv = int if grid_param == "n" else float
        grid = tuple(conv(v) for v in args.grid.split(","))
    else:
        grid = tuple(default_grid)
    n_seeds = int(args.seeds if args.seeds is not None
                  else opt.get("n_seeds", 5))
    seeds = tuple(int(s) for s in seed_schedule(base.seed, n_seeds))
    kind = args.kind
    methods = (("attention_predict", "gcn") if kind == "predict"
               else ("naive", "proxy"))
    gcn_cfg, _layers = build_gcn(opt)
    return SweepConfig(
        grid_param=grid_param, grid=grid, base=base, seeds=seeds,
        methods=methods, n_holdout=int(opt.get("holdouts", 200)),
        gcn=gcn_cfg, out_dir=_out_dir(opt),
        threads=int(opt.get("threads", 1)),
        resume=bool(opt.get("resume", False)))


def cmd_sweep(opt: Options, args, grid_param: str, default_grid) -> int:
    cfg = _sweep_cfg(opt, args, grid_param, default_grid)
    if args.kind == "predict":
        result = run_prediction_sweep(cfg)
    else:
        result = run_estimation_sweep(cfg)
    out = Path(cfg.out_dir) / f"sweep_{grid_param}.csv"
    write_sweep_csv(cfg, result, out)
    print(f"wrote {out} ({len(result.rows)} rows)")
    for gv, method, metric, mean, sd in result.aggregates():
        print(f"  {grid_param}={gv} {method} {metric}: "
              f"mean={mean:.5f} sd={sd:.5f}")
    return 0


def cmd_diagnose(opt: Options, args) -> int:
    params = build_params(opt)
    sample = sample_graph(params)
    stats = degree_stats(sample, sample.derived)
    proxies = compute_all_proxies(sample, ScreenConfig.from_params(params))
    perr = proxy_error_stats(proxies, sample.X, sample.Z)
    out = _out_dir(opt)
    (out / "degrees.csv").write_text(
        "\n".join(degrees_csv_lines(stats)) + "\n")
    (out / "proxy_error.csv").write_text(
        "\n".join(proxy_error_csv_lines(perr)) + "\n")
    band = ("n/a" if stats.er_band_fraction is None
            else f"{stats.er_band_fraction:.4f}")
    print(f"er_band_fraction={band} (band=[{stats.er_band[0]:.1f},"
          f"{stats.er_band[1]:.1f}], n^gamma={stats.n_gamma:.1f})")
    print(f"mean_proxy_err_per_dim={perr.mean_proxy_err_per_dim:.5f} "
          f"mean_naive_err_per_dim={perr.mean_naive_err_per_dim:.5f} "
          f"fallback_rate={perr.fallback_rate:.5f}")
    print(f"wrote {out / 'degrees.csv'} and {out / 'proxy_error.csv'}")
    return 0


def cmd_plot(opt: Options, args) -> int:
    result = read_sweep_csv(args.infile)
    paths = emit_plots(result, _out_dir(opt))
    for p in paths:
        print(f"wrote {p}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out-dir", type=str, default=None)
    common.add_argument("--full-scale", action="store_true", default=None)
    common.add_argument("--resume", action="store_true", default=None)
    common.add_argument("--config", type=str, default=None,
                        help="flat TOML key/value file with defaults")

    parser = argparse.ArgumentParser(
        prog="proxyreg",
        description="Noisy-graph regression experiments: attention-screened "
                    "proxy estimation vs naive and mean-aggregation methods.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="sample one graph and print summary statistics")
    _model_flags(p)
    p.add_argument("--dump", type=str, default=None,
                   help="prefix for edge-list and matrix dumps")

    p = sub.add_parser("estimate", parents=[common],
                       help="fit naive and proxy OLS on sampled graphs")
    _model_flags(p)
    p.add_argument("--seeds", type=int, default=None,
                   help="number of seeds from the base-seed schedule")
    p.add_argument("--drop-fallback-rows", action="store_true", default=False)
    p.add_argument("--dump", type=str, default=None,
                   help="prefix for proxy-matrix and screen-count dumps")

    p = sub.add_parser("predict", parents=[common],
                       help="holdout prediction MSE: attention vs baseline")
    _model_flags(p)
    _gcn_flags(p)
    p.add_argument("--holdouts", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--out", type=str, default="results.csv")

    for name, param in (("sweep-gamma", "gamma"), ("sweep-eta", "sigma_eta2"),
                        ("sweep-n", "n")):
        p = sub.add_parser(name, parents=[common],
                           help=f"sweep {param} over a grid")
        _model_flags(p)
        _gcn_flags(p)
        p.add_argument("--grid", type=str, default=None,
                       help="comma-separated grid values")
        p.add_argument("--seeds", type=int, default=None)
        p.add_argument("--kind", choices=("estimate", "predict"),
                       default="estimate")
        p.add_argument("--holdouts", type=int, default=None)
        p.set_defaults(grid_param=param)

    p = sub.add_parser("diagnose", parents=[common],
                       help="degree and proxy-error diagnostics CSVs")
    _model_flags(p)

    p = sub.add_parser("plot", parents=[common],
                       help="render SVG curves from a sweep CSV")
    p.add_argument("--in", dest="infile", required=True,
                   help="sweep CSV produced by a sweep-* subcommand")
    return parser


_DEFAULT_GRIDS = {"gamma": GAMMA_GRID, "sigma_eta2": ETA_GRID, "n": N_GRID}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        opt = Options(args)
        if args.command == "simulate":
            return cmd_simulate(opt, args)
        if args.command == "estimate":
            return cmd_estimate(opt, args)
        if args.command == "predict":
            return cmd_predict(opt, args)
        if args.command in ("sweep-gamma", "sweep-eta", "sweep-n"):
            return cmd_sweep(opt, args, args.grid_param,
                             _DEFAULT_GRIDS[args.grid_param])
        if args.command == "diagnose":
            return cmd_diagnose(opt, args)
        if args.command == "plot":
            return cmd_plot(opt, args)
        raise InvalidConfig(f"unknown command {args.command!r}")
    except _NUMERICAL_FAILURES as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, tomli.TOMLDecodeError, ValueError) as exc:
        # InvalidConfig and parameter-validation errors both land here
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
