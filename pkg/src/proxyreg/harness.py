"""Experiment orchestration: seeded sweeps, CSV/SVG output, resumability.

A sweep is a grid over one of {gamma, sigma_eta2, n} crossed with a seed
list.  Cells are independent jobs (optionally run on a thread pool);
rows are always emitted in canonical (grid, seed, method) order, so the
output CSV is byte-identical no matter how many workers ran or whether
the sweep was interrupted and resumed from its cell cache.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baseline import GcnConfig
from .model import ModelParams, sample_graph
from .predict import evaluate_prediction_mse
from .proxy import ScreenConfig, compute_all_proxies
from .regress import RankDeficient, naive_estimate, proxy_estimate

__all__ = [
    "InvalidConfig",
    "SweepConfig",
    "SweepResult",
    "run_estimation_sweep",
    "run_prediction_sweep",
    "write_sweep_csv",
    "read_sweep_csv",
    "emit_plots",
]

GRID_PARAMS = ("gamma", "sigma_eta2", "n")
ESTIMATION_METHODS = ("naive", "proxy")
PREDICTION_METHODS = ("attention_predict", "gcn")


class InvalidConfig(ValueError):
    """The sweep configuration violates its invariants."""


@dataclass(frozen=True, eq=False)
class SweepConfig:
    """One grid axis, fixed remaining model parameters, seeds, methods."""

    grid_param: str
    grid: tuple
    base: ModelParams
    seeds: tuple
    methods: tuple = ESTIMATION_METHODS
    n_holdout: int = 200
    gcn: GcnConfig = field(default_factory=GcnConfig)
    out_dir: Path | None = None
    threads: int = 1
    resume: bool = False

    def __post_init__(self):
        if self.grid_param not in GRID_PARAMS:
            raise InvalidConfig(f"grid_param must be one of {GRID_PARAMS}")
        if len(self.grid) == 0:
            raise InvalidConfig("grid must be non-empty")
        if len(self.seeds) == 0:
            raise InvalidConfig("seeds must be non-empty")
        if len(self.methods) == 0:
            raise InvalidConfig("methods must be non-empty")
        unknown = set(self.methods) - set(ESTIMATION_METHODS + PREDICTION_METHODS)
        if unknown:
            raise InvalidConfig(f"unknown methods: {sorted(unknown)}")
        if self.threads < 1:
            raise InvalidConfig("threads must be >= 1")
        for v in self.grid:
            self.cell_params(v, self.base.seed)  # raises if invalid

    def cell_params(self, grid_value, seed: int) -> ModelParams:
        value = int(grid_value) if self.grid_param == "n" else float(grid_value)
        try:
            return replace(self.base, seed=seed, **{self.grid_param: value})
        except ValueError as exc:
            raise InvalidConfig(f"grid value {grid_value!r}: {exc}") from exc


@dataclass(eq=False)
class SweepResult:
    """Rows of (grid_value, seed, method, metric, value), canonical order."""

    grid_param: str
    rows: list

    def aggregates(self):
        """Per (grid_value, method, metric): mean and sd over seeds.

        NaN rows (failed cells) are skipped; an all-NaN group aggregates
        to NaN.  Groups keep first-appearance order, which is canonical.
        """
        groups = {}
        order = []
        for gv, _seed, method, metric, value in self.rows:
            key = (repr(gv), method, metric)
            if key not in groups:
                groups[key] = (gv, [])
                order.append(key)
            groups[key][1].append(value)
        out = []
        for key in order:
            gv, vals = groups[key]
            arr = np.asarray(vals, dtype=np.float64)
            finite = arr[np.isfinite(arr)]
            if len(finite) == 0:
                mean, sd = float("nan"), float("nan")
            else:
                mean = float(finite.mean())
                sd = float(finite.std(ddof=1)) if len(finite) > 1 else 0.0
            out.append((gv, key[1], key[2], mean, sd))
        return out


def _estimation_cell(params: ModelParams, methods: tuple) -> list:
    need_graph = "proxy" in methods
    sample = sample_graph(params, include_edges=need_graph)
    proxies = None
    if need_graph:
        cfg = ScreenConfig(tau_screen=sample.derived.tau_screen,
                           t_n=sample.derived.t_n)
        proxies = compute_all_proxies(sample, cfg)
    rows = []
    for method in methods:
        try:
            if method == "naive":
                rel = naive_estimate(sample).rel_error
            else:
                rel = proxy_estimate(sample, proxies).rel_error
        except RankDeficient:
            rel = float("nan")
        rows.append((method, "rel_error", float(rel)))
    return rows


def _prediction_cell(params: ModelParams, methods: tuple, n_holdout: int,
                     gcn: GcnConfig) -> list:
    summary = evaluate_prediction_mse(
        params, n_holdout, gcn_cfg=gcn, gcn_layers=(gcn.layers,),
        include_baseline="gcn" in methods)
    rows = []
    for method in methods:
        if method == "attention_predict":
            rows.append((method, "mse", summary.attention_mse))
        else:
            rows.append((method, "mse", summary.gcn_mse[gcn.layers]))
    return rows


def _cache_key(cfg: SweepConfig, kind: str, grid_value, seed: int) -> str:
    params = cfg.cell_params(grid_value, seed)
    payload = {
        "kind": kind,
        "grid_param": cfg.grid_param,
        "methods": list(cfg.methods),
        "params": {
            "n": params.n, "d": params.d,
            "alpha": repr(params.alpha), "gamma": repr(params.gamma),
            "sigma_x2": repr(params.sigma_x2),
            "sigma_eta2": repr(params.sigma_eta2),
            "sigma_eps2": repr(params.sigma_eps2),
            "beta": [repr(float(b)) for b in params.beta],
            "seed": params.seed,
        },
    }
    if kind == "prediction":
        payload["n_holdout"] = cfg.n_holdout
        payload["gcn"] = [cfg.gcn.layers, repr(cfg.gcn.self_weight),
                          cfg.gcn.activation]
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _cache_path(cfg: SweepConfig, key: str) -> Path | None:
    if cfg.out_dir is None:
        return None
    return Path(cfg.out_dir) / ".cells" / f"{key}.json"


def _run_cell(cfg: SweepConfig, kind: str, grid_value, seed: int) -> list:
    key = _cache_key(cfg, kind, grid_value, seed)
    path = _cache_path(cfg, key)
    if cfg.resume and path is not None and path.exists():
        cached = json.loads(path.read_text())
        return [(m, metric, float(v)) for m, metric, v in cached]
    params = cfg.cell_params(grid_value, seed)
    if kind == "estimation":
        rows = _estimation_cell(params, cfg.methods)
    else:
        rows = _prediction_cell(params, cfg.methods, cfg.n_holdout, cfg.gcn)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps([[m, metric, repr(v)]
                                   for m, metric, v in rows]))
        os.replace(tmp, path)
    return rows


def _run_sweep(cfg: SweepConfig, kind: str) -> SweepResult:
    cells = [(gv, seed) for gv in cfg.grid for seed in cfg.seeds]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            cell_rows = list(pool.map(
                lambda c: _run_cell(cfg, kind, c[0], c[1]), cells))
    else:
        cell_rows = [_run_cell(cfg, kind, gv, seed) for gv, seed in cells]
    rows = []
    for (gv, seed), out in zip(cells, cell_rows):
        value = int(gv) if cfg.grid_param == "n" else float(gv)
        for method, metric, v in out:
            rows.append((value, seed, method, metric, v))
    return SweepResult(grid_param=cfg.grid_param, rows=rows)


def run_estimation_sweep(cfg: SweepConfig) -> SweepResult:
    """rel_error rows for naive/proxy at every grid point x seed."""
    bad = set(cfg.methods) - set(ESTIMATION_METHODS)
    if bad:
        raise InvalidConfig(
            f"estimation sweep accepts methods {ESTIMATION_METHODS}, "
            f"got {sorted(bad)}")
    return _run_sweep(cfg, "estimation")


def run_prediction_sweep(cfg: SweepConfig) -> SweepResult:
    """Holdout MSE rows for the attention predictor and the GCN baseline."""
    if not set(PREDICTION_METHODS) <= set(cfg.methods):
        raise InvalidConfig(
            f"prediction sweep requires methods to include {PREDICTION_METHODS}")
    return _run_sweep(cfg, "prediction")


def _config_comment_lines(cfg: SweepConfig) -> list:
    b = cfg.base
    items = [
        ("grid_param", cfg.grid_param),
        ("grid", ",".join(repr(v) for v in cfg.grid)),
        ("seeds", ",".join(str(s) for s in cfg.seeds)),
        ("methods", ",".join(cfg.methods)),
        ("n", b.n), ("d", b.d),
        ("alpha", repr(b.alpha)), ("gamma", repr(b.gamma)),
        ("sigma_x2", repr(b.sigma_x2)), ("sigma_eta2", repr(b.sigma_eta2)),
        ("sigma_eps2", repr(b.sigma_eps2)),
        ("n_holdout", cfg.n_holdout),
        ("gcn_layers", cfg.gcn.layers),
        ("gcn_self_weight", repr(cfg.gcn.self_weight)),
        ("gcn_activation", cfg.gcn.activation),
    ]
    return [f"# {k} = {v}" for k, v in items]


def write_sweep_csv(cfg: SweepConfig, result: SweepResult, path) -> None:
    """Rows in canonical order with the config echoed as comments."""
    lines = _config_comment_lines(cfg)
    lines.append("grid_value,seed,method,metric,value")
    for gv, seed, method, metric, value in result.rows:
        gv_txt = str(gv) if isinstance(gv, int) else repr(gv)
        lines.append(f"{gv_txt},{seed},{method},{metric},{repr(float(value))}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_sweep_csv(path) -> SweepResult:
    """Parse a sweep CSV back into rows (comments are skipped)."""
    grid_param = "unknown"
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            if line.startswith("# grid_param = "):
                grid_param = line.split("=", 1)[1].strip()
            continue
        if line.startswith("grid_value") or not line.strip():
            continue
        gv_txt, seed, method, metric, value = line.split(",")
        try:
            gv = int(gv_txt)
        except ValueError:
            gv = float(gv_txt)
        rows.append((gv, int(seed), method, metric, float(value)))
    return SweepResult(grid_param=grid_param, rows=rows)


def emit_plots(result: SweepResult, out_dir) -> list:
    """One SVG per metric (mean +- sd band per method) plus aggregate CSV.

    SVG bytes are deterministic: fixed hash salt, no embedded date.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    agg = result.aggregates()

    agg_path = out_dir / "aggregate.csv"
    lines = ["grid_value,method,metric,mean,sd"]
    for gv, method, metric, mean, sd in agg:
        gv_txt = str(gv) if isinstance(gv, int) else repr(gv)
        lines.append(f"{gv_txt},{method},{metric},{repr(mean)},{repr(sd)}")
    agg_path.write_text("\n".join(lines) + "\n")
    paths = [agg_path]

    metrics = []
    for _gv, _method, metric, _m, _s in agg:
        if metric not in metrics:
            metrics.append(metric)
    with plt.rc_context({"svg.hashsalt": "proxyreg"}):
        for metric in metrics:
            fig, ax = plt.subplots(figsize=(6, 4))
            methods = []
            for _gv, method, met, _m, _s in agg:
                if met == metric and method not in methods:
                    methods.append(method)
            for method in methods:
                pts = [(gv, mean, sd) for gv, m, met, mean, sd in agg
                       if m == method and met == metric]
                xs = np.array([float(p[0]) for p in pts])
                means = np.array([p[1] for p in pts])
                sds = np.array([p[2] for p in pts])
                ax.plot(xs, means, marker="o", label=method)
                ax.fill_between(xs, means - sds, means + sds, alpha=0.2)
            ax.set_xlabel(result.grid_param)
            ax.set_ylabel(metric)
            ax.legend()
            fig.tight_layout()
            svg_path = out_dir / f"{metric}.svg"
            fig.savefig(svg_path, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(svg_path)
    return paths
