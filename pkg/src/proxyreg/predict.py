"""Prediction for an unlabeled node appended to a labeled base graph.

The target's proxy lambda_{n+1} comes from a full-graph screening run;
the coefficient is re-estimated on the subgraph induced by the labeled
nodes OUTSIDE the target's neighborhood (fresh screening run there), so
nothing the target touches leaks into the fit.  The prediction is their
inner product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .baseline import BasePropagation, GcnConfig, holdout_features
from .model import GraphSample, ModelParams, assemble_graph, sample_graph
from .proxy import (ScreenConfig, block_sizes, build_screened,
                    compute_all_proxies, proxies_from_screened)
from .regress import RankDeficient, ols
from .rng import stream

__all__ = [
    "EmptySubgraph",
    "PredictionTask",
    "PredictReport",
    "MseSummary",
    "induced_subgraph",
    "append_node",
    "draw_holdout",
    "predict_unlabeled",
    "evaluate_prediction_mse",
]


class EmptySubgraph(ValueError):
    """Too few nodes remain for a well-posed proxy fit."""


@dataclass(frozen=True, eq=False)
class PredictionTask:
    """An (n+1)-node sample whose last node is the unlabeled target.

    The target's response is physically present in ``sample_plus.Y`` but
    is withheld by contract: prediction code must only read labeled
    entries, and the exclusion tests poison it to verify that.
    """

    sample_plus: GraphSample
    target_index: int

    def __post_init__(self):
        if self.target_index != self.sample_plus.n - 1:
            raise ValueError("target must be the last node of sample_plus")


@dataclass(frozen=True, eq=False)
class PredictReport:
    y_hat: float
    sq_error: float
    n_neighbors: int
    fallback_block1: bool
    fallback_block2: bool
    subgraph_size: int
    beta_sub: np.ndarray


@dataclass(frozen=True, eq=False)
class MseSummary:
    """Monte-Carlo prediction errors for one base seed."""

    seed: int
    n_holdout: int
    attention_mse: float
    attention_stderr: float
    gcn_mse: dict
    gcn_stderr: dict
    fallback_count: int
    skipped: int


def induced_subgraph(sample: GraphSample, keep) -> tuple[GraphSample, np.ndarray]:
    """Restrict a sample to ``keep``; returns (sub_sample, kept_ids).

    Node ids are remapped to 0..len(keep)-1 in ascending original order;
    ``kept_ids[new_id] = old_id`` records the bijection.  The derived
    thresholds of the parent are carried over unchanged (same t_n).
    """
    keep = np.asarray(keep)
    if keep.dtype == bool:
        keep = np.nonzero(keep)[0]
    keep = np.unique(keep.astype(np.int64))
    n, d = sample.n, sample.d
    if len(keep) and (keep[0] < 0 or keep[-1] >= n):
        raise ValueError("keep contains out-of-range node ids")
    if len(keep) < 4 * d:
        raise EmptySubgraph(
            f"subgraph has {len(keep)} nodes, fewer than 4d = {4 * d}"
        )
    flag = np.zeros(n, dtype=bool)
    flag[keep] = True

    def refilter(edges):
        if len(edges) == 0:
            return edges.copy()
        m = flag[edges[:, 0]] & flag[edges[:, 1]]
        sub = edges[m].astype(np.int64)
        remapped = np.searchsorted(keep, sub)
        return remapped.astype(np.int32)

    sub_geo = refilter(sample.edges_geo)
    sub_er = refilter(sample.edges_er)
    params = replace(sample.params, n=len(keep))
    sub = GraphSample(params=params, derived=sample.derived,
                      X=sample.X[keep], H=sample.H[keep], Z=sample.Z[keep],
                      Y=sample.Y[keep], eps=sample.eps[keep],
                      edges_geo=sub_geo, edges_er=sub_er,
                      adj=assemble_graph(sub_geo, sub_er, len(keep)))
    return sub, keep


def _append_pairs(mask: np.ndarray, new_id: int) -> np.ndarray:
    ids = np.nonzero(mask)[0].astype(np.int32)
    out = np.empty((len(ids), 2), dtype=np.int32)
    out[:, 0] = ids
    out[:, 1] = new_id
    return out


def append_node(base: GraphSample, x_u: np.ndarray, h_u: np.ndarray,
                eps_u: float, er_mask: np.ndarray) -> PredictionTask:
    """Materialize the (n+1)-node graph with a fresh node appended.

    Geometric edges to the base follow the base threshold tau applied to
    x_u; the ER edges are supplied as a precomputed inclusion mask so the
    caller controls their stream.
    """
    p = base.params
    n = base.n
    geo_mask = (base.X @ x_u) >= base.derived.tau
    edges_geo = np.concatenate([base.edges_geo, _append_pairs(geo_mask, n)])
    edges_er = np.concatenate([base.edges_er, _append_pairs(er_mask, n)])
    z_u = x_u + h_u
    y_u = float(x_u @ p.beta) + eps_u
    params = replace(p, n=n + 1)
    sample_plus = GraphSample(
        params=params, derived=base.derived,
        X=np.vstack([base.X, x_u]), H=np.vstack([base.H, h_u]),
        Z=np.vstack([base.Z, z_u]),
        Y=np.append(base.Y, y_u), eps=np.append(base.eps, eps_u),
        edges_geo=edges_geo, edges_er=edges_er,
        adj=assemble_graph(edges_geo, edges_er, n + 1))
    return PredictionTask(sample_plus=sample_plus, target_index=n)


def draw_holdout(base: GraphSample, index: int):
    """Covariates, noises, and ER mask for holdout ``index`` of this base.

    Each holdout has its own named streams, so evaluations are
    order-independent and reproducible.
    """
    p = base.params
    x_u = math.sqrt(p.sigma_x2) * stream(p.seed, "holdout", index,
                                         "x").standard_normal(p.d)
    h_u = math.sqrt(p.sigma_eta2) * stream(p.seed, "holdout", index,
                                           "eta").standard_normal(p.d)
    eps_u = math.sqrt(p.sigma_eps2) * float(
        stream(p.seed, "holdout", index, "eps").standard_normal())
    er_mask = stream(p.seed, "holdout", index,
                     "er").random(base.n) < base.derived.p_n
    return x_u, h_u, eps_u, er_mask


def predict_unlabeled(task: PredictionTask,
                      cfg: ScreenConfig) -> tuple[float, PredictReport]:
    """Algorithm-2 prediction (reference path).

    (1) target proxy from a full (n+1)-graph screening run; (2)
    coefficients from a fresh screening run + OLS on the subgraph of
    labeled nodes excluding the target's neighborhood; (3) inner
    product.
    """
    sample = task.sample_plus
    u = task.target_index
    nbrs_u = sample.neighbors(u)

    proxies_full = compute_all_proxies(sample, cfg)
    lam_u = proxies_full.Lambda[u]
    fb1, fb2 = proxies_full.zero_fallback_flags[u]

    labeled = np.arange(sample.n - 1)
    kept = np.setdiff1d(labeled, nbrs_u)
    sub, _ = induced_subgraph(sample, kept)
    prox_sub = compute_all_proxies(sub, cfg)
    beta_sub = ols(prox_sub.Lambda, sub.Y)

    y_hat = float(lam_u @ beta_sub)
    y_true = sample.Y[u]
    report = PredictReport(
        y_hat=y_hat, sq_error=float((y_true - y_hat) ** 2),
        n_neighbors=len(nbrs_u), fallback_block1=bool(fb1),
        fallback_block2=bool(fb2), subgraph_size=sub.n, beta_sub=beta_sub)
    return y_hat, report


def _proxy_row_for_new_node(Z: np.ndarray, nbrs: np.ndarray, z_u: np.ndarray,
                            cfg: ScreenConfig):
    """The appended node's proxy, computed directly from its neighbor set.

    Identical (up to float associativity) to running the full screening
    pass on the (n+1)-graph and reading row n.
    """
    d = Z.shape[1]
    d1, _ = block_sizes(d)
    scale = math.sqrt(d) / cfg.t_n
    lam = np.zeros(d)
    if len(nbrs) == 0:
        return lam, True, True
    w1 = Z[nbrs, :d1] @ z_u[:d1] >= cfg.tau_screen
    w2 = Z[nbrs, d1:] @ z_u[d1:] >= cfg.tau_screen
    c2 = int(w2.sum())
    c1 = int(w1.sum())
    if c2 > 0:
        lam[:d1] = scale * (Z[nbrs[w2], :d1].sum(axis=0) / c2)
    if c1 > 0:
        lam[d1:] = scale * (Z[nbrs[w1], d1:].sum(axis=0) / c1)
    return lam, c2 == 0, c1 == 0


def _masked_subgraph_estimate(base: GraphSample, scr, kept_mask: np.ndarray,
                              cfg: ScreenConfig):
    """Subgraph proxy OLS without materializing the subgraph.

    Dropped nodes are zeroed out of the screened sums; because every
    excluded term is exactly 0.0 the kept rows match a fresh
    induced-subgraph screening run bit for bit (pinned by tests).
    """
    Z = base.Z
    n, d = Z.shape
    d1, _ = block_sizes(d)
    scale = math.sqrt(d) / cfg.t_n
    keepf = kept_mask.astype(np.float64)
    num1 = scr.S2 @ (Z[:, :d1] * keepf[:, None])
    num2 = scr.S1 @ (Z[:, d1:] * keepf[:, None])
    c2 = scr.S2 @ keepf
    c1 = scr.S1 @ keepf
    Lam = np.zeros((n, d))
    rows2 = c2 > 0
    rows1 = c1 > 0
    Lam[rows2, :d1] = scale * (num1[rows2] / c2[rows2, None])
    Lam[rows1, d1:] = scale * (num2[rows1] / c1[rows1, None])
    Lam_sub = Lam[kept_mask]
    beta_sub = ols(Lam_sub, base.Y[kept_mask])
    return Lam_sub, beta_sub


def evaluate_prediction_mse(params: ModelParams, n_holdout: int,
                            cfg: ScreenConfig | None = None,
                            gcn_cfg: GcnConfig | None = None,
                            gcn_layers: tuple[int, ...] | None = None,
                            include_baseline: bool = True) -> MseSummary:
    """Monte-Carlo squared prediction error over appended holdout nodes.

    One base graph is sampled from ``params``; ``n_holdout`` fresh nodes
    are appended one at a time (each with its own covariates, noise, and
    edges) and predicted by the attention pipeline and, optionally, by
    the mean-aggregation baseline at each depth in ``gcn_layers``.
    """
    if n_holdout < 1:
        raise ValueError("n_holdout must be at least 1")
    base = sample_graph(params)
    der = base.derived
    cfg = cfg or ScreenConfig(tau_screen=der.tau_screen, t_n=der.t_n)
    scr = build_screened(base.Z, base.union_edges(), cfg.tau_screen)
    p = params

    gcn_cfg = gcn_cfg or GcnConfig()
    if include_baseline:
        layer_list = sorted(set(gcn_layers)) if gcn_layers else [gcn_cfg.layers]
        max_l = max(layer_list)
        prop = BasePropagation.build(base, gcn_cfg, max_l)
        readouts = {L: ols(prop.stages[L], base.Y) for L in layer_list}
    else:
        layer_list = []
        prop = None
        readouts = {}

    att_err = np.full(n_holdout, np.nan)
    gcn_err = {L: np.full(n_holdout, np.nan) for L in layer_list}
    fallback_count = 0
    skipped = 0
    min_keep = max(4 * p.d, 8)

    for t in range(n_holdout):
        x_u, h_u, eps_u, er_mask = draw_holdout(base, t)
        z_u = x_u + h_u
        y_u = float(x_u @ p.beta) + eps_u
        geo_mask = (base.X @ x_u) >= der.tau
        nbr_mask = geo_mask | er_mask
        nbrs = np.nonzero(nbr_mask)[0]

        lam_u, fb1, fb2 = _proxy_row_for_new_node(base.Z, nbrs, z_u, cfg)
        if fb1 or fb2:
            fallback_count += 1

        kept_mask = ~nbr_mask
        if int(kept_mask.sum()) < min_keep:
            skipped += 1
            continue
        try:
            _, beta_sub = _masked_subgraph_estimate(base, scr, kept_mask, cfg)
        except RankDeficient:
            skipped += 1
            continue
        att_err[t] = (y_u - float(lam_u @ beta_sub)) ** 2

        if include_baseline:
            feats = holdout_features(prop, nbrs, z_u, max_l)
            for L in layer_list:
                gcn_err[L][t] = (y_u - float(feats[L] @ readouts[L])) ** 2

    def _mse(errs):
        vals = errs[np.isfinite(errs)]
        if len(vals) == 0:
            return float("nan"), float("nan")
        se = (float(vals.std(ddof=1)) / math.sqrt(len(vals))
              if len(vals) > 1 else float("nan"))
        return float(vals.mean()), se

    att_mse, att_se = _mse(att_err)
    gcn_mse = {}
    gcn_se = {}
    for L in layer_list:
        gcn_mse[L], gcn_se[L] = _mse(gcn_err[L])
    return MseSummary(seed=p.seed, n_holdout=n_holdout,
                      attention_mse=att_mse, attention_stderr=att_se,
                      gcn_mse=gcn_mse, gcn_stderr=gcn_se,
                      fallback_count=fallback_count, skipped=skipped)
