"""Non-attention mean-aggregation network (the floor-exhibiting baseline).

Layers propagate xi_i^(l+1) = psi(c * xi_i^(l) + (1-c) * mean over
neighbors of xi_j^(l)) from xi^(0) = Z, followed by a linear readout fit
by OLS on labeled nodes.  No screening, no attention: in the
ER-dominant regime this family cannot denoise the covariates, which is
exactly the point of comparing against it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .model import Adjacency, GraphSample
from .regress import ols

__all__ = [
    "GcnConfig",
    "GcnModel",
    "gcn_features",
    "gcn_fit_predict",
    "BasePropagation",
    "propagate_layers",
    "holdout_features",
]

_ACTIVATIONS = {
    "identity": lambda x: x,
    "tanh": np.tanh,
}


@dataclass(frozen=True)
class GcnConfig:
    """Depth, self/neighbor mixing weight, and odd activation."""

    layers: int = 2
    self_weight: float = 0.5
    activation: str = "identity"

    def __post_init__(self):
        if self.layers < 0:
            raise ValueError("layers must be nonnegative")
        if not 0.0 <= self.self_weight <= 1.0:
            raise ValueError("self_weight must lie in [0, 1]")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {sorted(_ACTIVATIONS)}")

    @property
    def psi(self):
        return _ACTIVATIONS[self.activation]


@dataclass(frozen=True, eq=False)
class GcnModel:
    """A fitted readout on top of L-layer features."""

    config: GcnConfig
    readout: np.ndarray
    n_train: int


def _union_csr(adj: Adjacency) -> sparse.csr_matrix:
    data = np.ones(len(adj.indices), dtype=np.float64)
    return sparse.csr_matrix((data, adj.indices.astype(np.int64), adj.indptr),
                             shape=(adj.n, adj.n))


def _layer_step(Xi: np.ndarray, A: sparse.csr_matrix, deg: np.ndarray,
                cfg: GcnConfig) -> np.ndarray:
    nbr_sum = A @ Xi
    mean = np.zeros_like(Xi)
    pos = deg > 0
    mean[pos] = nbr_sum[pos] / deg[pos, None]  # isolated nodes keep mean 0
    return cfg.psi(cfg.self_weight * Xi + (1.0 - cfg.self_weight) * mean)


def propagate_layers(Z: np.ndarray, adj: Adjacency, cfg: GcnConfig,
                     layers: int | None = None) -> list[np.ndarray]:
    """All feature stages [xi^(0), ..., xi^(L)]."""
    L = cfg.layers if layers is None else layers
    A = _union_csr(adj)
    deg = adj.deg_union.astype(np.float64)
    stages = [np.asarray(Z, dtype=np.float64)]
    for _ in range(L):
        stages.append(_layer_step(stages[-1], A, deg, cfg))
    return stages


def gcn_features(Z: np.ndarray, adjacency: Adjacency,
                 cfg: GcnConfig) -> np.ndarray:
    """Features after cfg.layers rounds of self/neighbor-mean mixing."""
    return propagate_layers(Z, adjacency, cfg)[-1]


def gcn_fit_predict(task, cfg: GcnConfig) -> float:
    """Fit the readout on labeled rows of the (n+1)-graph, predict the target.

    ``task`` is a predict.PredictionTask; features are propagated over
    the full (n+1)-node graph, the linear readout is OLS on the n
    labeled rows, and the returned value is the readout applied to the
    target row.
    """
    sample = task.sample_plus
    u = task.target_index
    labeled = np.arange(sample.n) != u
    if int(labeled.sum()) < 4 * sample.d:
        raise ValueError("gcn_fit_predict requires at least 4d labeled nodes")
    Xi = gcn_features(sample.Z, sample.adj, cfg)
    readout = ols(Xi[labeled], sample.Y[labeled])
    return float(Xi[u] @ readout)


@dataclass(frozen=True, eq=False)
class BasePropagation:
    """Per-base-graph precomputation for fast holdout evaluation.

    ``stages[l]`` are the base-graph features xi^(l); ``nbr_sums[l]`` the
    matching neighbor sums A @ xi^(l).  Holdout nodes perturb these only
    through their own neighborhood, so exact (n+1)-graph features at the
    holdout are recoverable without re-propagating the whole graph.
    """

    cfg: GcnConfig
    A: sparse.csr_matrix
    deg: np.ndarray
    stages: list[np.ndarray]
    nbr_sums: list[np.ndarray]

    @classmethod
    def build(cls, sample: GraphSample, cfg: GcnConfig,
              max_layers: int) -> "BasePropagation":
        A = _union_csr(sample.adj)
        deg = sample.adj.deg_union.astype(np.float64)
        stages = [np.asarray(sample.Z, dtype=np.float64)]
        nbr_sums = []
        for _ in range(max_layers):
            nbr_sums.append(A @ stages[-1])
            mean = np.zeros_like(stages[-1])
            pos = deg > 0
            mean[pos] = nbr_sums[-1][pos] / deg[pos, None]
            stages.append(cfg.psi(cfg.self_weight * stages[-1]
                                  + (1.0 - cfg.self_weight) * mean))
        return cls(cfg=cfg, A=A, deg=deg, stages=stages, nbr_sums=nbr_sums)


def holdout_features(prop: BasePropagation, nbrs: np.ndarray, z_u: np.ndarray,
                     max_layers: int) -> list[np.ndarray]:
    """Exact xi_u^(l) on the (n+1)-graph for l = 0..max_layers.

    Appending node u changes base features only where u's influence has
    arrived: after one layer, exactly the rows in N_u.  For depth <= 3
    the target's features depend on corrected base rows no further than
    N_u, so the recursion below is exact, not an approximation.
    """
    if max_layers > 3:
        raise ValueError("holdout_features supports at most 3 layers; "
                         "use gcn_fit_predict for deeper nets")
    cfg = prop.cfg
    c = cfg.self_weight
    psi = cfg.psi
    delta_u = len(nbrs)
    out = [np.asarray(z_u, dtype=np.float64)]
    if max_layers == 0:
        return out

    def self_mix(xi_self, nbr_mean):
        return psi(c * xi_self + (1.0 - c) * nbr_mean)

    def u_next(xi_u_cur, nbr_rows):
        if delta_u == 0:
            return self_mix(xi_u_cur, 0.0)
        return self_mix(xi_u_cur, nbr_rows.sum(axis=0) / delta_u)

    # Layer 1 at u needs only base xi^(0) rows of N_u.
    out.append(u_next(out[0], prop.stages[0][nbrs]))
    if max_layers == 1:
        return out

    # Corrected xi^(1) on N_u: degree grows by one and u's features join.
    deg_hat = prop.deg[nbrs] + 1.0
    s1 = prop.nbr_sums[0][nbrs] + out[0]
    xi1_hat = psi(c * prop.stages[0][nbrs]
                  + (1.0 - c) * (s1 / deg_hat[:, None]))
    out.append(u_next(out[1], xi1_hat))
    if max_layers == 2:
        return out

    # Corrected xi^(2) on N_u: corrections to xi^(1) live exactly on N_u,
    # so the within-neighborhood adjacency is all that is needed.
    corr1 = xi1_hat - prop.stages[1][nbrs]
    A_nu = prop.A[nbrs][:, nbrs]
    s2 = prop.nbr_sums[1][nbrs] + A_nu @ corr1 + out[1]
    xi2_hat = psi(c * xi1_hat + (1.0 - c) * (s2 / deg_hat[:, None]))
    out.append(u_next(out[2], xi2_hat))
    return out
