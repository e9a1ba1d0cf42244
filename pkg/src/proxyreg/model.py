"""Generative model: ER-contaminated random dot-product graphs.

Latent rows x_i ~ N(0, sigma_x^2 I_d) define geometric edges
(i, j) whenever x_i . x_j >= tau with tau = sigma_x^2 * t_n * sqrt(d);
an independent Erdos-Renyi layer with edge probability p_n = n^(gamma-1)
is unioned on top.  Observed covariates are z_i = x_i + eta_i with
eta_i ~ N(0, sigma_eta2 I_d), and responses y_i = x_i . beta + eps_i.

All sampling is driven by named counter-based streams (see
:mod:`proxyreg.rng`), so each piece of randomness is reproducible and
independent of the others.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import stream

__all__ = [
    "ModelParams",
    "DerivedParams",
    "Adjacency",
    "GraphSample",
    "alternating_beta",
    "derive_params",
    "sample_covariates",
    "sample_responses",
    "build_geometric_edges",
    "build_er_edges",
    "assemble_graph",
    "sample_graph",
]

_EMPTY_EDGES = np.empty((0, 2), dtype=np.int32)


def alternating_beta(d: int) -> np.ndarray:
    """The default ground-truth coefficient: unit-norm, entries prop. to +-1.

    Seed-independent so that sweeps over n / gamma / sigma_eta2 share the
    same target.
    """
    if d < 1:
        raise ValueError("d must be positive")
    signs = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
    return signs / math.sqrt(d)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Full generative configuration.

    ``beta`` defaults to :func:`alternating_beta`; pass an explicit
    length-d vector to override.
    """

    n: int
    d: int
    alpha: float = 0.72
    gamma: float = 0.725
    sigma_x2: float = 1.0
    sigma_eta2: float = 1.0
    sigma_eps2: float = 1.0
    beta: np.ndarray | None = None
    seed: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.d < 1:
            raise ValueError("d must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.sigma_x2 <= 0.0:
            raise ValueError("sigma_x2 must be positive")
        if self.sigma_eta2 < 0.0 or self.sigma_eps2 < 0.0:
            raise ValueError("noise variances must be nonnegative")
        if self.beta is None:
            object.__setattr__(self, "beta", alternating_beta(self.d))
        else:
            b = np.asarray(self.beta, dtype=np.float64)
            if b.shape != (self.d,):
                raise ValueError(f"beta must have shape ({self.d},), got {b.shape}")
            if not np.all(np.isfinite(b)):
                raise ValueError("beta must be finite")
            object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class DerivedParams:
    """Closed-form quantities derived from ModelParams."""

    t_n: float
    p_n: float
    tau: float
    tau_screen: float


def derive_params(p: ModelParams) -> DerivedParams:
    """t_n = sqrt(2 (1-alpha) ln n), p_n = n^(gamma-1), tau = sigma_x2 t_n sqrt(d)."""
    if p.n < 2:
        raise ValueError("n must be at least 2 (ln n must be positive)")
    t_n = math.sqrt(2.0 * (1.0 - p.alpha) * math.log(p.n))
    p_n = float(p.n) ** (p.gamma - 1.0)
    tau = p.sigma_x2 * t_n * math.sqrt(p.d)
    return DerivedParams(t_n=t_n, p_n=p_n, tau=tau, tau_screen=tau / 2.0)


def sample_covariates(p: ModelParams, rng_stream: np.random.Generator):
    """Draw (X, H, Z): latent rows, noise rows, and Z = X + H.

    Zero variances yield exactly-zero components (draws are still
    consumed, so shapes and downstream streams are unaffected).
    """
    X = math.sqrt(p.sigma_x2) * rng_stream.standard_normal((p.n, p.d))
    H = math.sqrt(p.sigma_eta2) * rng_stream.standard_normal((p.n, p.d))
    return X, H, X + H


def sample_responses(X: np.ndarray, beta: np.ndarray, sigma_eps2: float,
                     rng_stream: np.random.Generator):
    """Draw (Y, eps) with Y_i = x_i . beta + eps_i, eps_i ~ N(0, sigma_eps2)."""
    X = np.asarray(X, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if X.ndim != 2 or beta.shape != (X.shape[1],):
        raise ValueError(
            f"beta length {beta.shape} does not match covariate dimension {X.shape}"
        )
    eps = math.sqrt(sigma_eps2) * rng_stream.standard_normal(X.shape[0])
    return X @ beta + eps, eps


def build_geometric_edges(X: np.ndarray, tau: float,
                          block_rows: int = 1024) -> np.ndarray:
    """All pairs i < j with x_i . x_j >= tau (inclusive), as an (m, 2) array.

    The Gram matrix is scanned in row blocks of ``block_rows`` so peak
    memory is O(block_rows * n) rather than O(n^2); only the edge list is
    materialized.  Output is sorted by (i, j).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if block_rows < 1:
        raise ValueError("block_rows must be positive")
    chunks = []
    for r0 in range(0, n, block_rows):
        r1 = min(r0 + block_rows, n)
        # Columns below r0 can only produce j < i pairs; skip them.
        gram = X[r0:r1] @ X[r0:].T
        ii, jj = np.nonzero(gram >= tau)
        ii = ii + r0
        jj = jj + r0
        keep = jj > ii
        if keep.any():
            chunks.append(
                np.stack([ii[keep], jj[keep]]).T.astype(np.int32, copy=False)
            )
    if not chunks:
        return _EMPTY_EDGES.copy()
    return np.concatenate(chunks, axis=0)


def build_er_edges(n: int, p_n: float,
                   rng_stream: np.random.Generator) -> np.ndarray:
    """Erdos-Renyi layer: each unordered pair kept with probability p_n.

    Sparse-efficient: successes are located by geometric skipping over the
    linearized pair index, so cost is O(#edges) rather than O(n^2).
    Output is an (m, 2) int32 array sorted by (i, j).
    """
    if not 0.0 <= p_n < 1.0:
        raise ValueError("p_n must lie in [0, 1)")
    total = n * (n - 1) // 2
    if p_n == 0.0 or total == 0:
        return _EMPTY_EDGES.copy()

    # Gaps between successive Bernoulli successes are iid Geometric(p).
    hits = []
    pos = -1  # last accepted linear pair index
    while pos < total - 1:
        want = int((total - pos) * p_n * 1.1) + 16
        gaps = rng_stream.geometric(p_n, size=min(want, 4_000_000))
        new = pos + np.cumsum(gaps)
        hits.append(new)
        pos = int(new[-1])
    m = np.concatenate(hits)
    m = m[m < total]

    # Invert the row-major linearization: pairs with first index i occupy
    # [row_start[i], row_start[i+1]), row_start[i] = i*(n-1) - i*(i-1)/2.
    i_arr = np.arange(n, dtype=np.int64)
    row_start = i_arr * (n - 1) - (i_arr * (i_arr - 1)) // 2
    i = np.searchsorted(row_start, m, side="right") - 1
    j = m - row_start[i] + i + 1
    return np.stack([i, j]).T.astype(np.int32, copy=False)


@dataclass(frozen=True, eq=False)
class Adjacency:
    """CSR-style union adjacency with per-node edge-provenance counts.

    ``indices[indptr[i]:indptr[i+1]]`` is the sorted neighbor list of node
    i in E1 union E2 (duplicates coalesced).  ``deg_geo`` counts neighbors
    in E1, ``deg_er_only`` those reachable only through E2.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    deg_union: np.ndarray
    deg_geo: np.ndarray
    deg_er_only: np.ndarray

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def as_lists(self) -> list[np.ndarray]:
        """Per-node sorted neighbor arrays (views into ``indices``)."""
        return np.split(self.indices, self.indptr[1:-1])


def _pair_keys(edges: np.ndarray, n: int) -> np.ndarray:
    e = edges.astype(np.int64, copy=False)
    return e[:, 0] * n + e[:, 1]


def assemble_graph(edges_geo: np.ndarray, edges_er: np.ndarray,
                   n: int) -> Adjacency:
    """Union the two edge sets into sorted per-node neighbor lists."""
    for e in (edges_geo, edges_er):
        if len(e) and np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
    key_geo = _pair_keys(edges_geo, n)
    key_er = _pair_keys(edges_er, n)
    key_union = np.union1d(key_geo, key_er)
    u = (key_union // n).astype(np.int32)
    v = (key_union % n).astype(np.int32)

    heads = np.concatenate([u, v])
    tails = np.concatenate([v, u])
    order = np.lexsort((tails, heads))
    indices = tails[order]
    deg_union = np.bincount(heads, minlength=n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg_union, out=indptr[1:])

    deg_geo = np.zeros(n, dtype=np.int64)
    if len(key_geo):
        np.add.at(deg_geo, edges_geo[:, 0], 1)
        np.add.at(deg_geo, edges_geo[:, 1], 1)
    key_er_only = np.setdiff1d(key_er, key_geo, assume_unique=False)
    deg_er_only = np.zeros(n, dtype=np.int64)
    if len(key_er_only):
        np.add.at(deg_er_only, (key_er_only // n).astype(np.int64), 1)
        np.add.at(deg_er_only, (key_er_only % n).astype(np.int64), 1)
    return Adjacency(n=n, indptr=indptr, indices=indices,
                     deg_union=deg_union, deg_geo=deg_geo,
                     deg_er_only=deg_er_only)


@dataclass(frozen=True, eq=False)
class GraphSample:
    """One draw of the model: covariates, responses, and labeled edge sets."""

    params: ModelParams
    derived: DerivedParams
    X: np.ndarray
    H: np.ndarray
    Z: np.ndarray
    Y: np.ndarray
    eps: np.ndarray
    edges_geo: np.ndarray
    edges_er: np.ndarray
    adj: Adjacency

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def neighbors(self, i: int) -> np.ndarray:
        return self.adj.neighbors(i)

    def adjacency_lists(self) -> list[np.ndarray]:
        return self.adj.as_lists()

    def union_edges(self) -> np.ndarray:
        """Undirected coalesced edge list (m, 2), sorted by (i, j)."""
        n = self.n
        heads = np.repeat(np.arange(n, dtype=np.int32),
                          np.diff(self.adj.indptr))
        tails = self.adj.indices
        keep = tails > heads
        return np.stack([heads[keep], tails[keep]]).T


def sample_graph(p: ModelParams, include_edges: bool = True,
                 block_rows: int = 1024) -> GraphSample:
    """Sample a full GraphSample from named streams of ``p.seed``.

    ``include_edges=False`` skips edge construction (the covariate and
    response streams are independent of the edge stream, so X/H/Z/Y are
    identical either way); useful for estimators that never read the
    graph.
    """
    derived = derive_params(p)
    X, H, Z = sample_covariates(p, stream(p.seed, "covariates"))
    Y, eps = sample_responses(X, p.beta, p.sigma_eps2,
                              stream(p.seed, "responses"))
    if include_edges:
        edges_geo = build_geometric_edges(X, derived.tau, block_rows=block_rows)
        edges_er = build_er_edges(p.n, derived.p_n, stream(p.seed, "er-edges"))
    else:
        edges_geo = _EMPTY_EDGES.copy()
        edges_er = _EMPTY_EDGES.copy()
    adj = assemble_graph(edges_geo, edges_er, p.n)
    return GraphSample(params=p, derived=derived, X=X, H=H, Z=Z, Y=Y, eps=eps,
                       edges_geo=edges_geo, edges_er=edges_er, adj=adj)
