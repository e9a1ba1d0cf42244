import math

import numpy as np
import pytest

from proxyreg.model import ModelParams, sample_graph
from proxyreg.proxy import (MIN_NODES, ProxyMatrix, ScreenConfig,
                            attention_weight, block_sizes,
                            compute_all_proxies, compute_proxy,
                            screen_counts_csv_lines)


def test_block_sizes():
    assert block_sizes(4) == (2, 2)
    assert block_sizes(5) == (3, 2)
    assert block_sizes(1) == (1, 0)
    for d in range(1, 30):
        d1, d2 = block_sizes(d)
        assert d1 + d2 == d and d1 >= d2


# ----------------------------------------------------------- screening

def test_attention_weight_against_scalar_loop():
    rng = np.random.default_rng(3)
    cfg = ScreenConfig(tau_screen=0.8, t_n=1.0)
    for _ in range(50):
        zi, zj = rng.standard_normal((2, 7))
        d1, _ = block_sizes(7)
        dot1 = sum(float(zi[k]) * float(zj[k]) for k in range(d1))
        dot2 = sum(float(zi[k]) * float(zj[k]) for k in range(d1, 7))
        assert attention_weight(zi, zj, 1, cfg) == int(dot1 >= 0.8)
        assert attention_weight(zi, zj, 2, cfg) == int(dot2 >= 0.8)


def test_attention_weight_boundary_inclusive():
    # equal blocks with squared norm exactly tau_screen -> screen passes
    cfg = ScreenConfig(tau_screen=2.25, t_n=1.0)
    z = np.array([1.5, 0.0, 7.0, -7.0])  # block 1 = (1.5, 0), |.|^2 = 2.25
    assert attention_weight(z, z, 1, cfg) == 1
    cfg_above = ScreenConfig(tau_screen=np.nextafter(2.25, 3.0), t_n=1.0)
    assert attention_weight(z, z, 1, cfg_above) == 0


def test_attention_weight_orthogonal_blocks():
    cfg = ScreenConfig(tau_screen=0.5, t_n=1.0)
    zi = np.array([1.0, 0.0, 1.0, 0.0])
    zj = np.array([0.0, 1.0, 0.0, 1.0])
    assert attention_weight(zi, zj, 1, cfg) == 0
    assert attention_weight(zi, zj, 2, cfg) == 0


def test_attention_weight_bad_block():
    cfg = ScreenConfig(tau_screen=1.0, t_n=1.0)
    with pytest.raises(ValueError):
        attention_weight(np.ones(4), np.ones(4), 3, cfg)


# ----------------------------------------------------------- hand traces

def test_single_neighbor_passing_both_screens():
    """One neighbor past both screens: lambda_i = (sqrt(d)/t_n) z_j exactly.

    d=4, t_n=2 so the scale is exactly 1; z_j entries are dyadic
    rationals, making every float operation exact.
    """
    cfg = ScreenConfig(tau_screen=0.5, t_n=2.0)
    Z = np.array([
        [1.0, 1.0, 1.0, 1.0],      # node 0
        [0.5, 0.25, 0.75, 0.5],    # its only neighbor: dots 0.75 and 1.25
    ])
    adjacency = [np.array([1]), np.array([0])]
    lam = compute_proxy(0, adjacency, Z, cfg)
    np.testing.assert_array_equal(lam, Z[1])  # scale == 1.0, so exact
    # and with a scale that is not 1, still exact within 1e-12
    cfg3 = ScreenConfig(tau_screen=0.5, t_n=3.0)
    lam3 = compute_proxy(0, adjacency, Z, cfg3)
    np.testing.assert_allclose(lam3, (math.sqrt(4) / 3.0) * Z[1],
                               rtol=0, atol=1e-12)


def test_two_neighbors_cross_screening():
    """j1 passes only the block-2 screen, j2 only the block-1 screen.

    Cross-fitting: block-1 average uses block-2 passes (j1's top half),
    block-2 average uses block-1 passes (j2's bottom half).
    """
    cfg = ScreenConfig(tau_screen=1.0, t_n=2.0)  # scale = sqrt(4)/2 = 1
    Z = np.array([
        [1.0, 0.0, 1.0, 0.0],     # node 0
        [0.25, 0.5, 2.0, 0.0],    # j1: block1 dot 0.25 < 1, block2 dot 2 >= 1
        [4.0, 0.0, 0.25, 0.125],  # j2: block1 dot 4 >= 1, block2 dot 0.25 < 1
    ])
    lam = compute_proxy(0, [np.array([1, 2])], Z, cfg)
    np.testing.assert_allclose(lam[:2], Z[1, :2], rtol=0, atol=1e-12)
    np.testing.assert_allclose(lam[2:], Z[2, 2:], rtol=0, atol=1e-12)


def test_two_neighbor_average_is_exact():
    # both neighbors pass the block-2 screen; block-1 averages exactly
    cfg = ScreenConfig(tau_screen=0.0, t_n=2.0)
    Z = np.array([
        [1.0, 1.0, 1.0, 1.0],
        [0.5, 0.25, 1.0, 1.0],
        [0.25, 0.75, 1.0, 1.0],
    ])
    lam = compute_proxy(0, [np.array([1, 2])], Z, cfg)
    np.testing.assert_array_equal(lam[:2], [0.375, 0.5])


def test_fallback_zero_blocks():
    cfg = ScreenConfig(tau_screen=1e9, t_n=2.0)  # nothing passes
    Z = np.ones((4, 4))
    lam = compute_proxy(0, [np.array([1, 2, 3])], Z, cfg)
    np.testing.assert_array_equal(lam, np.zeros(4))
    lam_iso = compute_proxy(0, [np.array([], dtype=np.int64)], Z,
                            ScreenConfig(tau_screen=0.0, t_n=2.0))
    np.testing.assert_array_equal(lam_iso, np.zeros(4))


def test_one_sided_fallback():
    # neighbor passes block-1 screen only -> block 1 of lambda is zero,
    # block 2 is filled (cross-fitting direction check)
    cfg = ScreenConfig(tau_screen=1.0, t_n=2.0)
    Z = np.array([
        [2.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.25, 0.25],   # block1 dot 2 >= 1, block2 dot 0.25 < 1
    ])
    lam = compute_proxy(0, [np.array([1])], Z, cfg)
    np.testing.assert_array_equal(lam[:2], [0.0, 0.0])
    np.testing.assert_array_equal(lam[2:], Z[1, 2:])


# ------------------------------------------------- vectorized whole-graph

def test_vectorized_rows_match_reference_bitwise():
    """compute_all_proxies must equal the per-node loop bit for bit.

    Both paths accumulate screened sums in ascending neighbor order, so
    even float associativity matches.
    """
    p = ModelParams(n=90, d=7, alpha=0.6, gamma=0.8, seed=13)
    s = sample_graph(p)
    cfg = ScreenConfig.from_params(p)
    prox = compute_all_proxies(s, cfg)
    for i in range(s.n):
        ref = compute_proxy(i, s.adj, s.Z, cfg)
        np.testing.assert_array_equal(prox.Lambda[i], ref)


def test_fallback_accounting():
    p = ModelParams(n=64, d=6, alpha=0.9, gamma=0.1, seed=17)  # sparse graph
    s = sample_graph(p)
    prox = compute_all_proxies(s, ScreenConfig.from_params(p))
    n_flags = int(prox.zero_fallback_flags.sum())
    n_zero_counts = int((prox.screen_counts == 0).sum())
    assert n_flags == n_zero_counts
    # flagged blocks are exactly zero
    d1, _ = block_sizes(s.d)
    for i in range(s.n):
        if prox.zero_fallback_flags[i, 0]:
            assert np.all(prox.Lambda[i, :d1] == 0.0)
        if prox.zero_fallback_flags[i, 1]:
            assert np.all(prox.Lambda[i, d1:] == 0.0)
    assert 0.0 <= prox.fallback_rate <= 1.0


def test_screened_counts_bounded_by_degree():
    p = ModelParams(n=80, d=5, seed=19)
    s = sample_graph(p)
    prox = compute_all_proxies(s, ScreenConfig.from_params(p))
    assert np.all(prox.screen_counts[:, 0] <= s.adj.deg_union)
    assert np.all(prox.screen_counts[:, 1] <= s.adj.deg_union)


def test_min_nodes_guard():
    p = ModelParams(n=MIN_NODES - 1, d=2, seed=1)
    s = sample_graph(p)
    with pytest.raises(ValueError, match="n >="):
        compute_all_proxies(s, ScreenConfig.from_params(p))


def test_block_orthogonal_equivariance_small():
    """Rotating each block rotates the proxies: Lambda' = Lambda Q^T.

    Q = diag(Q1, Q2) preserves all screening dot products, so edges and
    screens are unchanged and each proxy block rotates with its data.
    """
    p = ModelParams(n=80, d=8, seed=23)
    s = sample_graph(p)
    cfg = ScreenConfig.from_params(p)
    prox = compute_all_proxies(s, cfg)

    d1, d2 = block_sizes(s.d)
    rng = np.random.default_rng(7)
    Q1, _ = np.linalg.qr(rng.standard_normal((d1, d1)))
    Q2, _ = np.linalg.qr(rng.standard_normal((d2, d2)))
    Q = np.zeros((s.d, s.d))
    Q[:d1, :d1] = Q1
    Q[d1:, d1:] = Q2

    from proxyreg.model import GraphSample, assemble_graph, build_geometric_edges
    X_rot = s.X @ Q.T
    edges_rot = build_geometric_edges(X_rot, s.derived.tau)
    np.testing.assert_array_equal(edges_rot, s.edges_geo)  # edges preserved
    s_rot = GraphSample(params=p, derived=s.derived, X=X_rot, H=s.H @ Q.T,
                        Z=s.Z @ Q.T, Y=s.Y, eps=s.eps, edges_geo=edges_rot,
                        edges_er=s.edges_er,
                        adj=assemble_graph(edges_rot, s.edges_er, s.n))
    prox_rot = compute_all_proxies(s_rot, cfg)

    expected = prox.Lambda @ Q.T
    norms = np.linalg.norm(prox.Lambda, axis=1)
    err = np.linalg.norm(prox_rot.Lambda - expected, axis=1)
    nz = norms > 0
    assert np.all(err[nz] / norms[nz] <= 1e-9)
    assert np.all(err[~nz] == 0.0)


def test_screen_counts_csv():
    prox = ProxyMatrix(
        Lambda=np.zeros((2, 4)),
        screen_counts=np.array([[3, 1], [0, 2]]),
        zero_fallback_flags=np.array([[False, False], [True, False]]))
    lines = screen_counts_csv_lines(prox)
    assert lines[0] == "node,count_block2,count_block1,fallback1,fallback2"
    assert lines[1] == "0,3,1,0,0"
    assert lines[2] == "1,0,2,1,0"
