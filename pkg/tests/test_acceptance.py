"""Acceptance suite: one test per numbered criterion, desk-scale fixtures.

Each test prints a single ``criterion N: PASS/FAIL`` line with the
measured quantities (surfaced in the run summary via the project-wide
``-rA`` option), then asserts.  Criteria that probe asymptotic
behaviour are run exactly as stated and left to fail honestly when the
desk-scale configuration cannot attain them; nothing here is tuned to
pass.

Expected runtime for the full file is roughly 35-40 minutes on one
core; criteria 3-5 dominate.  Run ``pytest --ignore=tests/test_acceptance.py``
for the fast development loop.
"""
import math

import numpy as np

from proxyreg import (ModelParams, ScreenConfig, SweepConfig,
                      compute_all_proxies, compute_proxy, degree_stats,
                      evaluate_prediction_mse, naive_estimate, ols,
                      proxy_estimate, run_estimation_sweep, sample_graph,
                      seed_schedule, write_sweep_csv)
from proxyreg.model import GraphSample, assemble_graph, build_geometric_edges
from proxyreg.proxy import block_sizes

SIGMA_EPS2 = 1.0  # every fixture below uses unit noise variances


def _report(num: int, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"criterion {num}: {verdict} - {detail}", flush=True)


def _schedule(base: int, k: int):
    return [int(s) for s in seed_schedule(base, k)]


def test_criterion_1_attenuation_limit():
    """Naive OLS on noisy covariates lands at beta/2: n=20000, d=50.

    With sigma_x^2 = sigma_eta^2 the shrinkage factor is exactly 1/2, so
    rel_error(naive) must sit within 0.05 of 0.5 and the distance to the
    shrunken target must be at most 0.05, on every one of 10 seeds.
    The estimator never reads the graph, so edges are skipped.
    """
    rel_devs, att_errs = [], []
    for s in _schedule(2, 10):
        p = ModelParams(n=20000, d=50, seed=s)
        sample = sample_graph(p, include_edges=False)
        rep = naive_estimate(sample)
        rel_devs.append(abs(rep.rel_error - 0.5))
        att_errs.append(rep.attenuated_target_error)
    worst = (max(rel_devs), max(att_errs))
    ok = worst[0] <= 0.05 and worst[1] <= 0.05
    _report(1, ok, "naive attenuation, 10 seeds: "
            f"max |rel_error - 0.5| = {worst[0]:.4f}, "
            f"max shrunken-target error = {worst[1]:.4f} (tol 0.05 each)")
    assert ok, f"attenuation outside tolerance: {worst}"


def test_criterion_2_proxy_beats_naive():
    """Screened-proxy OLS beats naive OLS at n=10000, d=100.

    Every seed individually, and the seed-averaged error ratio
    proxy/naive must be at most 0.7.
    """
    ratios = []
    every_seed = True
    for s in _schedule(1, 10):
        p = ModelParams(n=10000, d=100, alpha=0.72, gamma=0.725, seed=s)
        sample = sample_graph(p)
        prox = compute_all_proxies(sample, ScreenConfig.from_params(p))
        naive = naive_estimate(sample)
        proxy = proxy_estimate(sample, prox)
        every_seed &= proxy.rel_error < naive.rel_error
        ratios.append(proxy.rel_error / naive.rel_error)
    mean_ratio = float(np.mean(ratios))
    ok = every_seed and mean_ratio <= 0.7
    _report(2, ok, f"proxy/naive rel_error ratio: mean = {mean_ratio:.4f} "
            f"(<= 0.7), range [{min(ratios):.4f}, {max(ratios):.4f}], "
            f"proxy < naive on all seeds: {every_seed}")
    assert ok, (mean_ratio, ratios)


def test_criterion_3_consistency_trend():
    """Seed-averaged proxy rel_error should fall as n grows (d=80 fixed).

    10 seeds at each n in {4000, 10000, 25000}; the three means must be
    strictly decreasing.
    """
    means = []
    for n in (4000, 10000, 25000):
        vals = []
        for s in _schedule(1, 10):
            p = ModelParams(n=n, d=80, alpha=0.72, gamma=0.6, seed=s)
            sample = sample_graph(p)
            prox = compute_all_proxies(sample, ScreenConfig.from_params(p))
            vals.append(proxy_estimate(sample, prox).rel_error)
        means.append(float(np.mean(vals)))
    ok = means[0] > means[1] > means[2]
    _report(3, ok, "seed-averaged proxy rel_error at n=4000/10000/25000: "
            f"{means[0]:.4f} / {means[1]:.4f} / {means[2]:.4f} "
            "(must be strictly decreasing)")
    assert ok, f"rel_error trend not strictly decreasing: {means}"


def test_criterion_4_prediction_mse_band():
    """Attention-predictor MSE within [0.9, 1.3] x noise floor, per seed.

    n=10000, d=100, alpha=0.72, gamma=0.6; 10 seeds x 200 holdouts.
    The baseline is skipped: only the attention path is scored here.
    """
    per_seed = []
    for s in _schedule(1, 10):
        p = ModelParams(n=10000, d=100, alpha=0.72, gamma=0.60, seed=s)
        summ = evaluate_prediction_mse(p, 200, include_baseline=False)
        per_seed.append(summ.attention_mse)
    lo, hi = 0.9 * SIGMA_EPS2, 1.3 * SIGMA_EPS2
    ok = all(lo <= m <= hi for m in per_seed)
    _report(4, ok, "attention-predictor per-seed MSE over 10 seeds x 200 "
            f"holdouts: range [{min(per_seed):.4f}, {max(per_seed):.4f}], "
            f"required band [{lo}, {hi}] for every seed")
    assert ok, f"per-seed MSE outside band: {per_seed}"


def test_criterion_5_mean_aggregation_floor():
    """Dense-noise regime (alpha=0.6, gamma=0.75): aggregation floor at 1.5.

    Three clauses over 10 seeds x 200 holdouts:
      (a) pooled mean-aggregation MSE >= 1.4 at every depth L in 0..3;
      (b) pooled attention MSE <= 1.25;
      (c) per-seed gap min_L gcn_mse[L] - attention_mse > 0 on all seeds.
    Pooling weights each seed by its evaluated holdout count.
    """
    layers = (0, 1, 2, 3)
    att, weights, gaps = [], [], []
    gcn = {L: [] for L in layers}
    for s in _schedule(1, 10):
        p = ModelParams(n=10000, d=100, alpha=0.60, gamma=0.75, seed=s)
        summ = evaluate_prediction_mse(p, 200, gcn_layers=layers)
        w = summ.n_holdout - summ.skipped
        weights.append(w)
        att.append(summ.attention_mse)
        for L in layers:
            gcn[L].append(summ.gcn_mse[L])
        gaps.append(min(summ.gcn_mse[L] for L in layers) - summ.attention_mse)
    pooled_att = float(np.average(att, weights=weights))
    pooled_gcn = {L: float(np.average(gcn[L], weights=weights))
                  for L in layers}
    clause_a = all(pooled_gcn[L] >= 1.4 for L in layers)
    clause_b = pooled_att <= 1.25
    clause_c = all(g > 0 for g in gaps)
    gcn_txt = " ".join(f"L{L}={pooled_gcn[L]:.4f}" for L in layers)
    ok = clause_a and clause_b and clause_c
    _report(5, ok, f"pooled aggregation MSE {gcn_txt} (>= 1.4 each: "
            f"{clause_a}); pooled attention MSE = {pooled_att:.4f} "
            f"(<= 1.25: {clause_b}); gap positive on all seeds: {clause_c} "
            f"(per-seed gap range [{min(gaps):.4f}, {max(gaps):.4f}])")
    assert ok, {"gcn": pooled_gcn, "attention": pooled_att, "gaps": gaps}


def test_criterion_6_er_degree_concentration():
    """At least 99% of nodes keep their random-edge degree in the band.

    Band [n^gamma / 2, 2 n^gamma] at n=5000, gamma=0.7, five seeds.
    """
    fractions = []
    for s in _schedule(1, 5):
        p = ModelParams(n=5000, d=16, gamma=0.7, seed=s)
        sample = sample_graph(p)
        stats = degree_stats(sample, sample.derived)
        fractions.append(stats.er_band_fraction)
    ok = all(f >= 0.99 for f in fractions)
    _report(6, ok, "random-edge degree band fraction over 5 seeds: "
            f"min = {min(fractions):.5f} (>= 0.99)")
    assert ok, fractions


def test_criterion_7_block_orthogonal_equivariance():
    """Block rotations commute with the whole pipeline at n=500, d=32.

    Q = diag(Q1, Q2) preserves both screening dot products, hence the
    edge set; proxies must rotate: relative row error <= 1e-9.
    """
    p = ModelParams(n=500, d=32, seed=7)
    s = sample_graph(p)
    cfg = ScreenConfig.from_params(p)
    prox = compute_all_proxies(s, cfg)

    d1, _ = block_sizes(s.d)
    rng = np.random.default_rng(2024)
    Q1, _ = np.linalg.qr(rng.standard_normal((d1, d1)))
    Q2, _ = np.linalg.qr(rng.standard_normal((s.d - d1, s.d - d1)))
    Q = np.zeros((s.d, s.d))
    Q[:d1, :d1] = Q1
    Q[d1:, d1:] = Q2

    X_rot = s.X @ Q.T
    edges_rot = build_geometric_edges(X_rot, s.derived.tau)
    edges_same = (edges_rot.shape == s.edges_geo.shape
                  and bool(np.all(edges_rot == s.edges_geo)))
    s_rot = GraphSample(params=p, derived=s.derived, X=X_rot, H=s.H @ Q.T,
                        Z=s.Z @ Q.T, Y=s.Y, eps=s.eps, edges_geo=edges_rot,
                        edges_er=s.edges_er,
                        adj=assemble_graph(edges_rot, s.edges_er, s.n))
    prox_rot = compute_all_proxies(s_rot, cfg)

    norms = np.linalg.norm(prox.Lambda, axis=1)
    err = np.linalg.norm(prox_rot.Lambda - prox.Lambda @ Q.T, axis=1)
    nz = norms > 0
    worst = float((err[nz] / norms[nz]).max()) if nz.any() else 0.0
    zeros_exact = bool(np.all(err[~nz] == 0.0))
    ok = edges_same and worst <= 1e-9 and zeros_exact
    _report(7, ok, f"block-rotation equivariance: edge sets identical = "
            f"{edges_same}, max relative proxy deviation = {worst:.3e} "
            "(<= 1e-9)")
    assert ok, (edges_same, worst, zeros_exact)


def test_criterion_8_oracle_equivalence():
    """Solver, edge scan, and proxy rule each match an independent oracle."""
    # (a) noiseless least squares recovers the coefficients exactly
    rng = np.random.default_rng(11)
    design = rng.standard_normal((300, 12))
    beta0 = rng.standard_normal(12)
    ols_err = float(np.abs(ols(design, design @ beta0) - beta0).max())

    # (b) blocked edge scan equals the O(n^2) double loop, n = 500
    X = rng.standard_normal((500, 6))
    tau = 2.0
    brute = [(i, j) for i in range(500) for j in range(i + 1, 500)
             if float(X[i] @ X[j]) >= tau]
    brute = np.array(brute, dtype=np.int64).reshape(-1, 2)
    blocked = build_geometric_edges(X, tau, block_rows=64)
    edges_match = (blocked.shape == brute.shape
                   and bool(np.all(blocked == brute)))

    # (c) proxy hand traces: single neighbor and cross-screened pair
    cfg = ScreenConfig(tau_screen=0.5, t_n=3.0)
    Z1 = np.array([[1.0, 1.0, 1.0, 1.0],
                   [0.5, 0.25, 0.75, 0.5]])
    lam1 = compute_proxy(0, [np.array([1])], Z1, cfg)
    trace1 = float(np.abs(lam1 - (math.sqrt(4) / 3.0) * Z1[1]).max())

    cfg2 = ScreenConfig(tau_screen=1.0, t_n=2.0)   # scale exactly 1
    Z2 = np.array([[1.0, 0.0, 1.0, 0.0],
                   [0.25, 0.5, 2.0, 0.0],
                   [4.0, 0.0, 0.25, 0.125]])
    lam2 = compute_proxy(0, [np.array([1, 2])], Z2, cfg2)
    trace2 = float(max(np.abs(lam2[:2] - Z2[1, :2]).max(),
                       np.abs(lam2[2:] - Z2[2, 2:]).max()))

    ok = ols_err <= 1e-8 and edges_match and max(trace1, trace2) <= 1e-12
    _report(8, ok, f"oracle equivalence: noiseless OLS error = {ols_err:.2e} "
            f"(<= 1e-8), blocked edges == brute force: {edges_match}, "
            f"proxy hand-trace error = {max(trace1, trace2):.2e} (<= 1e-12)")
    assert ok, (ols_err, edges_match, trace1, trace2)


def test_criterion_9_sweep_determinism(tmp_path):
    """The same sweep config yields byte-identical CSVs across threads."""
    def run(out, threads):
        cfg = SweepConfig(grid_param="gamma", grid=(0.70, 0.725),
                          base=ModelParams(n=2000, d=16, seed=1),
                          seeds=tuple(_schedule(1, 2)),
                          methods=("naive", "proxy"),
                          out_dir=out, threads=threads)
        path = out / "sweep_gamma.csv"
        write_sweep_csv(cfg, run_estimation_sweep(cfg), path)
        return path.read_bytes()

    first = run(tmp_path / "a", 1)
    second = run(tmp_path / "b", 3)
    third = run(tmp_path / "c", 1)
    ok = first == second == third
    _report(9, ok, "sweep CSV bytes identical across reruns and "
            f"--threads 1 vs 3: {ok} ({len(first)} bytes)")
    assert ok
