"""Regression on noisy graph covariates with attention-screened proxies.

Simulates random dot-product graphs contaminated by an Erdos-Renyi
layer, builds cross-part screened neighbor-average proxies for the
latent covariates, and compares proxy OLS against the naive fit, an
unlabeled-node predictor, and a mean-aggregation baseline.
"""

from .baseline import GcnConfig, gcn_features, gcn_fit_predict
from .diagnostics import (DegreeStats, ProxyErrorStats, degree_stats,
                          proxy_error_stats)
from .harness import (InvalidConfig, SweepConfig, SweepResult, emit_plots,
                      read_sweep_csv, run_estimation_sweep,
                      run_prediction_sweep, write_sweep_csv)
from .matio import read_graph_dump, read_matrix, write_graph_dump, write_matrix
from .model import (Adjacency, DerivedParams, GraphSample, ModelParams,
                    alternating_beta, assemble_graph, build_er_edges,
                    build_geometric_edges, derive_params, sample_covariates,
                    sample_graph, sample_responses)
from .predict import (EmptySubgraph, MseSummary, PredictionTask,
                      PredictReport, append_node, draw_holdout,
                      evaluate_prediction_mse, induced_subgraph,
                      predict_unlabeled)
from .proxy import (ProxyMatrix, ScreenConfig, attention_weight, block_sizes,
                    compute_all_proxies, compute_proxy)
from .regress import (ESTIMATE_CSV_HEADER, EstimateReport, RankDeficient,
                      naive_estimate, ols, oracle_estimate, proxy_estimate)
from .rng import SEED_STRIDE, seed_schedule, stream

__version__ = "0.1.0"

__all__ = [
    "Adjacency", "DerivedParams", "DegreeStats", "EmptySubgraph",
    "EstimateReport", "ESTIMATE_CSV_HEADER", "GcnConfig", "GraphSample",
    "InvalidConfig", "ModelParams", "MseSummary", "PredictionTask",
    "PredictReport", "ProxyErrorStats", "ProxyMatrix", "RankDeficient",
    "ScreenConfig", "SEED_STRIDE", "SweepConfig", "SweepResult",
    "alternating_beta", "append_node", "assemble_graph", "attention_weight",
    "block_sizes", "build_er_edges", "build_geometric_edges",
    "compute_all_proxies", "compute_proxy", "degree_stats", "derive_params",
    "draw_holdout", "emit_plots", "evaluate_prediction_mse", "gcn_features",
    "gcn_fit_predict", "induced_subgraph", "naive_estimate", "ols",
    "oracle_estimate", "predict_unlabeled", "proxy_error_stats",
    "proxy_estimate", "read_graph_dump", "read_matrix", "read_sweep_csv",
    "run_estimation_sweep", "run_prediction_sweep", "sample_covariates",
    "sample_graph", "sample_responses", "seed_schedule", "stream",
    "write_graph_dump", "write_matrix", "write_sweep_csv",
]
