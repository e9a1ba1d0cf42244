"""Least squares on observed covariates (naive) and on proxies.

The naive fit regresses Y on Z and suffers errors-in-variables
attenuation toward (sigma_x2 / (sigma_x2 + sigma_eta2)) * beta; the
proxy fit regresses Y on Lambda.  Both go through one QR-based solver:
the Gram-inverse formula (D'D)^(-1) D'Y is algebraically equivalent but
numerically worse, so it appears only in tests as an oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .model import GraphSample
from .proxy import ProxyMatrix

__all__ = [
    "RankDeficient",
    "EstimateReport",
    "ols",
    "naive_estimate",
    "proxy_estimate",
    "oracle_estimate",
    "ESTIMATE_CSV_HEADER",
    "report_csv_row",
]

#: relative rank tolerance on the R diagonal (tolerates near-duplicate
#: proxy rows from shared screened neighborhoods)
RANK_RTOL = 1e-10

ESTIMATE_CSV_HEADER = ("method,n,d,alpha,gamma,sigma_eta2,seed,"
                       "rel_error,abs_error,attenuated_target_error,"
                       "gram_condition")


class RankDeficient(ValueError):
    """The design matrix is numerically rank deficient."""


@dataclass(frozen=True, eq=False)
class EstimateReport:
    beta_hat: np.ndarray
    rel_error: float
    abs_error: float
    attenuated_target_error: float
    gram_condition: float
    method_tag: str


def _qr_solve(design: np.ndarray, y: np.ndarray):
    """Solve min ||design b - y|| via economy QR; returns (b, gram_condition)."""
    design = np.asarray(design, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = design.shape
    if n < d:
        raise RankDeficient(f"need at least d={d} rows, got {n}")
    if len(y) != n:
        raise ValueError("response length does not match design rows")
    Q, R = linalg.qr(design, mode="economic")
    rdiag = np.abs(np.diag(R))
    if rdiag.max() == 0.0 or rdiag.min() < RANK_RTOL * rdiag.max():
        raise RankDeficient(
            f"smallest R diagonal {rdiag.min():.3e} below "
            f"{RANK_RTOL:g} x largest {rdiag.max():.3e}"
        )
    beta = linalg.solve_triangular(R, Q.T @ y)
    # cond(design' design) = cond(design)^2 = cond(R)^2 in the 2-norm.
    gram_condition = float(np.linalg.cond(R)) ** 2
    return beta, gram_condition


def ols(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of y on design (orthogonal factorization)."""
    return _qr_solve(design, y)[0]


def _report(beta_hat: np.ndarray, sample: GraphSample, gram_condition: float,
            method_tag: str) -> EstimateReport:
    p = sample.params
    beta = p.beta
    abs_error = float(np.linalg.norm(beta_hat - beta))
    norm_beta = float(np.linalg.norm(beta))
    rel_error = abs_error / norm_beta if norm_beta > 0 else float("nan")
    shrink = p.sigma_x2 / (p.sigma_x2 + p.sigma_eta2)
    attenuated = float(np.linalg.norm(beta_hat - shrink * beta))
    return EstimateReport(beta_hat=beta_hat, rel_error=rel_error,
                          abs_error=abs_error,
                          attenuated_target_error=attenuated,
                          gram_condition=gram_condition,
                          method_tag=method_tag)


def naive_estimate(sample: GraphSample) -> EstimateReport:
    """OLS of Y on the observed Z (attenuated for sigma_eta2 > 0)."""
    if sample.n < 4 * sample.d:
        raise ValueError("naive_estimate requires n >= 4d")
    beta_hat, cond = _qr_solve(sample.Z, sample.Y)
    return _report(beta_hat, sample, cond, "naive_z")


def proxy_estimate(sample: GraphSample, proxies: ProxyMatrix,
                   drop_fallback_rows: bool = False) -> EstimateReport:
    """OLS of Y on the proxies Lambda.

    Fallback rows (zero blocks from empty screened neighborhoods) are
    included by default; drop_fallback_rows=True excludes any node with
    a fallback in either block, for sensitivity analysis.
    """
    if proxies.Lambda.shape[0] != sample.n:
        raise ValueError("proxies were not computed from this sample")
    design, y = proxies.Lambda, sample.Y
    if drop_fallback_rows:
        keep = ~proxies.zero_fallback_flags.any(axis=1)
        design, y = design[keep], y[keep]
    beta_hat, cond = _qr_solve(design, y)
    return _report(beta_hat, sample, cond, "proxy_lambda")


def oracle_estimate(sample: GraphSample) -> EstimateReport:
    """OLS of Y on the latent X (unobservable; testing/reference only)."""
    beta_hat, cond = _qr_solve(sample.X, sample.Y)
    return _report(beta_hat, sample, cond, "oracle_x")


def report_csv_row(report: EstimateReport, sample_or_params) -> str:
    """One CSV row matching ESTIMATE_CSV_HEADER."""
    p = getattr(sample_or_params, "params", sample_or_params)
    fields = [report.method_tag, p.n, p.d, repr(float(p.alpha)),
              repr(float(p.gamma)), repr(float(p.sigma_eta2)), p.seed,
              repr(float(report.rel_error)), repr(float(report.abs_error)),
              repr(float(report.attenuated_target_error)),
              repr(float(report.gram_condition))]
    return ",".join(str(f) for f in fields)
