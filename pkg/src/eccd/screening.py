"""Correlation-based screening: lambda_max, sequential strong rule, KKT checks.

All three share one scale, the normalized score
``c_j = x_j^T (y - F'(eta)) / (n d)``, which is exactly the negative
partial derivative of the unpenalized loss.
"""

from __future__ import annotations

import numpy as np

from .deviance import null_intercept
from .errors import ConfigError

KKT_SLACK = 1e-9


def score(d, family, eta, mu=None) -> np.ndarray:
    """Normalized score vector ``X^T (y - F'(eta)) / (n d)``."""
    if mu is None:
        mu = family.mean(eta)
    c = d.x.T @ (d.y - mu)
    c /= d.n * family.dispersion
    return c


def lambda_max(d, family, alpha: float, fit_intercept: bool = True) -> float:
    """Smallest penalty at which the all-zero coefficient vector is optimal."""
    if not alpha > 0:
        raise ConfigError("lambda_max is infinite for alpha = 0; supply a lambda grid")
    b0 = null_intercept(d, family, fit_intercept)
    c = score(d, family, np.full(d.n, b0))
    c[d.degenerate] = 0.0
    lmax = float(np.max(np.abs(c))) / alpha
    if not lmax > 1e-14:
        raise ConfigError("degenerate problem: every feature is uncorrelated with the null residual")
    return lmax


def strong_rule_set(d, family, prev, lambda_k: float, lambda_prev: float, alpha: float,
                    c=None) -> list:
    """Sequential strong rule.

    Keeps ``j`` when ``|c_j| >= (2 lambda_k - lambda_prev) alpha`` at the
    previous solution ``prev`` (anything with ``beta`` / ``beta0``), plus
    every coordinate that is nonzero in ``prev``. Returned ascending.
    """
    if c is None:
        c = score(d, family, prev.beta0 + d.x @ prev.beta)
    thresh = (2.0 * lambda_k - lambda_prev) * alpha
    keep = (np.abs(c) >= thresh) | (prev.beta != 0)
    keep &= ~d.degenerate
    return np.flatnonzero(keep).tolist()


def kkt_scan(d, family, state, lam: float, alpha: float, mu=None) -> list:
    """Inactive coordinates whose score exceeds ``lam * alpha`` (+ slack).

    An empty result certifies optimality of the current iterate, given
    that the active coordinates are themselves converged.
    """
    if mu is None:
        mu = state.mu if state.grad_fresh else family.mean(state.beta0 + state.z)
    c = score(d, family, None, mu=mu)
    viol = np.abs(c) > lam * alpha + KKT_SLACK
    viol &= ~d.degenerate
    if state.active:
        viol[np.asarray(state.active, dtype=np.intp)] = False
    return np.flatnonzero(viol).tolist()


def kkt_residuals(d, family, beta, beta0, lam: float, alpha: float) -> np.ndarray:
    """Per-coordinate violation of the elastic-net stationarity conditions.

    For ``beta_j != 0``: ``|c_j - lam (1 - alpha) beta_j - lam alpha sign(beta_j)|``;
    for ``beta_j == 0``: ``max(0, |c_j| - lam alpha)``.
    """
    beta = np.asarray(beta, dtype=np.float64)
    c = score(d, family, beta0 + d.x @ beta)
    nz = beta != 0
    r = np.maximum(0.0, np.abs(c) - lam * alpha)
    r[nz] = np.abs(c[nz] - lam * (1 - alpha) * beta[nz] - lam * alpha * np.sign(beta[nz]))
    return r


def kkt_max_residual(d, family, beta, beta0, lam, alpha) -> float:
    return float(np.max(kkt_residuals(d, family, beta, beta0, lam, alpha)))
