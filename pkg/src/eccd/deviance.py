"""Deviance, null deviance and the deviance-scaled stopping rule."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DomainError


def null_intercept(d, family, fit_intercept: bool = True) -> float:
    """Intercept of the intercept-only model: the natural parameter at ``mean(y)``."""
    if not fit_intercept:
        return 0.0
    return float(family.eta_for_mean(float(np.mean(d.y))))


def null_deviance(d, family) -> float:
    """``-2 (l_null - l_sat)`` with the null model fitted at ``mean(y)``.

    Raises :class:`DomainError` when ``mean(y)`` sits on the boundary of
    the family's mean range (e.g. an all-zero Bernoulli response).
    """
    ybar = float(np.mean(d.y))
    try:
        theta0 = family.eta_for_mean(ybar)
    except DomainError as exc:
        raise DomainError(f"null model undefined: {exc}") from None
    l_null = np.sum(family.loglik_terms(d.y, np.full(d.n, theta0)))
    l_sat = np.sum(family.saturated_terms(d.y))
    return float(max(-2.0 * (l_null - l_sat), 0.0))


def deviance(d, family, eta) -> float:
    """Deviance of a fit with linear predictor ``eta`` (intercept included)."""
    ll = np.sum(family.loglik_terms(d.y, eta))
    return float(-2.0 * (ll - np.sum(family.saturated_terms(d.y))))


def deviance_converged(beta_prev, beta0_prev, state, d, family, tol: float,
                       null_dev: float, block_size: int, active=None) -> bool:
    """Deviance-scaled convergence test between two consecutive epochs.

    With curvature weights ``w`` evaluated at the current iterate,

        L_0 = sum(w) * d_beta0^2
        L_j = sum_i w_i x_ij^2 * d_beta_j^2      (j active)

    the epoch counts as converged when ``L_0 < tol * null_dev`` and
    ``max_j L_j < tol * null_dev * block_size``.

    ``beta_prev`` holds the previous coefficients for ``active`` (or the
    full vector when ``active`` is None). The state's gradient cache is
    refreshed as a side effect, so a subsequent intercept update can reuse it.
    """
    if not null_dev > 0:
        raise ConfigError(f"null deviance must be positive, got {null_dev}")
    if not state.grad_fresh:
        state.refresh_gradient(family)
    w = state.w
    thresh = tol * null_dev
    d0 = state.beta0 - beta0_prev
    if float(np.sum(w)) * d0 * d0 >= thresh:
        return False
    if active is None:
        idx = np.arange(d.p)
    else:
        idx = np.asarray(active, dtype=np.intp)
    if idx.size == 0:
        return True
    delta = state.beta[idx] - np.asarray(beta_prev, dtype=np.float64)
    moved = np.flatnonzero(delta)
    if moved.size == 0:
        return True
    cols = d.x[:, idx[moved]]
    curv = w @ (cols * cols)
    return bool(np.max(curv * delta[moved] ** 2) < thresh * block_size)
