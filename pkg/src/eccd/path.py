"""Regularization paths: lambda grid, warm starts, strong-rule screening
with KKT recovery, and glmnet-style early stopping."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .deviance import deviance, deviance_converged, null_deviance, null_intercept
from .errors import ConfigError
from .screening import kkt_max_residual, kkt_residuals, kkt_scan, lambda_max, score, strong_rule_set
from .solvers import PhaseTimer, SolveConfig, _null_fit, solve_single_lambda

__all__ = [
    "LambdaPath", "PathResult", "build_path", "default_min_ratio", "solve_path",
    "lambda_max", "strong_rule_set", "kkt_scan", "kkt_residuals", "kkt_max_residual",
    "null_deviance", "deviance", "deviance_converged",
]

# early stopping is not considered before this many lambdas have been fit
MIN_LAMBDAS_BEFORE_STOP = 5


@dataclass(frozen=True)
class LambdaPath:
    values: np.ndarray
    lambda_max: float
    min_ratio: float

    @property
    def K(self) -> int:
        return len(self.values)


def default_min_ratio(n: int, p: int) -> float:
    return 0.01 if n < p else 1e-4


def build_path(lmax: float, K: int = 100, min_ratio: float = 1e-4) -> LambdaPath:
    """Log-equispaced grid from ``lmax`` down to ``min_ratio * lmax``."""
    if not lmax > 0:
        raise ConfigError(f"lambda_max must be positive, got {lmax}")
    if not 0 < min_ratio < 1:
        raise ConfigError(f"min_ratio must lie in (0, 1), got {min_ratio}")
    if K < 1:
        raise ConfigError("need at least one lambda")
    if K == 1:
        values = np.array([lmax])
    else:
        values = lmax * np.exp(np.linspace(0.0, np.log(min_ratio), K))
        values[0] = lmax
        values[-1] = lmax * min_ratio
    values.setflags(write=False)
    return LambdaPath(values, float(lmax), float(min_ratio))


@dataclass
class PathResult:
    fits: list
    deviances: np.ndarray
    null_deviance: float
    active_sizes: list
    stopped_early_at: int | None = None
    stop_reason: str | None = None
    seconds: float = 0.0
    timings: dict = field(default_factory=dict)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([f.lam for f in self.fits])

    @property
    def objectives(self) -> np.ndarray:
        return np.array([f.objective for f in self.fits])

    @property
    def dev_ratios(self) -> np.ndarray:
        if self.null_deviance <= 0:
            return np.zeros(len(self.fits))
        return 1.0 - self.deviances / self.null_deviance

    @property
    def coefs(self) -> np.ndarray:
        """Coefficient matrix, one row per lambda."""
        return np.vstack([f.beta for f in self.fits])


def solve_path(d, family, path: LambdaPath, alpha: float, cfg: SolveConfig,
               screening: bool = True, warm_start: bool = True,
               ne_limit: int | None = None, rsq_max: float = 0.999, sml: float = 1e-5,
               early_stop: bool = True) -> PathResult:
    """Fit every lambda of ``path`` in decreasing order.

    The first lambda is answered by the null model. Each later lambda is
    warm-started from its predecessor (unless ``warm_start`` is off) on the
    sequential strong-rule set; the single-lambda solver restores any
    coordinate the screen wrongly discarded via KKT checks.

    Early stopping (after ``MIN_LAMBDAS_BEFORE_STOP`` fits) triggers when
    the active set exceeds ``ne_limit`` (default ``min(p, 5n)``), the
    deviance ratio ``1 - dev/dev0`` exceeds ``rsq_max``, or the deviance
    drop relative to ``2 dev0`` falls below ``sml``.
    """
    t0 = time.perf_counter()
    n, p = d.n, d.p
    if ne_limit is None:
        ne_limit = min(p, 5 * n)
    dev0 = null_deviance(d, family)
    timer = PhaseTimer(cfg.timings)
    lambdas = np.asarray(path.values, dtype=np.float64)
    b0 = null_intercept(d, family, cfg.fit_intercept)
    allowed = ~d.degenerate

    fits = []
    devs = []
    stopped_at, reason = None, None
    prev = None
    for k, lam in enumerate(lambdas):
        lam = float(lam)
        kcfg = cfg.replace(lam=lam, alpha=alpha)
        if k == 0:
            fit = _null_fit(d, family, kcfg, b0, dev0, time.perf_counter(), PhaseTimer())
            # lambda_1 is lambda_max by construction, but a user-supplied grid may start lower
            if kkt_scan(d, family, fit.state, lam, alpha):
                fit = solve_single_lambda(d, family, kcfg, null_dev=dev0, timer=timer)
        else:
            if screening:
                timer.start()
                c = score(d, family, prev.beta0 + d.x @ prev.beta)
                active = strong_rule_set(d, family, prev, lam, float(lambdas[k - 1]), alpha, c=c)
                timer.stop("screening")
            else:
                active = np.flatnonzero(allowed).tolist()
            if warm_start:
                fit = solve_single_lambda(d, family, kcfg, warm=prev.state, active=active,
                                          null_dev=dev0, timer=timer)
            else:
                fit = solve_single_lambda(d, family, kcfg, active=active, null_dev=dev0, timer=timer)
        fits.append(fit)
        devs.append(fit.deviance)
        prev = fit

        if early_stop and k + 1 >= MIN_LAMBDAS_BEFORE_STOP and k + 1 < len(lambdas):
            n_active = fit.n_nonzero
            ratio = 1.0 - fit.deviance / dev0 if dev0 > 0 else 1.0
            drop = (devs[-2] - devs[-1]) / (2.0 * dev0) if dev0 > 0 else 0.0
            if n_active > ne_limit:
                stopped_at, reason = k, f"active set {n_active} exceeds ne_limit {ne_limit}"
            elif ratio > rsq_max:
                stopped_at, reason = k, f"deviance ratio {ratio:.6f} exceeds {rsq_max}"
            elif drop < sml:
                stopped_at, reason = k, f"relative deviance change {drop:.3g} below {sml}"
            if stopped_at is not None:
                break

    return PathResult(
        fits=fits, deviances=np.asarray(devs), null_deviance=dev0,
        active_sizes=[len(f.active) for f in fits], stopped_early_at=stopped_at,
        stop_reason=reason, seconds=time.perf_counter() - t0, timings=dict(timer.totals),
    )


def fit_path(d, family, alpha: float, cfg: SolveConfig, K: int = 100,
             min_ratio: float | None = None, **kwargs) -> PathResult:
    """Convenience wrapper: build the default grid and solve it."""
    lmax = lambda_max(d, family, alpha, cfg.fit_intercept)
    if min_ratio is None:
        min_ratio = default_min_ratio(d.n, d.p)
    return solve_path(d, family, build_path(lmax, K, min_ratio), alpha, cfg, **kwargs)
