"""Coordinate-descent engines for elastic-net penalized GLMs.

Three epoch engines share one scalar update (:func:`kernels.coordinate_step`)
and one block builder (:func:`kernels.compute_block`). They differ only in
when ``F'`` / ``F''`` are refreshed and in the within-block correction:

``CD``
    refresh before every coordinate (classical cyclic descent).
``BCD``
    refresh once per block of ``s`` coordinates and reuse the stale
    gradient for the whole block. Unstable for large ``s``; kept to
    reproduce that instability, so it is deliberately not safeguarded.
``ECCD``
    refresh once per block, but correct each coordinate's gradient with the
    first-order Taylor term ``- sum_{i<l} B[l, i] * delta_i`` while the
    curvature stays frozen at block entry. ``s = 1`` reproduces CD exactly.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .deviance import deviance, deviance_converged, null_deviance, null_intercept
from .errors import ConfigError, DomainError, NumericalError, SaturationError
from .families import Kind
from .kernels import (
    Z_REFRESH_EPOCHS,
    SolverState,
    compute_block,
    coordinate_step,
    update_linear_predictor,
)
from .screening import KKT_SLACK, kkt_scan, score

log = logging.getLogger(__name__)

SATURATION_WEIGHT = 1e-12


class Algorithm(str, enum.Enum):
    CD = "cd"
    BCD = "bcd"
    ECCD = "eccd"


BACKENDS = ("numba", "numpy")

_FAMILY_CODE = {
    Kind.GAUSSIAN: _jit.GAUSSIAN,
    Kind.BERNOULLI: _jit.BERNOULLI,
    Kind.POISSON: _jit.POISSON,
    Kind.GAMMA: _jit.GAMMA,
}


@dataclass(frozen=True)
class SolveConfig:
    """Settings for one penalized fit.

    ``lam`` is the overall penalty ``lambda`` and ``alpha`` the lasso
    fraction. ``max_objective`` aborts runaway (divergent) fits.
    ``backend`` selects the compiled sweep (``"numba"``) or the pure numpy
    reference engine (``"numpy"``); with ``"numba"`` the gradient and block
    phases are timed together under ``coef_update``.
    """

    lam: float
    alpha: float = 1.0
    block_size: int = 8
    tol: float = 1e-7
    max_epochs: int = 10000
    algorithm: Algorithm = Algorithm.ECCD
    fit_intercept: bool = True
    active_set_cap: bool = True
    max_objective: float = 1e12
    timings: bool = False
    backend: str = "numba"

    def __post_init__(self):
        try:
            object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        except ValueError:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}") from None
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ConfigError(f"lambda must be a finite nonnegative number, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise ConfigError(f"block size must be a positive integer, got {self.block_size}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be at least 1")

    def replace(self, **changes) -> "SolveConfig":
        from dataclasses import replace
        return replace(self, **changes)


PHASES = ("gradient_eval", "block_build", "coef_update", "screening", "convergence_check")


class PhaseTimer:
    """Accumulates wall time per solver phase; free when disabled."""

    def __init__(self, enabled: bool = False):
        self.enabled = enabled
        self.totals = dict.fromkeys(PHASES, 0.0)
        self._t0 = 0.0

    def start(self):
        if self.enabled:
            self._t0 = time.perf_counter()

    def stop(self, phase: str):
        if self.enabled:
            self.totals[phase] += time.perf_counter() - self._t0

    def merge(self, other: "PhaseTimer"):
        for k, v in other.totals.items():
            self.totals[k] += v


@dataclass
class FitResult:
    lam: float
    alpha: float
    beta: np.ndarray
    beta0: float
    objective: float
    deviance: float
    epochs: int
    converged: bool
    aborted: bool = False
    status: str = "converged"
    active: list = field(default_factory=list)
    block_size: int = 1
    algorithm: str = "eccd"
    seconds: float = 0.0
    timings: dict = field(default_factory=dict)
    state: SolverState | None = field(default=None, repr=False)

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.beta))


# ---------------------------------------------------------------------------
# objective and intercept


def _penalty(beta, lam, alpha):
    return lam * (0.5 * (1.0 - alpha) * float(beta @ beta) + alpha * float(np.abs(beta).sum()))


def _objective_from_eta(d, family, eta, beta, lam, alpha) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        loss = -float(np.sum(family.loglik_terms(d.y, eta))) / d.n
    return loss + _penalty(beta, lam, alpha)


def objective(d, family, beta, beta0, lam, alpha) -> float:
    """Penalized negative log-likelihood per observation.

    ``-(1/n) sum_i (y_i eta_i - F(eta_i)) / d + lam ((1-alpha)/2 |beta|_2^2 + alpha |beta|_1)``
    with ``eta = beta0 + X beta``; the response-only normalizing constant
    of the likelihood is omitted.
    """
    beta = np.asarray(beta, dtype=np.float64)
    return _objective_from_eta(d, family, beta0 + d.x @ beta, beta, lam, alpha)


def intercept_update(state: SolverState, d, family) -> float:
    """Newton step on the intercept; returns the new ``beta0``."""
    if not state.grad_fresh:
        state.refresh_gradient(family)
    total_w = float(np.sum(state.w))
    if not total_w > SATURATION_WEIGHT:
        raise SaturationError(f"total curvature {total_w:.3g} vanished; the fit is saturated")
    state.beta0 += float(np.sum(d.y - state.mu)) / total_w
    state.grad_fresh = False
    return state.beta0


# ---------------------------------------------------------------------------
# epoch engines


def effective_block_size(block_size: int, p: int, n_active: int, cap: bool = True) -> int:
    """Block size after clamping to ``p`` and applying the active-set cap.

    With the cap, blocks never exceed ``floor(sqrt(|A|))`` while
    ``|A| < s^2``, which keeps the ``s x s`` Gram small for small active sets.
    """
    s = max(1, min(int(block_size), p))
    if cap and n_active < s * s:
        s = max(1, math.isqrt(n_active))
    return s


class _Engine:
    """Per-solve constants and scratch for the epoch engines."""

    def __init__(self, d, family, cfg: SolveConfig, timer: PhaseTimer | None = None):
        self.d = d
        self.family = family
        self.cfg = cfg
        self.nd = d.n * family.dispersion
        self.l1 = cfg.lam * cfg.alpha
        self.l2 = cfg.lam * (1.0 - cfg.alpha)
        self.xty = d.xty
        self.timer = timer or PhaseTimer(cfg.timings)
        self.code = _FAMILY_CODE[family.kind]

    def block_update(self, state: SolverState, blk, correct: bool) -> np.ndarray:
        """Sequential coordinate updates inside one block; updates ``z`` once."""
        idx = blk.indices.tolist()
        a = blk.a.tolist()
        m = len(idx)
        beta = state.beta
        xty = self.xty
        nd, l1, l2 = self.nd, self.l1, self.l2
        delta = np.zeros(m)
        if m == 1:
            j = idx[0]
            old = float(beta[j])
            new = coordinate_step(old, float(xty[j]) - a[0], float(blk.b[0, 0]), nd, l1, l2)
            if new != old:
                beta[j] = new
                delta[0] = new - old
        else:
            b = blk.b.tolist()
            moved = []
            for l, j in enumerate(idx):
                r = float(xty[j]) - a[l]
                if correct and moved:
                    row = b[l]
                    r -= sum(row[i] * di for i, di in moved)
                old = float(beta[j])
                new = coordinate_step(old, r, b[l][l], nd, l1, l2)
                if new != old:
                    beta[j] = new
                    dl = new - old
                    delta[l] = dl
                    moved.append((l, dl))
        update_linear_predictor(state, self.d, delta, blk.indices)
        return delta

    def sweep(self, state: SolverState, s: int, correct: bool, always_refresh: bool) -> float:
        """One pass over the active set in blocks of ``s``; returns max |delta|."""
        if self.cfg.backend == "numba":
            return self._sweep_compiled(state, s, correct, always_refresh)
        timer = self.timer
        active = state.active
        max_delta = 0.0
        for start in range(0, len(active), s):
            block = active[start:start + s]
            if always_refresh or not state.grad_fresh:
                timer.start()
                state.refresh_gradient(self.family)
                timer.stop("gradient_eval")
            timer.start()
            blk = compute_block(self.d, state, state.mu, state.w, block)
            timer.stop("block_build")
            timer.start()
            delta = self.block_update(state, blk, correct)
            timer.stop("coef_update")
            if delta.size:
                max_delta = max(max_delta, float(np.max(np.abs(delta))))
        return max_delta

    def _sweep_compiled(self, state, s, correct, always_refresh) -> float:
        n = self.d.n
        if state.mu is None or state.mu.shape[0] != n:
            state.mu, state.w = np.empty(n), np.empty(n)
        mode = _jit.MODE_CD if always_refresh else (_jit.MODE_ECCD if correct else _jit.MODE_BCD)
        active = np.asarray(state.active, dtype=np.intp)
        self.timer.start()
        status, fresh, max_delta = _jit.sweep(
            self.d.x, self.xty, state.z, state.beta, float(state.beta0), active, int(s), mode,
            self.code, float(self.nd), float(self.l1), float(self.l2), state.mu, state.w,
            bool(state.grad_fresh))
        self.timer.stop("coef_update")
        state.grad_fresh = bool(fresh)
        if status == _jit.BAD_CURVATURE:
            raise NumericalError("non-positive curvature denominator")
        if status == _jit.BAD_DOMAIN:
            raise DomainError("linear predictor left the family's domain")
        return float(max_delta)

    def epoch(self, state: SolverState) -> float:
        cfg = self.cfg
        if cfg.algorithm is Algorithm.CD:
            return self.sweep(state, 1, correct=False, always_refresh=True)
        s = effective_block_size(cfg.block_size, self.d.p, len(state.active), cfg.active_set_cap)
        return self.sweep(state, s, correct=cfg.algorithm is Algorithm.ECCD, always_refresh=False)


def cd_epoch(state: SolverState, d, family, cfg: SolveConfig) -> float:
    """Classical cyclic pass: ``F'``/``F''`` refreshed before every coordinate."""
    return _Engine(d, family, cfg).sweep(state, 1, correct=False, always_refresh=True)


def bcd_epoch(state: SolverState, d, family, cfg: SolveConfig) -> float:
    """Naive block pass: stale gradient and curvature for the whole block."""
    s = effective_block_size(cfg.block_size, d.p, len(state.active), cfg.active_set_cap)
    return _Engine(d, family, cfg).sweep(state, s, correct=False, always_refresh=False)


def eccd_epoch(state: SolverState, d, family, cfg: SolveConfig) -> float:
    """Block pass with the first-order Taylor correction of the gradient."""
    s = effective_block_size(cfg.block_size, d.p, len(state.active), cfg.active_set_cap)
    return _Engine(d, family, cfg).sweep(state, s, correct=True, always_refresh=False)


def eccd_block_update(state: SolverState, blk, d, family, cfg: SolveConfig) -> np.ndarray:
    """Apply the corrected updates for one precomputed block; returns the deltas."""
    return _Engine(d, family, cfg).block_update(state, blk, correct=True)


# ---------------------------------------------------------------------------
# single-lambda solve


def _null_fit(d, family, cfg, b0, null_dev, t0, timer) -> FitResult:
    n, p = d.n, d.p
    state = SolverState.zeros(n, p, b0)
    eta = np.full(n, b0)
    return FitResult(
        lam=cfg.lam, alpha=cfg.alpha, beta=np.zeros(p), beta0=b0,
        objective=_objective_from_eta(d, family, eta, state.beta, cfg.lam, cfg.alpha),
        deviance=deviance(d, family, eta), epochs=0, converged=True, status="null model",
        active=[], block_size=cfg.block_size, algorithm=cfg.algorithm.value,
        seconds=time.perf_counter() - t0, timings=dict(timer.totals), state=state,
    )


def _initial_active(warm_active, beta, extra, allowed) -> list:
    """Nonzero warm coordinates first (in warm order), then the rest, deduplicated."""
    out, seen = [], set()
    for j in warm_active:
        if beta[j] != 0 and allowed[j] and j not in seen:
            out.append(j)
            seen.add(j)
    for j in np.flatnonzero(beta).tolist():
        if allowed[j] and j not in seen:
            out.append(j)
            seen.add(j)
    for j in extra:
        j = int(j)
        if allowed[j] and j not in seen:
            out.append(j)
            seen.add(j)
    return out


def solve_single_lambda(d, family, cfg: SolveConfig, warm: SolverState | None = None,
                        active=None, null_dev: float | None = None,
                        timer: PhaseTimer | None = None, callback=None) -> FitResult:
    """Active-set solve at one ``lambda``.

    Each epoch runs an intercept Newton step and one engine pass over the
    active set, then the deviance-based convergence test. On convergence
    (and after the first epoch) a full KKT scan adds violating coordinates
    to the active set; the solve ends when a converged iterate has no
    violations.

    Parameters
    ----------
    warm : SolverState, optional
        Starting iterate; its nonzero coordinates lead the active set.
    active : sequence of int, optional
        Initial active set. Without it, a cold start screens with the
        strong rule against ``lambda_max``.
    callback : callable, optional
        ``callback(state)`` after every epoch.

    Returns
    -------
    FitResult
        ``converged=False`` when ``max_epochs`` is reached; ``aborted=True``
        when the objective blows past ``cfg.max_objective``, turns
        non-finite, or the curvature degenerates. Never raises for those.
    """
    t0 = time.perf_counter()
    family.validate_response(d.y)
    timer = timer or PhaseTimer(cfg.timings)
    if null_dev is None:
        null_dev = null_deviance(d, family)
    dev_scale = null_dev if null_dev > 0 else 1.0
    lam, alpha = cfg.lam, cfg.alpha
    allowed = ~d.degenerate
    n, p = d.n, d.p

    if warm is not None:
        state = warm.copy()
        state.epoch = 0
        state.active = _initial_active(warm.active, state.beta, [] if active is None else active, allowed)
    else:
        b0 = null_intercept(d, family, cfg.fit_intercept)
        state = SolverState.zeros(n, p, b0)
        if active is None:
            timer.start()
            state.refresh_gradient(family)
            c = score(d, family, None, mu=state.mu)
            c[d.degenerate] = 0.0
            cmax = float(np.max(np.abs(c)))
            timer.stop("screening")
            if cmax <= lam * alpha + KKT_SLACK:
                return _null_fit(d, family, cfg, b0, null_dev, t0, timer)
            if alpha > 0:
                thresh = (2.0 * lam - cmax / alpha) * alpha
                active = np.flatnonzero((np.abs(c) >= thresh) & allowed).tolist()
            else:
                active = np.flatnonzero(allowed).tolist()
        state.active = _initial_active([], state.beta, active, allowed)

    engine = _Engine(d, family, cfg, timer)
    converged = False
    aborted = False
    status = "max_epochs reached"
    obj = math.inf
    epoch = 0
    try:
        while epoch < cfg.max_epochs:
            act = np.asarray(state.active, dtype=np.intp)
            beta_prev = state.beta[act].copy()
            beta0_prev = state.beta0
            if cfg.fit_intercept:
                timer.start()
                intercept_update(state, d, family)
                timer.stop("gradient_eval")
            engine.epoch(state)
            epoch += 1
            state.epoch = epoch
            if epoch % Z_REFRESH_EPOCHS == 0:
                state.refresh_linear_predictor(d.x)

            obj = _objective_from_eta(d, family, state.beta0 + state.z, state.beta, lam, alpha)
            if callback is not None:
                callback(state)
            if not math.isfinite(obj) or obj > cfg.max_objective:
                aborted = True
                status = f"objective abort ({obj:.3g})"
                break

            timer.start()
            s_eff = 1 if cfg.algorithm is Algorithm.CD else effective_block_size(
                cfg.block_size, p, len(state.active), cfg.active_set_cap)
            conv = deviance_converged(beta_prev, beta0_prev, state, d, family, cfg.tol,
                                      dev_scale, s_eff, active=act)
            timer.stop("convergence_check")
            if conv and not float(np.sum(state.w)) > SATURATION_WEIGHT:
                # vanishing curvature makes every step look converged
                raise SaturationError("total curvature vanished; the fit is saturated")
            if conv or epoch == 1:
                timer.start()
                viol = kkt_scan(d, family, state, lam, alpha)
                timer.stop("screening")
                if viol:
                    state.active.extend(viol)
                    continue
                if conv:
                    converged = True
                    status = "converged"
                    break
    except (SaturationError, NumericalError, DomainError) as exc:
        aborted = True
        status = f"aborted: {exc}"
        log.debug("solve aborted at epoch %d: %s", epoch, exc)

    if not aborted:
        # drop incremental drift before reporting
        state.refresh_linear_predictor(d.x)
    eta = state.beta0 + state.z
    try:
        obj = _objective_from_eta(d, family, eta, state.beta, lam, alpha)
        with np.errstate(over="ignore", invalid="ignore"):
            dev = deviance(d, family, eta)
    except DomainError:
        # only reachable after an abort: the iterate itself left the domain
        obj = dev = math.nan
    return FitResult(
        lam=lam, alpha=alpha, beta=state.beta.copy(), beta0=state.beta0, objective=obj,
        deviance=dev, epochs=epoch, converged=converged, aborted=aborted, status=status,
        active=list(state.active), block_size=cfg.block_size, algorithm=cfg.algorithm.value,
        seconds=time.perf_counter() - t0, timings=dict(timer.totals), state=state,
    )
