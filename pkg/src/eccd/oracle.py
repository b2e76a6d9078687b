"""Reference solvers for testing.

Proximal gradient descent on the full penalized objective, and a
brute-force grid minimizer for problems with at most two coefficients.
Nothing here is shared with the coordinate-descent code except the family
definitions: the objective, soft-thresholding and intercept update are all
written out again so that a bug in one route cannot hide in the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .families import Kind

BOX = 10.0
_POWER_ITERS = 50
_LIPSCHITZ_SAFETY = 1.1


@dataclass(frozen=True)
class OracleConfig:
    """Proximal-gradient settings.

    ``step_size=None`` derives ``1 / L`` from a power-iteration estimate of
    ``lambda_max(X^T W X) / (n d) + lam (1 - alpha)``. Iteration stops once
    the objective decrease is below ``tol`` and the prox-gradient mapping
    ``L (beta - beta+)`` is below ``grad_tol`` in max-norm.
    """

    step_size: float | None = None
    max_iters: int = 200000
    tol: float = 1e-10
    grad_tol: float = 1e-9

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigError("step_size must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.grad_tol > 0:
            raise ConfigError("grad_tol must be positive")


@dataclass
class OracleResult:
    beta: np.ndarray
    beta0: float
    objective: float
    iterations: int = 0
    converged: bool = True
    history: np.ndarray | None = None

    def __iter__(self):
        return iter((self.beta, self.beta0, self.objective))


def _obj(y, eta, beta, family, lam, alpha):
    """Penalized objective, NaN-free: +inf outside the natural domain."""
    try:
        f = family.cgf(eta)
    except DomainError:
        return np.inf
    nll = -float(np.mean(y * eta - f)) / family.dispersion
    pen = lam * (0.5 * (1 - alpha) * float(np.dot(beta, beta)) + alpha * float(np.sum(np.abs(beta))))
    return nll + pen


def _shrink(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _newton_intercept(y, off, family, b0):
    """Minimize the loss over a scalar intercept with fixed offset ``off``."""
    kind = family.kind
    if kind is Kind.GAUSSIAN:
        return float(np.mean(y - off))
    if kind is Kind.POISSON:
        return float(np.log(np.sum(y)) - np.log(np.sum(np.exp(off))))
    for _ in range(200):
        eta = b0 + off
        mu, w = family.mean_and_weight(eta)
        g = float(np.sum(y - mu))
        h = float(np.sum(w))
        if h <= 0:
            break
        step = np.clip(g / h, -5.0, 5.0)
        if kind is Kind.GAMMA:
            # stay inside eta < 0
            top = -float(np.max(off))
            if b0 + step >= top:
                step = 0.5 * (top - b0)
        b0 += step
        if abs(step) < 1e-15 * max(1.0, abs(b0)):
            break
    return float(b0)


def _start_intercept(y, family):
    return float(family.eta_for_mean(float(np.mean(y))))


def _weight_bound(x, family, eta0):
    if family.kind is Kind.GAUSSIAN:
        return np.ones(x.shape[0])
    if family.kind is Kind.BERNOULLI:
        return np.full(x.shape[0], 0.25)
    return family.variance_weight(eta0)


def _lipschitz(x, w, nd, ridge, rng):
    v = rng.standard_normal(x.shape[1])
    v /= np.linalg.norm(v) or 1.0
    lam = 0.0
    for _ in range(_POWER_ITERS):
        u = x.T @ (w * (x @ v))
        lam = float(np.linalg.norm(u))
        if lam == 0.0:
            break
        v = u / lam
    return _LIPSCHITZ_SAFETY * lam / nd + ridge


def prox_grad_solve(d, family, lam: float, alpha: float, cfg: OracleConfig | None = None,
                    fit_intercept: bool = True, record: bool = False) -> OracleResult:
    """Proximal gradient descent with an exact intercept step per iteration.

    The step starts at ``1 / L`` and is halved whenever the quadratic upper
    bound fails (needed only for families without a global Lipschitz
    constant), so the objective sequence is non-increasing.
    """
    cfg = cfg or OracleConfig()
    x = np.asarray(d.x, dtype=np.float64)
    y = np.asarray(d.y, dtype=np.float64)
    n, p = x.shape
    nd = n * family.dispersion
    ridge = lam * (1.0 - alpha)
    l1 = lam * alpha

    beta = np.zeros(p)
    b0 = _start_intercept(y, family) if fit_intercept else 0.0
    if fit_intercept:
        b0 = _newton_intercept(y, np.zeros(n), family, b0)
    if cfg.step_size is not None:
        L = 1.0 / cfg.step_size
    else:
        w = _weight_bound(x, family, np.full(n, b0))
        L = _lipschitz(x, w, nd, ridge, np.random.default_rng(0))
        if L <= 0:
            L = 1.0

    def smooth(b, eta):
        try:
            f = family.cgf(eta)
        except DomainError:
            return np.inf
        return -float(np.mean(y * eta - f)) / family.dispersion + 0.5 * ridge * float(b @ b)

    off = x @ beta
    f_cur = _obj(y, b0 + off, beta, family, lam, alpha)
    hist = [f_cur] if record else None
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        eta = b0 + off
        mu = family.mean(eta)
        grad = -(x.T @ (y - mu)) / nd + ridge * beta
        g_cur = smooth(beta, eta)
        while True:
            cand = _shrink(beta - grad / L, l1 / L)
            step = cand - beta
            off_c = x @ cand
            g_c = smooth(cand, b0 + off_c)
            if g_c <= g_cur + float(grad @ step) + 0.5 * L * float(step @ step) + 1e-15 * abs(g_cur):
                break
            L *= 2.0
            if L > 1e300:
                raise ArithmeticError("step size underflow in proximal gradient")
        beta, off = cand, off_c
        if fit_intercept:
            b0 = _newton_intercept(y, off, family, b0)
        f_new = _obj(y, b0 + off, beta, family, lam, alpha)
        if record:
            hist.append(f_new)
        delta = f_cur - f_new
        f_cur = f_new
        gmap = L * float(np.max(np.abs(step))) if p else 0.0
        if 0 <= delta < cfg.tol and gmap < cfg.grad_tol:
            converged = True
            break
    return OracleResult(beta, float(b0), float(f_cur), it, converged,
                        None if hist is None else np.asarray(hist))


def _profile_intercepts(y, off, family, fit_intercept):
    """Optimal intercept for each column of the offset matrix ``off`` (n x G)."""
    G = off.shape[1]
    if not fit_intercept:
        return np.zeros(G)
    kind = family.kind
    if kind is Kind.GAUSSIAN:
        return np.mean(y[:, None] - off, axis=0)
    if kind is Kind.POISSON:
        m = off.max(axis=0)
        return np.log(np.sum(y)) - (m + np.log(np.sum(np.exp(off - m), axis=0)))
    b0 = np.full(G, _start_intercept(y, family))
    if kind is Kind.GAMMA:
        b0 = np.minimum(b0, -off.max(axis=0) - 1e-3)
    todo = np.arange(G)
    for _ in range(100):
        o = off[:, todo]
        mu, w = family.mean_and_weight(b0[todo][None, :] + o)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.clip(np.sum(y[:, None] - mu, axis=0) / np.sum(w, axis=0), -5.0, 5.0)
        step = np.nan_to_num(step)
        if kind is Kind.GAMMA:
            top = -o.max(axis=0)
            step = np.where(b0[todo] + step >= top, 0.5 * (top - b0[todo]), step)
        b0[todo] += step
        todo = todo[np.abs(step) >= 1e-14]
        if todo.size == 0:
            break
    return b0


def _grid_objectives(x, y, family, lam, alpha, B, fit_intercept):
    """Objective at each candidate coefficient column of ``B`` (p x G)."""
    G = B.shape[1]
    # about 2M matrix entries per chunk keeps temporaries small and loops few
    chunk = max(4096, (1 << 21) // max(x.shape[0], 1))
    vals = np.empty(G)
    b0s = np.empty(G)
    for s in range(0, G, chunk):
        Bc = B[:, s:s + chunk]
        off = x @ Bc
        b0 = _profile_intercepts(y, off, family, fit_intercept)
        eta = b0[None, :] + off
        try:
            f = family.cgf(eta)
            nll = -np.mean(y[:, None] * eta - f, axis=0) / family.dispersion
        except DomainError:
            nll = np.full(Bc.shape[1], np.inf)
        pen = lam * (0.5 * (1 - alpha) * np.sum(Bc * Bc, axis=0) + alpha * np.sum(np.abs(Bc), axis=0))
        vals[s:s + chunk] = nll + pen
        b0s[s:s + chunk] = b0
    return vals, b0s


def _axes(center, half, h):
    k = int(round(half / h))
    return [np.clip(c + h * np.arange(-k, k + 1), -BOX, BOX) for c in center]


def _grid_min(x, y, family, lam, alpha, axes, fit_intercept):
    mesh = np.meshgrid(*axes, indexing="ij")
    B = np.vstack([m.ravel() for m in mesh])
    vals, b0s = _grid_objectives(x, y, family, lam, alpha, B, fit_intercept)
    k = int(np.argmin(vals))
    idx = np.unravel_index(k, mesh[0].shape)
    return B[:, k].copy(), float(b0s[k]), float(vals[k]), idx, [len(a) for a in axes]


def micro_grid_solve(d, family, lam: float, alpha: float, resolution: float = 1e-5,
                     fit_intercept: bool = True) -> OracleResult:
    """Exhaustive grid search over ``[-10, 10]^p`` for ``p <= 2``.

    A coarse grid is followed by two zoom passes, each refining the spacing
    by the same factor around the incumbent. A window whose minimizer lies
    on its edge (but not on the box edge) is recentered and searched again,
    which keeps the search honest along narrow valleys. The intercept is
    profiled out exactly for every candidate.
    """
    p = d.p
    if p > 2:
        raise ConfigError(f"micro_grid_solve handles at most 2 coefficients, got p={p}")
    if not resolution > 0:
        raise ConfigError("resolution must be positive")
    x = np.asarray(d.x, dtype=np.float64)
    y = np.asarray(d.y, dtype=np.float64)
    if p == 0:
        b0 = _profile_intercepts(y, np.zeros((d.n, 1)), family, fit_intercept)[0]
        beta = np.zeros(0)
        return OracleResult(beta, float(b0), _obj(y, b0 + np.zeros(d.n), beta, family, lam, alpha))

    # balance the coarse grid (20 / h0 points per axis) against the two
    # zoom passes (8 sqrt(h0 / resolution) points per axis each)
    h0 = min(max((6.25 * resolution) ** (1.0 / 3.0), resolution), 0.1)
    factor = max((h0 / resolution) ** 0.5, 1.0)
    center = np.zeros(p)
    beta, b0, val, _, _ = _grid_min(x, y, family, lam, alpha, _axes(center, BOX, h0), fit_intercept)

    h = h0
    for _ in range(2):
        h_next = max(h / factor, resolution)
        half = 4.0 * h
        for _ in range(200):
            axes = _axes(beta, half, h_next)
            cand, cb0, cval, idx, shape = _grid_min(x, y, family, lam, alpha, axes, fit_intercept)
            if cval <= val:
                beta, b0, val = cand, cb0, cval
            on_edge = any(
                (i == 0 and a[0] > -BOX) or (i == s - 1 and a[-1] < BOX)
                for i, s, a in zip(idx, shape, axes)
            )
            if not on_edge:
                break
        h = h_next
    return OracleResult(beta, b0, val)
