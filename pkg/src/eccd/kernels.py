"""Numerical primitives shared by every coordinate-descent engine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError

# z is recomputed from scratch this often to bound incremental drift
Z_REFRESH_EPOCHS = 50


def soft_threshold(z: float, gamma: float) -> float:
    """Proximal operator of ``gamma * |.|``."""
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def coordinate_step(beta_j: float, resid_dot: float, curvature: float,
                    nd: float, l1: float, l2: float) -> float:
    """One penalized Newton step on a single coordinate.

    ``resid_dot`` is ``x_j^T (y - mu)`` (possibly Taylor-corrected) and
    ``curvature`` is ``sum_i w_i x_ij^2``; both are unnormalized. Returns
    ``S(beta_j + phi / psi, l1 / psi)`` with

        phi = resid_dot / nd - l2 * beta_j
        psi = curvature / nd + l2
    """
    psi = curvature / nd + l2
    if not psi > 0.0:
        raise NumericalError(f"non-positive curvature denominator {psi!r}")
    phi = resid_dot / nd - l2 * beta_j
    return soft_threshold(beta_j + phi / psi, l1 / psi)


@dataclass
class SolverState:
    """Mutable iterate of a single solve.

    ``z`` caches ``X @ beta`` (without intercept). ``mu`` / ``w`` cache
    ``F'`` and ``F''`` at ``beta0 + z`` and are trusted only while
    ``grad_fresh`` is set.
    """

    beta: np.ndarray
    beta0: float
    z: np.ndarray
    active: list = field(default_factory=list)
    epoch: int = 0
    grad_fresh: bool = False
    mu: np.ndarray | None = None
    w: np.ndarray | None = None

    @classmethod
    def zeros(cls, n: int, p: int, beta0: float = 0.0) -> "SolverState":
        return cls(np.zeros(p), float(beta0), np.zeros(n))

    def copy(self) -> "SolverState":
        return SolverState(
            self.beta.copy(), self.beta0, self.z.copy(), list(self.active), self.epoch,
            self.grad_fresh,
            None if self.mu is None else self.mu.copy(),
            None if self.w is None else self.w.copy(),
        )

    @property
    def eta(self) -> np.ndarray:
        return self.beta0 + self.z

    def refresh_gradient(self, family) -> None:
        self.mu, self.w = family.mean_and_weight(self.beta0 + self.z)
        self.grad_fresh = True

    def refresh_linear_predictor(self, x: np.ndarray) -> None:
        nz = np.flatnonzero(self.beta)
        self.z = x[:, nz] @ self.beta[nz] if nz.size else np.zeros(x.shape[0])
        self.grad_fresh = False

    def cache_error(self, x: np.ndarray) -> float:
        """``||z - X beta||_inf``."""
        return float(np.max(np.abs(self.z - x @ self.beta)))


@dataclass
class BlockQuantities:
    """``a = X_s^T F'`` and ``b = X_s^T diag(F'') X_s`` for one block."""

    a: np.ndarray
    b: np.ndarray
    indices: np.ndarray


def compute_block(d, state, grad_vec, weight_vec, indices) -> BlockQuantities:
    """Gather the block's columns and form its gradient and weighted Gram.

    ``a[l] = x_{j_l}^T grad_vec`` and ``b[l, i] = sum_k w_k x_{k j_l} x_{k j_i}``.
    ``state`` is accepted for interface symmetry; only the vectors are read.
    """
    idx = np.asarray(indices, dtype=np.intp)
    m = idx.shape[0]
    p = d.x.shape[1]
    if m == 0:
        return BlockQuantities(np.zeros(0), np.zeros((0, 0)), idx)
    if idx.min() < 0 or idx.max() >= p:
        raise DimensionError(f"block index out of range [0, {p})")
    if m == 1:
        j = int(idx[0])
        cols = d.x[:, j:j + 1]
    else:
        cols = d.x[:, idx]
    a = cols.T @ grad_vec
    b = cols.T @ (cols * weight_vec[:, None])
    return BlockQuantities(a, b, idx)


def update_linear_predictor(state: SolverState, d, delta, indices) -> None:
    """``z += X[:, indices] @ delta``; a no-op when every delta is zero."""
    delta = np.asarray(delta, dtype=np.float64)
    nz = np.flatnonzero(delta)
    if nz.size == 0:
        return
    idx = np.asarray(indices, dtype=np.intp)
    if nz.size == 1:
        k = nz[0]
        state.z += delta[k] * d.x[:, idx[k]]
    else:
        state.z += d.x[:, idx[nz]] @ delta[nz]
    state.grad_fresh = False
