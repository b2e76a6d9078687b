"""Compiled epoch sweep.

Mirrors ``solvers._Engine.sweep`` coordinate for coordinate, but runs the
whole pass inside one numba call so that small blocks are not dominated by
interpreter overhead. The numpy engine stays as the readable reference and
the two are cross-checked in the test suite.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# family codes
GAUSSIAN, BERNOULLI, POISSON, GAMMA = 0, 1, 2, 3
# sweep modes
MODE_CD, MODE_BCD, MODE_ECCD = 0, 1, 2
# status codes
OK, BAD_CURVATURE, BAD_DOMAIN = 0, 1, 2


@njit(cache=True, nogil=True)
def _refresh(code, beta0, z, mu, w):
    n = z.shape[0]
    for i in range(n):
        e = beta0 + z[i]
        if code == GAUSSIAN:
            mu[i] = e
            w[i] = 1.0
        elif code == BERNOULLI:
            t = math.exp(-abs(e))
            q = 1.0 / (1.0 + t)
            if e >= 0:
                mu[i] = q
            else:
                mu[i] = t * q
            w[i] = t * q * q
        elif code == POISSON:
            m = math.exp(e)
            mu[i] = m
            w[i] = m
        else:
            if not e < 0.0:
                return False
            mu[i] = -1.0 / e
            w[i] = 1.0 / (e * e)
    return True


@njit(cache=True, nogil=True)
def _soft(v, g):
    if v > g:
        return v - g
    if v < -g:
        return v + g
    return 0.0


@njit(cache=True, nogil=True)
def sweep(x, xty, z, beta, beta0, active, s, mode, code, nd, l1, l2, mu, w, grad_fresh):
    """One pass over ``active`` in blocks of ``s``.

    Returns ``(status, grad_fresh, max_abs_delta)``; ``beta``, ``z``,
    ``mu`` and ``w`` are updated in place.
    """
    n = x.shape[0]
    m_act = active.shape[0]
    a = np.empty(s)
    b = np.empty((s, s))
    delta = np.empty(s)
    max_delta = 0.0
    for start in range(0, m_act, s):
        stop = min(start + s, m_act)
        m = stop - start
        if mode == MODE_CD or not grad_fresh:
            if not _refresh(code, beta0, z, mu, w):
                return BAD_DOMAIN, grad_fresh, max_delta
            grad_fresh = True
        # block gradient and (lower-triangular) weighted Gram
        for l in range(m):
            jl = active[start + l]
            acc = 0.0
            for k in range(n):
                acc += x[k, jl] * mu[k]
            a[l] = acc
            lo = 0 if mode == MODE_ECCD else l
            for i in range(lo, l + 1):
                ji = active[start + i]
                acc = 0.0
                for k in range(n):
                    acc += w[k] * x[k, jl] * x[k, ji]
                b[l, i] = acc
        moved = False
        for l in range(m):
            jl = active[start + l]
            r = xty[jl] - a[l]
            if mode == MODE_ECCD:
                for i in range(l):
                    if delta[i] != 0.0:
                        r -= b[l, i] * delta[i]
            psi = b[l, l] / nd + l2
            if not psi > 0.0:
                return BAD_CURVATURE, grad_fresh, max_delta
            old = beta[jl]
            phi = r / nd - l2 * old
            new = _soft(old + phi / psi, l1 / psi)
            if new != old:
                beta[jl] = new
                delta[l] = new - old
                moved = True
                ad = abs(delta[l])
                if ad > max_delta:
                    max_delta = ad
            else:
                delta[l] = 0.0
        if moved:
            for l in range(m):
                dl = delta[l]
                if dl != 0.0:
                    jl = active[start + l]
                    for k in range(n):
                        z[k] += dl * x[k, jl]
            grad_fresh = False
    return OK, grad_fresh, max_delta


@njit(cache=True, nogil=True)
def refresh(code, beta0, z, mu, w):
    """Public wrapper of the per-block ``F'`` / ``F''`` refresh; False on a domain error."""
    return _refresh(code, beta0, z, mu, w)


@njit(cache=True, nogil=True)
def add_into(a, b, out):
    for i in range(a.shape[0]):
        out[i] = a[i] + b[i]
