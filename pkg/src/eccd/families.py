"""Canonical-link exponential families.

Each family is described by its cumulant function ``F`` and dispersion
``d``. With the canonical link the natural parameter equals the linear
predictor ``eta``, so

* ``F'(eta)``  is the conditional mean ``E[y | x]``,
* ``F''(eta)`` is the variance function (the IRLS weight).

All evaluations accept scalars or numpy arrays and return the same shape.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


class Kind(enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "binomial"
    POISSON = "poisson"
    GAMMA = "gamma"


_ALIASES = {
    "gaussian": Kind.GAUSSIAN,
    "normal": Kind.GAUSSIAN,
    "binomial": Kind.BERNOULLI,
    "bernoulli": Kind.BERNOULLI,
    "logistic": Kind.BERNOULLI,
    "poisson": Kind.POISSON,
    "gamma": Kind.GAMMA,
}


def _asfloat(x):
    return np.asarray(x, dtype=np.float64)


def _ret(x, like):
    # hand scalars back as Python floats
    if np.ndim(like) == 0:
        return float(x)
    return x


@dataclass(frozen=True)
class FamilySpec:
    """An exponential family with canonical link.

    Parameters
    ----------
    kind : Kind
        Which family.
    dispersion : float
        ``d(tau)``. Fixed at 1 for Bernoulli and Poisson; the variance
        ``sigma^2`` for Gaussian and the shape parameter for Gamma.
    """

    kind: Kind
    dispersion: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))
        if not self.dispersion > 0:
            raise DomainError(f"dispersion must be positive, got {self.dispersion}")
        if self.kind in (Kind.BERNOULLI, Kind.POISSON) and self.dispersion != 1.0:
            raise DomainError(f"{self.kind.value} has unit dispersion")

    @classmethod
    def from_name(cls, name: str, dispersion: float = 1.0) -> "FamilySpec":
        try:
            kind = _ALIASES[name.lower()]
        except KeyError:
            raise DomainError(f"unknown family {name!r}") from None
        return cls(kind, dispersion)

    @property
    def name(self) -> str:
        return self.kind.value

    # -- domain checks ---------------------------------------------------

    def _check_eta(self, eta):
        if self.kind is Kind.GAMMA and np.any(eta >= 0):
            raise DomainError("gamma natural parameter must be negative")
        if np.any(np.isnan(eta)):
            raise DomainError("NaN linear predictor")

    def _check_mu(self, mu):
        k = self.kind
        if np.any(np.isnan(mu)):
            raise DomainError("NaN mean")
        if k is Kind.BERNOULLI and np.any((mu <= 0) | (mu >= 1)):
            raise DomainError("bernoulli mean must lie strictly inside (0, 1)")
        if k in (Kind.POISSON, Kind.GAMMA) and np.any(mu <= 0):
            raise DomainError(f"{k.value} mean must be positive")

    # -- cumulant and derivatives ----------------------------------------

    def cgf(self, eta):
        """Cumulant function ``F(eta)``."""
        e = _asfloat(eta)
        self._check_eta(e)
        k = self.kind
        with np.errstate(over="ignore"):
            if k is Kind.GAUSSIAN:
                out = 0.5 * e * e
            elif k is Kind.BERNOULLI:
                out = np.maximum(e, 0.0) + np.log1p(np.exp(-np.abs(e)))
            elif k is Kind.POISSON:
                out = np.exp(e)
            else:
                out = -np.log(-e)
        return _ret(out, eta)

    def mean(self, eta):
        """Mean function ``F'(eta)``; the inverse canonical link."""
        e = _asfloat(eta)
        self._check_eta(e)
        k = self.kind
        if k is Kind.GAUSSIAN:
            out = e.copy()
        elif k is Kind.BERNOULLI:
            out, _ = _logistic(e)
        elif k is Kind.POISSON:
            with np.errstate(over="ignore"):
                out = np.exp(e)
        else:
            out = -1.0 / e
        return _ret(out, eta)

    def variance_weight(self, eta):
        """Variance function ``F''(eta) >= 0``."""
        e = _asfloat(eta)
        self._check_eta(e)
        k = self.kind
        if k is Kind.GAUSSIAN:
            out = np.ones_like(e)
        elif k is Kind.BERNOULLI:
            _, out = _logistic(e)
        elif k is Kind.POISSON:
            with np.errstate(over="ignore"):
                out = np.exp(e)
        else:
            out = 1.0 / (e * e)
        return _ret(out, eta)

    def mean_and_weight(self, eta):
        """``(F'(eta), F''(eta))`` sharing one transcendental evaluation."""
        e = _asfloat(eta)
        self._check_eta(e)
        k = self.kind
        if k is Kind.GAUSSIAN:
            return e.copy(), np.ones_like(e)
        if k is Kind.BERNOULLI:
            return _logistic(e)
        if k is Kind.POISSON:
            with np.errstate(over="ignore"):
                m = np.exp(e)
            return m, m.copy()
        return -1.0 / e, 1.0 / (e * e)

    def eta_for_mean(self, mu):
        """Inverse of :meth:`mean`: the natural parameter with mean ``mu``."""
        m = _asfloat(mu)
        self._check_mu(m)
        k = self.kind
        if k is Kind.GAUSSIAN:
            out = m.copy()
        elif k is Kind.BERNOULLI:
            out = np.log(m) - np.log1p(-m)
        elif k is Kind.POISSON:
            out = np.log(m)
        else:
            out = -1.0 / m
        return _ret(out, mu)

    # -- likelihood pieces -------------------------------------------------

    def loglik_terms(self, y, eta):
        """Per-observation ``(y * eta - F(eta)) / d``, normalising constant dropped."""
        y = _asfloat(y)
        e = _asfloat(eta)
        return (y * e - self.cgf(e)) / self.dispersion

    def saturated_terms(self, y):
        """Per-observation ``(y * eta_sat - F(eta_sat)) / d`` with ``F'(eta_sat) = y``.

        Uses the limits ``0 log 0 = 0`` where the saturated parameter is infinite.
        """
        y = _asfloat(y)
        k = self.kind
        if k is Kind.GAUSSIAN:
            out = 0.5 * y * y
        elif k is Kind.BERNOULLI:
            out = _xlogx(y) + _xlogx(1.0 - y)
        elif k is Kind.POISSON:
            out = _xlogx(y) - y
        else:
            if np.any(y <= 0):
                raise DomainError("gamma responses must be positive")
            out = -1.0 + np.log(1.0 / y)
        return out / self.dispersion

    def validate_response(self, y) -> None:
        """Raise :class:`DomainError` when ``y`` is outside the family's support."""
        y = _asfloat(y)
        if not np.all(np.isfinite(y)):
            raise DomainError("response contains NaN or Inf")
        k = self.kind
        if k is Kind.BERNOULLI and np.any((y < 0) | (y > 1)):
            raise DomainError("binomial responses must lie in [0, 1]")
        if k is Kind.POISSON and np.any(y < 0):
            raise DomainError("poisson responses must be nonnegative")
        if k is Kind.GAMMA and np.any(y <= 0):
            raise DomainError("gamma responses must be positive")


def _logistic(e):
    # exp(-|e|) never overflows; the two branches are algebraically equal
    t = np.exp(-np.abs(e))
    denom = 1.0 + t
    mu = np.where(e >= 0, 1.0 / denom, t / denom)
    w = t / (denom * denom)
    return mu, w


def _xlogx(v):
    v = np.asarray(v, dtype=np.float64)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return out


GAUSSIAN = FamilySpec(Kind.GAUSSIAN)
BERNOULLI = FamilySpec(Kind.BERNOULLI)
POISSON = FamilySpec(Kind.POISSON)
GAMMA = FamilySpec(Kind.GAMMA)
