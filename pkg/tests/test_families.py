import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eccd.errors import DomainError
from eccd.families import BERNOULLI, GAMMA, GAUSSIAN, POISSON, FamilySpec, Kind

FAMILIES = [GAUSSIAN, BERNOULLI, POISSON, GAMMA]


def _domain_sample(fam, rng, size):
    if fam.kind is Kind.GAMMA:
        return -rng.uniform(0.2, 5.0, size)
    return rng.uniform(-5.0, 5.0, size)


@pytest.mark.parametrize(("fam", "eta", "expected"), [
    (GAUSSIAN, 2.0, 2.0),
    (POISSON, 0.0, 1.0),
    (BERNOULLI, 0.0, math.log(2.0)),
])
def test_cgf_values(fam, eta, expected):
    assert fam.cgf(eta) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(("fam", "eta", "expected"), [
    (BERNOULLI, 0.0, 0.5),
    (GAUSSIAN, -3.5, -3.5),
    (GAMMA, -2.0, 0.5),
])
def test_mean_values(fam, eta, expected):
    assert fam.mean(eta) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(("fam", "eta", "expected"), [
    (BERNOULLI, 0.0, 0.25),
    (GAUSSIAN, 17.0, 1.0),
    (POISSON, 1.0, math.e),
])
def test_variance_weight_values(fam, eta, expected):
    assert fam.variance_weight(eta) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(("fam", "mu", "expected"), [
    (BERNOULLI, 0.5, 0.0),
    (POISSON, 1.0, 0.0),
    (GAMMA, 2.0, -0.5),
])
def test_eta_for_mean_values(fam, mu, expected):
    assert fam.eta_for_mean(mu) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
def test_finite_difference_derivatives(fam):
    rng = np.random.default_rng(11)
    eta = _domain_sample(fam, rng, 1000)
    h = 1e-5
    d1 = (fam.cgf(eta + h) - fam.cgf(eta - h)) / (2 * h)
    d2 = (fam.mean(eta + h) - fam.mean(eta - h)) / (2 * h)
    assert np.max(np.abs(fam.mean(eta) - d1)) <= 1e-6
    assert np.max(np.abs(fam.variance_weight(eta) - d2)) <= 1e-6


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
def test_mean_is_monotone(fam):
    eta = np.sort(_domain_sample(fam, np.random.default_rng(2), 500))
    assert np.all(np.diff(fam.mean(eta)) >= 0)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
def test_eta_for_mean_inverts_mean(fam):
    eta = _domain_sample(fam, np.random.default_rng(5), 200)
    back = fam.eta_for_mean(fam.mean(eta))
    np.testing.assert_allclose(back, eta, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.name)
def test_mean_and_weight_agree_with_separate_calls(fam):
    eta = _domain_sample(fam, np.random.default_rng(9), 100)
    mu, w = fam.mean_and_weight(eta)
    np.testing.assert_array_equal(mu, fam.mean(eta))
    np.testing.assert_array_equal(w, fam.variance_weight(eta))


def test_bernoulli_extremes_stay_finite():
    eta = np.array([-800.0, -40.0, 40.0, 800.0])
    mu, w = BERNOULLI.mean_and_weight(eta)
    assert np.all(np.isfinite(mu)) and np.all(np.isfinite(w))
    assert np.all(np.isfinite(BERNOULLI.cgf(eta)))
    assert BERNOULLI.cgf(800.0) == pytest.approx(800.0)
    assert mu[0] >= 0 and mu[-1] == 1.0


def test_gamma_rejects_nonnegative_eta():
    with pytest.raises(DomainError):
        GAMMA.mean(0.0)
    with pytest.raises(DomainError):
        GAMMA.cgf(np.array([-1.0, 0.5]))


def test_eta_for_mean_rejects_boundary():
    with pytest.raises(DomainError):
        BERNOULLI.eta_for_mean(1.0)
    with pytest.raises(DomainError):
        POISSON.eta_for_mean(0.0)


def test_dispersion_rules():
    assert FamilySpec(Kind.GAUSSIAN, 2.0).dispersion == 2.0
    with pytest.raises(DomainError):
        FamilySpec(Kind.BERNOULLI, 2.0)
    with pytest.raises(DomainError):
        FamilySpec(Kind.GAMMA, 0.0)


def test_from_name_aliases():
    assert FamilySpec.from_name("logistic") == BERNOULLI
    assert FamilySpec.from_name("Binomial").name == "binomial"
    with pytest.raises(DomainError):
        FamilySpec.from_name("tweedie")


def test_scalar_in_scalar_out():
    assert isinstance(POISSON.mean(0.3), float)
    assert POISSON.mean(np.array([0.3])).shape == (1,)


def test_saturated_terms_maximize_loglik():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 5, 50).astype(float)
    eta = rng.normal(size=50)
    assert np.all(POISSON.saturated_terms(y) >= POISSON.loglik_terms(y, eta) - 1e-12)
    yb = rng.integers(0, 2, 50).astype(float)
    assert np.all(BERNOULLI.saturated_terms(yb) >= BERNOULLI.loglik_terms(yb, eta) - 1e-12)


@given(st.floats(-30, 30))
def test_logistic_cgf_matches_naive_formula(e):
    assert BERNOULLI.cgf(e) == pytest.approx(math.log1p(math.exp(e)), rel=1e-12, abs=1e-300)


def test_validate_response():
    BERNOULLI.validate_response([0, 1, 1])
    with pytest.raises(DomainError):
        BERNOULLI.validate_response([0, 2])
    with pytest.raises(DomainError):
        POISSON.validate_response([-1.0])
    with pytest.raises(DomainError):
        GAMMA.validate_response([0.0, 1.0])
    with pytest.raises(DomainError):
        GAUSSIAN.validate_response([np.nan])
