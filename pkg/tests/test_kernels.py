import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eccd.errors import DimensionError, NumericalError
from eccd.families import BERNOULLI, GAUSSIAN, POISSON
from eccd.kernels import (
    SolverState,
    compute_block,
    coordinate_step,
    soft_threshold,
    update_linear_predictor,
)

from conftest import make_problem, std_dataset

finite = st.floats(-1e6, 1e6)


@pytest.mark.parametrize(("z", "g", "out"), [(3.0, 1.0, 2.0), (-3.0, 1.0, -2.0), (0.5, 1.0, 0.0)])
def test_soft_threshold_examples(z, g, out):
    assert soft_threshold(z, g) == out


@given(finite, finite, st.floats(0, 1e6))
def test_soft_threshold_odd_and_nonexpansive(z, z2, g):
    assert soft_threshold(-z, g) == -soft_threshold(z, g)
    assert abs(soft_threshold(z, g) - soft_threshold(z2, g)) <= abs(z - z2) * (1 + 1e-15)


@given(finite, st.floats(0, 1e6))
def test_soft_threshold_matches_prox_formula(z, g):
    assert soft_threshold(z, g) == pytest.approx(np.sign(z) * max(abs(z) - g, 0.0))


def test_coordinate_step_closed_form():
    # phi = 2/4 - 0.5*1 = 0, psi = 8/4 + 0.5 = 2.5 -> S(1, 0.2/2.5)
    assert coordinate_step(1.0, 2.0, 8.0, 4.0, 0.2, 0.5) == pytest.approx(1.0 - 0.08)
    with pytest.raises(NumericalError):
        coordinate_step(0.0, 1.0, 0.0, 1.0, 0.1, 0.0)


def _state_for(d, fam, beta, beta0=0.0):
    st_ = SolverState.zeros(d.n, d.p, beta0)
    st_.beta[:] = beta
    st_.refresh_linear_predictor(d.x)
    st_.refresh_gradient(fam)
    return st_


def test_block_single_gaussian_column_is_n():
    d = make_problem(17, 5, family=GAUSSIAN, seed=1)
    s = _state_for(d, GAUSSIAN, np.zeros(d.p))
    blk = compute_block(d, s, s.mu, s.w, [3])
    assert blk.b.shape == (1, 1)
    assert blk.b[0, 0] == pytest.approx(d.n, rel=1e-12)


def test_block_orthogonal_gradient():
    d = std_dataset([[1.0], [-1.0]], [0.0, 1.0])
    s = SolverState.zeros(2, 1)
    blk = compute_block(d, s, np.array([0.5, 0.5]), np.ones(2), [0])
    assert blk.a[0] == 0.0


def test_block_matches_triple_loop():
    rng = np.random.default_rng(0)
    d = std_dataset(rng.normal(size=(3, 2)), [0.0, 1.0, 1.0])
    s = _state_for(d, BERNOULLI, rng.normal(size=2), 0.3)
    blk = compute_block(d, s, s.mu, s.w, [1, 0])
    idx = [1, 0]
    for l in range(2):
        a = sum(d.x[i, idx[l]] * s.mu[i] for i in range(3))
        assert blk.a[l] == pytest.approx(a, abs=1e-12)
        for m in range(2):
            b = sum(s.w[i] * d.x[i, idx[l]] * d.x[i, idx[m]] for i in range(3))
            assert blk.b[l, m] == pytest.approx(b, abs=1e-12)


@given(st.integers(1, 16), st.integers(0, 1000))
def test_block_full_gram(p, seed):
    d = make_problem(20, p, family=POISSON, seed=seed, sparsity=1, signal=(0.1, 0.2))
    rng = np.random.default_rng(seed)
    s = _state_for(d, POISSON, 0.1 * rng.normal(size=p))
    blk = compute_block(d, s, s.mu, s.w, list(range(p)))
    gram = d.x.T @ (s.w[:, None] * d.x)
    np.testing.assert_allclose(blk.b, gram, atol=1e-10, rtol=1e-12)
    np.testing.assert_allclose(np.diag(blk.b), (s.w[:, None] * d.x**2).sum(axis=0), rtol=1e-12)
    np.testing.assert_allclose(blk.a, d.x.T @ s.mu, atol=1e-10)


def test_block_rejects_bad_index():
    d = make_problem(10, 3)
    s = _state_for(d, BERNOULLI, np.zeros(3))
    with pytest.raises(DimensionError):
        compute_block(d, s, s.mu, s.w, [3])
    assert compute_block(d, s, s.mu, s.w, []).a.shape == (0,)


def test_update_zero_delta_is_bitwise_noop():
    d = make_problem(8, 4, seed=2)
    s = _state_for(d, BERNOULLI, np.array([0.3, 0.0, -1.0, 0.2]))
    before = s.z.copy()
    update_linear_predictor(s, d, np.zeros(2), [0, 2])
    assert np.array_equal(s.z, before)
    assert s.grad_fresh


def test_update_single_column():
    d = make_problem(8, 4, seed=2)
    s = SolverState.zeros(d.n, d.p)
    update_linear_predictor(s, d, [1.0], [2])
    np.testing.assert_array_equal(s.z, d.x[:, 2])
    assert not s.grad_fresh


def test_update_matches_matvec():
    rng = np.random.default_rng(5)
    d = std_dataset(rng.normal(size=(5, 4)), rng.integers(0, 2, 5))
    s = SolverState.zeros(5, 4)
    for _ in range(10):
        idx = rng.choice(4, size=2, replace=False)
        delta = rng.normal(size=2)
        s.beta[idx] += delta
        update_linear_predictor(s, d, delta, idx)
    assert np.max(np.abs(s.z - d.x @ s.beta)) <= 1e-12
    assert s.cache_error(d.x) <= 1e-12


def test_state_copy_is_deep():
    d = make_problem(6, 3)
    s = _state_for(d, BERNOULLI, np.ones(3))
    c = s.copy()
    c.beta[0] = 9.0
    c.mu[0] = 9.0
    assert s.beta[0] == 1.0 and s.mu[0] != 9.0
