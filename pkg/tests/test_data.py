import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eccd.data import (
    Dataset,
    SyntheticConfig,
    format_libsvm,
    generate_synthetic,
    load_csv,
    load_libsvm,
    parse_gen_spec,
    parse_libsvm,
    standardize,
    write_csv,
    write_libsvm,
)
from eccd.errors import DimensionError, ParseError
from eccd.families import BERNOULLI, GAUSSIAN, POISSON


def test_parse_libsvm_example():
    d = parse_libsvm("1 1:2.0 3:1.0\n-1 2:1.0")
    assert (d.n, d.p) == (2, 3)
    np.testing.assert_array_equal(d.y, [1.0, 0.0])
    np.testing.assert_array_equal(d.x, [[2, 0, 1], [0, 1, 0]])
    assert not d.standardized


def test_parse_libsvm_empty():
    with pytest.raises(ParseError, match="empty input"):
        parse_libsvm("")
    with pytest.raises(ParseError, match="empty input"):
        parse_libsvm("\n  \n# only a comment\n")


def test_parse_libsvm_non_ascending():
    with pytest.raises(ParseError, match="non-ascending index") as info:
        parse_libsvm("1 3:1.0 2:1.0")
    assert info.value.line == 1
    with pytest.raises(ParseError) as info:
        parse_libsvm("1 1:1\n0 2:1 2:3")
    assert info.value.line == 2


@pytest.mark.parametrize("text", ["1 0:1.0", "1 a:1", "1 2", "x 1:1", "1 1:nan"])
def test_parse_libsvm_rejects_malformed(text):
    with pytest.raises(ParseError):
        parse_libsvm(text)


@pytest.mark.parametrize(("labels", "mapped"), [
    ([-1, 1, 1], [0, 1, 1]),
    ([1, 2, 1], [0, 1, 0]),
    ([0, 1, 0], [0, 1, 0]),
])
def test_label_mapping(labels, mapped):
    text = "\n".join(f"{lab} 1:1" for lab in labels)
    np.testing.assert_array_equal(parse_libsvm(text).y, mapped)


def test_three_labels():
    text = "1 1:1\n2 1:2\n3 1:3"
    np.testing.assert_array_equal(parse_libsvm(text).y, [1, 2, 3])
    with pytest.raises(ParseError, match="more than two labels"):
        parse_libsvm(text, binary=True)


def test_p_hint():
    assert parse_libsvm("1 2:1", p_hint=5).p == 5
    with pytest.raises(ParseError):
        parse_libsvm("1 7:1", p_hint=5)


def test_libsvm_roundtrip_file(tmp_path):
    d, _ = generate_synthetic(SyntheticConfig(12, 6, 0.2, 3, seed=4))
    f = tmp_path / "a.svm"
    write_libsvm(d, f)
    assert load_libsvm(f, p_hint=d.p) == d


@given(arrays(np.float64, (6, 4), elements=st.floats(-1e6, 1e6).map(lambda v: round(v, 3))),
       st.lists(st.sampled_from([0.0, 1.0]), min_size=6, max_size=6))
def test_libsvm_roundtrip_property(x, y):
    y = np.array(y)
    y[:2] = [0.0, 1.0]
    d = Dataset(x, y)
    assert parse_libsvm(format_libsvm(d), p_hint=4) == d


def test_csv_roundtrip(tmp_path):
    d, _ = generate_synthetic(SyntheticConfig(10, 3, 0.0, 2, seed=1, family=GAUSSIAN))
    f = tmp_path / "a.csv"
    write_csv(d, f, header=True)
    assert load_csv(f, header=True) == d


def test_csv_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("1,2,3\n4,5\n")
    with pytest.raises(ParseError) as info:
        load_csv(f)
    assert info.value.line == 2
    f.write_text("1,a\n")
    with pytest.raises(ParseError):
        load_csv(f)
    f.write_text("")
    with pytest.raises(ParseError, match="empty"):
        load_csv(f)


def test_standardize_two_point_column():
    d = standardize(Dataset(np.array([[1.0], [3.0]]), np.zeros(2)))
    np.testing.assert_allclose(d.x[:, 0], [-1.0, 1.0], atol=1e-15)
    assert d.col_means[0] == 2.0 and d.col_scales[0] == 1.0


def test_standardize_constant_column_is_degenerate():
    d = standardize(Dataset(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]]), np.zeros(3)))
    np.testing.assert_array_equal(d.x[:, 0], 0.0)
    assert d.degenerate.tolist() == [True, False]


def test_standardize_arithmetic():
    d = standardize(Dataset(np.arange(4.0)[:, None], np.zeros(4)))
    col = d.x[:, 0]
    assert abs(col.sum()) <= 1e-15
    assert float(col @ col) == pytest.approx(4.0, abs=1e-14)


@given(arrays(np.float64, (7, 3), elements=st.floats(-100, 100)))
def test_standardize_invariants(x):
    d = standardize(Dataset(x, np.zeros(7)))
    keep = ~d.degenerate
    assert np.all(np.abs(d.x.sum(axis=0)) <= 1e-9 * d.n)
    np.testing.assert_allclose((d.x[:, keep] ** 2).sum(axis=0), d.n, rtol=1e-9)
    again = standardize(d)
    assert again == d and again.standardized


def test_standardize_needs_two_rows():
    with pytest.raises(DimensionError):
        standardize(Dataset(np.ones((1, 2)), np.zeros(1)))


def test_dataset_validation():
    with pytest.raises(DimensionError):
        Dataset(np.ones((3, 2)), np.zeros(4))
    with pytest.raises(DimensionError):
        Dataset(np.array([[np.inf]]), np.zeros(1))
    d = Dataset(np.ones((3, 2)), np.zeros(3))
    assert d.x.flags.f_contiguous and not d.x.flags.writeable


def _offdiag_mean(x):
    c = np.corrcoef(x, rowvar=False)
    return c[~np.eye(c.shape[0], dtype=bool)].mean()


def test_generator_uncorrelated():
    d, _ = generate_synthetic(SyntheticConfig(5000, 10, 0.0, 3, seed=0))
    assert abs(_offdiag_mean(d.x)) <= 0.05


def test_generator_correlated():
    d, _ = generate_synthetic(SyntheticConfig(5000, 10, 0.9, 3, seed=0))
    assert 0.85 <= _offdiag_mean(d.x) <= 0.95


def test_generator_deterministic():
    cfg = SyntheticConfig(30, 8, 0.3, 4, seed=7)
    (a, ba), (b, bb) = generate_synthetic(cfg), generate_synthetic(cfg)
    assert a == b
    np.testing.assert_array_equal(ba, bb)


@given(st.integers(0, 2**31), st.sampled_from([BERNOULLI, POISSON]))
def test_generator_response_support(seed, fam):
    d, beta = generate_synthetic(SyntheticConfig(20, 6, 0.5, 2, seed=seed, family=fam))
    assert np.count_nonzero(beta) == 2
    if fam is BERNOULLI:
        assert set(np.unique(d.y)) <= {0.0, 1.0}
    else:
        assert np.all(d.y >= 0) and np.all(d.y == np.round(d.y))


def test_generator_config_validation():
    with pytest.raises(DimensionError):
        SyntheticConfig(10, 5, rho=1.0)
    with pytest.raises(DimensionError):
        SyntheticConfig(10, 5, sparsity=6)


def test_parse_gen_spec():
    cfg = parse_gen_spec("50, 20, 0.0, 5, 42", BERNOULLI)
    assert (cfg.n, cfg.p, cfg.rho, cfg.sparsity, cfg.seed) == (50, 20, 0.0, 5, 42)
    with pytest.raises(ValueError):
        parse_gen_spec("1,2,3", BERNOULLI)
