"""Dataset container, file readers/writers, standardization and the
equi-correlated synthetic generator."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParseError
from .families import FamilySpec, Kind


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense design matrix plus response.

    ``x`` is stored column-major (Fortran order) because every solver
    touches it one column slice at a time.

    Attributes
    ----------
    x : ndarray, shape (n, p)
    y : ndarray, shape (n,)
    col_means, col_scales : ndarray, shape (p,)
        The affine transform applied by :func:`standardize`
        (``x_std = (x_raw - mean) / scale``). Identity when not standardized.
    standardized : bool
    degenerate : ndarray of bool, shape (p,)
        Zero-variance columns; their coefficients are pinned at zero.
    """

    x: np.ndarray
    y: np.ndarray
    col_means: np.ndarray = None
    col_scales: np.ndarray = None
    standardized: bool = False
    degenerate: np.ndarray = None
    xty: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asfortranarray(np.asarray(self.x, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64)).reshape(-1)
        if x.ndim != 2:
            raise DimensionError("x must be two-dimensional")
        n, p = x.shape
        if n < 1 or p < 1:
            raise DimensionError(f"need n >= 1 and p >= 1, got {x.shape}")
        if y.shape[0] != n:
            raise DimensionError(f"x has {n} rows but y has {y.shape[0]} entries")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DimensionError("x and y must be finite")
        means = np.zeros(p) if self.col_means is None else np.asarray(self.col_means, float)
        scales = np.ones(p) if self.col_scales is None else np.asarray(self.col_scales, float)
        degen = np.zeros(p, bool) if self.degenerate is None else np.asarray(self.degenerate, bool)
        for name, arr in (("col_means", means), ("col_scales", scales), ("degenerate", degen)):
            if arr.shape != (p,):
                raise DimensionError(f"{name} must have length {p}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "col_means", means)
        object.__setattr__(self, "col_scales", scales)
        object.__setattr__(self, "degenerate", degen)
        xty = x.T @ y
        xty.setflags(write=False)
        object.__setattr__(self, "xty", xty)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.standardized == other.standardized
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.col_means, other.col_means)
            and np.array_equal(self.col_scales, other.col_scales)
            and np.array_equal(self.degenerate, other.degenerate)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# LIBSVM


def _map_labels(y: np.ndarray, binary) -> np.ndarray:
    labels = np.unique(y)
    if binary is False:
        return y
    if len(labels) > 2:
        if binary:
            raise ParseError(f"more than two labels ({len(labels)} distinct) for a binary response")
        return y
    if len(labels) == 2:
        return (y == labels[1]).astype(np.float64)
    if binary and labels.size == 1 and labels[0] not in (0.0, 1.0):
        raise ParseError(f"single label {labels[0]!r} cannot be mapped to {{0, 1}}")
    return y


def parse_libsvm(text: str, p_hint: int | None = None, binary=None) -> Dataset:
    """Parse LIBSVM text (``label idx:val idx:val ...``, 1-based indices).

    Parameters
    ----------
    binary : bool or None
        ``None`` maps a response with exactly two distinct labels to
        {0, 1} by sorted order and leaves anything else alone. ``True``
        additionally rejects more than two labels; ``False`` never maps.
    """
    labels = []
    rows = []
    max_idx = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        entries = []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"bad entry {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"index {idx} is not 1-based", lineno)
            if idx <= prev:
                raise ParseError(f"non-ascending index {idx} after {prev}", lineno)
            if not np.isfinite(val):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            prev = idx
            entries.append((idx - 1, val))
        max_idx = max(max_idx, prev)
        labels.append(label)
        rows.append(entries)
    if not rows:
        raise ParseError("empty input")
    p = max_idx
    if p_hint is not None:
        if p_hint < max_idx:
            raise ParseError(f"index {max_idx} exceeds p_hint={p_hint}")
        p = p_hint
    if p < 1:
        raise ParseError("no features found")
    x = np.zeros((len(rows), p), order="F")
    for i, entries in enumerate(rows):
        for j, v in entries:
            x[i, j] = v
    y = _map_labels(np.asarray(labels, dtype=np.float64), binary)
    return Dataset(x, y)


def load_libsvm(path: str | os.PathLike, p_hint: int | None = None, binary=None) -> Dataset:
    """Read a LIBSVM file into a dense, unstandardized :class:`Dataset`."""
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh.read(), p_hint=p_hint, binary=binary)


def format_libsvm(d: Dataset) -> str:
    out = io.StringIO()
    for i in range(d.n):
        row = d.x[i]
        nz = np.flatnonzero(row)
        parts = [repr(float(d.y[i]))] + [f"{j + 1}:{float(row[j])!r}" for j in nz]
        out.write(" ".join(parts) + "\n")
    return out.getvalue()


def write_libsvm(d: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_libsvm(d))


# ---------------------------------------------------------------------------
# CSV


def load_csv(path: str | os.PathLike, header: bool = False, binary=None) -> Dataset:
    """First column is the response, the rest are features."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header:
        rows = rows[1:]
    if not rows:
        raise ParseError("empty input")
    width = len(rows[0])
    if width < 2:
        raise ParseError("need a response column and at least one feature", 1)
    data = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        lineno = i + 1 + int(header)
        if len(r) != width:
            raise ParseError(f"expected {width} fields, got {len(r)}", lineno)
        try:
            data[i] = [float(c) for c in r]
        except ValueError:
            raise ParseError("non-numeric field", lineno) from None
    if not np.all(np.isfinite(data)):
        raise ParseError("non-finite value")
    y = _map_labels(data[:, 0].copy(), binary)
    return Dataset(data[:, 1:], y)


def write_csv(d: Dataset, path: str | os.PathLike, header: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(["y"] + [f"x{j + 1}" for j in range(d.p)])
        for i in range(d.n):
            w.writerow([repr(float(d.y[i]))] + [repr(float(v)) for v in d.x[i]])


# ---------------------------------------------------------------------------
# standardization

_DEGENERATE_RTOL = 1e-12


def standardize(d: Dataset) -> Dataset:
    """Center every column and scale it to squared norm ``n``.

    Zero-variance columns become all-zero and are flagged in
    ``degenerate``; their recorded scale is 0. Already-standardized
    input is returned unchanged.
    """
    if d.standardized:
        return d
    n = d.n
    if n < 2:
        raise DimensionError("standardization needs at least two observations")
    x = d.x
    means = x.mean(axis=0)
    centered = x - means
    scales = np.sqrt((centered * centered).sum(axis=0) / n)
    degenerate = scales <= _DEGENERATE_RTOL * np.maximum(1.0, np.abs(means))
    safe = np.where(degenerate, 1.0, scales)
    xs = centered / safe
    xs[:, degenerate] = 0.0
    scales = np.where(degenerate, 0.0, scales)
    return Dataset(xs, d.y, means, scales, True, degenerate)


# ---------------------------------------------------------------------------
# synthetic problems


@dataclass(frozen=True)
class SyntheticConfig:
    """Equi-correlated Gaussian design with a sparse true coefficient vector."""

    n: int
    p: int
    rho: float = 0.0
    sparsity: int = 5
    signal_range: tuple = (1.0, 2.0)
    seed: int = 0
    family: FamilySpec = FamilySpec(Kind.BERNOULLI)

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise DimensionError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 0.0 <= self.rho < 1.0:
            raise DimensionError(f"rho must lie in [0, 1), got {self.rho}")
        if not 1 <= self.sparsity <= self.p:
            raise DimensionError(f"sparsity must lie in [1, p], got {self.sparsity}")
        lo, hi = self.signal_range
        if lo > hi:
            raise DimensionError("signal_range low exceeds high")
        if self.family.kind is Kind.GAMMA:
            raise DimensionError("synthetic gamma responses are not supported")


POISSON_ETA_CLIP = 10.0


def generate_synthetic(cfg: SyntheticConfig) -> tuple[Dataset, np.ndarray]:
    """Draw ``(dataset, true_beta)``; deterministic in ``cfg.seed``.

    Rows follow ``N(0, Sigma)`` with unit variances and off-diagonal
    ``rho``, built as ``sqrt(rho) * z 1^T + sqrt(1 - rho) * G``. The
    dataset is returned unstandardized.
    """
    rng = np.random.default_rng(cfg.seed)
    n, p = cfg.n, cfg.p
    common = rng.standard_normal(n)
    g = rng.standard_normal((n, p))
    x = np.sqrt(cfg.rho) * common[:, None] + np.sqrt(1.0 - cfg.rho) * g

    beta = np.zeros(p)
    support = rng.choice(p, size=cfg.sparsity, replace=False)
    lo, hi = cfg.signal_range
    beta[support] = rng.uniform(lo, hi, size=cfg.sparsity)
    eta = x @ beta

    kind = cfg.family.kind
    if kind is Kind.BERNOULLI:
        prob = cfg.family.mean(eta)
        y = (rng.uniform(size=n) < prob).astype(np.float64)
    elif kind is Kind.POISSON:
        y = rng.poisson(np.exp(np.clip(eta, -POISSON_ETA_CLIP, POISSON_ETA_CLIP))).astype(np.float64)
    else:
        y = eta + np.sqrt(cfg.family.dispersion) * rng.standard_normal(n)
    return Dataset(x, y), beta


def parse_gen_spec(spec: str, family: FamilySpec) -> SyntheticConfig:
    """Parse the ``n,p,rho,s,seed`` shorthand used on the command line."""
    parts = [s.strip() for s in spec.split(",")]
    if len(parts) != 5:
        raise ValueError(f"expected n,p,rho,s,seed; got {spec!r}")
    n, p, rho, s, seed = parts
    return SyntheticConfig(
        n=int(n), p=int(p), rho=float(rho), sparsity=int(s), seed=int(seed), family=family
    )
