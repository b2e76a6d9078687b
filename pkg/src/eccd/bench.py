"""Block-size sweeps and the link-cost profiler behind the block-size heuristic."""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _jit
from .errors import ConfigError
from .families import Kind
from .path import build_path, default_min_ratio, solve_path
from .screening import kkt_max_residual, lambda_max
from .solvers import _FAMILY_CODE, PHASES, Algorithm, SolveConfig, solve_single_lambda

DEFAULT_BLOCK_SIZE = 8
MAX_BLOCK_SIZE = 32
PROFILE_CV_LIMIT = 0.5


def _threads() -> int:
    raw = os.environ.get("ECCD_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"ECCD_THREADS must be an integer, got {raw!r}") from None


def rel_diff(obj, ref) -> float:
    """``||obj - ref||_2 / ||ref||_2`` over the common prefix of two paths."""
    obj = np.asarray(obj, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    m = min(obj.size, ref.size)
    if m == 0:
        return math.nan
    num = float(np.linalg.norm(obj[:m] - ref[:m]))
    den = float(np.linalg.norm(ref[:m]))
    if not math.isfinite(num):
        return math.inf
    return num / den if den > 0 else num


def max_rel_diff(obj, ref) -> float:
    """Largest per-lambda relative objective difference."""
    obj = np.asarray(obj, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    m = min(obj.size, ref.size)
    if m == 0:
        return math.nan
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.abs(obj[:m] - ref[:m]) / np.maximum(np.abs(ref[:m]), 1e-300)
    r = np.where(np.isfinite(r), r, np.inf)
    return float(np.max(r))


@dataclass
class BenchRow:
    algorithm: str
    s: int
    alpha: float
    lam: str
    time_seconds: float
    epochs: int
    objective: float
    rel_diff_vs_s1: float
    max_rel_diff_vs_s1: float
    kkt_max_residual: float
    aborted: bool
    timings: dict = field(default_factory=dict)


@dataclass
class BenchReport:
    rows: list

    @property
    def time_breakdown(self) -> dict:
        """Per-phase seconds summed over every row."""
        out = dict.fromkeys(PHASES, 0.0)
        for r in self.rows:
            for k, v in r.timings.items():
                out[k] += v
        return out

    def to_csv(self) -> str:
        cols = ["algorithm", "s", "alpha", "lambda", "time_seconds", "epochs", "objective",
                "rel_diff_vs_s1", "max_rel_diff_vs_s1", "kkt_max_residual", "aborted", *PHASES]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([r.algorithm, r.s, repr(r.alpha), r.lam, f"{r.time_seconds:.6g}", r.epochs,
                        repr(r.objective), f"{r.rel_diff_vs_s1:.6g}", f"{r.max_rel_diff_vs_s1:.6g}",
                        f"{r.kkt_max_residual:.6g}", int(r.aborted),
                        *(f"{r.timings.get(k, 0.0):.6g}" for k in PHASES)])
        return buf.getvalue()


def read_bench_csv(text: str) -> list[dict]:
    """Parse :meth:`BenchReport.to_csv` output back into typed dicts."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = dict(rec)
        row["s"] = int(row["s"])
        row["epochs"] = int(row["epochs"])
        row["aborted"] = bool(int(row["aborted"]))
        for k in ("alpha", "time_seconds", "objective", "rel_diff_vs_s1", "max_rel_diff_vs_s1",
                  "kkt_max_residual", *PHASES):
            row[k] = float(row[k])
        out.append(row)
    return out


@dataclass(frozen=True)
class _Cell:
    algorithm: Algorithm
    s: int
    alpha: float


def _run_cell(d, family, cell, base: SolveConfig, mode, ratios, K, min_ratio, reps):
    """Run one sweep cell ``reps`` times; returns (seconds per rep and item, fits, timings)."""
    times = []
    fits = None
    timings = dict.fromkeys(PHASES, 0.0)
    cfg = base.replace(alpha=cell.alpha, block_size=cell.s, algorithm=cell.algorithm)
    lmax = lambda_max(d, family, cell.alpha, cfg.fit_intercept)
    for _ in range(reps):
        if mode == "path":
            t0 = time.perf_counter()
            res = solve_path(d, family, build_path(lmax, K, min_ratio), cell.alpha, cfg.replace(lam=lmax))
            times.append([time.perf_counter() - t0])
            fits = res.fits
            timings = dict(res.timings)
        else:
            fits, row = [], []
            for r in ratios:
                t0 = time.perf_counter()
                fits.append(solve_single_lambda(d, family, cfg.replace(lam=r * lmax)))
                row.append(time.perf_counter() - t0)
            times.append(row)
    med = [statistics.median(col) for col in zip(*times)]
    return med, fits, timings


def run_bench(d, family, algorithms=("eccd",), s_list=(1, 2, 4, 8, 16, 32), alpha_list=(1.0,),
              mode: str = "path", lambda_ratios=(0.1, 0.01, 0.001), reps: int = 3,
              base: SolveConfig | None = None, K: int = 100, min_ratio: float | None = None) -> BenchReport:
    """Sweep algorithms x block sizes x alphas.

    ``mode="path"`` fits a ``K``-point path per cell; ``mode="lambda"``
    fits each ``lambda_ratios * lambda_max`` from a cold start and emits one
    row per ratio. Every cell is compared with ECCD at ``s = 1`` on the same
    alpha (run once as the reference when not part of the sweep). Times are
    medians over ``reps``; cells run on up to ``ECCD_THREADS`` threads.
    """
    if mode not in ("path", "lambda"):
        raise ConfigError(f"mode must be 'path' or 'lambda', got {mode!r}")
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    base = base or SolveConfig(lam=1.0)
    if min_ratio is None:
        min_ratio = default_min_ratio(d.n, d.p)
    algos = [Algorithm(a) for a in algorithms]
    cells = [_Cell(a, int(s), float(al)) for al in alpha_list for a in algos for s in s_list]
    refs = {al: _Cell(Algorithm.ECCD, 1, float(al)) for al in alpha_list}
    todo = list(dict.fromkeys(cells + list(refs.values())))

    def job(cell):
        return cell, _run_cell(d, family, cell, base, mode, lambda_ratios, K, min_ratio,
                               reps if cell in cells else 1)

    workers = min(_threads(), len(todo))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            done = dict(ex.map(job, todo))
    else:
        done = dict(job(c) for c in todo)

    rows = []
    for cell in cells:
        med, fits, timings = done[cell]
        ref = done[refs[cell.alpha]][1]
        kkt = [kkt_max_residual(d, family, f.beta, f.beta0, f.lam, f.alpha)
               for f in fits if not f.aborted and np.all(np.isfinite(f.beta))]
        if mode == "path":
            obj = [f.objective for f in fits]
            robj = [f.objective for f in ref]
            rows.append(BenchRow(
                cell.algorithm.value, cell.s, cell.alpha, "path", med[0],
                sum(f.epochs for f in fits), float(obj[-1]), rel_diff(obj, robj),
                max_rel_diff(obj, robj), max(kkt) if kkt else math.nan,
                any(f.aborted for f in fits), timings))
        else:
            for f, r, ratio, t in zip(fits, ref, lambda_ratios, med):
                rows.append(BenchRow(
                    cell.algorithm.value, cell.s, cell.alpha, f"{ratio:g}*lambda_max", t,
                    f.epochs, f.objective, rel_diff([f.objective], [r.objective]),
                    max_rel_diff([f.objective], [r.objective]),
                    kkt_max_residual(d, family, f.beta, f.beta0, f.lam, f.alpha)
                    if not f.aborted and np.all(np.isfinite(f.beta)) else math.nan,
                    f.aborted, dict(f.timings)))
    return BenchReport(rows)


# ---------------------------------------------------------------------------
# block-size heuristic


@dataclass
class ProfileResult:
    C: float
    s_rec: int
    cv: float
    fallback: bool

    def as_dict(self) -> dict:
        return asdict(self)


def profile_block_size(family, n: int = 100_000, reps: int = 100, timer=time.perf_counter,
                       seed: int = 0) -> ProfileResult:
    """Estimate ``C = time(F') / time(vector add)`` and recommend ``s = sqrt(C)``.

    Both sides run as compiled loops: the link side is the solver's own
    ``F'`` / ``F''`` refresh and the baseline is an elementwise add, each on
    length-``n`` vectors. Each rep times one of each; ``C`` is the median of the per-rep ratios. When those ratios
    scatter by more than 50% (coefficient of variation) the clock is not
    trustworthy and the default block size 8 is returned instead.
    """
    if n < 1 or reps < 2:
        raise ConfigError("need n >= 1 and reps >= 2")
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    if family.kind is Kind.GAMMA:
        e = -np.abs(e) - 0.1
    other = rng.standard_normal(n)
    mu, w, out = np.empty(n), np.empty(n), np.empty(n)
    code = _FAMILY_CODE[family.kind]
    # warm up (and compile) both kernels outside the timed region
    _jit.refresh(code, 0.0, e, mu, w)
    _jit.add_into(e, other, out)
    ratios = []
    for _ in range(reps):
        t0 = timer()
        _jit.refresh(code, 0.0, e, mu, w)
        t1 = timer()
        _jit.add_into(e, other, out)
        t2 = timer()
        ta, tb = t1 - t0, t2 - t1
        if tb > 0 and ta > 0:
            ratios.append(ta / tb)
    if len(ratios) < 2:
        warnings.warn("timer resolution too coarse; using the default block size", RuntimeWarning)
        return ProfileResult(math.nan, DEFAULT_BLOCK_SIZE, math.inf, True)
    C = statistics.median(ratios)
    cv = statistics.pstdev(ratios) / statistics.fmean(ratios)
    if cv > PROFILE_CV_LIMIT:
        warnings.warn(f"link-cost estimate unstable (cv={cv:.2f}); using the default block size",
                      RuntimeWarning)
        return ProfileResult(C, DEFAULT_BLOCK_SIZE, cv, True)
    s = int(min(max(round(math.sqrt(C)), 1), MAX_BLOCK_SIZE))
    return ProfileResult(C, s, cv, False)
