import json
import subprocess
import sys

import numpy as np
import pytest

from eccd.bench import read_bench_csv
from eccd.cli import main, read_path_csv
from eccd.data import load_libsvm, load_csv

GEN = "50,20,0.0,5,42"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fit_smoke(capsys):
    code, out, _ = run(capsys, "fit", "--gen", GEN, "--family", "binomial", "--lambda", "0.1", "--alpha", "0.5")
    res = json.loads(out)
    assert code == 0 and res["converged"] is True
    assert {"beta", "beta0", "objective", "deviance", "epochs", "converged", "seconds"} <= set(res)
    assert all(0 <= int(k) < 20 for k in res["beta"])


def test_fit_negative_lambda_is_usage_error(capsys):
    code, _, err = run(capsys, "fit", "--gen", GEN, "--lambda", "-1")
    assert code == 2 and "lambda" in err


def test_bad_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--no-such-flag"])
    assert exc.value.code == 2


def test_three_class_labels_fail(capsys, tmp_path):
    f = tmp_path / "three.svm"
    f.write_text("0 1:1\n1 1:2\n2 1:3\n")
    code, _, err = run(capsys, "fit", "--input", str(f), "--family", "binomial", "--lambda", "0.1")
    assert code == 1 and "more than two labels" in err


def test_missing_file_fails(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--input", str(tmp_path / "nope"), "--lambda", "0.1")
    assert code == 1 and err


def test_fit_verify(capsys):
    code, out, _ = run(capsys, "fit", "--gen", "30,10,0.2,3,1", "--lambda", "0.05", "--alpha", "0.5",
                       "--tol", "1e-12", "--verify")
    res = json.loads(out)
    assert code == 0 and res["verify"]["ok"] and res["verify"]["rel_diff"] < 1e-6


def test_fit_nonconvergence_exit_1(capsys):
    code, out, _ = run(capsys, "fit", "--gen", GEN, "--lambda", "0.001", "--max-epochs", "1", "--tol", "1e-14")
    assert code == 1 and json.loads(out)["converged"] is False


def test_path_rows_and_first_row(capsys):
    code, out, err = run(capsys, "path", "--gen", GEN, "--alpha", "0.5")
    cols = read_path_csv(out)
    n = len(cols["lambda"])
    assert code == 0
    assert n == 100 or (n < 100 and "stopped early" in err)
    betas = [k for k in cols if k.startswith("beta_")]
    assert betas and all(cols[k][0] == 0.0 for k in betas)
    assert cols["n_active"][0] == 0
    assert np.all(np.diff(cols["lambda"]) < 0)


def test_path_screening_identical(capsys):
    common = ["path", "--gen", "40,60,0.3,5,7", "--alpha", "0.8", "--tol", "1e-14", "--nlambda", "40"]
    _, on, _ = run(capsys, *common)
    _, off, _ = run(capsys, *common, "--no-screening")
    a, b = read_path_csv(on), read_path_csv(off)
    assert a.keys() == b.keys()
    for k in a:
        np.testing.assert_allclose(a[k], b[k], rtol=0, atol=1e-8)


def test_path_explicit_grid(capsys):
    code, out, _ = run(capsys, "path", "--gen", GEN, "--path", "0.2,0.1,0.05")
    cols = read_path_csv(out)
    assert code == 0 and cols["lambda"].tolist() == [0.2, 0.1, 0.05]


def test_outputs_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "path", "--gen", GEN, "--seed", "3", "--out", str(a))
    run(capsys, "path", "--gen", GEN, "--seed", "3", "--out", str(b))
    assert a.read_text() == b.read_text()
    _, f1, _ = run(capsys, "fit", "--gen", GEN, "--lambda", "0.1")
    _, f2, _ = run(capsys, "fit", "--gen", GEN, "--lambda", "0.1")
    drop = lambda s: {k: v for k, v in json.loads(s).items() if k != "seconds"}
    assert drop(f1) == drop(f2)


@pytest.mark.parametrize("fmt", ["libsvm", "csv"])
def test_gen_round_trip(capsys, tmp_path, fmt):
    f = tmp_path / f"data.{fmt}"
    code, _, _ = run(capsys, "gen", "--gen", "20,6,0.1,2,5", "--format", fmt, "--out", str(f))
    assert code == 0
    d = load_libsvm(str(f)) if fmt == "libsvm" else load_csv(str(f))
    assert d.x.shape == (20, 6)
    _, from_file, _ = run(capsys, "fit", "--input", str(f), "--format", fmt, "--lambda", "0.05")
    _, from_gen, _ = run(capsys, "fit", "--gen", "20,6,0.1,2,5", "--lambda", "0.05")
    a, b = json.loads(from_file), json.loads(from_gen)
    assert a["beta"].keys() == b["beta"].keys()
    for k in a["beta"]:
        assert a["beta"][k] == pytest.approx(b["beta"][k], rel=1e-9)


def test_gen_requires_out(capsys):
    code, _, _ = run(capsys, "gen", "--gen", GEN)
    assert code == 2


def test_bench_csv(capsys):
    code, out, _ = run(capsys, "bench", "--gen", "30,80,0.0,5,2", "--s-list", "1,2,4",
                       "--alpha-list", "0.5,1.0", "--algorithms", "eccd,bcd", "--nlambda", "20",
                       "--reps", "1")
    rows = read_bench_csv(out)
    assert code == 0 and len(rows) == 2 * 2 * 3
    for r in rows:
        if r["algorithm"] == "eccd":
            assert r["rel_diff_vs_s1"] < 1e-5


def test_bench_bad_algorithm(capsys):
    code, _, _ = run(capsys, "bench", "--gen", GEN, "--algorithms", "sgd")
    assert code == 2


def test_profile_reports_block_size(capsys):
    code, out, err = run(capsys, "profile", "--family", "gaussian", "--reps", "20", "--profile-n", "20000")
    res = json.loads(out)
    assert code == 0 and 1 <= res["s_rec"] <= 32 and "recommended block size" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "eccd", "fit", "--gen", GEN, "--lambda", "0.1"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and json.loads(proc.stdout)["converged"]
