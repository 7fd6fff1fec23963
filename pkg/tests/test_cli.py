import json
import subprocess
import sys

import numpy as np
import pytest

from hrfinsler.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_g_euclidean(capsys):
    code, out, _ = run(capsys, "eval", "--metric", "euclidean", "--dim", "2", "--object", "g", "--point", "x=0,0;y=3,4")
    assert code == 0
    doc = json.loads(out)
    np.testing.assert_allclose(doc["value"], np.eye(2), atol=1e-14)
    assert "index_order" in doc


def test_eval_g_randers(capsys):
    code, out, _ = run(capsys, "eval", "--metric", "randers", "--params", "b=0.1", "--dim", "2",
                       "--object", "g", "--point", "x=0,0;y=1,0")
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["value"], [[1.21, 0], [0, 1.1]], atol=1e-14)


def test_eval_special_spray(capsys):
    code, out, _ = run(capsys, "eval", "--metric", "euclidean", "--dim", "2", "--object", "special-hrf-spray",
                       "--point", "x=0,0;y=3,4")
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["value"], [-3.75, -5.0], atol=1e-14)


def test_eval_expression_metric_and_curvature(capsys):
    code, out, _ = run(capsys, "eval", "--metric-expr", "sqrt(y1^2+y2^2+y3^2)*4/(1-x1^2-x2^2-x3^2)", "--dim", "3",
                       "--object", "R", "--connection", "special-hrf", "--point", "x=0.1,0,0;y=1,0.5,0")
    assert code == 0
    assert np.asarray(json.loads(out)["value"]).shape == (3, 3, 3, 3)


def test_eval_hrf_with_form_expr(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, _, _ = run(capsys, "eval", "--metric", "randers", "--dim", "2", "--object", "hrf",
                     "--form-expr", "x1*y2/sqrt(y1^2+y2^2); 0", "--point", "x=0.1,0.2;y=1,0.3", "--out", str(target))
    assert code == 0
    doc = json.loads(target.read_text())
    assert set(doc["value"]) == {"N", "F", "V"}


@pytest.mark.parametrize(
    "argv, code",
    [
        (["eval", "--metric", "euclidean", "--object", "g", "--point", "x=0,0;y=0,0"], 3),
        (["eval", "--metric", "hyperbolic", "--object", "g", "--point", "x=0.9,0.9;y=1,0"], 3),
        (["eval", "--metric-expr", "sqrt(y1^2+", "--dim", "2", "--object", "g", "--point", "x=0,0;y=1,0"], 2),
        (["eval", "--metric-expr", "y1^2+y2^2", "--dim", "2", "--object", "g", "--point", "x=0,0;y=1,0"], 2),
        (["eval", "--metric", "euclidean", "--object", "g", "--point", "nonsense"], 2),
        (["eval", "--metric", "euclidean", "--params", "q=1", "--object", "g", "--point", "x=0,0;y=1,0"], 2),
        (["eval", "--metric", "euclidean", "--dim", "3", "--object", "g", "--point", "x=0,0;y=1,0"], 2),
        (["bogus"], 2),
        (["verify", "--suite", "axioms", "--metric", "euclidean", "--tol", "no-such-check=1"], 2),
    ],
)
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_verify_axioms_euclidean_zero(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "axioms", "--metric", "euclidean", "--form", "zero", "--points", "5")
    assert code == 0
    doc = json.loads(out)
    assert max(c["residual"] for c in doc["checks"] if c["status"] == "executed") < 1e-12


def test_verify_special_randers(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "special", "--metric", "randers", "--params", "b=0.1", "--points", "4")
    assert code == 0
    assert json.loads(out)["summary"]["all_passed"]


def test_verify_failure_exit_code(capsys):
    code, _, err = run(capsys, "verify", "--suite", "axioms", "--metric", "randers", "--form", "ell",
                       "--points", "2", "--tol", "axioms.recurrent=0")
    assert code == 1
    assert "axioms.recurrent" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hrfinsler", "eval", "--metric", "euclidean", "--object", "ell",
                           "--point", "x=0,0;y=3,4"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    np.testing.assert_allclose(json.loads(proc.stdout)["value"], [0.6, 0.8])
