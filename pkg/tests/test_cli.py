import io
import json
import pathlib
import subprocess
import sys

import numpy as np
import pytest

from gen import random_cov, random_span, random_system, relerr
from koopgauss import propagate
from koopgauss.cli import run

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def call(*argv):
    buf = io.StringIO()
    code = run([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


def report(*argv):
    code, text = call(*argv)
    return code, json.loads(text)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def system_file(tmp_path, sys_, name="sys.json"):
    return write(tmp_path, name, {"A": sys_.A.tolist(), "B": sys_.B.tolist()})


def observable_file(tmp_path, f, name="obs.json"):
    return write(tmp_path, name, f.to_dict())


# --- certificate examples -------------------------------------------------


def test_check_diag_example():
    code, rep = report("check", "--system", DATA / "diag_system.json", "--covariance", DATA / "identity2_cov.json")
    assert code == 0
    assert rep["status"] == "ok"
    assert rep["outputs"]["slack"] == pytest.approx(2.0, abs=1e-14)


def test_check_shear_example():
    code, rep = report("check", "--system", DATA / "shear_system.json", "--covariance", DATA / "identity2_cov.json")
    assert code == 1
    assert rep["status"] == "certificate-failed"
    assert rep["outputs"]["slack"] == pytest.approx(-3.99, abs=1e-12)


# --- malformed input -----------------------------------------------------


def test_malformed_json_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"A": [[-1.0]], "B": [[1.0]')
    code, rep = report("propagate", "--system", bad, "--observable", DATA / "scalar_k0.json", "--time", 0.5)
    assert code == 2
    assert rep["status"] == "invalid-input"
    assert "line 1" in rep["outputs"]["error"]


@pytest.mark.parametrize(
    "payload",
    [{"A": [[-1.0]]}, {"A": "x", "B": [[1.0]]}, [1, 2], {"A": [[-1.0, 0.0]], "B": [[1.0]]}],
)
def test_bad_system_exit_2(tmp_path, payload):
    p = write(tmp_path, "s.json", payload)
    code, rep = report("validate", "--system", p)
    assert code == 2
    assert rep["status"] == "invalid-input"


def test_missing_file_exit_2(tmp_path):
    code, _ = call("validate", "--system", tmp_path / "nope.json")
    assert code == 2


def test_negative_time_exit_2():
    code, rep = report(
        "propagate", "--system", DATA / "scalar_system.json", "--observable", DATA / "scalar_k0.json", "--time", -1
    )
    assert code == 2
    assert rep["status"] == "invalid-input"


def test_dimension_mismatch_exit_2():
    code, _ = report("check", "--system", DATA / "scalar_system.json", "--covariance", DATA / "identity2_cov.json")
    assert code == 2


def test_bad_vector_exit_2():
    code, _ = call(
        "product-integral", "--c1", DATA / "scalar_cov.json", "--z", "abc",
        "--c2", DATA / "scalar_cov.json", "--w", "0",
    )
    assert code == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        call("frobnicate")
    assert exc.value.code == 2


# --- validate ------------------------------------------------------------


def test_validate_scalar():
    code, rep = report("validate", "--system", DATA / "scalar_system.json")
    assert code == 0
    assert rep["outputs"]["sigma"] == [[0.5]]
    assert rep["outputs"]["sigma_residual"] <= 1e-10


def test_validate_not_controllable(tmp_path):
    p = write(tmp_path, "s.json", {"A": [[-1.0, 0.0], [0.0, -2.0]], "B": [[1.0], [0.0]]})
    code, rep = report("validate", "--system", p)
    assert code == 1
    assert rep["outputs"]["controllable"] is False
    assert rep["outputs"]["rank"] == 1


def test_validate_not_hurwitz(tmp_path):
    p = write(tmp_path, "s.json", {"A": [[0.5]], "B": [[1.0]]})
    code, rep = report("validate", "--system", p)
    assert code == 1
    assert rep["outputs"]["hurwitz"] is False


def test_not_hurwitz_in_other_commands(tmp_path):
    p = write(tmp_path, "s.json", {"A": [[0.5]], "B": [[1.0]]})
    code, _ = report("check", "--system", p, "--covariance", DATA / "scalar_cov.json")
    assert code == 1


# --- propagate / round trip -----------------------------------------------


def test_propagate_scalar_output():
    code, img = report(
        "propagate", "--system", DATA / "scalar_system.json", "--observable", DATA / "scalar_k0.json", "--time", 0.5
    )
    assert code == 0
    assert set(img) == {"tau", "covariance_t", "centers", "coeffs", "t"}
    assert round(img["tau"], 6) == 0.782751
    assert round(img["covariance_t"][0][0], 6) == 2.106315


def test_roundtrip_pipes_compose(tmp_path, rng):
    for i in range(5):
        sys_ = random_system(rng)
        f = random_span(rng, random_cov(rng, sys_.dim))
        t, s = rng.uniform(0.05, 1.5, 2)
        sp, op = system_file(tmp_path, sys_, f"s{i}.json"), observable_file(tmp_path, f, f"f{i}.json")
        code, text = call("propagate", "--system", sp, "--observable", op, "--time", repr(float(t)))
        assert code == 0
        first = tmp_path / f"img{i}.json"
        first.write_text(text)
        code, two = report("propagate", "--system", sp, "--observable", first, "--time", repr(float(s)))
        assert code == 0
        direct = propagate(sys_, f, t + s)
        two_tau = np.asarray(two["tau"]) * np.asarray(two["coeffs"])
        assert relerr(two_tau, direct.tau * direct.coeffs) <= 1e-9
        assert relerr(two["covariance_t"], direct.cov_t.C) <= 1e-9
        assert relerr(two["centers"], direct.centers) <= 1e-9
        # semigroup command on the piped image agrees as well
        code, rep = report("semigroup", "--system", sp, "--observable", first, "--t", repr(float(s)), "--s", 0.1)
        assert code == 0
        assert rep["outputs"]["within_tolerance"] is True


def test_reports_byte_identical(tmp_path):
    argv_sets = [
        ("verify-mc", "--system", DATA / "scalar_system.json", "--observable", DATA / "scalar_k0.json",
         "--time", 0.5, "--point", "0.3", "--samples", 20000, "--seed", 42),
        ("norm-bound", "--system", DATA / "diag_system.json", "--observable", DATA / "pair2_observable.json",
         "--time", 0.7),
        ("propagate", "--system", DATA / "diag_system.json", "--observable", DATA / "pair2_observable.json",
         "--time", 0.7),
    ]
    for argv in argv_sets:
        a, b = call(*argv), call(*argv)
        assert a == b


def test_floats_written_with_17_digits():
    _, text = call(
        "propagate", "--system", DATA / "scalar_system.json", "--observable", DATA / "scalar_k0.json", "--time", 0.5
    )
    img = json.loads(text)
    assert f'"tau": {format(img["tau"], ".17g")}' in text


# --- remaining commands ----------------------------------------------------


def test_norm_bound_scalar():
    code, rep = report(
        "norm-bound", "--system", DATA / "scalar_system.json", "--observable", DATA / "scalar_k0.json", "--time", 0.5
    )
    assert code == 0
    assert round(rep["outputs"]["upper_proxy"], 6) == 1.136019
    assert round(rep["outputs"]["bound"], 6) == 1.284025


def test_norm_bound_unverified_exit_1(tmp_path):
    obs = write(tmp_path, "o.json", {"covariance": [[1.0, 0.0], [0.0, 1.0]], "centers": [[0.0, 0.0]], "coeffs": [1.0]})
    code, rep = report("norm-bound", "--system", DATA / "shear_system.json", "--observable", obs, "--time", 0.2)
    assert code == 1
    assert rep["status"] == "certificate-failed"
    assert rep["outputs"]["verified"] is False


def test_verify_mc_scalar():
    code, rep = report(
        "verify-mc", "--system", DATA / "scalar_system.json", "--observable", DATA / "scalar_k0.json",
        "--time", 0.5, "--point", "[0.3]", "--seed", 1,
    )
    assert code == 0
    out = rep["outputs"]
    assert abs(out["z_score"]) <= 3 and out["within_3_se"] is True


def test_semigroup_command():
    code, rep = report(
        "semigroup", "--system", DATA / "diag_system.json", "--observable", DATA / "pair2_observable.json",
        "--t", 0.3, "--s", 0.4,
    )
    assert code == 0
    assert rep["outputs"]["max_rel_deviation"] <= 1e-9


def test_max_scale_infinity_and_finite(tmp_path):
    code, rep = report("max-scale", "--system", DATA / "diag_system.json", "--covariance", DATA / "identity2_cov.json")
    assert code == 0
    assert rep["outputs"]["tau_star"] == "infinity"
    code, rep = report("max-scale", "--system", DATA / "shear_system.json", "--covariance", DATA / "identity2_cov.json")
    assert code == 0
    tau = rep["outputs"]["tau_star"]
    # oracle: certificate slack for tau C sits on the boundary
    A = np.array([[-1.0, 10.0], [0.0, -1.0]])
    M = 0.01 * np.eye(2) - 0.5 * tau**2 * (A + A.T)
    assert abs(np.linalg.eigvalsh(M)[0]) <= 1e-12


def test_max_scale_singular_unsupported(tmp_path):
    # B B^T = e2 e2^T and the symmetric part of A is positive along e1
    p = write(tmp_path, "s.json", {"A": [[0.1, 5.0], [-5.0, -1.0]], "B": [[0.0], [1.0]]})
    c = write(tmp_path, "c.json", {"C": [[1.0, 0.0], [0.0, 1.0]]})
    code, rep = report("max-scale", "--system", p, "--covariance", c)
    assert code == 1
    assert rep["outputs"]["tau_star"] is None


def test_inclusion_both_directions():
    code, rep = report("inclusion", "--c1", DATA / "wide2_cov.json", "--c2", DATA / "identity2_cov.json")
    assert code == 0
    assert rep["outputs"]["embed_const"] == pytest.approx(2.0)
    code, rep = report("inclusion", "--c1", DATA / "identity2_cov.json", "--c2", DATA / "wide2_cov.json")
    assert code == 1
    assert rep["outputs"]["included"] is False


def test_product_integral_scalar():
    code, rep = report(
        "product-integral", "--c1", DATA / "scalar_cov.json", "--z", "0", "--c2", DATA / "scalar_cov.json", "--w", "0"
    )
    assert code == 0
    out = rep["outputs"]
    assert round(out["value"], 6) == 1.253314
    assert out["rel_error"] <= 1e-8


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "koopgauss", "check", "--system", str(DATA / "shear_system.json"),
         "--covariance", str(DATA / "identity2_cov.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["status"] == "certificate-failed"
