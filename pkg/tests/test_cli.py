import csv
import io

import pytest
from hypothesis import given, settings, strategies as st

from penaltyopt import benchmarks as B
from penaltyopt.cli import main, rate_slope

ONED = B.DOCUMENTS["oned"]
NO_START = 'variables = 1\nobjective = x1\nconstraint = {"expr": "1 - x1", "set": "orthant-"}\nM = 0\n'
INFEASIBLE = 'variables = 1\nobjective = x1\nconstraint = {"expr": "1 - x1", "set": "orthant-"}\nstart = [0]\nM = 0\n'


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, out.getvalue()


def report(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines() if ": " in line)


def test_solve_one_dimensional(files, tmp_path):
    trace = tmp_path / "trace.csv"
    code, out = run(["solve", "--problem", files("p.txt", ONED), "--eps", "0.1", "--rho", "auto",
                     "--trace", str(trace)])
    assert code == 0
    r = report(out)
    assert r["status"] == "converged" and float(r["rho_used"]) == 101.0
    assert float(r["eps_feas"]) == pytest.approx(1 / 202, abs=1e-3)
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["k", "f_val", "dist_val", "dir_value", "step", "backtracks"]
    f = [float(row[1]) for row in rows[1:]]
    assert len(f) == int(r["iterations"])
    assert all(b < a for a, b in zip(f, f[1:]))


def test_solve_writes_report_file(files, tmp_path):
    rep = tmp_path / "report.txt"
    code, out = run(["solve", "--problem", files("p.txt", ONED), "--eps", "0.1", "--report", str(rep)])
    assert code == 0 and out == ""
    r = report(rep.read_text())
    for key in ("eps_feas", "eps_stat", "rho_used", "passed_at", "lambda[0]"):
        assert key in r
    # floats carry 17 significant digits
    assert float(r["passed_at"]) == 0.1


def test_auto_rho_without_start(files):
    code, _ = run(["solve", "--problem", files("p.txt", NO_START), "--eps", "0.1", "--rho", "auto"])
    assert code == 2


def test_zero_eps_at_kkt_point(files):
    code, out = run(["solve", "--problem", files("k.txt", B.CONIC_KKT), "--eps", "0", "--rho", "1"])
    assert code == 0
    r = report(out)
    assert r["x"] == "-1,-1" and float(r["lambda[0]"]) == pytest.approx(0.5, abs=1e-12)


def test_max_iters_exit_code(files):
    code, out = run(["solve", "--problem", files("q.txt", B.DOCUMENTS["quad10"]), "--eps", "0.01",
                     "--max-iters", "3"])
    assert code == 3 and report(out)["status"] == "max_iters"


def test_check_conic_mode(files):
    code, out = run(["check", "--problem", files("k.txt", B.CONIC_KKT), "--point", "-1,-1", "--eps", "0",
                     "--mode", "conic"])
    r = report(out)
    assert code == 0 and float(r["stat"]) <= 1e-12 and float(r["lambda[0]"]) == pytest.approx(0.5)


def test_check_kkt_mode(files):
    code, out = run(["check", "--problem", files("p.txt", ONED), "--point", "0.9950495", "--eps", "0.1",
                     "--mode", "kkt"])
    assert float(report(out)["feasibility"]) == pytest.approx(1 / 202, abs=1e-7)
    assert code == 0


def test_check_fails_without_penalty(files):
    code, _ = run(["check", "--problem", files("c.txt", B.DOCUMENTS["conic2d"]), "--point", "0,0", "--eps", "0",
                   "--rho", "0"])
    assert code == 4


def test_check_dimension_mismatch(files):
    code, _ = run(["check", "--problem", files("p.txt", ONED), "--point", "1,2", "--eps", "0.1"])
    assert code == 2


def test_rate_sweep(files, tmp_path):
    dest = tmp_path / "rate.csv"
    code, out = run(["rate", "--problem", files("p.txt", ONED), "--eps-list", "0.1,0.05,0.025,0.0125",
                     "--alpha", "2", "--out", str(dest)])
    assert code == 0
    rows = list(csv.reader(dest.open()))
    assert rows[0] == ["eps", "iters", "rho"] and len(rows) == 5
    slope = float(out.split("slope: ")[1])
    assert slope <= 2.2


def test_rate_single_eps(files):
    code, out = run(["rate", "--problem", files("p.txt", ONED), "--eps-list", "0.1"])
    assert code == 0 and "slope: n/a" in out


def test_rate_infeasible_start(files):
    code, _ = run(["rate", "--problem", files("p.txt", INFEASIBLE), "--eps-list", "0.1,0.05"])
    assert code == 2


def test_missing_file_and_bad_flags(files):
    assert run(["solve", "--problem", "/nonexistent/file", "--eps", "0.1"])[0] == 2
    assert run(["solve", "--problem", files("p.txt", ONED), "--eps", "-1"])[0] == 2
    assert run(["solve", "--problem", files("p.txt", ONED), "--eps", "0.1", "--rho", "lots"])[0] == 2
    assert run(["bogus"])[0] == 2


def test_rate_slope_helper():
    assert rate_slope([0.1, 0.05], [10, 40]) == pytest.approx(2.0)
    assert rate_slope([0.1], [10]) is None


DOCS = [ONED, NO_START, INFEASIBLE, B.CONIC_KKT, "variables = 1\nobjective = x1 +\n", "garbage"]


@settings(max_examples=40, deadline=None)
@given(doc=st.sampled_from(DOCS), cmd=st.sampled_from(["solve", "check", "rate"]),
       eps=st.sampled_from(["0", "0.1", "0.5", "-1", "abc"]), rho=st.sampled_from(["auto", "0", "2", "x"]),
       penalty=st.sampled_from(["power", "exact", "square", "lp", "l1", "nope"]))
def test_exit_codes_are_total(tmp_path_factory, doc, cmd, eps, rho, penalty):
    path = tmp_path_factory.mktemp("d") / "p.txt"
    path.write_text(doc)
    argv = [cmd, "--problem", str(path), "--penalty", penalty]
    if cmd == "check":
        argv += ["--point", "1", "--eps", eps, "--rho", "0" if rho in ("auto", "x") else rho]
    elif cmd == "rate":
        argv += ["--eps-list", f"{eps},0.2", "--rho", rho, "--max-iters", "200"]
    else:
        argv += ["--eps", eps, "--rho", rho, "--max-iters", "200"]
    code, _ = run(argv)
    assert code in (0, 2, 3, 4)
