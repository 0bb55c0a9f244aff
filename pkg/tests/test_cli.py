from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from hwb import cli
from hwb.fixtures import fixture_path


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_ahat_report_shape(capsys):
    code, rep = report(capsys, "ahat", "--kmax", "3")
    assert code == 0 and rep["verdict"] == "pass"
    assert rep["results"]["c"] == ["-1/12", "1/120", "-1/252"]
    assert len(rep["conventions_sha256"]) == 64
    assert rep["truncation_weight"] == 6 and rep["hbar_max"] == 1


def test_reports_are_deterministic(capsys):
    a = run(capsys, "ce-cohomology", "sl2", "--truncation-weight", "4")[1]
    b = run(capsys, "ce-cohomology", "sl2", "--truncation-weight", "4")[1]
    assert a == b
    assert json.loads(a)["results"]["betti"] == {"0": 1, "1": 0, "2": 0, "3": 1}


def test_text_format(capsys):
    code, out, _ = run(capsys, "ahat", "--kmax", "2", "--format", "text")
    assert code == 0
    assert "verdict: pass" in out.splitlines()


def test_failed_invariant_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.linf"
    bad.write_text(fixture_path("sl2").read_text().replace("2: h e -> e 2", "2: h e -> e 3"))
    code, rep = report(capsys, "check-linf", str(bad))
    assert code == 1 and rep["verdict"] == "fail"
    assert rep["checks"]["jacobi"] is False


def test_verification_failure_on_load_is_a_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.linf"
    bad.write_text(fixture_path("sl2").read_text().replace("2: h e -> e 2", "2: h e -> e 3"))
    code, _, err = run(capsys, "ce-cohomology", str(bad))
    assert code == 3 and "verification failed" in err


def test_syntax_error_exits_three(capsys, tmp_path):
    bad = tmp_path / "broken.linf"
    bad.write_text("[generators]\nx zero\n")
    code, _, err = run(capsys, "ce-cohomology", str(bad))
    assert code == 3 and "line 2" in err


@pytest.mark.parametrize("argv", [
    ("ce-cohomology", "no-such-fixture"),
    ("no-such-command",),
    ("graphs", "--max-vertices", "9"),
    ("rg-flow", "--dim", "7"),
    ("wheel-sum", "--k", "0"),
    ("phi4-weight", "--eps", "2", "--L", "1"),
    ("integrate", "sl2"),
    ("delta0", "curved"),
])
def test_usage_errors_exit_two(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_graph_cache_states(capsys, tmp_path):
    base = ("graphs", "--tails", "2", "--cache-dir", str(tmp_path))
    code, rep = report(capsys, *base, "--max-vertices", "2")
    assert code == 0 and rep["results"]["cache"] == "miss"
    first = rep["results"]["graphs"]
    code, rep = report(capsys, *base, "--max-vertices", "2")
    assert rep["results"]["cache"] == "hit" and rep["results"]["graphs"] == first
    code, rep = report(capsys, *base, "--max-vertices", "3")
    assert rep["results"]["cache"] == "extended" and rep["results"]["count"] >= len(first)
    (path,) = tmp_path.glob("graphs-t2-*.json")
    store = json.loads(path.read_text())
    enc = next(iter(store["aut"]))
    store["aut"][enc] += 1
    path.write_text(json.dumps(store))
    code, rep = report(capsys, *base, "--max-vertices", "3")
    assert code == 0 and rep["results"]["cache"] == "regenerated"


def test_graphs_against_oracle(capsys, tmp_path):
    code, rep = report(capsys, "graphs", "--tails", "3", "--max-vertices", "4", "--oracle", "--no-cache")
    assert code == 0
    assert rep["checks"] == {"matches_oracle": True, "aut_matches_brute_force": True}
    assert rep["results"]["cache"] == "disabled"


def test_wheel_sum_table(capsys):
    code, rep = report(capsys, "wheel-sum", "--k", "2", "--N", "1000", "--tol", "1e-9", "--table")
    assert code == 0
    rows = list(csv.reader(io.StringIO(rep["results"]["table_csv"])))
    assert rows[0] == ["N", "partial_sum", "target", "abs_error"]
    assert [int(r[0]) for r in rows[1:]] == [1, 10, 100, 1000]
    errs = [float(r[3]) for r in rows[1:]]
    assert errs == sorted(errs, reverse=True)


def test_wheel_sum_tolerance_failure(capsys):
    code, rep = report(capsys, "wheel-sum", "--k", "1", "--N", "10", "--tol", "1e-9")
    assert code == 1 and rep["checks"]["within_tolerance"] is False


def test_phi4_weight(capsys):
    code, rep = report(capsys, "phi4-weight", "--eps", "0.01", "--L", "1")
    assert code == 0
    assert abs(rep["results"]["observed_order"] - 4) < 0.2
    code, rep = report(capsys, "phi4-weight", "--eps", "1", "--L", "1")
    assert code == 0 and rep["results"]["value"] == 0.0 and rep["results"]["observed_order"] is None


@pytest.mark.parametrize("argv", [
    ("check-linf", "l3"),
    ("atiyah", "nil4", "--truncation-weight", "5"),
    ("mixed-u", "line", "--truncation-weight", "4"),
    ("p0", "line", "--truncation-weight", "4"),
    ("delta0", "line", "--truncation-weight", "4"),
    ("qme", "line", "--truncation-weight", "4"),
    ("gauge", "line", "--truncation-weight", "4", "--samples", "20"),
    ("div-cohomology", "--d1", "1", "--d2", "0"),
    ("integrate", "line", "--truncation-weight", "4", "--alpha", "random", "--seed", "3"),
    ("rg-flow", "--dim", "3", "--trials", "3", "--truncation-weight", "4"),
])
def test_subcommands_pass(capsys, argv):
    code, rep = report(capsys, *argv)
    assert code == 0, rep["checks"]
    assert rep["checks"] and all(rep["checks"].values())


def test_console_script_module_entry():
    out = subprocess.run([sys.executable, "-m", "hwb.cli", "ahat", "--kmax", "1"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["results"]["c"] == ["-1/12"]
