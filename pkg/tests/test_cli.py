import json
import subprocess
import sys

import pytest

from conftest import EDGE_DRDG_VALUE, EDGE_LOGZ, EDGE_PA_EXACT
from dgmeanfield.cli import main

EDGE = {"kind": "cut", "directed": True, "n": 2, "edges": [[0, 1, 1.0]]}


@pytest.fixture
def edge_file(tmp_path):
    p = tmp_path / "edge.json"
    p.write_text(json.dumps(EDGE))
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_solve(capsys, edge_file, tmp_path):
    code, out = run(capsys, "solve", edge_file, "--order", "identity", "--assert", "--out", tmp_path / "o")
    assert code == 0
    res = json.loads(out.out)
    assert res["final_value"] == pytest.approx(EDGE_DRDG_VALUE, abs=1e-12)
    assert res["violations"] == [] and res["assertions_checked"] > 0
    assert (tmp_path / "o" / "trajectory.csv").read_text().startswith("epoch,step,coord,value,upper")


def test_solve_order_file(capsys, caplog, edge_file, tmp_path):
    order = tmp_path / "order.json"
    order.write_text("[1, 0]")
    code, out = run(capsys, "solve", edge_file, "--solver", "sub-dg", "--order", "file", "--order-file", order)
    assert code == 0 and json.loads(out.out)["solver"] == "sub-dg"
    order.write_text("[1, 1]")
    code, out = run(capsys, "solve", edge_file, "--order", "file", "--order-file", order)
    assert code == 2 and "permutation" in caplog.text


def test_solve_pa(capsys, edge_file):
    code, out = run(capsys, "solve", edge_file, edge_file, "--objective", "pa-elbo", "--solver", "dgmf-half",
                    "--epochs", "30", "--order", "identity")
    assert code == 0
    assert json.loads(out.out)["final_value"] == pytest.approx(2.2906260885, abs=1e-8)
    code, _ = run(capsys, "solve", edge_file, "--objective", "pa-elbo")
    assert code == 2


def test_exact_logz(capsys, edge_file):
    code, out = run(capsys, "exact-logz", edge_file)
    res = json.loads(out.out)
    assert code == 0 and res["log_z"] == pytest.approx(EDGE_LOGZ, abs=1e-12)
    assert res["upper_bound"] >= res["log_z"]


def test_pa_bound(capsys, edge_file):
    code, out = run(capsys, "pa-bound", edge_file, edge_file, "--order", "identity", "--epochs", "50")
    res = json.loads(out.out)
    assert code == 0
    assert res["exact_pa"] == pytest.approx(EDGE_PA_EXACT, abs=1e-12)
    assert res["pa_lower_bound"] <= res["exact_pa"]


def test_check(capsys, edge_file, tmp_path):
    code, out = run(capsys, "check", edge_file)
    res = json.loads(out.out)
    assert code == 0 and res["ok"] and res["submodular"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "table", "n": 2, "values": [0, 0, 0, 1]}))
    code, out = run(capsys, "check", bad)
    assert code == 1 and not json.loads(out.out)["submodular"]


def test_synth_flid(capsys, tmp_path):
    target = tmp_path / "f.json"
    code, _ = run(capsys, "synth-flid", "--n", "5", "--D", "3", "--seed", "2", "--out", target)
    assert code == 0
    code, out = run(capsys, "synth-flid", "--n", "5", "--D", "3", "--seed", "2")
    assert json.loads(out.out) == json.loads(target.read_text())


def test_compare_and_replay(capsys, edge_file, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"objective": "elbo", "solvers": ["dr-dg", "ca-0"],
                                "instances": [{"name": "e", "models": [{"path": "edge.json"}]}]}))
    code, _ = run(capsys, "compare", spec, "--out", tmp_path / "a")
    assert code == 0
    code, _ = run(capsys, "compare", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b")
    assert code == 0
    for name in ("summary.csv", "trajectory.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bad_inputs(capsys, caplog, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"objective": "elbo", "solvers": [], "instances": []}))
    code, out = run(capsys, "compare", spec)
    assert code == 2 and "solver list is empty" in caplog.text
    code, out = run(capsys, "exact-logz", tmp_path / "missing.json")
    assert code == 2


def test_module_entry_point(edge_file):
    proc = subprocess.run([sys.executable, "-m", "dgmeanfield", "exact-logz", str(edge_file)],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["log_z"] == pytest.approx(EDGE_LOGZ)
