import io

import numpy as np
import pytest

from sddflow.cli import run_cli
from sddflow.generators import random_connected_graph, random_demand
from sddflow.io import emit_graph, emit_vector
from sddflow.report import parse_structured


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    g = tmp_path / "k3.txt"
    g.write_text("p graph 3 3\n0 1 1\n1 2 1\n0 2 1\n")
    d = tmp_path / "chi.txt"
    d.write_text("1\n0\n-1\n")
    c4 = tmp_path / "c4.txt"
    c4.write_text("p graph 4 4\n0 1 1\n1 2 1\n2 3 1\n0 3 1\n")
    return tmp_path, g, d, c4


def test_solve_lap_verify(files):
    tmp, g, d, _ = files
    out = tmp / "v.txt"
    code, text, _ = run("solve-lap", g, d, "--verify", "--report", "structured", "--out", out)
    assert code == 0
    rep = parse_structured(text)
    assert rep["verify"] == "pass"
    assert float(rep["energy"]) == pytest.approx(2 / 3)
    v = np.loadtxt(out)
    assert np.allclose(v - v[0], [0, -1 / 3, -2 / 3])


def test_flow_writes_flow(files):
    tmp, g, d, _ = files
    out = tmp / "f.txt"
    assert run("flow", g, d, "--out", out)[0] == 0
    assert np.allclose(np.loadtxt(out), [1 / 3, 1 / 3, 2 / 3])


def test_structured_report_is_deterministic(tmp_path):
    G = random_connected_graph(40, 100, seed=1)
    g = tmp_path / "g.txt"
    g.write_text(emit_graph(G))
    d = tmp_path / "d.txt"
    d.write_text(emit_vector(random_demand(40, 1)))
    a = run("flow", g, d, "--report", "structured", "--seed", 7, "--solver", "full")[1]
    b = run("flow", g, d, "--report", "structured", "--seed", 7, "--solver", "full")[1]
    strip = lambda s: [line for line in s.splitlines() if not line.startswith("wall_time=")]
    assert strip(a) == strip(b)
    assert a.splitlines()[0] == "schema=sddflow.report/1"
    assert a.splitlines()[-1].startswith("wall_time=")


def test_tree_stats(files):
    tmp, _, _, c4 = files
    code, text, _ = run("tree-stats", c4, "--tree", "mst", "--report", "structured", "--out", tmp / "t.txt")
    rep = parse_structured(text)
    assert code == 0 and float(rep["st"]) == 6.0 and float(rep["tau"]) == 4.0
    code, text, _ = run("tree-stats", c4, "--tree", f"file:{tmp / 't.txt'}", "--report", "structured")
    assert code == 0 and float(parse_structured(text)["st"]) == 6.0


def test_solve_sdd(tmp_path):
    A = tmp_path / "a.txt"
    A.write_text("2 1\n1 3\n")
    b = tmp_path / "b.txt"
    b.write_text("1\n0\n")
    out = tmp_path / "x.txt"
    code, _, _ = run("solve-sdd", A, b, "--eps", "1e-6", "--verify", "--out", out)
    assert code == 0
    assert np.allclose(np.loadtxt(out), [0.6, -0.2], atol=1e-4)


def test_verify_command(files):
    _, _, _, c4 = files
    code, text, _ = run("verify", c4, "--trials", 5, "--operator-trials", 20, "--report", "structured")
    rep = parse_structured(text)
    assert code == 0 and rep["verify"] == "pass" and rep["operator_check"] == "pass"


def test_input_errors(files, tmp_path):
    _, g, d, _ = files
    assert run("flow", tmp_path / "missing.txt", d)[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("p graph 3 1\n1 1 2\n")
    code, _, err = run("flow", bad, d)
    assert code == 1 and "line 2" in err
    unbalanced = tmp_path / "u.txt"
    unbalanced.write_text("1\n0\n0\n")
    assert run("flow", g, unbalanced)[0] == 1
    assert run("flow", g, d, "--eps", "-1")[0] == 1
    assert run("bogus")[0] == 1


def test_verification_failure_exit_code(files):
    _, g, d, _ = files
    # zero updates leave the tree flow at energy 2, three times optimal
    code, text, _ = run("flow", g, d, "--verify", "--max-iter", 0, "--report", "structured")
    assert code == 2 and parse_structured(text)["verify"] == "fail"
