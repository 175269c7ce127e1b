import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from carrier_forge.bound import BoundCertificate
from carrier_forge.cli import main
from carrier_forge.formats import read_decorated, read_graph, write_graph
from carrier_forge.graph import dumbbell_graph
from carrier_forge.groups import load_shipped
from carrier_forge.hyperbolic import TWO_PI_3


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_unknown_flag_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bound", "--r", "1", "--k", "2", "--nope"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_sh_table(tmp_path, capsys):
    out = tmp_path / "sh.csv"
    code, _, _ = run(["sh-table", "--steps", "12", "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 144
    for r in rows:
        if float(r["phi"]) == TWO_PI_3:
            assert float(r["gain"]) == 0.0
        c, a, b = float(r["c"]), float(r["a"]), float(r["b"])
        assert float(r["gain"]) == 2 * c - 2 * b - a
    grid = np.array([float(r["gain"]) for r in rows]).reshape(12, 12)
    assert np.all(np.diff(grid[:, :-1], axis=0) > 0)
    assert np.all(np.diff(grid, axis=1) < 0)
    # 17 significant digits round-trip
    assert all(repr(float(r["c"])) == repr(float(repr(float(r["c"])))) for r in rows)


def test_sh_table_range_errors(capsys):
    code, _, err = run(["sh-table", "--phi-max", "2.5"], capsys)
    assert code == 1 and "phi" in err
    code, _, _ = run(["sh-table", "--c-min", "0"], capsys)
    assert code == 1


def test_bound_certificate(capsys):
    code, out, _ = run(["bound", "--r", "1", "--k", "2"], capsys)
    assert code == 0
    cert = BoundCertificate.from_json(out)
    assert cert.k == 2 and cert.verify()
    assert cert.l == min(cert.constants.s0 / 3, 1.0 / (cert.m + 1) ** 2)
    code2, out2, _ = run(["bound", "--r", "1", "--k", "2"], capsys)
    assert out2 == out


def test_bound_rejects_rank_one(capsys):
    code, _, err = run(["bound", "--r", "1", "--k", "1"], capsys)
    assert code == 1 and "k > 1" in err
    code, _, _ = run(["bound", "--r", "-1", "--k", "2"], capsys)
    assert code == 1


def test_relax_shipped_theta(tmp_path, capsys):
    prefix = tmp_path / "out" / "run"
    code, out, _ = run(["relax", "--group", "schottky2_fuchsian", "--topology", "theta", "--out", str(prefix)], capsys)
    assert code == 0 and "converged True" in out
    g = read_decorated((tmp_path / "out" / "run.graph").read_text(), load_shipped("schottky2_fuchsian"))
    assert g.is_trivalent()
    trace = (tmp_path / "out" / "run.trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,total_length"
    assert (tmp_path / "out" / "run.summary").read_text() == out


def test_relax_from_graph_file_and_seeds(tmp_path, capsys):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    run(["relax", "--group", "schottky2_twisted", "--seed", "1", "--out", str(a)], capsys)
    run(["relax", "--group", "schottky2_twisted", "--seed", "1", "--out", str(b)], capsys)
    run(["relax", "--group", "schottky2_twisted", "--seed", "2", "--out", str(c)], capsys)
    assert (tmp_path / "a.graph").read_text() == (tmp_path / "b.graph").read_text()
    assert (tmp_path / "a.trace.csv").read_text() != (tmp_path / "c.trace.csv").read_text()
    # restart from a converged file: already critical
    code, out, _ = run(["relax", "--group", "schottky2_twisted", "--graph", str(tmp_path / "a.graph"),
                        "--out", str(tmp_path / "d")], capsys)
    assert code == 0 and "iterations 0" in out


def test_relax_non_convergence_exit_2(tmp_path, capsys):
    code, _, _ = run(["relax", "--group", "schottky2_fuchsian", "--max-iter", "2", "--out", str(tmp_path / "x")], capsys)
    assert code == 2


def test_relax_malformed_group(tmp_path, capsys):
    bad = tmp_path / "bad.group"
    bad.write_text("group g rank 2\ngen a 1 0 0 0 0 0 1 0\ngen b 1 0 0\n")
    code, _, err = run(["relax", "--group", str(bad), "--out", str(tmp_path / "x")], capsys)
    assert code == 1 and "line 3" in err
    code, _, err = run(["relax", "--group", str(tmp_path / "missing.group")], capsys)
    assert code == 1 and "cannot read" in err


def test_scan(tmp_path, capsys):
    code, out, _ = run(["scan", "--group", "schottky2_fuchsian", "--seeds", "4", "--workers", "1",
                        "--out", str(tmp_path / "scan")], capsys)
    assert code == 0 and "VIOLATION 0" in out
    rows = (tmp_path / "scan.csv").read_text().splitlines()
    assert len(rows) == 5


def test_verify_lemmas_default_and_reproducible(tmp_path, capsys):
    code, out, _ = run(["verify-lemmas", "--trials", "200", "--grid-density", "60"], capsys)
    assert code == 0 and "all suites passed" in out
    code2, out2, _ = run(["verify-lemmas", "--trials", "200", "--grid-density", "60"], capsys)
    assert out2 == out
    for name in ("monotone", "derivative", "suff_shortening", "small_subgraph", "collapse", "cs1"):
        assert name in out


def test_verify_lemmas_fault_injection(capsys):
    code, out, _ = run(["verify-lemmas", "--trials", "50", "--grid-density", "40", "--inject-fault"], capsys)
    assert code == 3
    assert "monotone           FAIL" in out and "counterexample" in out


def test_collapse(tmp_path, capsys):
    src = tmp_path / "x.graph"
    src.write_text(write_graph(dumbbell_graph(1.0, 5.0, 2.0)))
    out_path = tmp_path / "y.graph"
    code, out, _ = run(["collapse", "--graph", str(src), "--tree", "br", "--out", str(out_path)], capsys)
    assert code == 0 and "cone_valence 4" in out
    y = read_graph(out_path.read_text())
    assert y.rank == 2
    code, _, err = run(["collapse", "--graph", str(src), "--tree", "lu"], capsys)
    assert code == 1


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "carrier_forge.cli", "bound", "--r", "1", "--k", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and '"k": 3' in res.stdout
