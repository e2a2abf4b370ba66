from __future__ import annotations

import json

import pytest

from immlab.cli import main, main_fml, main_rank
from immlab.formula import evaluate_to_polynomial, parse_netlist, parse_sexp
from immlab.imm import imm_polynomial
from immlab.poly import parse_poly


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fml_commands(tmp_path, capsys):
    src = tmp_path / "f.sexp"
    src.write_text("(* (* x[1][1][1] x[1][1][2]) x[2][1][1])")
    code, out, _ = run(capsys, "fml", "normalize", str(src), "--delta", "1")
    assert code == 0 and out.startswith("(+ (*")
    assert evaluate_to_polynomial(parse_sexp(out)) == evaluate_to_polynomial(parse_sexp(src.read_text()))
    code, out, _ = run(capsys, "fml", "check-ml", str(src))
    assert code == 0 and json.loads(out)["syntactic_multilinear"] is True
    src.write_text("(* x[1][1][1] x[1][1][1])")
    assert main_fml(["check-ml", str(src)]) == 1
    capsys.readouterr()
    code, out, _ = run(capsys, "fml", "stats", str(src))
    assert json.loads(out)["size"] == 3


def test_imm_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "imm", "poly", "--d", "3")
    assert parse_poly(out) == imm_polynomial(3)
    code, out, _ = run(capsys, "imm", "build", "--d", "8", "--delta", "2", "--circuit")
    assert evaluate_to_polynomial(parse_netlist(out)) == imm_polynomial(8)
    code, out, _ = run(capsys, "imm", "sizes", "--d-list", "2", "--delta-list", "1")
    assert out.splitlines()[1] == "2,1,13,13,8"


def test_decomp_run(tmp_path, capsys):
    f = tmp_path / "f.sexp"
    run(capsys, "imm", "build", "--d", "8", "--delta", "2", "--out", str(f))
    terms = tmp_path / "terms.json"
    code, out, _ = run(capsys, "decomp", "run", "--input", str(f), "--t", "2", "--p-bound", "6",
                       "--threshold", "6", "--d", "8", "--emit-terms", str(terms))
    assert code == 0
    data = json.loads(terms.read_text())
    assert data and all(t["verified"] for t in data)


def test_restrict_and_rank(tmp_path, capsys):
    code, out, _ = run(capsys, "restrict", "sample", "--d", "6", "--seed", "3", "--json")
    rho = json.loads(out)
    assert set(rho) >= {"d", "pi", "a", "A", "mapping", "Y", "Z", "m"}
    rfile, pfile = tmp_path / "rho.json", tmp_path / "imm.txt"
    rfile.write_text(out)
    run(capsys, "imm", "poly", "--d", "6", "--out", str(pfile))
    code, out, _ = run(capsys, "restrict", "apply", "--rho", str(rfile), "--poly", str(pfile))
    assert code == 0
    g = tmp_path / "g.txt"
    g.write_text(out)
    ys = ",".join(rho["Y"]) or "y1"
    zs = ",".join(rho["Z"]) or "z1"
    assert main_rank(["--poly", str(g), "--y", ys, "--z", zs, "--cross-check", "1000000007"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["rank"] == 2 ** rho["m"]


def test_gen(capsys):
    code, out, _ = run(capsys, "gen", "tproduct", "--d", "2", "--t", "3", "--seed", "1")
    data = json.loads(out)
    assert data["kind"] == "t_product" and data["t"] == 3
    code, out, _ = run(capsys, "gen", "rsimple", "--d", "4", "--r", "1", "--threshold", "4")
    assert json.loads(out)["kind"] == "r_simple"
    code, _, err = run(capsys, "gen", "rsimple", "--d", "2", "--r", "1")
    assert code == 2 and "error" in err


def test_exp(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code, _, err = run(capsys, "exp", "full_rank", "--d", "6", "--trials", "20", "--out", str(out))
    assert code == 0 and "PASS" in err
    assert json.loads(out.read_text())["passed"] is True
    code, _, _ = run(capsys, "exp", "full_rank", "--trials", "5")
    assert code == 2


def test_bad_input_is_clean_error(tmp_path, capsys):
    bad = tmp_path / "bad.sexp"
    bad.write_text("(+ x[1][1][1]")
    code, _, err = run(capsys, "fml", "stats", str(bad))
    assert code == 2 and err.startswith("immlab: error")
