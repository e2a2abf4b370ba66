"""Command line: ``immlab <group> <command> ...``.

Groups: fml, imm, decomp, restrict, rank, gen, exp.  Each group except exp
is also installed as its own executable (``fml normalize ...`` is
``immlab fml normalize ...``).  File arguments accept ``-`` for stdin.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict
from pathlib import Path

from . import experiments as ex
from .decomp import DecompParams, decompose
from .formula import (
    alternation_depth,
    check_syntactic_multilinear,
    format_netlist,
    format_sexp,
    normalize_to_alternating,
    parse_sexp,
    product_depth,
    stats,
)
from .generators import GeneratorSpec, gen_r_simple, gen_t_product
from .imm import build_dc_circuit, build_dc_formula, imm_polynomial, size_table, size_table_csv
from .poly import DEFAULT_PRIME, format_poly, parse_poly, parse_var, var_name, x_variables
from .rank import rank_report
from .restriction import RestrictionRho, apply_to_polynomial, sample_restriction, trial_generator


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def _ints(text: str) -> list[int]:
    return [int(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _vars(text: str) -> list[int]:
    """Comma separated variables; ``y3`` is accepted for ``y[3]``."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        m = re.fullmatch(r"([yz])(\d+)", tok)
        out.append(parse_var(f"{m.group(1)}[{m.group(2)}]" if m else tok))
    return out


# ---------------------------------------------------------------------------
# fml


def cmd_fml_normalize(a) -> int:
    f = parse_sexp(_read(a.input))
    _write(a.out, format_sexp(normalize_to_alternating(f, a.delta)))
    return 0


def cmd_fml_check_ml(a) -> int:
    f = parse_sexp(_read(a.input))
    chk = check_syntactic_multilinear(f)
    out = {"syntactic_multilinear": chk.ok}
    if not chk.ok:
        out.update(gate=chk.gate_id, var=var_name(chk.var))
    _write(None, json.dumps(out))
    return 0 if chk.ok else 1


def cmd_fml_stats(a) -> int:
    s = stats(parse_sexp(_read(a.input)))
    _write(None, json.dumps(asdict(s), indent=2))
    return 0


# ---------------------------------------------------------------------------
# imm


def cmd_imm_poly(a) -> int:
    _write(a.out, format_poly(imm_polynomial(a.d, a.prime)))
    return 0


def cmd_imm_build(a) -> int:
    if a.circuit:
        _write(a.out, format_netlist(build_dc_circuit(a.d, a.delta)))
    else:
        _write(a.out, format_sexp(build_dc_formula(a.d, a.delta)))
    return 0


def cmd_imm_sizes(a) -> int:
    _write(a.out, size_table_csv(size_table(_ints(a.d_list), _ints(a.delta_list))))
    return 0


# ---------------------------------------------------------------------------
# decomp


def cmd_decomp_run(a) -> int:
    f = parse_sexp(_read(a.input))
    delta = alternation_depth(f)
    if delta is None or (a.delta is not None and delta != a.delta):
        delta = a.delta if a.delta is not None else max(1, product_depth(f))
        f = normalize_to_alternating(f, delta)
    params = DecompParams.make(a.t, r=a.r, support_threshold=a.threshold, p_bound=a.p_bound)
    ambient = x_variables(a.d) if a.d else None
    dec = decompose(f, params, ambient=ambient, p=a.prime, verify=True)
    summary = {
        "source_size": dec.source_size,
        "products": len(dec.products),
        "simples": len(dec.simples),
        "cases": dec.cases,
        "params": asdict(params),
        "verified": all(t.verified for t in dec.terms),
    }
    if a.emit_terms:
        Path(a.emit_terms).write_text(json.dumps([t.to_json() for t in dec.terms], indent=2) + "\n")
    _write(None, json.dumps(summary, indent=2))
    return 0


# ---------------------------------------------------------------------------
# restrict / rank / gen


def cmd_restrict_sample(a) -> int:
    rho = sample_restriction(a.d, trial_generator(a.seed))
    if a.json:
        _write(a.out, rho.dumps())
    else:
        lines = [
            f"d = {rho.d}",
            "pi = " + " ".join(map(str, rho.pi)),
            "a  = " + " ".join(map(str, rho.a)),
            "A  = {" + ", ".join(map(str, rho.A)) + "}",
            "Y  = " + " ".join(var_name(v) for v in rho.Y),
            "Z  = " + " ".join(var_name(v) for v in rho.Z),
            f"m  = {rho.m}",
        ]
        _write(a.out, "\n".join(lines))
    return 0


def cmd_restrict_apply(a) -> int:
    rho = RestrictionRho.from_json(json.loads(_read(a.rho)))
    f = parse_poly(_read(a.poly), a.prime)
    _write(a.out, format_poly(apply_to_polynomial(f, rho)))
    return 0


def cmd_rank(a) -> int:
    g = parse_poly(_read(a.poly), a.prime)
    rep = rank_report(g, _vars(a.y), _vars(a.z), cross_check=a.cross_check)
    _write(a.out, json.dumps(rep.to_json()))
    return 0


def cmd_gen(a) -> int:
    kind = "t_product" if a.kind == "tproduct" else "r_simple"
    spec = GeneratorSpec(kind, a.d, t=a.t, r=a.r, density=a.density, seed=a.seed, threshold=a.threshold, p=a.prime)
    term = gen_t_product(spec) if kind == "t_product" else gen_r_simple(spec)
    _write(a.out, json.dumps(term.to_json(), indent=2))
    return 0


# ---------------------------------------------------------------------------
# exp


def cmd_exp(a) -> int:
    name = a.name
    need = lambda *keys: [k for k in keys if getattr(a, k) is None]  # noqa: E731
    if name == "full_rank":
        miss = need("d")
        rep = None if miss else ex.exp_full_rank(a.d, a.trials, a.seed, a.prime, workers=a.workers)
    elif name == "product_rank":
        miss = need("d", "t")
        rep = None if miss else ex.exp_product_rank(a.d, a.t, a.trials, a.seed, a.density, a.prime, a.workers)
    elif name == "simple_rank":
        miss = need("d", "r")
        rep = None if miss else ex.exp_simple_rank(a.d, a.r, a.trials, a.seed, a.threshold, a.density, a.prime,
                                                   a.workers)
    elif name == "color_paths":
        miss = need("d")
        rep = None if miss else ex.exp_color_paths(a.d, a.coloring, a.trials, a.seed, t=a.t, workers=a.workers)
    elif name == "color_tail_trend":
        miss = []
        rep = ex.exp_color_tail_trend(_ints(a.t_list), a.trials, a.seed, a.coloring if a.coloring != "layer" else "half-layer")
    elif name == "decompose_roundtrip":
        miss = need("d", "delta", "t")
        rep = None if miss else ex.exp_decompose_roundtrip(a.d, a.delta, a.t, a.seed, a.rho_trials, r=a.r,
                                                           prime=a.prime)
    elif name == "size_table":
        miss = []
        rep = ex.exp_size_table(_ints(a.d_list), _ints(a.delta_list))
    else:  # argparse restricts the choices
        raise AssertionError(name)
    if miss:
        print(f"exp {name}: missing " + ", ".join("--" + m.replace("_", "-") for m in miss), file=sys.stderr)
        return 2
    _write(a.out, rep.dumps())
    if a.csv:
        text = rep.aggregates["csv"] if name == "size_table" else rep.to_csv()
        Path(a.csv).write_text(text)
    for v in rep.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.name}", file=sys.stderr)
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="immlab", description="IMM_d formulas, restrictions and rank experiments")
    groups = ap.add_subparsers(dest="group", required=True)

    def prime(p):
        p.add_argument("--prime", type=int, default=DEFAULT_PRIME)

    fml = groups.add_parser("fml", help="formula passes on s-expressions").add_subparsers(dest="cmd", required=True)
    p = fml.add_parser("normalize", help="rewrite into (ΣΠ)^Δ Σ shape")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_fml_normalize)
    p = fml.add_parser("check-ml", help="syntactic multilinearity (exit 1 if violated)")
    p.add_argument("input", nargs="?", default="-")
    p.set_defaults(fn=cmd_fml_check_ml)
    p = fml.add_parser("stats", help="size, leaves, depths as JSON")
    p.add_argument("input", nargs="?", default="-")
    p.set_defaults(fn=cmd_fml_stats)

    imm = groups.add_parser("imm", help="the IMM_d polynomial and its formulas").add_subparsers(dest="cmd", required=True)
    p = imm.add_parser("poly", help="IMM_d in the polynomial text format")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out")
    prime(p)
    p.set_defaults(fn=cmd_imm_poly)
    p = imm.add_parser("build", help="divide-and-conquer formula (s-expression) or circuit (netlist)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--circuit", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_imm_build)
    p = imm.add_parser("sizes", help="CSV of predicted formula and circuit sizes")
    p.add_argument("--d-list", required=True)
    p.add_argument("--delta-list", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_imm_sizes)

    dec = groups.add_parser("decomp", help="product/simple decomposition").add_subparsers(dest="cmd", required=True)
    p = dec.add_parser("run")
    p.add_argument("--input", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--threshold", type=int)
    p.add_argument("--p-bound", type=int)
    p.add_argument("--delta", type=int)
    p.add_argument("--d", type=int, help="use all of X_d as the ambient set")
    p.add_argument("--emit-terms")
    prime(p)
    p.set_defaults(fn=cmd_decomp_run)

    rs = groups.add_parser("restrict", help="random restrictions").add_subparsers(dest="cmd", required=True)
    p = rs.add_parser("sample")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_restrict_sample)
    p = rs.add_parser("apply")
    p.add_argument("--rho", required=True)
    p.add_argument("--poly", required=True)
    p.add_argument("--out")
    prime(p)
    p.set_defaults(fn=cmd_restrict_apply)

    p = groups.add_parser("rank", help="rank of the partial derivative matrix as JSON")
    p.add_argument("--poly", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--cross-check", type=int, help="second prime to confirm the rank")
    p.add_argument("--out")
    prime(p)
    p.set_defaults(fn=cmd_rank)

    gen = groups.add_parser("gen", help="random terms in the JSON term schema").add_subparsers(dest="kind", required=True)
    for kind in ("tproduct", "rsimple"):
        p = gen.add_parser(kind)
        p.add_argument("--d", type=int, required=True)
        p.add_argument("--t", type=int, default=1)
        p.add_argument("--r", type=int, default=1)
        p.add_argument("--threshold", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--density", type=float)
        p.add_argument("--out")
        prime(p)
        p.set_defaults(fn=cmd_gen)

    p = groups.add_parser("exp", help="run an experiment and write a JSON report")
    p.add_argument("name", choices=sorted(ex.EXPERIMENTS))
    p.add_argument("--d", type=int)
    p.add_argument("--delta", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float)
    p.add_argument("--threshold", type=int)
    p.add_argument("--coloring", default="layer", choices=["layer", "fresh-edge", "half-layer", "random"])
    p.add_argument("--t-list", default="8,16,32")
    p.add_argument("--d-list", default="4,8,16,32,64")
    p.add_argument("--delta-list", default="1,2,3,4,5,6")
    p.add_argument("--rho-trials", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--csv")
    prime(p)
    p.set_defaults(fn=cmd_exp)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"immlab: error: {exc}", file=sys.stderr)
        return 2


def _group(name: str):
    def entry(argv: list[str] | None = None) -> int:
        return main([name] + list(sys.argv[1:] if argv is None else argv))

    entry.__name__ = f"main_{name}"
    return entry


main_fml = _group("fml")
main_imm = _group("imm")
main_decomp = _group("decomp")
main_restrict = _group("restrict")
main_rank = _group("rank")
main_gen = _group("gen")


if __name__ == "__main__":
    sys.exit(main())
