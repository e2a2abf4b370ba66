from __future__ import annotations

import numpy as np
import pytest

from immlab.formula import (
    Const,
    DepthExceeded,
    Formula,
    Circuit,
    Input,
    NotSyntacticMultilinear,
    Prod,
    Sum,
    alternation_depth,
    check_syntactic_multilinear,
    circuit_to_formula,
    compute_supp,
    compute_vars,
    evaluate_at,
    evaluate_to_polynomial,
    format_netlist,
    format_sexp,
    gate_map,
    normalize_to_alternating,
    parse_netlist,
    parse_sexp,
    product_depth,
    random_multilinear_formula,
    subtree_sizes,
    supp_masks,
    zero_gate_decompose,
)
from immlab.imm import build_dc_circuit, build_dc_formula, imm_polynomial
from immlab.poly import Poly, mask_of, poly_mul, x_variables, xvar

a, b, c = xvar(1, 1, 1), xvar(1, 1, 2), xvar(2, 1, 1)


def test_supp_basics():
    k = Const(3)
    f = Formula(Sum(Input(a), k))
    s = compute_supp(f)
    assert s[k.id] == frozenset()
    assert s[f.root.id] == {a}
    f8 = build_dc_formula(8, 3)
    assert compute_supp(f8)[f8.root.id] == set(x_variables(8)) - {xvar(1, 2, 1), xvar(1, 2, 2)}


def test_syntactic_multilinear_checker():
    chk = check_syntactic_multilinear(Formula(Prod(Input(a), Input(a))))
    assert not chk and chk.var == a
    assert check_syntactic_multilinear(build_dc_formula(8, 3))
    assert check_syntactic_multilinear(Formula(Input(a)))


def test_vars_remainder_rule():
    p = Prod(Input(a), Input(b))
    f = Formula(Sum(p))
    v = compute_vars(f, [a, b, c])
    assert v[f.root.id] == {a, b, c}
    assert v[p.children[0].id] == {a}
    assert v[p.children[1].id] == {b, c}
    with pytest.raises(NotSyntacticMultilinear):
        compute_vars(Formula(Sum(Prod(Input(a), Input(a)))), [a])


def test_product_depth_examples():
    assert product_depth(Formula(Input(a))) == 0
    assert product_depth(Formula(Sum(Prod(Input(a), Input(b))))) == 1
    assert product_depth(build_dc_formula(16, 4)) == 4


def test_evaluate():
    assert evaluate_to_polynomial(Formula(Input(a))) == Poly.var(a)
    for d in range(2, 13):
        assert evaluate_to_polynomial(build_dc_formula(d, 1 if d < 4 else 2)) == imm_polynomial(d)


def test_normalize_examples():
    f = Formula(Prod(Prod(Input(a), Input(b)), Input(c)))
    g = normalize_to_alternating(f, 1)
    assert alternation_depth(g) == 1
    assert len(g.root.children) == 1 and len(g.root.children[0].children) == 3
    assert evaluate_to_polynomial(g) == evaluate_to_polynomial(f)
    # idempotent up to relabeling
    assert format_sexp(normalize_to_alternating(g, 1)) == format_sexp(g)
    f8 = build_dc_formula(8, 3)
    n8 = normalize_to_alternating(f8, 3)
    assert alternation_depth(n8) == 3
    assert n8.size <= 16 * f8.size
    with pytest.raises(DepthExceeded):
        normalize_to_alternating(f8, 2)


def test_normalize_random(rng):
    for _ in range(200):
        f = random_multilinear_formula(x_variables(3), rng, max_depth=4)
        d = product_depth(f)
        g = normalize_to_alternating(f, d + int(rng.integers(0, 2)))
        assert alternation_depth(g) is not None
        assert check_syntactic_multilinear(g)
        assert evaluate_to_polynomial(g) == evaluate_to_polynomial(f)
        if f.size > 1:  # a bare leaf still needs its Σ wrapper
            assert g.size <= (alternation_depth(g) + 1) ** 2 * f.size


def test_circuit_to_formula():
    f = build_dc_formula(4, 2)
    assert format_sexp(circuit_to_formula(f)) == format_sexp(f)
    c8 = build_dc_circuit(8, 3)
    assert evaluate_to_polynomial(circuit_to_formula(c8)) == imm_polynomial(8)
    shared = Sum(Input(a), Input(b))
    diamond = Circuit(Sum(Prod(shared, Input(c)), Prod(shared, Input(xvar(2, 2, 2)))))
    t = circuit_to_formula(diamond)
    assert t.size == diamond.size + 3
    assert evaluate_to_polynomial(t) == evaluate_to_polynomial(diamond)


def test_zero_gate_examples():
    f = build_dc_formula(4, 2)
    z = zero_gate_decompose(f, f.root.id)
    assert z.A == Poly.one() and evaluate_to_polynomial(z.B).is_zero()
    h1, h2, h3 = Sum(Input(a), Const(2)), Sum(Input(b)), Sum(Input(c))
    f = Formula(Sum(Prod(h1, h2), h3))
    z = zero_gate_decompose(f, h1.id)
    assert z.A == evaluate_to_polynomial(Formula(h2, check=False))
    assert evaluate_to_polynomial(z.B) == Poly.var(c)


def test_zero_gate_random(rng):
    for _ in range(100):
        f = random_multilinear_formula(x_variables(3), rng, max_depth=4)
        gates = f.gates()
        g = gates[int(rng.integers(0, len(gates)))]
        z = zero_gate_decompose(f, g.id)
        assert poly_mul(z.A, z.g) + evaluate_to_polynomial(z.B) == evaluate_to_polynomial(f)


def test_sizes_match_bruteforce(rng):
    for _ in range(50):
        f = random_multilinear_formula(x_variables(2), rng, max_depth=4)
        assert f.size == len(f.gates())
        assert subtree_sizes(f)[f.root.id] == f.size


def test_sexp_round_trip(rng):
    for _ in range(50):
        f = random_multilinear_formula(x_variables(2), rng)
        g = parse_sexp(format_sexp(f))
        assert format_sexp(g) == format_sexp(f)
        assert evaluate_to_polynomial(g) == evaluate_to_polynomial(f)
    assert format_sexp(parse_sexp("(+ x[1][1][1] (* x[1][1][2] 3))")) == "(+ x[1][1][1] (* x[1][1][2] 3))"


def test_netlist_round_trip():
    c = build_dc_circuit(8, 2)
    c2 = parse_netlist(format_netlist(c))
    assert c2.size == c.size
    assert evaluate_to_polynomial(c2) == imm_polynomial(8)


def test_evaluate_at_matches_polynomial(rng):
    f = build_dc_formula(6, 2)
    g = imm_polynomial(6)
    from immlab.poly import poly_eval

    for _ in range(5):
        pt = {v: int(rng.integers(0, 2**31 - 1)) for v in x_variables(6)}
        assert evaluate_at(f, pt) == poly_eval(g, pt)
