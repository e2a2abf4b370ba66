from __future__ import annotations

from pathlib import Path

import pytest

from immlab.formula import check_syntactic_multilinear, evaluate_to_polynomial, product_depth
from immlab.imm import (
    BadDepth,
    CapExceeded,
    block_reduction_polynomial,
    build_dc_circuit,
    build_dc_formula,
    graph_polynomial,
    imm_graph,
    imm_polynomial,
    predicted_sizes,
    self_reduction_blocks,
    size_table,
    size_table_csv,
)
from immlab.poly import Poly, mask_of, xvar

GOLDEN = Path(__file__).parent / "data" / "size_table.csv"


def test_imm_small_cases():
    assert imm_polynomial(1) == Poly.var(xvar(1, 1, 1)) + Poly.var(xvar(1, 1, 2))
    want = Poly({
        mask_of([xvar(1, 1, 1), xvar(2, 1, 1)]): 1,
        mask_of([xvar(1, 1, 1), xvar(2, 1, 2)]): 1,
        mask_of([xvar(1, 1, 2), xvar(2, 2, 1)]): 1,
        mask_of([xvar(1, 1, 2), xvar(2, 2, 2)]): 1,
    })
    assert imm_polynomial(2) == want
    with pytest.raises(CapExceeded):
        imm_polynomial(21)


def test_imm_structure():
    for d in range(1, 11):
        f = imm_polynomial(d)
        assert len(f) == 2**d and set(f.terms.values()) == {1}
        for m in f.terms:
            layers = sorted((v // 3) // 4 for v in range(m.bit_length()) if m >> v & 1)
            assert layers == list(range(d))


def test_graph():
    g = imm_graph(1)
    assert len(g.layers) == 2 and len(g.edges) == 4
    for d in range(1, 13):
        assert len(imm_graph(d).edges) == 4 * d
        assert graph_polynomial(imm_graph(d)) == imm_polynomial(d)


def test_block_reduction_identity():
    s = self_reduction_blocks(4, 2)
    assert s.boundaries == ((1, 2), (3, 4))
    assert self_reduction_blocks(5, 5).boundaries == tuple((i, i) for i in range(1, 6))
    for d in range(1, 13):
        for t in sorted({1, 2, 3, d} & set(range(1, d + 1))):
            assert block_reduction_polynomial(self_reduction_blocks(d, t)) == imm_polynomial(d)


def test_dc_formula_small():
    f = build_dc_formula(2, 1)
    assert f.size == 13 and f.leaf_count() == 8
    assert evaluate_to_polynomial(build_dc_formula(4, 2)) == imm_polynomial(4)
    with pytest.raises(BadDepth):
        build_dc_formula(4, 3)
    with pytest.raises(BadDepth):
        build_dc_formula(4, 0)


def test_dc_constructions_all_depths():
    for d in range(2, 13):
        want = imm_polynomial(d)
        for delta in range(1, d.bit_length()):
            f = build_dc_formula(d, delta)
            c = build_dc_circuit(d, delta)
            assert product_depth(f) == delta and product_depth(c) == delta
            assert check_syntactic_multilinear(f) and check_syntactic_multilinear(c)
            assert evaluate_to_polynomial(f) == want
            assert evaluate_to_polynomial(c) == want
            assert c.size <= f.size
            row = predicted_sizes(d, delta)
            assert (row.formula_size, row.circuit_size, row.leaves) == (f.size, c.size, f.leaf_count())
    assert build_dc_circuit(2, 1).size == build_dc_formula(2, 1).size


def test_size_table_monotone_and_golden():
    rows = size_table([4, 8, 16, 32, 64], [1, 2, 3, 4, 5, 6])
    for delta in range(1, 7):
        sizes = [r.formula_size for r in rows if r.delta == delta]
        assert sizes == sorted(sizes)
    leaves = {(r.d, r.delta): r.leaves for r in rows}
    assert leaves[16, 4] <= leaves[16, 1]
    assert size_table_csv(rows) == GOLDEN.read_text()
