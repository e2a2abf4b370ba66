from __future__ import annotations

import numpy as np
import pytest

from immlab.imm import imm_polynomial
from immlab.poly import (
    DEFAULT_PRIME,
    MissingAssignment,
    MultilinearityViolation,
    Poly,
    coefficient,
    format_poly,
    mask_of,
    parse_poly,
    poly_add,
    poly_eval,
    poly_mul,
    support,
    x_variables,
    xvar,
    yvar,
    zvar,
)

P = DEFAULT_PRIME
y1, y2, z1, z2 = yvar(1), yvar(2), zvar(1), zvar(2)


def one_plus_yz(y, z):
    return Poly({0: 1, mask_of([y, z]): 1})


def test_variable_encoding():
    assert xvar(1, 1, 1) // 3 == 0
    assert xvar(2, 2, 1) // 3 == 4 * 1 + 2 * 1 + 0
    assert x_variables(2) == [3 * k for k in range(8)]


def test_add_cancellation_and_identity():
    x = Poly.var(xvar(1, 1, 1))
    s = poly_add(x + 1, x.scale(-1))
    assert s == Poly.one()
    assert (-x).terms[1 << xvar(1, 1, 1)] == P - 1
    assert poly_add(x, Poly.zero()) == x


def test_add_gives_imm1():
    assert poly_add(Poly.var(xvar(1, 1, 1)), Poly.var(xvar(1, 1, 2))) == imm_polynomial(1)


def test_mul_expansion():
    got = poly_mul(one_plus_yz(y1, z1), one_plus_yz(y2, z2), strict_multilinear=True)
    want = Poly({0: 1, mask_of([y1, z1]): 1, mask_of([y2, z2]): 1, mask_of([y1, z1, y2, z2]): 1})
    assert got == want


def test_strict_mul_rejects_shared_variable():
    x = Poly.var(xvar(1, 1, 1))
    with pytest.raises(MultilinearityViolation):
        poly_mul(x, x + 1, strict_multilinear=True)


def test_coefficient_examples():
    g = one_plus_yz(y1, z1)
    assert coefficient(g, [y1, z1]) == 1
    assert coefficient(g, [y1]) == 0
    assert coefficient(imm_polynomial(2), [xvar(1, 1, 2), xvar(2, 2, 1)]) == 1


def test_eval_examples():
    assert poly_eval(one_plus_yz(y1, z1), {y1: 1, z1: 1}) == 2
    for d in range(1, 17):
        f = imm_polynomial(d)
        assert poly_eval(f, {v: 1 for v in x_variables(d)}) == pow(2, d, P)
    with pytest.raises(MissingAssignment):
        poly_eval(one_plus_yz(y1, z1), {y1: 1})


def test_support_examples():
    assert support(Poly.zero()) == frozenset()
    assert support(one_plus_yz(y1, z1)) == {y1, z1}
    for d in (1, 3, 6):
        assert support(imm_polynomial(d)) == set(x_variables(d)) - {xvar(1, 2, 1), xvar(1, 2, 2)}


def _random_poly(rng, variables, k=6):
    terms = {}
    for _ in range(k):
        sub = [v for v in variables if rng.random() < 0.4]
        terms[mask_of(sub)] = int(rng.integers(0, P))
    return Poly(terms)


def test_ring_laws_on_random_triples(rng):
    # disjoint variable pools keep every product multilinear
    pools = [x_variables(6)[0:8], x_variables(6)[8:16], x_variables(6)[16:24]]
    for _ in range(1000):
        f, g, h = (_random_poly(rng, pool) for pool in pools)
        assert f + g == g + f
        assert (f + g) + h == f + (g + h)
        assert f * g == g * f
        assert (f * g) * h == f * (g * h)
        assert f * (g + h) == f * g + f * h
        assert all(c != 0 for c in (f * g).terms.values())


def test_eval_agrees_with_composition(rng):
    pools = [x_variables(4)[:8], x_variables(4)[8:]]
    for _ in range(50):
        f, g = (_random_poly(rng, pool) for pool in pools)
        for _ in range(2):
            pt = {v: int(rng.integers(0, P)) for v in x_variables(4)}
            assert poly_eval(f * g + f, pt) == (poly_eval(f, pt) * poly_eval(g, pt) + poly_eval(f, pt)) % P


def test_text_round_trip(rng):
    for _ in range(100):
        f = _random_poly(rng, x_variables(3) + [y1, z1, y2])
        assert parse_poly(format_poly(f)) == f
        assert format_poly(parse_poly(format_poly(f))) == format_poly(f)
    assert format_poly(one_plus_yz(y1, z1)) == "1 + 1*y[1]*z[1]"
    assert parse_poly("-1") == Poly.const(P - 1)
    assert format_poly(Poly.zero()) == "0"
