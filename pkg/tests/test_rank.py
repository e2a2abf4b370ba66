from __future__ import annotations

import numpy as np
import pytest

from immlab.poly import DEFAULT_PRIME, Poly, mask_of, yvar, zvar
from immlab.rank import (
    OverlapError,
    SupportLeak,
    coefficient_matrix,
    poly_rank,
    rank,
    rank_by_minors,
    rank_gf2,
    rank_mod_p,
    rank_of_product,
    rank_report,
)
from immlab.restriction import imm_restricted_closed_form, restriction_from, sample_restriction, trial_generator

P = DEFAULT_PRIME
Y = [yvar(i) for i in range(1, 6)]
Z = [zvar(i) for i in range(1, 6)]


def yz(i):
    return Poly({mask_of([yvar(i), zvar(i)]): 1})


def test_matrix_examples():
    assert coefficient_matrix(yz(1), Y, Z).entries.tolist() == [[0, 0], [0, 1]]
    assert poly_rank(yz(1), Y, Z) == 1
    g = yz(1) + 1
    assert coefficient_matrix(g, Y, Z).entries.tolist() == [[1, 0], [0, 1]]
    assert poly_rank(g, Y, Z) == 2
    with pytest.raises(SupportLeak):
        coefficient_matrix(Poly.var(yvar(1)), [], Z)


def test_restricted_imm_is_identity():
    rho = restriction_from((2, 1, 2, 2), (1, 1, 1, 1))
    mat = coefficient_matrix(imm_restricted_closed_form(rho), rho.Y, rho.Z)
    assert np.array_equal(mat.entries, np.eye(4, dtype=np.int64))


def test_rank_trivial_matrices():
    for m in range(6):
        assert rank_mod_p(np.eye(2**m, dtype=np.int64), P) == 2**m
    assert rank_mod_p(np.zeros((4, 7), dtype=np.int64), P) == 0
    assert rank_mod_p(np.zeros((0, 3), dtype=np.int64), P) == 0


def test_rank_matches_minors(rng):
    for p in (P, 7, 2):
        for _ in range(60):
            n, k = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            a = rng.integers(0, p, size=(n, k))
            # low-rank products exercise the degenerate branch
            if rng.random() < 0.5:
                r = int(rng.integers(1, 4))
                a = (rng.integers(0, p, size=(n, r)) @ rng.integers(0, p, size=(r, k))) % p
            assert rank_mod_p(a, p) == rank_by_minors(a, p)


def test_gf2_route():
    a = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    assert rank_gf2(a) == 2 == rank_by_minors(a, 2)


def test_cross_check_agrees():
    rho = sample_restriction(9, trial_generator(4))
    g = imm_restricted_closed_form(rho)
    assert rank(coefficient_matrix(g, rho.Y, rho.Z), cross_check=1_000_000_007) == 2**rho.m


def test_product_examples():
    f1 = (yz(1), [yvar(1)], [zvar(1)])
    f2 = (Poly.var(yvar(2)) + Poly.var(zvar(2)), [yvar(2)], [zvar(2)])
    assert rank_of_product([f1, f2], check=True) == 2
    blocks = [(yz(i) + 1, [yvar(i)], [zvar(i)]) for i in range(1, 5)]
    assert rank_of_product(blocks, check=True) == 16
    with pytest.raises(OverlapError):
        rank_of_product([f1, f1])


def _rand(rng, ys, zs, k=5):
    vs = ys + zs
    return Poly({mask_of([v for v in vs if rng.random() < 0.5]): int(rng.integers(1, P)) for _ in range(k)})


def test_multiplicativity_random(rng):
    for _ in range(200):
        parts = []
        for j in range(int(rng.integers(1, 4))):
            ys, zs = [yvar(2 * j + 1), yvar(2 * j + 2)], [zvar(2 * j + 1)]
            parts.append((_rand(rng, ys, zs), ys, zs))
        rank_of_product(parts, check=True)


def test_subadditivity(rng):
    ys, zs = Y[:3], Z[:3]
    for _ in range(200):
        f, g = _rand(rng, ys, zs), _rand(rng, ys, zs)
        assert poly_rank(f + g, ys, zs) <= poly_rank(f, ys, zs) + poly_rank(g, ys, zs)


def test_active_variable_reduction(rng):
    ys, zs = Y, Z
    for _ in range(50):
        f = _rand(rng, ys[:2], zs[:3])
        full = np.zeros((32, 32), dtype=np.int64)
        for m, c in f.terms.items():
            r = sum(1 << k for k, v in enumerate(ys) if m >> v & 1)
            col = sum(1 << k for k, v in enumerate(zs) if m >> v & 1)
            full[r, col] = c
        assert rank_mod_p(full, P) == poly_rank(f, ys, zs)


def test_report():
    rho = restriction_from((1, 2, 2), (1, 1, 1))
    rep = rank_report(imm_restricted_closed_form(rho), rho.Y, rho.Z)
    assert rep.m == 1 and rep.bound_2m == 2 and rep.full
    assert rep.to_json()["full"] is True
