from __future__ import annotations

import json

import numpy as np
import pytest

from immlab.formula import evaluate_to_polynomial
from immlab.imm import build_dc_formula, imm_polynomial
from immlab.poly import Poly, mask_of, x_variables, xvar, yvar, zvar
from immlab.restriction import (
    Coloring,
    LengthMismatch,
    RestrictionRho,
    apply_to_formula,
    apply_to_polynomial,
    check_restriction_invariants,
    imm_restricted_closed_form,
    path_color_stats,
    restricted_transfer_imm,
    restriction_from,
    sample_restriction,
    touched_layer_stats,
    trial_generator,
)

FIG_PI = (2, 2, 1, 1, 1, 2, 2, 1, 1)
FIG_A = (1, 0, 1, 0, 1, 0, 1, 0, 1)


def _expanded(*factors):
    out = Poly.one()
    for f in factors:
        out = out * f
    return out


def test_golden_instance():
    rho = restriction_from(FIG_PI, FIG_A)
    assert rho.A == (1, 3, 5, 7, 9) and rho.m == 2
    assert rho.Y == (yvar(1), yvar(2), yvar(3)) and rho.Z == (zvar(1), zvar(2))
    assert rho.target(xvar(1, 1, 2)) == yvar(1)
    assert rho.target(xvar(1, 1, 1)) == ("const", 1)
    want = _expanded(
        Poly({0: 1, mask_of([yvar(1), zvar(1)]): 1}),
        Poly({0: 1, mask_of([yvar(2), zvar(2)]): 1}),
        Poly({0: 1, 1 << yvar(3): 1}),
    )
    assert imm_restricted_closed_form(rho) == want
    assert apply_to_polynomial(imm_polynomial(9), rho) == want
    check_restriction_invariants(rho)


def test_all_zero_marks_give_one():
    for d in (1, 4, 9):
        rho = restriction_from([1, 2] * (d // 2) + [2] * (d % 2), [0] * d)
        assert apply_to_polynomial(imm_polynomial(d), rho) == Poly.one()
        assert imm_restricted_closed_form(rho) == Poly.one()


def test_b_vector():
    rho = restriction_from(FIG_PI, FIG_A)
    prev = (1,) + FIG_PI[:-1]
    assert rho.b == tuple(int(p != c) for p, c in zip(prev, FIG_PI))


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        restriction_from([1, 2], [1])


def test_invariant_sweep():
    rng = trial_generator(7)
    for d in range(1, 17):
        for _ in range(625):
            rho = sample_restriction(d, rng)
            check_restriction_invariants(rho)
            assert touched_layer_stats(rho, x_variables(d)) == len(rho.A)
            assert touched_layer_stats(rho, []) == 0


def test_a_fair_per_coordinate():
    rng = trial_generator(11)
    d, n = 8, 10_000
    a = np.array([sample_restriction(d, rng).a for _ in range(n)])
    sigma = np.sqrt(0.25 / n)
    assert np.all(np.abs(a.mean(axis=0) - 0.5) <= 3 * sigma)


def test_closed_form_matches_substitution():
    for k in range(1000):
        rng = trial_generator(3, k)
        d = 1 + k % 14
        rho = sample_restriction(d, rng)
        cf = imm_restricted_closed_form(rho)
        assert restricted_transfer_imm(rho) == cf
        if d <= 10:
            assert apply_to_polynomial(imm_polynomial(d), rho) == cf


def test_apply_is_a_homomorphism(rng):
    xs = x_variables(4)
    left, right = xs[:8], xs[8:]
    for k in range(100):
        rho = sample_restriction(4, trial_generator(5, k))
        f = Poly({mask_of([v for v in left if rng.random() < 0.5]): int(rng.integers(1, 100)) for _ in range(4)})
        g = Poly({mask_of([v for v in right if rng.random() < 0.5]): int(rng.integers(1, 100)) for _ in range(4)})
        assert apply_to_polynomial(f + g, rho) == apply_to_polynomial(f, rho) + apply_to_polynomial(g, rho)
        assert apply_to_polynomial(f * g, rho) == apply_to_polynomial(f, rho) * apply_to_polynomial(g, rho)
    assert apply_to_polynomial(Poly.const(5), rho) == Poly.const(5)


def test_formula_commuting_square():
    f = build_dc_formula(8, 2)
    g = imm_polynomial(8)
    for k in range(100):
        rho = sample_restriction(8, trial_generator(9, k))
        assert evaluate_to_polynomial(apply_to_formula(f, rho)) == apply_to_polynomial(g, rho)


def test_json_round_trip():
    rho = sample_restriction(6, trial_generator(1))
    again = RestrictionRho.from_json(json.loads(rho.dumps()))
    assert again == rho
    assert sample_restriction(6, trial_generator(1)).dumps() == rho.dumps()


def test_single_color_and_parity_rule():
    d = 10
    chi = Coloring(d, {v: 0 for v in x_variables(d)})
    for k in range(200):
        rho = sample_restriction(d, trial_generator(2, k))
        st = path_color_stats(rho, chi)
        assert st.colors_on_path == {0} and st.ell in (0, 1)
        assert st.odd(0) == (len(rho.A) % 2 == 1)
        if st.odd(0):
            assert 0 in st.imbalanced
