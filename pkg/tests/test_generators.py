from __future__ import annotations

import pytest

from immlab.decomp import verify_term
from immlab.generators import (
    GeneratorSpec,
    ThresholdUnsatisfiable,
    TooManyParts,
    gen_r_simple,
    gen_t_product,
    generate,
    random_multilinear,
)
from immlab.poly import x_variables
from immlab.restriction import trial_generator


def test_seed_determinism():
    spec = GeneratorSpec("t_product", d=4, t=3, seed=12)
    a, b = gen_t_product(spec), gen_t_product(spec)
    assert a.to_json() == b.to_json()
    other = gen_t_product(GeneratorSpec("t_product", d=4, t=3, seed=13))
    assert other.to_json() != a.to_json()


def test_t_equals_x_gives_univariate_factors():
    term = gen_t_product(GeneratorSpec("t_product", d=3, t=12))
    assert term.t == 12
    assert all(s.bit_count() == 1 and f.support_mask() & ~s == 0 for f, s in term.factors)
    with pytest.raises(TooManyParts):
        gen_t_product(GeneratorSpec("t_product", d=3, t=13))


def test_t_one_covers_everything():
    term = gen_t_product(GeneratorSpec("t_product", d=2, t=1))
    assert term.t == 1 and term.factors[0][1].bit_count() == 8


def test_t_products_verify_over_many_seeds():
    for seed in range(1000):
        d = 1 + seed % 5
        t = 1 + seed % min(8, 4 * d)
        term = gen_t_product(GeneratorSpec("t_product", d=d, t=t, seed=seed, density=0.5))
        assert verify_term(term, x_variables(d))


def test_minimal_r_simple():
    term = gen_r_simple(GeneratorSpec("r_simple", d=4, r=1, threshold=4))
    assert term.r_prime == 1 and term.linears[0][1].bit_count() >= 4
    assert term.linears[0][0].degree() == 1
    assert verify_term(term, x_variables(4))


def test_r_simple_threshold():
    for seed in range(200):
        spec = GeneratorSpec("r_simple", d=6, r=1 + seed % 3, threshold=6 + seed % 10, seed=seed)
        term = generate(spec)
        union = 0
        for _, s in term.linears:
            union |= s
        assert union.bit_count() >= spec.support_threshold
        assert verify_term(term, x_variables(6))
    with pytest.raises(ThresholdUnsatisfiable):
        gen_r_simple(GeneratorSpec("r_simple", d=4, r=1))  # default 400 r > 16


def test_sparse_sampling_never_zero():
    rng = trial_generator(0)
    xs = x_variables(10)
    for _ in range(20):
        f = random_multilinear(xs, rng, density=0.01)
        assert not f.is_zero() and f.support_mask() & ~sum(1 << v for v in xs) == 0
