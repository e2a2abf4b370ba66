"""Seeded random t-product and r-simple polynomials.

Partitions are drawn by shuffling X and cutting it into near-equal runs.
A factor over at most ``DENSE_LIMIT`` variables is built by keeping each
multilinear monomial independently with probability ``density``
(``density=None`` means 1, i.e. fully dense).  Larger factors cannot be
enumerated, so ``max_terms`` random monomials are sampled instead (scaled
by ``density`` when one is given).  Coefficients are uniform in [1, p-1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomp import RSimpleTerm, TProductTerm
from .poly import DEFAULT_PRIME, Poly, mask_of, x_variables

DENSE_LIMIT = 8
ENUM_LIMIT = 16
MAX_TERMS = 256


class TooManyParts(ValueError):
    pass


class ThresholdUnsatisfiable(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str  # "t_product" or "r_simple"
    d: int
    t: int = 1
    r: int = 1
    density: float | None = None
    seed: int = 0
    threshold: int | None = None  # r-simple support threshold, default 400 r
    p: int = DEFAULT_PRIME
    max_terms: int = MAX_TERMS

    def __post_init__(self):
        if self.kind not in ("t_product", "r_simple"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.d < 1 or self.t < 1 or self.r < 1:
            raise ValueError("d, t and r must be positive")
        if self.density is not None and not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")

    @property
    def support_threshold(self) -> int:
        return 400 * self.r if self.threshold is None else self.threshold

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))


def _coeffs(rng: np.random.Generator, k: int, p: int) -> list[int]:
    return [int(c) for c in rng.integers(1, p, size=k)]


def random_multilinear(variables: list[int], rng: np.random.Generator, density: float | None = None,
                       p: int = DEFAULT_PRIME, max_terms: int = MAX_TERMS) -> Poly:
    """Random multilinear polynomial whose monomials use only ``variables`` (never zero)."""
    n = len(variables)
    if n <= ENUM_LIMIT and (density is not None or n <= DENSE_LIMIT):
        q = 1.0 if density is None else density
        keep = np.flatnonzero(rng.random(1 << n) < q)
        if keep.size == 0:
            keep = np.array([int(rng.integers(0, 1 << n))])
        masks = []
        for sub in keep.tolist():
            masks.append(mask_of(v for k, v in enumerate(variables) if sub >> k & 1))
    else:
        k = max_terms if density is None else max(1, round(density * max_terms))
        bits = rng.random((k, n)) < 0.5
        masks = sorted({mask_of(v for v, b in zip(variables, row) if b) for row in bits})
    return Poly(dict(zip(masks, _coeffs(rng, len(masks), p))), p)


def random_linear(variables: list[int], rng: np.random.Generator, p: int = DEFAULT_PRIME) -> Poly:
    """c_0 + Σ c_v v with every c_v nonzero, so the support is all of ``variables``."""
    cs = _coeffs(rng, len(variables) + 1, p)
    terms = {0: cs[0]}
    for v, c in zip(variables, cs[1:]):
        terms[1 << v] = c
    return Poly(terms, p)


def _cut(items: list[int], parts: int) -> list[list[int]]:
    base, extra = divmod(len(items), parts)
    out, start = [], 0
    for k in range(parts):
        size = base + (k < extra)
        out.append(items[start:start + size])
        start += size
    return out


def gen_t_product(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> TProductTerm:
    rng = rng if rng is not None else spec.rng()
    xs = x_variables(spec.d)
    if spec.t > len(xs):
        raise TooManyParts(f"t = {spec.t} exceeds |X| = {len(xs)}")
    order = [xs[i] for i in rng.permutation(len(xs))]
    factors = []
    for part in _cut(order, spec.t):
        part = sorted(part)
        factors.append((random_multilinear(part, rng, spec.density, spec.p, spec.max_terms), mask_of(part)))
    return TProductTerm(factors)


def gen_r_simple(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> RSimpleTerm:
    rng = rng if rng is not None else spec.rng()
    xs = x_variables(spec.d)
    need = max(spec.support_threshold, spec.r)
    if need > len(xs):
        raise ThresholdUnsatisfiable(
            f"{spec.r} linear factors covering {spec.support_threshold} variables need more than |X| = {len(xs)}"
        )
    order = [xs[i] for i in rng.permutation(len(xs))]
    linears = []
    for part in _cut(order[:need], spec.r):
        part = sorted(part)
        linears.append((random_linear(part, rng, spec.p), mask_of(part)))
    rest = sorted(order[need:])
    tail = random_multilinear(rest, rng, spec.density, spec.p, spec.max_terms)
    return RSimpleTerm(linears, (tail, mask_of(rest)), spec.r, spec.support_threshold)


def generate(spec: GeneratorSpec, rng: np.random.Generator | None = None) -> TProductTerm | RSimpleTerm:
    return gen_t_product(spec, rng) if spec.kind == "t_product" else gen_r_simple(spec, rng)
