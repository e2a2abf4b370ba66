"""Random restrictions X -> Y ∪ Z ∪ {0, 1} along a random path.

A restriction is determined by a path ``pi`` in {1,2}^d (with pi(0) = 1)
and a mark vector ``a`` in {0,1}^d.  Unmarked layers become the identity or
the flip matrix depending on whether the path switches rows; marked layers
send the path edge to a fresh y (odd rank within A) or z (even rank) and put
a single 1 next to it so the path can continue.

Seeding: :func:`trial_generator` derives an independent Philox stream per
trial from ``(seed, trial)`` via numpy's SeedSequence, and
:func:`sample_restriction` draws pi(1..d) first, then a(1..d), one integer
draw of size d each.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .formula import Const, Formula, Input, apply_leaf_map, INPUT
from .poly import (
    DEFAULT_PRIME,
    NS_X,
    Poly,
    mask_of,
    namespace,
    parse_var,
    poly_mul,
    substitute,
    var_name,
    xvar,
    yvar,
    zvar,
)


class LengthMismatch(ValueError):
    pass


def trial_generator(seed: int, trial: int | None = None) -> np.random.Generator:
    """Counter-based generator for ``seed`` (and optionally sub-stream ``trial``)."""
    key = () if trial is None else (trial,)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class RestrictionRho:
    d: int
    pi: tuple[int, ...]
    a: tuple[int, ...]
    A: tuple[int, ...]
    b: tuple[int, ...]
    images: Mapping[int, int] = field(repr=False)  # X var -> Y/Z var
    values: Mapping[int, int] = field(repr=False)  # X var -> 0 or 1
    Y: tuple[int, ...]
    Z: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.Z)

    def path_var(self, i: int) -> int:
        """The layer-i variable on the path, x^(i)_{pi(i-1), pi(i)}."""
        prev = 1 if i == 1 else self.pi[i - 2]
        return xvar(i, prev, self.pi[i - 1])

    def target(self, x: int):
        """ρ(x): a Y/Z variable code, or the int constant 0 / 1 wrapped as ('const', c)."""
        if x in self.images:
            return self.images[x]
        return ("const", self.values[x])

    def to_json(self) -> dict:
        mapping = []
        for i in range(1, self.d + 1):
            for u in (1, 2):
                for v in (1, 2):
                    x = xvar(i, u, v)
                    tgt = var_name(self.images[x]) if x in self.images else self.values[x]
                    mapping.append({"var": var_name(x), "target": tgt})
        return {
            "d": self.d,
            "pi": list(self.pi),
            "a": list(self.a),
            "A": list(self.A),
            "mapping": mapping,
            "Y": [var_name(v) for v in self.Y],
            "Z": [var_name(v) for v in self.Z],
            "m": self.m,
        }

    @classmethod
    def from_json(cls, data: dict) -> RestrictionRho:
        rho = restriction_from(data["pi"], data["a"])
        if "mapping" in data:
            for item in data["mapping"]:
                x = parse_var(item["var"])
                tgt = item["target"]
                mine = var_name(rho.images[x]) if x in rho.images else rho.values[x]
                if mine != tgt:
                    raise ValueError(f"mapping for {item['var']} disagrees with (pi, a)")
        return rho

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def restriction_from(pi: Iterable[int], a: Iterable[int]) -> RestrictionRho:
    """Deterministic body of the sampler, given the path and the marks."""
    pi = tuple(int(x) for x in pi)
    a = tuple(int(x) for x in a)
    d = len(pi)
    if len(a) != d:
        raise LengthMismatch(f"pi has length {d} but a has length {len(a)}")
    if d < 1:
        raise LengthMismatch("empty restriction")
    if any(x not in (1, 2) for x in pi) or any(x not in (0, 1) for x in a):
        raise ValueError("pi must be in {1,2}^d and a in {0,1}^d")
    images: dict[int, int] = {}
    values: dict[int, int] = {}
    A = tuple(i for i in range(1, d + 1) if a[i - 1])
    b = []
    Y, Z = [], []
    rank = 0
    for i in range(1, d + 1):
        prev = 1 if i == 1 else pi[i - 2]
        cur = pi[i - 1]
        b.append(int(prev != cur))
        if not a[i - 1]:
            flip = prev != cur
            for u in (1, 2):
                for v in (1, 2):
                    values[xvar(i, u, v)] = int((u != v) == flip)
            continue
        rank += 1
        for u in (1, 2):
            for v in (1, 2):
                values[xvar(i, u, v)] = 0
        x_path = xvar(i, prev, cur)
        del values[x_path]
        if rank % 2:
            y = yvar((rank + 1) // 2)
            images[x_path] = y
            Y.append(y)
            values[xvar(i, prev, 3 - cur)] = 1
        else:
            z = zvar(rank // 2)
            images[x_path] = z
            Z.append(z)
            values[xvar(i, 3 - prev, cur)] = 1
    return RestrictionRho(d, pi, a, A, tuple(b), images, values, tuple(Y), tuple(Z))


def sample_restriction(d: int, rng: np.random.Generator) -> RestrictionRho:
    if d < 1:
        raise ValueError("d must be at least 1")
    pi = rng.integers(1, 3, size=d)
    a = rng.integers(0, 2, size=d)
    return restriction_from(pi.tolist(), a.tolist())


def check_restriction_invariants(rho: RestrictionRho) -> None:
    """Assert the structural facts every sampled restriction satisfies."""
    k = len(rho.A)
    assert len(rho.Y) == (k + 1) // 2 and len(rho.Z) == k // 2
    assert rho.m == len(rho.Z) and len(rho.Z) <= len(rho.Y) <= len(rho.Z) + 1
    targets = list(rho.images.values())
    assert len(targets) == len(set(targets)), "two X variables share an image"
    path = {rho.path_var(i) for i in range(1, rho.d + 1)}
    assert set(rho.images) <= path, "a non-path variable maps to Y ∪ Z"
    assert set(rho.images) | set(rho.values) == set(3 * k_ for k_ in range(4 * rho.d))
    for i in range(1, rho.d + 1):
        if rho.a[i - 1]:
            continue
        mat = [[rho.values[xvar(i, u, v)] for v in (1, 2)] for u in (1, 2)]
        want = [[0, 1], [1, 0]] if rho.b[i - 1] else [[1, 0], [0, 1]]
        assert mat == want, f"layer {i} is {mat}, expected {want}"


def apply_to_polynomial(f: Poly, rho: RestrictionRho) -> Poly:
    """Substitute ρ into a polynomial over X."""
    bad = [v for v in _support_vars(f) if namespace(v) != NS_X or v not in rho.images and v not in rho.values]
    if bad:
        raise ValueError(f"{var_name(bad[0])} is not an X variable of this restriction")
    return substitute(f, rho.images, rho.values)


def _support_vars(f: Poly):
    m = f.support_mask()
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


def apply_to_formula(f: Formula, rho: RestrictionRho) -> Formula:
    """Replace each input leaf x with the leaf for ρ(x); constants are kept."""

    def leaf(g):
        if g.kind != INPUT:
            return Const(g.value)
        if g.var in rho.images:
            return Input(rho.images[g.var])
        return Const(rho.values[g.var])

    return apply_leaf_map(f, leaf)


def imm_restricted_closed_form(rho: RestrictionRho, p: int = DEFAULT_PRIME) -> Poly:
    """∏_{i<=m} (1 + y_i z_i), times (1 + y_{m+1}) when |A| is odd."""
    m = rho.m
    out = Poly.one(p)
    for i in range(1, m + 1):
        out = poly_mul(out, Poly({0: 1, mask_of([yvar(i), zvar(i)]): 1}, p), strict_multilinear=True)
    if len(rho.A) % 2:
        out = poly_mul(out, Poly({0: 1, 1 << yvar(m + 1): 1}, p), strict_multilinear=True)
    return out


def restricted_transfer_imm(rho: RestrictionRho, p: int = DEFAULT_PRIME) -> Poly:
    """IMM_d|ρ as row (1,0) times the product of the restricted layer matrices, summed.

    Cheap alternative to substituting into the 2^d-term polynomial.
    """
    row = {1: Poly.one(p), 2: Poly.zero(p)}
    for i in range(1, rho.d + 1):
        mat = {}
        for u in (1, 2):
            for v in (1, 2):
                x = xvar(i, u, v)
                mat[u, v] = Poly.var(rho.images[x], p) if x in rho.images else Poly.const(rho.values[x], p)
        row = {v: row[1] * mat[1, v] + row[2] * mat[2, v] for v in (1, 2)}
    return row[1] + row[2]


# ---------------------------------------------------------------------------
# colorings and path statistics


@dataclass(frozen=True)
class Coloring:
    """Color of every X variable for some d; colors are 0..t-1."""

    d: int
    chi: Mapping[int, int]

    def __post_init__(self):
        missing = [v for v in range(0, 12 * self.d, 3) if v not in self.chi]
        if missing:
            raise ValueError(f"coloring misses {var_name(missing[0])}")

    @property
    def t(self) -> int:
        return len(set(self.chi.values()))

    @classmethod
    def from_partition(cls, d: int, parts: Iterable[Iterable[int]]) -> Coloring:
        chi = {}
        for k, part in enumerate(parts):
            for v in part:
                chi[v] = k
        return cls(d, chi)


@dataclass(frozen=True)
class PathColorStats:
    colors_on_path: frozenset[int]
    edges: Mapping[int, tuple[int, ...]]  # color -> layers of its path edges
    y_count: Mapping[int, int]
    z_count: Mapping[int, int]
    imbalanced: frozenset[int]

    @property
    def ell(self) -> int:
        return len(self.imbalanced)

    def odd(self, color: int) -> bool:
        return (self.y_count[color] + self.z_count[color]) % 2 == 1


def path_color_stats(rho: RestrictionRho, chi: Coloring) -> PathColorStats:
    edges: dict[int, list[int]] = {}
    ys: dict[int, int] = {}
    zs: dict[int, int] = {}
    y_set, z_set = set(rho.Y), set(rho.Z)
    for i in range(1, rho.d + 1):
        x = rho.path_var(i)
        c = chi.chi[x]
        edges.setdefault(c, []).append(i)
        ys.setdefault(c, 0)
        zs.setdefault(c, 0)
        img = rho.images.get(x)
        if img in y_set:
            ys[c] += 1
        elif img in z_set:
            zs[c] += 1
    imbalanced = frozenset(c for c in edges if ys[c] != zs[c])
    return PathColorStats(frozenset(edges), {c: tuple(v) for c, v in edges.items()}, ys, zs, imbalanced)


def touched_layer_stats(rho: RestrictionRho, U: Iterable[int]) -> int:
    """|U|_ρ| = number of Y ∪ Z variables hit by images of U."""
    return len({rho.images[x] for x in U if x in rho.images})
