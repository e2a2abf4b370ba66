"""The IMM_d polynomial and its divide-and-conquer formulas.

IMM_d is the sum of the (1,1) and (1,2) entries of the product of d
symbolic 2x2 matrices; equivalently the sum of edge-label products over
the 2^d paths from the source of the layered graph G_d.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .formula import Circuit, Formula, Gate, Input, Prod, Sum
from .poly import DEFAULT_PRIME, Poly, mask_of, poly_add, poly_mul, xvar

IMM_CAP = 20


class CapExceeded(ValueError):
    pass


class BadDepth(ValueError):
    pass


def imm_polynomial(d: int, p: int = DEFAULT_PRIME, cap: int = IMM_CAP) -> Poly:
    """All 2^d path monomials x^(1)_{1,π1} x^(2)_{π1,π2} ... with coefficient 1."""
    if d < 1:
        raise ValueError("d must be at least 1")
    if d > cap:
        raise CapExceeded(f"IMM_{d} has 2^{d} monomials; cap is {cap}")
    # frontier: end state -> list of partial masks
    frontier = {1: [0]}
    for i in range(1, d + 1):
        nxt = {1: [], 2: []}
        for u, masks in frontier.items():
            for v in (1, 2):
                bit = 1 << xvar(i, u, v)
                nxt[v].extend(m | bit for m in masks)
        frontier = nxt
    return Poly._raw({m: 1 for ms in frontier.values() for m in ms}, p)


def imm_entry_polynomial(lo: int, hi: int, u: int, v: int, p: int = DEFAULT_PRIME) -> Poly:
    """(u,v) entry of M^(lo) ... M^(hi)."""
    frontier = {u: Poly.one(p)}
    for i in range(lo, hi + 1):
        nxt: dict[int, Poly] = {}
        for a, f in frontier.items():
            for b in (1, 2):
                term = poly_mul(f, Poly.var(xvar(i, a, b), p))
                nxt[b] = poly_add(nxt[b], term) if b in nxt else term
        frontier = nxt
    return frontier.get(v, Poly.zero(p))


@dataclass(frozen=True)
class LabeledDAG:
    """Layers V^(0..d) of two vertices each; ``edges`` maps (i, j, k) to the label of v^(i)_j -> v^(i+1)_k."""

    d: int
    edges: dict[tuple[int, int, int], int]

    @property
    def layers(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        return [((i, 1), (i, 2)) for i in range(self.d + 1)]

    def source_paths(self):
        """Yield the label lists of all paths from v^(0)_1 to the last layer."""
        for ends in itertools.product((1, 2), repeat=self.d):
            prev = 1
            labels = []
            for i, k in enumerate(ends):
                labels.append(self.edges[(i, prev, k)])
                prev = k
            yield labels


def imm_graph(d: int) -> LabeledDAG:
    if d < 1:
        raise ValueError("d must be at least 1")
    edges = {(i, j, k): xvar(i + 1, j, k) for i in range(d) for j in (1, 2) for k in (1, 2)}
    return LabeledDAG(d, edges)


def graph_polynomial(g: LabeledDAG, p: int = DEFAULT_PRIME) -> Poly:
    """Sum of path-label products; an independent route to IMM_d."""
    terms: dict[int, int] = {}
    for labels in g.source_paths():
        m = mask_of(labels)
        terms[m] = terms.get(m, 0) + 1
    return Poly(terms, p)


@dataclass(frozen=True)
class BlockScheme:
    d: int
    t: int
    boundaries: tuple[tuple[int, int], ...]  # inclusive (lo, hi), 1-based


def near_equal_blocks(lo: int, hi: int, t: int) -> tuple[tuple[int, int], ...]:
    n = hi - lo + 1
    base, extra = divmod(n, t)
    out = []
    start = lo
    for k in range(t):
        size = base + (1 if k < extra else 0)
        out.append((start, start + size - 1))
        start += size
    return tuple(out)


def self_reduction_blocks(d: int, t: int) -> BlockScheme:
    if not 1 <= t <= d:
        raise ValueError("need 1 <= t <= d")
    return BlockScheme(d, t, near_equal_blocks(1, d, t))


def block_reduction_polynomial(scheme: BlockScheme, p: int = DEFAULT_PRIME) -> Poly:
    """Sum over (u_1..u_t) of P^(1)_{1,u1} P^(2)_{u1,u2} ... P^(t)_{u(t-1),ut}."""
    entries = {
        (k, u, v): imm_entry_polynomial(lo, hi, u, v, p)
        for k, (lo, hi) in enumerate(scheme.boundaries)
        for u in (1, 2)
        for v in (1, 2)
    }
    total = Poly.zero(p)
    for us in itertools.product((1, 2), repeat=scheme.t):
        prev = 1
        term = Poly.one(p)
        for k, u in enumerate(us):
            term = poly_mul(term, entries[(k, prev, u)], strict_multilinear=True)
            prev = u
        total = poly_add(total, term)
    return total


def _ceil_root(n: int, k: int) -> int:
    """Smallest integer r with r**k >= n."""
    r = max(1, int(round(n ** (1.0 / k))))
    while r**k < n:
        r += 1
    while r > 1 and (r - 1) ** k >= n:
        r -= 1
    return r


def split_for_depth(lo: int, hi: int, delta: int) -> tuple[tuple[int, int], ...]:
    """Blocks used at a level with ``delta`` product layers left.

    ceil(L^(1/delta)) near-equal blocks; if no block is long enough to carry
    the remaining delta-1 layers, split off a single matrix instead so the
    product depth still reaches delta.
    """
    n = hi - lo + 1
    t = min(max(2, _ceil_root(n, delta)), n)
    blocks = near_equal_blocks(lo, hi, t)
    if delta > 1 and max(b - a + 1 for a, b in blocks) < delta:
        blocks = ((lo, hi - 1), (hi, hi))
    return blocks


def check_depth(d: int, delta: int) -> None:
    if d < 1:
        raise BadDepth("d must be at least 1")
    if delta < 1 or 2**delta > d:
        raise BadDepth(f"need 1 <= delta <= log2(d); got d={d}, delta={delta}")


class _Builder:
    """Shared recursion for formulas (fresh gates) and circuits (memoised block entries)."""

    def __init__(self, share: bool):
        self.share = share
        self.memo: dict[tuple, Gate] = {}

    def entry(self, lo: int, hi: int, u: int, v: int, delta: int) -> Gate:
        """Gate for the (u,v) entry of M^(lo)..M^(hi) with at most delta product layers."""
        if lo == hi:
            return Input(xvar(lo, u, v))
        key = (lo, hi, u, v, delta)
        if self.share and key in self.memo:
            return self.memo[key]
        g = self._expand(lo, hi, u, v, delta)
        if self.share:
            self.memo[key] = g
        return g

    def _expand(self, lo: int, hi: int, u: int, v: int | None, delta: int) -> Gate:
        if delta == 1:
            blocks = tuple((i, i) for i in range(lo, hi + 1))
        else:
            blocks = split_for_depth(lo, hi, delta)
        t = len(blocks)
        free = t if v is None else t - 1
        prods = []
        for mids in itertools.product((1, 2), repeat=free):
            path = (u,) + mids + (() if v is None else (v,))
            kids = [self.entry(a, b, path[k], path[k + 1], delta - 1) for k, (a, b) in enumerate(blocks)]
            prods.append(Prod(*kids))
        return Sum(*prods)

    def top(self, d: int, delta: int) -> Gate:
        return self._expand(1, d, 1, None, delta)


def build_dc_formula(d: int, delta: int, max_size: int = 3_000_000) -> Formula:
    """Syntactic multilinear (ΣΠ)^delta formula for IMM_d by block self-reduction."""
    check_depth(d, delta)
    size = predicted_sizes(d, delta).formula_size
    if size > max_size:
        raise CapExceeded(f"formula for d={d}, delta={delta} has {size} gates (> {max_size})")
    return Formula(_Builder(share=False).top(d, delta), check=False)


def build_dc_circuit(d: int, delta: int, max_size: int = 3_000_000) -> Circuit:
    """Same construction with every block-entry gate built once and shared."""
    check_depth(d, delta)
    size = predicted_sizes(d, delta).circuit_size
    if size > max_size:
        raise CapExceeded(f"circuit for d={d}, delta={delta} has {size} gates (> {max_size})")
    return Circuit(_Builder(share=True).top(d, delta))


@dataclass(frozen=True)
class SizeRow:
    d: int
    delta: int
    formula_size: int
    circuit_size: int
    leaves: int


@lru_cache(maxsize=None)
def _entry_counts(n: int, delta: int, top: bool) -> tuple[int, int]:
    """(gates, leaves) of the formula for one entry of a length-n block (top: summed row)."""
    if n == 1 and not top:
        return 1, 1
    if delta == 1:
        blocks = [1] * n
    else:
        blocks = [b - a + 1 for a, b in split_for_depth(1, n, delta)]
    t = len(blocks)
    n_prod = 2 ** (t if top else t - 1)
    per_prod_gates, per_prod_leaves = 1, 0
    for b in blocks:
        g, l = _entry_counts(b, delta - 1, False)
        per_prod_gates += g
        per_prod_leaves += l
    return 1 + n_prod * per_prod_gates, n_prod * per_prod_leaves


def _circuit_size(d: int, delta: int) -> int:
    """Gate count of the shared construction, walking distinct block entries only."""
    seen: set[tuple] = set()
    total = 0
    todo = [(1, d, 1, None, delta)]
    while todo:
        lo, hi, u, v, dl = todo.pop()
        blocks = tuple((i, i) for i in range(lo, hi + 1)) if dl == 1 else split_for_depth(lo, hi, dl)
        t = len(blocks)
        n_prod = 2 ** (t if v is None else t - 1)
        singles = sum(1 for a, b in blocks if a == b)
        total += 1 + n_prod + n_prod * singles  # input gates are not shared
        for k, (a, b) in enumerate(blocks):
            if a == b:
                continue
            starts = (u,) if k == 0 else (1, 2)
            ends = (v,) if (k == t - 1 and v is not None) else (1, 2)
            for s in starts:
                for e in ends:
                    key = (a, b, s, e, dl - 1)
                    if key not in seen:
                        seen.add(key)
                        todo.append(key)
    return total


def predicted_sizes(d: int, delta: int) -> SizeRow:
    """Gate and leaf counts of the constructions, computed without building them."""
    check_depth(d, delta)
    gates, leaves = _entry_counts(d, delta, True)
    return SizeRow(d, delta, gates, _circuit_size(d, delta), leaves)


def size_table(d_list, delta_list) -> list[SizeRow]:
    """Rows for every valid (d, delta) pair, in input order."""
    rows = []
    for d in d_list:
        for delta in delta_list:
            if 1 <= delta and 2**delta <= d:
                rows.append(predicted_sizes(d, delta))
    return rows


def size_table_csv(rows: list[SizeRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "delta", "formula_size", "circuit_size", "leaves"])
    for r in rows:
        w.writerow([r.d, r.delta, r.formula_size, r.circuit_size, r.leaves])
    return buf.getvalue()


def fitted_exponent(rows: list[SizeRow]) -> float:
    """Slope of log(leaves) against log(d) by least squares."""
    import numpy as np

    xs = np.log([r.d for r in rows])
    ys = np.log([r.leaves for r in rows])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def max_delta(d: int) -> int:
    return int(math.floor(math.log2(d))) if d >= 2 else 0
