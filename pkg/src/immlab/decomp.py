"""Sum-of-products decomposition of (ΣΠ)^Δ Σ syntactic multilinear formulas.

``decompose`` peels layer-2 product gates off one at a time using
f = A·g + B (B is f with the gate set to zero):

1. a layer-2 gate of fan-in >= t gives a t-product term;
2. otherwise a layer-2 gate with |Vars| >= p_bound gives an r-simple term
   (its children are sums of leaves, hence of degree <= 1);
3. once neither applies, the remaining formula is expanded by the inner
   depth recursion into product terms whose factor counts are asserted.

Layers are counted from the leaves: leaves are layer 0, the bottom sums
layer 1, the bottom products layer 2.  Ascribed variable sets are the
top-down Vars sets; factors whose Vars set is empty (constants) are merged
into a sibling so that every ascribed set is nonempty.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .formula import (
    CONST,
    INPUT,
    PROD,
    SUM,
    Formula,
    Gate,
    alternation_depth,
    gate_polynomials,
    layer_gates,
    evaluate_to_polynomial,
    supp_masks,
    vars_masks,
)
from .poly import DEFAULT_PRIME, Poly, format_poly, mask_of, mask_vars, parse_poly, parse_var, poly_add, poly_mul, var_name


class ShapeError(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


class BadParams(ValueError):
    pass


# ---------------------------------------------------------------------------
# term types


@dataclass
class TProductTerm:
    factors: list[tuple[Poly, int]]  # (polynomial, ascribed variable mask)
    verified: bool = False

    @property
    def t(self) -> int:
        return len(self.factors)

    def polynomial(self, p: int | None = None) -> Poly:
        p = p or self.factors[0][0].p
        out = Poly.one(p)
        for f, _ in self.factors:
            out = poly_mul(out, f)
        return out

    def to_json(self) -> dict:
        return {
            "kind": "t_product",
            "t": self.t,
            "factors": [{"poly": format_poly(f), "vars": [var_name(v) for v in mask_vars(s)]} for f, s in self.factors],
            "verified": self.verified,
        }


@dataclass
class RSimpleTerm:
    linears: list[tuple[Poly, int]]
    tail: tuple[Poly, int]
    r: int
    support_threshold: int | None = None
    verified: bool = False

    def __post_init__(self):
        if self.support_threshold is None:
            self.support_threshold = 400 * self.r

    @property
    def r_prime(self) -> int:
        return len(self.linears)

    @property
    def factors(self) -> list[tuple[Poly, int]]:
        return list(self.linears) + [self.tail]

    def polynomial(self, p: int | None = None) -> Poly:
        p = p or self.tail[0].p
        out = Poly.one(p)
        for f, _ in self.factors:
            out = poly_mul(out, f)
        return out

    def to_json(self) -> dict:
        return {
            "kind": "r_simple",
            "r": self.r,
            "support_threshold": self.support_threshold,
            "factors": [
                {"poly": format_poly(f), "vars": [var_name(v) for v in mask_vars(s)], "role": role}
                for (f, s), role in zip(self.factors, ["linear"] * self.r_prime + ["tail"])
            ],
            "verified": self.verified,
        }


def term_from_json(data: dict, p: int = DEFAULT_PRIME) -> TProductTerm | RSimpleTerm:
    factors = [(parse_poly(fa["poly"], p), mask_of(parse_var(v) for v in fa["vars"])) for fa in data["factors"]]
    if data["kind"] == "t_product":
        return TProductTerm(factors, bool(data.get("verified", False)))
    if data["kind"] == "r_simple":
        return RSimpleTerm(factors[:-1], factors[-1], int(data["r"]), data.get("support_threshold"), bool(data.get("verified", False)))
    raise ValueError(f"unknown term kind {data['kind']!r}")


@dataclass(frozen=True)
class TermCheck:
    ok: bool
    reason: str = ""
    witness: int | None = None

    def __bool__(self):
        return self.ok


def verify_term(term: TProductTerm | RSimpleTerm, ambient: Iterable[int] | int) -> TermCheck:
    """Check the structural definition of a term exactly."""
    amb = ambient if isinstance(ambient, int) else mask_of(ambient)
    factors = term.factors
    if not factors:
        return TermCheck(False, "no factors")
    seen = 0
    for k, (f, s) in enumerate(factors):
        is_tail = isinstance(term, RSimpleTerm) and k == len(factors) - 1
        if s == 0 and amb and not (is_tail and f.is_constant()):
            return TermCheck(False, f"factor {k} has an empty ascribed set")
        if s & seen:
            v = (s & seen & -(s & seen)).bit_length() - 1
            return TermCheck(False, f"factor {k} overlaps an earlier factor", v)
        seen |= s
        leak = f.support_mask() & ~s
        if leak:
            v = (leak & -leak).bit_length() - 1
            return TermCheck(False, f"factor {k} uses {var_name(v)} outside its ascribed set", v)
    if seen != amb:
        diff = seen ^ amb
        v = (diff & -diff).bit_length() - 1
        return TermCheck(False, f"ascribed sets do not partition the ambient set (at {var_name(v)})", v)
    if isinstance(term, RSimpleTerm):
        if term.r_prime > term.r:
            return TermCheck(False, f"{term.r_prime} linear factors exceed r = {term.r}")
        union = 0
        for k, (f, s) in enumerate(term.linears):
            if f.degree() > 1:
                return TermCheck(False, f"linear factor {k} has degree {f.degree()}")
            union |= s
        if union.bit_count() < term.support_threshold:
            return TermCheck(False, f"linear factors cover {union.bit_count()} < {term.support_threshold} variables")
    return TermCheck(True)


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class DecompParams:
    t: int
    r: int
    support_threshold: int
    p_bound: int

    def __post_init__(self):
        if min(self.t, self.r, self.support_threshold, self.p_bound) < 1:
            raise BadParams("all parameters must be positive")
        if self.t > self.r + 1:
            raise BadParams("need t <= r + 1 so that Case-2 terms have at most r linear factors")
        if self.support_threshold > self.p_bound:
            raise BadParams("support_threshold must not exceed p_bound")

    @classmethod
    def make(cls, t: int, r: int | None = None, support_threshold: int | None = None, p_bound: int | None = None) -> DecompParams:
        r = max(r or 1, t - 1)
        p_bound = p_bound if p_bound is not None else 400 * r
        thr = support_threshold if support_threshold is not None else min(400 * r, p_bound)
        return cls(t, r, thr, p_bound)


def default_params(d: int, delta: int) -> DecompParams:
    if delta < 1 or 2**delta > d:
        raise BadParams(f"need 1 <= delta <= log2(d); got d={d}, delta={delta}")
    base = delta * d ** (1.0 / delta)
    # guard the ceiling against float noise on exact powers
    t = max(1, math.ceil(base / 1000 - 1e-9))
    r = max(1, math.ceil(base / 400 - 1e-9))
    return DecompParams(t, r, 400 * r, 400 * r)


@dataclass
class Decomposition:
    products: list[TProductTerm] = field(default_factory=list)
    simples: list[RSimpleTerm] = field(default_factory=list)
    source_size: int = 0
    ambient: int = 0
    cases: dict[str, int] = field(default_factory=lambda: {"case1": 0, "case2": 0, "case3": 0})

    @property
    def terms(self) -> list[TProductTerm | RSimpleTerm]:
        return list(self.products) + list(self.simples)

    def polynomial(self, p: int = DEFAULT_PRIME) -> Poly:
        out = Poly.zero(p)
        for term in self.terms:
            out = poly_add(out, term.polynomial(p))
        return out

    def to_json(self) -> dict:
        return {
            "source_size": self.source_size,
            "ambient": [var_name(v) for v in mask_vars(self.ambient)],
            "cases": dict(self.cases),
            "terms": [t.to_json() for t in self.terms],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


# ---------------------------------------------------------------------------
# mutable working tree


class _Node:
    __slots__ = ("gid", "kind", "children", "parent", "var", "value", "removed", "_supp", "_poly")

    def __init__(self, g: Gate):
        self.gid = g.id
        self.kind = g.kind
        self.var = g.var
        self.value = g.value
        self.children: list[_Node] = []
        self.parent: _Node | None = None
        self.removed = False
        self._supp: int | None = None
        self._poly: Poly | None = None


class _Work:
    def __init__(self, f: Formula, p: int):
        self.p = p
        nodes: dict[int, _Node] = {}
        for g in f.gates():
            n = _Node(g)
            n.children = [nodes[ch.id] for ch in g.children]
            for ch in n.children:
                ch.parent = n
            nodes[g.id] = n
        self.root: _Node | None = nodes[f.root.id]

    def supp(self, n: _Node) -> int:
        if n._supp is None:
            if n.kind == INPUT:
                n._supp = 1 << n.var
            elif n.kind == CONST:
                n._supp = 0
            else:
                m = 0
                for ch in n.children:
                    m |= self.supp(ch)
                n._supp = m
        return n._supp

    def poly(self, n: _Node) -> Poly:
        if n._poly is None:
            if n.kind == INPUT:
                n._poly = Poly.var(n.var, self.p)
            elif n.kind == CONST:
                n._poly = Poly.const(n.value, self.p)
            elif n.kind == SUM:
                acc = Poly.zero(self.p)
                for ch in n.children:
                    acc = poly_add(acc, self.poly(ch))
                n._poly = acc
            else:
                acc = Poly.one(self.p)
                for ch in n.children:
                    acc = poly_mul(acc, self.poly(ch), strict_multilinear=True)
                n._poly = acc
        return n._poly

    def alive(self, n: _Node) -> bool:
        while n is not None:
            if n.removed:
                return False
            if n.parent is None:
                return n is self.root
            n = n.parent
        return False

    def path(self, n: _Node) -> list[_Node]:
        out = [n]
        while n.parent is not None:
            n = n.parent
            out.append(n)
        return out[::-1]

    def vars_of(self, n: _Node, ambient: int) -> int:
        """Top-down Vars along the root path (a product's last child takes the remainder)."""
        path = self.path(n)
        s = ambient
        for parent, child in zip(path, path[1:]):
            if parent.kind == PROD:
                if child is parent.children[-1]:
                    used = 0
                    for sib in parent.children[:-1]:
                        used |= self.supp(sib)
                    s = s & ~used
                else:
                    s = self.supp(child)
        return s

    def child_vars(self, n: _Node, vars_n: int) -> list[int]:
        out = []
        used = 0
        for ch in n.children[:-1]:
            out.append(self.supp(ch))
            used |= self.supp(ch)
        out.append(vars_n & ~used)
        return out

    def cofactor(self, n: _Node) -> Poly:
        """Product of the sibling subtrees at every product ancestor of n."""
        A = Poly.one(self.p)
        cur = n
        while cur.parent is not None:
            par = cur.parent
            if par.kind == PROD:
                for sib in par.children:
                    if sib is not cur:
                        A = poly_mul(A, self.poly(sib))
            cur = par
        return A

    def zero_out(self, n: _Node) -> None:
        """Replace n by 0: drop it from the nearest sum with another child."""
        cur = n
        while True:
            par = cur.parent
            if par is None:
                self.root = None
                return
            if par.kind == SUM and len(par.children) > 1:
                par.children = [ch for ch in par.children if ch is not cur]
                cur.removed = True
                break
            cur = par
        while par is not None:
            par._supp = None
            par._poly = None
            par = par.parent

    def to_formula(self) -> Formula:
        built: dict[int, Gate] = {}
        order, stack = [], [(self.root, False)]
        while stack:
            g, done = stack.pop()
            if done:
                order.append(g)
                continue
            stack.append((g, True))
            for ch in reversed(g.children):
                stack.append((ch, False))
        for g in order:
            if g.kind == INPUT:
                built[id(g)] = Gate(INPUT, var=g.var)
            elif g.kind == CONST:
                built[id(g)] = Gate(CONST, value=g.value)
            else:
                built[id(g)] = Gate(g.kind, tuple(built[id(ch)] for ch in g.children))
        return Formula(built[id(self.root)], check=False)


def _merge_empty(factors: list[tuple[Poly, int]]) -> list[tuple[Poly, int]]:
    """Fold factors with an empty ascribed set into the first factor that has one."""
    keep = [(f, s) for f, s in factors if s]
    if not keep:
        acc = factors[0][0]
        for f, _ in factors[1:]:
            acc = poly_mul(acc, f)
        return [(acc, 0)]
    extra = [f for f, s in factors if not s]
    f0, s0 = keep[0]
    for f in extra:
        f0 = poly_mul(f0, f)
    keep[0] = (f0, s0)
    return keep


def _height_index(f: Formula) -> dict[int, int]:
    h: dict[int, int] = {}
    for g in f.gates():
        h[g.id] = 0 if g.is_leaf else 1 + max(h[ch.id] for ch in g.children)
    return h


def _shape(f: Formula) -> int:
    delta = alternation_depth(f)
    if delta is None or delta < 1:
        raise ShapeError("formula is not of shape (ΣΠ)^Δ Σ with Δ >= 1; normalize it first")
    return delta


def decompose(
    f: Formula,
    params: DecompParams,
    ambient: Iterable[int] | None = None,
    p: int = DEFAULT_PRIME,
    verify: bool = True,
) -> Decomposition:
    """Write poly(f) as a sum of t-product and r-simple terms.

    ``ambient`` is the variable set X the ascribed sets must partition; it
    defaults to the support of f.  With ``verify`` every term is checked with
    :func:`verify_term` and the sum of the terms is compared with poly(f).
    """
    delta = _shape(f)
    masks = supp_masks(f)
    amb = masks[f.root.id] if ambient is None else mask_of(ambient)
    vars_masks(f, amb)  # raises on non-multilinear input or support leaks
    out = Decomposition(source_size=f.size, ambient=amb)
    work = _Work(f, p)
    height = _height_index(f)
    nodes: dict[int, _Node] = {}
    stack = [work.root]
    while stack:
        n = stack.pop()
        nodes[n.gid] = n
        stack.extend(n.children)
    layer2 = sorted((nodes[g.id] for g in f.gates() if height[g.id] == 2), key=lambda n: n.gid)

    # Case 1: fan-in never changes, so all such gates can be taken first
    for phi in layer2:
        if len(phi.children) < params.t or work.root is None or not work.alive(phi):
            continue
        vphi = work.vars_of(phi, amb)
        kids = list(zip((work.poly(ch) for ch in phi.children), work.child_vars(phi, vphi)))
        A = work.cofactor(phi)
        # an empty cofactor set folds A into a child factor
        out.products.append(TProductTerm(_merge_empty(kids + [(A, amb & ~vphi)])))
        out.cases["case1"] += 1
        work.zero_out(phi)

    # Case 2: Vars sets shift as gates disappear, so recompute each round
    while work.root is not None:
        pick = None
        for phi in layer2:
            if work.alive(phi):
                vphi = work.vars_of(phi, amb)
                if vphi.bit_count() >= params.p_bound:
                    pick = (phi, vphi)
                    break
        if pick is None:
            break
        phi, vphi = pick
        linears = _merge_empty(list(zip((work.poly(ch) for ch in phi.children), work.child_vars(phi, vphi))))
        A = work.cofactor(phi)
        out.simples.append(RSimpleTerm(linears, (A, amb & ~vphi), params.r, params.support_threshold))
        out.cases["case2"] += 1
        work.zero_out(phi)

    # Case 3
    if work.root is not None:
        rest = work.to_formula()
        if delta >= 2:
            terms = _inner(rest, amb, params.p_bound, p)
        else:
            # ΣΠΣ with every product narrow and |X| < p_bound: the top products are the terms
            gp = gate_polynomials(rest, p)
            vm = vars_masks(rest, amb)
            terms = [
                TProductTerm(_merge_empty([(gp[ch.id], vm[ch.id]) for ch in psi.children]))
                for psi in rest.root.children
            ]
        out.products.extend(terms)
        out.cases["case3"] += len(terms)

    if verify:
        for term in out.terms:
            chk = verify_term(term, amb)
            if not chk:
                raise AssertionError(f"emitted term fails verification: {chk.reason}")
            term.verified = True
        if out.polynomial(p) != evaluate_to_polynomial(f, p):
            raise AssertionError("terms do not sum to the source polynomial")
        if len(out.products) > f.size or len(out.simples) > f.size:
            raise AssertionError("term count exceeds the formula size")
    return out


# ---------------------------------------------------------------------------
# inner depth recursion


def product_bound(n: float, delta: int, p_bound: float) -> float:
    """t(n, Δ) = (Δ-1)((n/p)^(1/(Δ-1)) - 1)."""
    if n <= 0:
        return -float(delta - 1)
    return (delta - 1) * ((n / p_bound) ** (1.0 / (delta - 1)) - 1)


def inner_depth_recursion(
    f: Formula,
    n: int | None,
    p_bound: int,
    ambient: Iterable[int] | None = None,
    p: int = DEFAULT_PRIME,
) -> list[TProductTerm]:
    """Product terms for a (ΣΠ)^Δ Σ formula (Δ >= 2) whose layer-2 gates have |Vars| <= p_bound.

    ``n`` is |X|; it must match the ambient set (by default the support of f).
    Every emitted term is asserted to have at least t(n, Δ) factors.
    """
    delta = _shape(f)
    if delta < 2:
        raise ShapeError("the inner recursion needs product depth at least 2")
    amb = supp_masks(f)[f.root.id] if ambient is None else mask_of(ambient)
    if n is not None and n != amb.bit_count():
        raise ValueError(f"n = {n} but the ambient set has {amb.bit_count()} variables")
    vm = vars_masks(f, amb)
    for g in layer_gates(f, 2):
        if vm[g.id].bit_count() > p_bound:
            raise PreconditionViolated(f"layer-2 gate {g.id} has |Vars| = {vm[g.id].bit_count()} > {p_bound}")
    return _inner(f, amb, p_bound, p, vm)


def _inner(f: Formula, amb: int, p_bound: int, p: int, vm: dict[int, int] | None = None) -> list[TProductTerm]:
    delta = _shape(f)
    vm = vm if vm is not None else vars_masks(f, amb)
    gp = gate_polynomials(f, p)

    def factor_lists(root: Gate, depth: int) -> list[list[tuple[Poly, int]]]:
        n_here = vm[root.id].bit_count()
        want = product_bound(n_here, depth, p_bound)
        out = []
        for psi in root.children:
            kids = [(gp[ch.id], vm[ch.id]) for ch in psi.children]
            if depth == 2:
                factors = _merge_empty(kids)
                nonempty = sum(1 for _, s in factors if s)
                if nonempty * p_bound < n_here:
                    raise AssertionError(f"top product has {nonempty} factors < n/p = {n_here}/{p_bound}")
                new = [factors]
            else:
                live = [ch for ch in psi.children if vm[ch.id]]
                if not live:
                    new = [_merge_empty(kids)]
                else:
                    # widest child; ties go to the lowest gate id
                    best = max(live, key=lambda ch: (vm[ch.id].bit_count(), -ch.id))
                    others = [(gp[ch.id], vm[ch.id]) for ch in psi.children if ch is not best]
                    new = [_merge_empty(sub + others) for sub in factor_lists(best, depth - 1)]
            for factors in new:
                got = sum(1 for _, s in factors if s)
                if got < want - 1e-9:
                    raise AssertionError(f"term has {got} factors < t(n, Δ) = {want:.3f}")
            out.extend(new)
        return out

    return [TProductTerm(fs) for fs in factor_lists(f.root, delta)]


__all__ = [
    "BadParams",
    "DecompParams",
    "Decomposition",
    "PreconditionViolated",
    "RSimpleTerm",
    "ShapeError",
    "TProductTerm",
    "TermCheck",
    "decompose",
    "default_params",
    "inner_depth_recursion",
    "product_bound",
    "term_from_json",
    "verify_term",
]
