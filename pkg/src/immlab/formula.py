"""Arithmetic formula / circuit IR.

Gates are immutable nodes with a stable integer id.  A :class:`Formula` is a
root whose gate graph is a tree (every gate object reached once); a
:class:`Circuit` may share gates.  Analyses return plain dicts keyed by gate
id.

S-expression format: ``(+ e1 e2 ...)``, ``(* e1 e2 ...)``, variables as in
the polynomial text format, and integer constants.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from .poly import (
    DEFAULT_PRIME,
    MultilinearityViolation,
    Poly,
    mask_of,
    mask_vars,
    parse_var,
    poly_add,
    poly_mul,
    var_name,
)

INPUT, CONST, SUM, PROD = "input", "const", "sum", "prod"

_ids = itertools.count(1)


class NotSyntacticMultilinear(ValueError):
    def __init__(self, gate_id: int, var: int):
        self.gate_id = gate_id
        self.var = var
        super().__init__(f"product gate {gate_id} has two children containing {var_name(var)}")


class DepthExceeded(ValueError):
    pass


class FormulaParseError(ValueError):
    pass


class Gate:
    __slots__ = ("id", "kind", "children", "var", "value")

    def __init__(self, kind: str, children: tuple[Gate, ...] = (), var: int | None = None, value: int | None = None):
        if kind in (SUM, PROD) and not children:
            raise ValueError(f"{kind} gate needs at least one child")
        self.id = next(_ids)
        self.kind = kind
        self.children = children
        self.var = var
        self.value = value

    @property
    def is_leaf(self) -> bool:
        return self.kind in (INPUT, CONST)

    def __repr__(self):
        if self.kind == INPUT:
            return f"<Gate {self.id} {var_name(self.var)}>"
        if self.kind == CONST:
            return f"<Gate {self.id} const {self.value}>"
        return f"<Gate {self.id} {self.kind}/{len(self.children)}>"


def Input(var: int) -> Gate:
    return Gate(INPUT, var=var)


def Const(value: int) -> Gate:
    return Gate(CONST, value=value)


def Sum(*children: Gate) -> Gate:
    return Gate(SUM, tuple(children))


def Prod(*children: Gate) -> Gate:
    return Gate(PROD, tuple(children))


def postorder(root: Gate) -> list[Gate]:
    """Distinct gates reachable from root, children before parents."""
    out, seen = [], set()
    stack: list[tuple[Gate, bool]] = [(root, False)]
    while stack:
        g, done = stack.pop()
        if done:
            out.append(g)
            continue
        if g.id in seen:
            continue
        seen.add(g.id)
        stack.append((g, True))
        for c in reversed(g.children):
            if c.id not in seen:
                stack.append((c, False))
    return out


class Circuit:
    """A gate DAG with a designated output."""

    def __init__(self, root: Gate):
        self.root = root
        self._order: list[Gate] | None = None

    def gates(self) -> list[Gate]:
        if self._order is None:
            self._order = postorder(self.root)
        return self._order

    @property
    def size(self) -> int:
        return len(self.gates())

    def leaf_count(self) -> int:
        return sum(1 for g in self.gates() if g.is_leaf)

    def __repr__(self):
        return f"<{type(self).__name__} size={self.size} root={self.root.id}>"


class Formula(Circuit):
    """A tree-shaped circuit: no gate object has two parents."""

    def __init__(self, root: Gate, check: bool = True):
        super().__init__(root)
        if check:
            self._check_tree()

    def _check_tree(self):
        seen = set()
        stack = [self.root]
        while stack:
            g = stack.pop()
            if g.id in seen:
                raise ValueError(f"gate {g.id} has fan-out > 1; use Circuit")
            seen.add(g.id)
            stack.extend(g.children)


def gate_map(c: Circuit) -> dict[int, Gate]:
    return {g.id: g for g in c.gates()}


def parents(c: Formula) -> dict[int, Gate]:
    out = {}
    for g in c.gates():
        for ch in g.children:
            out[ch.id] = g
    return out


# ---------------------------------------------------------------------------
# analyses


def compute_supp(c: Circuit) -> dict[int, frozenset[int]]:
    """Supp of every gate: variables appearing in its subformula."""
    masks = supp_masks(c)
    return {k: frozenset(mask_vars(m)) for k, m in masks.items()}


def supp_masks(c: Circuit) -> dict[int, int]:
    out: dict[int, int] = {}
    for g in c.gates():
        if g.kind == INPUT:
            out[g.id] = 1 << g.var
        elif g.kind == CONST:
            out[g.id] = 0
        else:
            m = 0
            for ch in g.children:
                m |= out[ch.id]
            out[g.id] = m
    return out


@dataclass(frozen=True)
class MultilinearCheck:
    ok: bool
    gate_id: int | None = None
    var: int | None = None

    def __bool__(self):
        return self.ok


def check_syntactic_multilinear(c: Circuit) -> MultilinearCheck:
    """Every product gate must have pairwise Supp-disjoint children."""
    masks = supp_masks(c)
    for g in c.gates():
        if g.kind != PROD:
            continue
        acc = 0
        for ch in g.children:
            shared = acc & masks[ch.id]
            if shared:
                return MultilinearCheck(False, g.id, (shared & -shared).bit_length() - 1)
            acc |= masks[ch.id]
    return MultilinearCheck(True)


def compute_vars(f: Formula, ambient: Iterable[int]) -> dict[int, frozenset[int]]:
    """Top-down Vars assignment.

    The root receives ``ambient``.  A product root is treated as if wrapped
    in a unary sum, which assigns it the same set.
    """
    return {k: frozenset(mask_vars(m)) for k, m in vars_masks(f, mask_of(ambient)).items()}


def vars_masks(f: Formula, ambient: int) -> dict[int, int]:
    masks = supp_masks(f)
    chk = check_syntactic_multilinear(f)
    if not chk:
        raise NotSyntacticMultilinear(chk.gate_id, chk.var)
    if masks[f.root.id] & ~ambient:
        leak = masks[f.root.id] & ~ambient
        raise ValueError(f"{var_name((leak & -leak).bit_length() - 1)} is outside the ambient set")
    out = {f.root.id: ambient}
    stack = [f.root]
    while stack:
        g = stack.pop()
        s = out[g.id]
        if g.kind == SUM:
            for ch in g.children:
                out[ch.id] = s
        elif g.kind == PROD:
            used = 0
            for ch in g.children[:-1]:
                out[ch.id] = masks[ch.id]
                used |= masks[ch.id]
            out[g.children[-1].id] = s & ~used
        stack.extend(g.children)
    return out


def product_depth(c: Circuit) -> int:
    depth: dict[int, int] = {}
    for g in c.gates():
        below = max((depth[ch.id] for ch in g.children), default=0)
        depth[g.id] = below + (g.kind == PROD)
    return depth[c.root.id]


def subtree_sizes(f: Formula) -> dict[int, int]:
    out = {}
    for g in f.gates():
        out[g.id] = 1 + sum(out[ch.id] for ch in g.children)
    return out


def alternation_depth(f: Circuit) -> int | None:
    """Return D if f has shape (ΣΠ)^D Σ, otherwise None."""
    if f.root.kind != SUM:
        return None
    want = {}
    # number of product gates below each gate along every path, or None if uneven
    for g in f.gates():
        if g.is_leaf:
            want[g.id] = ("leaf", 0)
            continue
        kids = [want[ch.id] for ch in g.children]
        if any(k is None for k in kids):
            want[g.id] = None
            continue
        if g.kind == SUM:
            if all(k[0] == "leaf" for k in kids):
                want[g.id] = ("sum", 0)
            elif all(k[0] == "prod" for k in kids) and len({k[1] for k in kids}) == 1:
                want[g.id] = ("sum", kids[0][1])
            else:
                want[g.id] = None
        else:
            if all(k[0] == "sum" for k in kids) and len({k[1] for k in kids}) == 1:
                want[g.id] = ("prod", kids[0][1] + 1)
            else:
                want[g.id] = None
    top = want[f.root.id]
    return None if top is None else top[1]


def check_alternation(f: Circuit, delta: int) -> bool:
    return alternation_depth(f) == delta


def layer_gates(f: Circuit, layer: int) -> list[Gate]:
    """Gates at distance ``layer`` from the leaves (leaves are layer 0).

    Only meaningful on alternating shapes, where the distance is the same
    along every path.
    """
    height: dict[int, int] = {}
    for g in f.gates():
        height[g.id] = 0 if g.is_leaf else 1 + max(height[ch.id] for ch in g.children)
    return [g for g in f.gates() if height[g.id] == layer]


# ---------------------------------------------------------------------------
# semantics


def evaluate_to_polynomial(c: Circuit, p: int = DEFAULT_PRIME, strict: bool = True) -> Poly:
    """The polynomial computed at the root.

    In strict mode every product is checked for disjoint supports.
    """
    vals: dict[int, Poly] = {}
    for g in c.gates():
        if g.kind == INPUT:
            vals[g.id] = Poly.var(g.var, p)
        elif g.kind == CONST:
            vals[g.id] = Poly.const(g.value, p)
        elif g.kind == SUM:
            acc = vals[g.children[0].id]
            for ch in g.children[1:]:
                acc = poly_add(acc, vals[ch.id])
            vals[g.id] = acc
        else:
            acc = vals[g.children[0].id]
            for ch in g.children[1:]:
                acc = poly_mul(acc, vals[ch.id], strict_multilinear=strict)
            vals[g.id] = acc
    return vals[c.root.id]


def gate_polynomials(f: Circuit, p: int = DEFAULT_PRIME) -> dict[int, Poly]:
    vals: dict[int, Poly] = {}
    for g in f.gates():
        if g.kind == INPUT:
            vals[g.id] = Poly.var(g.var, p)
        elif g.kind == CONST:
            vals[g.id] = Poly.const(g.value, p)
        elif g.kind == SUM:
            acc = Poly.zero(p)
            for ch in g.children:
                acc = poly_add(acc, vals[ch.id])
            vals[g.id] = acc
        else:
            acc = Poly.one(p)
            for ch in g.children:
                acc = poly_mul(acc, vals[ch.id])
            vals[g.id] = acc
    return vals


def evaluate_at(c: Circuit, point: Mapping[int, int], p: int = DEFAULT_PRIME) -> int:
    """Numeric evaluation mod p; shared gates are computed once."""
    vals: dict[int, int] = {}
    for g in c.gates():
        if g.kind == INPUT:
            vals[g.id] = point[g.var] % p
        elif g.kind == CONST:
            vals[g.id] = g.value % p
        elif g.kind == SUM:
            vals[g.id] = sum(vals[ch.id] for ch in g.children) % p
        else:
            acc = 1
            for ch in g.children:
                acc = acc * vals[ch.id] % p
            vals[g.id] = acc
    return vals[c.root.id]


# ---------------------------------------------------------------------------
# transformations


def _merge_same_kind(g: Gate, memo: dict[int, Gate]) -> Gate:
    """Flatten Σ-under-Σ and Π-under-Π (bottom-up, iterative)."""
    for h in postorder(g):
        if h.id in memo:
            continue
        if h.is_leaf:
            memo[h.id] = h
            continue
        kids: list[Gate] = []
        for ch in h.children:
            m = memo[ch.id]
            if m.kind == h.kind:
                kids.extend(m.children)
            else:
                kids.append(m)
        if all(k is o for k, o in zip(kids, h.children)) and len(kids) == len(h.children):
            memo[h.id] = h
        else:
            memo[h.id] = Gate(h.kind, tuple(kids))
    return memo[g.id]


def _copy_leaf(g: Gate) -> Gate:
    return Input(g.var) if g.kind == INPUT else Const(g.value)


def normalize_to_alternating(f: Formula, delta: int) -> Formula:
    """Rewrite f into (ΣΠ)^delta Σ shape computing the same polynomial.

    Adjacent gates of the same kind are merged, every leaf ends up under a
    bottom sum gate, and unary Π/Σ pairs pad shallow paths so that each
    root-to-leaf path has exactly ``delta`` product gates.
    """
    if delta < 0:
        raise DepthExceeded("delta must be non-negative")
    merged = _merge_same_kind(f.root, {})
    # depth is measured after merging, so Π(Π(x, y), z) counts as one product layer
    pd = product_depth(Formula(merged, check=False))
    if pd > delta:
        raise DepthExceeded(f"product depth {pd} exceeds {delta}")

    def pad_leaf(leaf: Gate, k: int) -> Gate:
        # Σ (Π Σ)^k leaf
        g = Sum(_copy_leaf(leaf))
        for _ in range(k):
            g = Sum(Prod(g))
        return g

    def as_sum(g: Gate, k: int) -> Gate:
        if g.is_leaf:
            return pad_leaf(g, k)
        if g.kind == PROD:
            return Sum(as_prod(g, k))
        if k == 0:
            if not all(ch.is_leaf for ch in g.children):
                raise DepthExceeded("product below the last product layer")
            return Sum(*(_copy_leaf(ch) for ch in g.children))
        return Sum(*(as_prod(ch, k) for ch in g.children))

    def as_prod(g: Gate, k: int) -> Gate:
        if k < 1:
            raise DepthExceeded("ran out of product layers")
        if g.is_leaf:
            return Prod(pad_leaf(g, k - 1))
        if g.kind == SUM:
            return Prod(as_sum(g, k - 1))
        return Prod(*(as_sum(ch, k - 1) for ch in g.children))

    return Formula(as_sum(merged, delta), check=False)


def circuit_to_formula(c: Circuit, max_size: int | None = 5_000_000) -> Formula:
    """Tree-ify a circuit by duplicating each shared gate once per use."""
    unfolded: dict[int, int] = {}
    for g in c.gates():
        unfolded[g.id] = 1 + sum(unfolded[ch.id] for ch in g.children)
    if max_size is not None and unfolded[c.root.id] > max_size:
        raise ValueError(f"formula would have {unfolded[c.root.id]} gates (> {max_size})")

    def copy(g: Gate) -> Gate:
        if g.is_leaf:
            return _copy_leaf(g)
        return Gate(g.kind, tuple(copy(ch) for ch in g.children))

    return Formula(copy(c.root), check=False)


def replace_gate(f: Formula, target_id: int, replacement: Gate) -> Formula:
    """Copy the root-to-target path, substituting ``replacement``; other subtrees are reused."""
    par = parents(f)
    gm = gate_map(f)
    if target_id not in gm:
        raise KeyError(f"gate {target_id} not in formula")
    new = replacement
    cur = gm[target_id]
    while cur.id in par:
        parent = par[cur.id]
        kids = tuple(new if ch is cur else ch for ch in parent.children)
        new = Gate(parent.kind, kids)
        cur = parent
    return Formula(new, check=False)


@dataclass(frozen=True)
class ZeroDecomposition:
    A: Poly
    g: Poly
    B: Formula


def zero_gate_decompose(f: Formula, gate_id: int, p: int = DEFAULT_PRIME) -> ZeroDecomposition:
    """f = A·g + B with g the polynomial at ``gate_id`` and B = f with that gate set to 0.

    A is the product of the sibling subtrees at every product-gate ancestor.
    """
    par = parents(f)
    gm = gate_map(f)
    target = gm[gate_id]
    g = evaluate_to_polynomial(Formula(target, check=False), p)
    A = Poly.one(p)
    cur = target
    while cur.id in par:
        parent = par[cur.id]
        if parent.kind == PROD:
            for sib in parent.children:
                if sib is not cur:
                    A = poly_mul(A, evaluate_to_polynomial(Formula(sib, check=False), p))
        cur = parent
    B = replace_gate(f, gate_id, Const(0))
    return ZeroDecomposition(A, g, B)


def prune_gate(f: Formula, target_id: int) -> Formula | None:
    """Delete a gate as if it computed 0, simplifying upward.

    A sum loses the child; a product containing a zero child vanishes.
    Returns None when the whole formula becomes 0.  Alternating shape is
    preserved because only sum fan-ins shrink.
    """
    par = parents(f)
    gm = gate_map(f)
    cur = gm[target_id]
    while True:
        parent = par.get(cur.id)
        if parent is None:
            return None
        if parent.kind == SUM and len(parent.children) > 1:
            kids = tuple(ch for ch in parent.children if ch is not cur)
            new = Gate(SUM, kids)
            break
        cur = parent
    while parent.id in par:
        up = par[parent.id]
        new = Gate(up.kind, tuple(new if ch is parent else ch for ch in up.children))
        parent = up
    return Formula(new, check=False)


def apply_leaf_map(f: Formula, fn: Callable[[Gate], Gate]) -> Formula:
    """Rebuild f with every leaf replaced by ``fn(leaf)``."""
    new: dict[int, Gate] = {}
    for g in f.gates():
        if g.is_leaf:
            new[g.id] = fn(g)
        else:
            new[g.id] = Gate(g.kind, tuple(new[ch.id] for ch in g.children))
    return Formula(new[f.root.id], check=False)


@dataclass(frozen=True)
class FormulaStats:
    size: int
    leaves: int
    product_depth: int
    syntactic_multilinear: bool
    alternation_depth: int | None
    support_size: int


def stats(c: Circuit) -> FormulaStats:
    masks = supp_masks(c)
    return FormulaStats(
        size=c.size,
        leaves=c.leaf_count(),
        product_depth=product_depth(c),
        syntactic_multilinear=bool(check_syntactic_multilinear(c)),
        alternation_depth=alternation_depth(c),
        support_size=masks[c.root.id].bit_count(),
    )


# ---------------------------------------------------------------------------
# random syntactic multilinear formulas


def random_multilinear_formula(
    variables: list[int],
    rng: np.random.Generator,
    max_depth: int = 4,
    max_fanin: int = 3,
    const_prob: float = 0.1,
    p: int = DEFAULT_PRIME,
) -> Formula:
    """Random syntactic multilinear formula over (a subset of) ``variables``.

    Product gates split their variable pool into disjoint parts, so the
    result is syntactically multilinear by construction.
    """

    def leaf(pool):
        if not pool or rng.random() < const_prob:
            return Const(int(rng.integers(0, 7)) - 3)
        return Input(pool[int(rng.integers(len(pool)))])

    def build(pool, depth):
        if depth == 0 or rng.random() < 0.25:
            return leaf(pool)
        k = int(rng.integers(1, max_fanin + 1))
        if rng.random() < 0.5:
            return Sum(*(build(pool, depth - 1) for _ in range(k)))
        labels = rng.integers(0, k, size=len(pool))
        parts = [[v for v, lab in zip(pool, labels) if lab == j] for j in range(k)]
        return Prod(*(build(part, depth - 1) for part in parts))

    return Formula(build(list(variables), max_depth), check=False)


# ---------------------------------------------------------------------------
# S-expressions


_SEXP_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def parse_sexp(text: str) -> Formula:
    tokens = _SEXP_TOKEN.findall(text)
    if not tokens:
        raise FormulaParseError("empty input")
    pos = 0

    def parse() -> Gate:
        nonlocal pos
        if pos >= len(tokens):
            raise FormulaParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens) or tokens[pos] not in ("+", "*"):
                raise FormulaParseError("expected '+' or '*' after '('")
            op = tokens[pos]
            pos += 1
            kids = []
            while pos < len(tokens) and tokens[pos] != ")":
                kids.append(parse())
            if pos >= len(tokens):
                raise FormulaParseError("missing ')'")
            pos += 1
            if not kids:
                raise FormulaParseError(f"empty ({op}) gate")
            return Sum(*kids) if op == "+" else Prod(*kids)
        if tok == ")":
            raise FormulaParseError("unbalanced ')'")
        if re.fullmatch(r"-?\d+", tok):
            return Const(int(tok))
        try:
            return Input(parse_var(tok))
        except ValueError as exc:
            raise FormulaParseError(str(exc)) from None

    root = parse()
    if pos != len(tokens):
        raise FormulaParseError("trailing input after expression")
    return Formula(root)


def format_sexp(c: Circuit) -> str:
    parts: list[str] = []
    stack: list[Gate | str] = [c.root]
    while stack:
        g = stack.pop()
        if isinstance(g, str):
            parts.append(g)
        elif g.kind == INPUT:
            parts.append(var_name(g.var))
        elif g.kind == CONST:
            parts.append(str(g.value))
        else:
            parts.append("(" + ("+" if g.kind == SUM else "*"))
            stack.append(")")
            for ch in reversed(g.children):
                stack.append(ch)
    return " ".join(parts).replace(" )", ")")


def format_netlist(c: Circuit) -> str:
    """One line per non-leaf gate, ``@k = (op child ...)``; children are leaves or earlier ``@j``.

    Shared gates are written once, so circuits keep their size.  The last
    line is the output gate.
    """
    label: dict[int, str] = {}
    lines = []
    for g in c.gates():
        if g.kind == INPUT:
            label[g.id] = var_name(g.var)
        elif g.kind == CONST:
            label[g.id] = str(g.value)
        else:
            name = f"@{len(lines) + 1}"
            op = "+" if g.kind == SUM else "*"
            lines.append(f"{name} = ({op} " + " ".join(label[ch.id] for ch in g.children) + ")")
            label[g.id] = name
    if not lines:
        lines.append(f"@1 = (+ {label[c.root.id]})")
    return "\n".join(lines) + "\n"


def parse_netlist(text: str) -> Circuit:
    named: dict[str, Gate] = {}
    last = None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        m = re.fullmatch(r"(@\d+)\s*=\s*\(([+*])\s+(.*)\)", line)
        if not m:
            raise FormulaParseError(f"line {n}: expected '@k = (op args...)'")
        kids = []
        for tok in m.group(3).split():
            if tok.startswith("@"):
                if tok not in named:
                    raise FormulaParseError(f"line {n}: {tok} used before definition")
                kids.append(named[tok])
            elif re.fullmatch(r"-?\d+", tok):
                kids.append(Const(int(tok)))
            else:
                try:
                    kids.append(Input(parse_var(tok)))
                except ValueError as exc:
                    raise FormulaParseError(f"line {n}: {exc}") from None
        last = named[m.group(1)] = Sum(*kids) if m.group(2) == "+" else Prod(*kids)
    if last is None:
        raise FormulaParseError("empty netlist")
    return Circuit(last)


def iter_leaves(c: Circuit) -> Iterator[Gate]:
    return (g for g in c.gates() if g.is_leaf)


def evaluate_points(c: Circuit, points: np.ndarray, var_order: list[int], p: int = DEFAULT_PRIME) -> np.ndarray:
    """Evaluate at many points at once.

    ``points`` has shape (n_points, len(var_order)); column j holds the value
    of ``var_order[j]``.  Gates are processed height by height with numpy, so
    million-gate formulas evaluate in well under a second per point.
    """
    if p >= 2**31:
        raise ValueError("vectorised evaluation needs p < 2^31")
    order = c.gates()
    pos = {g.id: k for k, g in enumerate(order)}
    col = {v: j for j, v in enumerate(var_order)}
    pts = np.asarray(points, dtype=np.int64) % p
    n = len(order)
    vals = np.zeros((n, pts.shape[0]), dtype=np.int64)
    height = np.zeros(n, dtype=np.int64)
    for k, g in enumerate(order):
        if g.kind == INPUT:
            vals[k] = pts[:, col[g.var]]
        elif g.kind == CONST:
            vals[k] = g.value % p
        else:
            height[k] = 1 + max(height[pos[ch.id]] for ch in g.children)
    for h in range(1, int(height.max(initial=0)) + 1):
        for kind in (SUM, PROD):
            idx = [k for k in np.flatnonzero(height == h) if order[k].kind == kind]
            if not idx:
                continue
            kids = [[pos[ch.id] for ch in order[k].children] for k in idx]
            if kind == SUM:
                flat = np.fromiter(itertools.chain.from_iterable(kids), dtype=np.int64)
                starts = np.cumsum([0] + [len(ks) for ks in kids[:-1]])
                vals[idx] = np.add.reduceat(vals[flat], starts, axis=0) % p
            else:
                width = max(len(ks) for ks in kids)
                acc = np.ones((len(idx), pts.shape[0]), dtype=np.int64)
                for j in range(width):
                    rows = [r for r, ks in enumerate(kids) if len(ks) > j]
                    src = [kids[r][j] for r in rows]
                    acc[rows] = acc[rows] * vals[src] % p
                vals[idx] = acc
    return vals[pos[c.root.id]]
