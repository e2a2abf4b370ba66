"""Sparse multilinear polynomials over a prime field.

Variables are plain integers.  A variable code packs a namespace
(X, Y or Z) and an index as ``3 * index + namespace``; for X the index is
``4(i-1) + 2(u-1) + (v-1)`` for the matrix entry ``x[i][u][v]``.  A
monomial is the bitmask with bit ``code`` set for each of its variables,
which makes multilinearity checks and disjoint products single integer
operations.

Text format (round-trips on canonical forms)::

    poly  := term ( '+' term )*
    term  := coeff ( '*' var )* | var ( '*' var )*
    coeff := ['-'] digits
    var   := 'x[' i '][' u '][' v ']' | 'y[' j ']' | 'z[' j ']'

The canonical printer always writes the coefficient, e.g. ``1 + 1*y[1]*z[1]``.
The zero polynomial prints as ``0``.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, Mapping

DEFAULT_PRIME = 2**31 - 1
ALT_PRIME = 1_000_000_007

NS_X, NS_Y, NS_Z = 0, 1, 2
_NS_NAMES = "xyz"


class MultilinearityViolation(ValueError):
    """A product would repeat a variable."""

    def __init__(self, var: int, message: str | None = None):
        self.var = var
        super().__init__(message or f"variable {var_name(var)} occurs in both factors")


class MissingAssignment(KeyError):
    pass


class PolyParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# variables


def xvar(i: int, u: int, v: int) -> int:
    """Code of x^{(i)}_{u,v}; i >= 1 and u, v in {1, 2}."""
    if i < 1 or u not in (1, 2) or v not in (1, 2):
        raise ValueError(f"bad X variable ({i}, {u}, {v})")
    return 3 * (4 * (i - 1) + 2 * (u - 1) + (v - 1)) + NS_X


def yvar(j: int) -> int:
    if j < 1:
        raise ValueError("Y indices start at 1")
    return 3 * j + NS_Y


def zvar(j: int) -> int:
    if j < 1:
        raise ValueError("Z indices start at 1")
    return 3 * j + NS_Z


def namespace(v: int) -> int:
    return v % 3


def var_index(v: int) -> int:
    return v // 3


def x_coords(v: int) -> tuple[int, int, int]:
    """Inverse of :func:`xvar`: returns (i, u, v)."""
    if v % 3 != NS_X:
        raise ValueError(f"{var_name(v)} is not an X variable")
    k = v // 3
    return k // 4 + 1, (k // 2) % 2 + 1, k % 2 + 1


def var_key(v: int) -> tuple[int, int]:
    """Total order on variables: namespace first, then index."""
    return v % 3, v // 3


def var_name(v: int) -> str:
    ns = v % 3
    if ns == NS_X:
        i, a, b = x_coords(v)
        return f"x[{i}][{a}][{b}]"
    return f"{_NS_NAMES[ns]}[{v // 3}]"


def x_variables(d: int) -> list[int]:
    """All 4d variables of X in canonical order."""
    return [3 * k for k in range(4 * d)]


def sorted_vars(vs: Iterable[int]) -> list[int]:
    return sorted(vs, key=var_key)


def mask_of(vs: Iterable[int]) -> int:
    m = 0
    for v in vs:
        m |= 1 << v
    return m


def mask_vars(m: int) -> list[int]:
    """Variables of a monomial mask, in canonical order."""
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    if len(out) > 1:
        out.sort(key=var_key)
    return out


# ---------------------------------------------------------------------------
# polynomials


class Poly:
    """Immutable multilinear polynomial, ``terms`` maps monomial mask -> coefficient.

    Coefficients live in [1, p); zero coefficients are never stored, so two
    polynomials are equal iff their term maps (and moduli) are equal.
    """

    __slots__ = ("terms", "p")

    def __init__(self, terms: Mapping[int, int] | None = None, p: int = DEFAULT_PRIME):
        clean = {}
        if terms:
            for m, c in terms.items():
                c %= p
                if c:
                    clean[m] = c
        self.terms = clean
        self.p = p

    @classmethod
    def _raw(cls, terms: dict[int, int], p: int) -> Poly:
        # caller guarantees canonical form
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.p = p
        return obj

    @classmethod
    def const(cls, c: int, p: int = DEFAULT_PRIME) -> Poly:
        return cls({0: c}, p)

    @classmethod
    def var(cls, v: int, p: int = DEFAULT_PRIME) -> Poly:
        return cls._raw({1 << v: 1}, p)

    @classmethod
    def monomial(cls, vs: Iterable[int], c: int = 1, p: int = DEFAULT_PRIME) -> Poly:
        vs = list(vs)
        m = mask_of(vs)
        if m.bit_count() != len(vs):
            raise MultilinearityViolation(_first_repeat(vs), "monomial repeats a variable")
        return cls({m: c}, p)

    @classmethod
    def zero(cls, p: int = DEFAULT_PRIME) -> Poly:
        return cls._raw({}, p)

    @classmethod
    def one(cls, p: int = DEFAULT_PRIME) -> Poly:
        return cls._raw({0: 1}, p)

    # -- basic protocol -----------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, int):
            other = Poly.const(other, self.p)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.p == other.p and self.terms == other.terms

    def __hash__(self):
        return hash((self.p, frozenset(self.terms.items())))

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.terms.items())

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Poly({format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or set(self.terms) == {0}

    def degree(self) -> int:
        return max((m.bit_count() for m in self.terms), default=-1)

    def support_mask(self) -> int:
        s = 0
        for m in self.terms:
            s |= m
        return s

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            if other.p != self.p:
                raise ValueError(f"moduli differ: {self.p} vs {other.p}")
            return other
        if isinstance(other, int):
            return Poly.const(other, self.p)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return poly_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        p = self.p
        return Poly._raw({m: p - c for m, c in self.terms.items()}, p)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return poly_add(self, -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return poly_mul(self, other)

    __rmul__ = __mul__

    def scale(self, c: int) -> Poly:
        c %= self.p
        if not c:
            return Poly.zero(self.p)
        p = self.p
        return Poly._raw({m: (a * c) % p for m, a in self.terms.items()}, p)

    def with_modulus(self, q: int) -> Poly:
        """Reinterpret coefficients in (-p/2, p/2] and reduce mod q."""
        half = self.p // 2
        return Poly({m: (c - self.p if c > half else c) for m, c in self.terms.items()}, q)


def _first_repeat(vs: list[int]) -> int:
    seen = set()
    for v in vs:
        if v in seen:
            return v
        seen.add(v)
    raise AssertionError("no repeat")


def poly_add(f: Poly, g: Poly) -> Poly:
    """Coefficient-wise sum in canonical form."""
    if f.p != g.p:
        raise ValueError(f"moduli differ: {f.p} vs {g.p}")
    p = f.p
    if len(f.terms) < len(g.terms):
        f, g = g, f
    out = dict(f.terms)
    for m, c in g.terms.items():
        s = (out.get(m, 0) + c) % p
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return Poly._raw(out, p)


def poly_mul(f: Poly, g: Poly, strict_multilinear: bool = False) -> Poly:
    """Exact product.

    With ``strict_multilinear`` the supports must be disjoint.  Without it a
    product is still refused as soon as some pair of monomials shares a
    variable, since the result would not be multilinear.
    """
    if f.p != g.p:
        raise ValueError(f"moduli differ: {f.p} vs {g.p}")
    p = f.p
    if strict_multilinear:
        shared = f.support_mask() & g.support_mask()
        if shared:
            raise MultilinearityViolation((shared & -shared).bit_length() - 1)
    if not f.terms or not g.terms:
        return Poly._raw({}, p)
    if len(f.terms) < len(g.terms):
        f, g = g, f
    out: dict[int, int] = {}
    get = out.get
    for m2, c2 in g.terms.items():
        for m1, c1 in f.terms.items():
            if m1 & m2:
                shared = m1 & m2
                raise MultilinearityViolation((shared & -shared).bit_length() - 1)
            m = m1 | m2
            out[m] = (get(m, 0) + c1 * c2) % p
    return Poly._raw({m: c for m, c in out.items() if c}, p)


def poly_prod(factors: Iterable[Poly], p: int = DEFAULT_PRIME, strict_multilinear: bool = True) -> Poly:
    acc = None
    for f in factors:
        acc = f if acc is None else poly_mul(acc, f, strict_multilinear)
    return Poly.one(p) if acc is None else acc


def poly_sum(polys: Iterable[Poly], p: int = DEFAULT_PRIME) -> Poly:
    out: dict[int, int] = {}
    for f in polys:
        p = f.p
        for m, c in f.terms.items():
            out[m] = out.get(m, 0) + c
    return Poly(out, p)


def coefficient(f: Poly, monomial: int | Iterable[int]) -> int:
    """Coefficient of a monomial given as a mask or as an iterable of variables."""
    if not isinstance(monomial, int):
        monomial = mask_of(monomial)
    return f.terms.get(monomial, 0)


def support(f: Poly) -> frozenset[int]:
    return frozenset(mask_vars(f.support_mask()))


def poly_eval(f: Poly, assignment: Mapping[int, int]) -> int:
    """Evaluate at a point; every variable of the support must be assigned."""
    p = f.p
    missing = [v for v in mask_vars(f.support_mask()) if v not in assignment]
    if missing:
        raise MissingAssignment(f"no value for {', '.join(var_name(v) for v in missing)}")
    vals = {v: assignment[v] % p for v in mask_vars(f.support_mask())}
    total = 0
    for m, c in f.terms.items():
        acc = c
        while m and acc:
            low = m & -m
            acc = acc * vals[low.bit_length() - 1] % p
            m ^= low
        total += acc
    return total % p


def substitute(f: Poly, images: Mapping[int, int], values: Mapping[int, int]) -> Poly:
    """Rename variables via ``images`` and fix others to constants via ``values``.

    Variables in neither map are kept.  Raises MultilinearityViolation if the
    renaming collides inside a monomial.
    """
    p = f.p
    action: dict[int, tuple[int, int]] = {}
    for v, w in images.items():
        action[1 << v] = (1, 1 << w)
    for v, c in values.items():
        action[1 << v] = (0, c % p)
    out: dict[int, int] = {}
    for m, c in f.terms.items():
        new = 0
        acc = c
        rest = m
        while rest:
            low = rest & -rest
            rest ^= low
            act = action.get(low)
            if act is None:
                bit = low
            elif act[0]:
                bit = act[1]
            else:
                if act[1] == 0:
                    acc = 0
                    break
                if act[1] != 1:
                    acc = acc * act[1] % p
                continue
            if new & bit:
                raise MultilinearityViolation(bit.bit_length() - 1, "substitution collides inside a monomial")
            new |= bit
        if acc:
            out[new] = (out.get(new, 0) + acc) % p
    return Poly._raw({m: c for m, c in out.items() if c}, p)


# ---------------------------------------------------------------------------
# text format


def _monomial_key(m: int) -> tuple:
    vs = mask_vars(m)
    return (len(vs), [var_key(v) for v in vs])


def format_poly(f: Poly) -> str:
    if not f.terms:
        return "0"
    parts = []
    for m in sorted(f.terms, key=_monomial_key):
        c = f.terms[m]
        parts.append("*".join([str(c)] + [var_name(v) for v in mask_vars(m)]))
    return " + ".join(parts)


_TOKEN = re.compile(
    r"\s*(?:(?P<x>x\[(\d+)\]\[([12])\]\[([12])\])|(?P<yz>([yz])\[(\d+)\])|(?P<num>-?\d+)|(?P<op>[+*]))"
)


def parse_var(text: str) -> int:
    m = _TOKEN.fullmatch(text.strip())
    if not m or not (m.group("x") or m.group("yz")):
        raise PolyParseError(f"not a variable: {text!r}")
    return _var_from_match(m)


def _var_from_match(m: re.Match) -> int:
    if m.group("x"):
        return xvar(int(m.group(2)), int(m.group(3)), int(m.group(4)))
    j = int(m.group(7))
    return yvar(j) if m.group(6) == "y" else zvar(j)


def parse_poly(text: str, p: int = DEFAULT_PRIME) -> Poly:
    """Parse the text format; negative literals are reduced mod p."""
    pos = 0
    text = text.strip()
    terms: list[tuple[int, list[int]]] = []
    coeff, vars_, expect_factor = 1, [], True
    seen_factor = False
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolyParseError(f"unexpected input at {pos}: {text[pos:pos + 20]!r}")
        pos = m.end()
        op = m.group("op")
        if op:
            if expect_factor:
                raise PolyParseError(f"dangling operator {op!r} at {pos}")
            if op == "+":
                terms.append((coeff, vars_))
                coeff, vars_ = 1, []
                seen_factor = False
            expect_factor = True
            continue
        if not expect_factor:
            raise PolyParseError(f"missing operator before position {m.start()}")
        if m.group("num") is not None:
            coeff = coeff * int(m.group("num"))
        else:
            vars_.append(_var_from_match(m))
        seen_factor = True
        expect_factor = False
    if not seen_factor:
        if terms or not text:
            raise PolyParseError("empty term")
    terms.append((coeff, vars_))
    out = Poly.zero(p)
    for c, vs in terms:
        out = out + Poly.monomial(vs, c, p)
    return out
