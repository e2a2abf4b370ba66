"""Partial derivative matrices and exact rank over GF(p).

Rows of M_(Y,Z)(g) are indexed by Y-monomials and columns by Z-monomials,
each written as the integer whose bit k is set when the k-th active
variable (canonical variable order) divides the monomial.  Only variables
that actually occur in g are used; the dropped rows and columns would be
zero, so the rank is unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .poly import ALT_PRIME, Poly, mask_of, mask_vars, sorted_vars, var_name

MAX_ENTRIES = 1 << 22


class SupportLeak(ValueError):
    pass


class PrimeDisagreement(ArithmeticError):
    pass


class OverlapError(ValueError):
    pass


class MatrixTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class CoeffMatrix:
    y_vars: tuple[int, ...]
    z_vars: tuple[int, ...]
    entries: np.ndarray
    p: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class RankReport:
    rank: int
    m: int
    bound_2m: int

    @property
    def full(self) -> bool:
        return self.rank == self.bound_2m

    @property
    def defect(self) -> tuple[int, int]:
        return self.rank, self.bound_2m

    def to_json(self) -> dict:
        return {"rank": self.rank, "m": self.m, "bound_2m": self.bound_2m, "full": self.full}


def _spread(m: int, order: Sequence[int]) -> int:
    out = 0
    for k, v in enumerate(order):
        if m >> v & 1:
            out |= 1 << k
    return out


def coefficient_matrix(g: Poly, Y: Iterable[int], Z: Iterable[int], max_entries: int = MAX_ENTRIES) -> CoeffMatrix:
    ymask, zmask = mask_of(Y), mask_of(Z)
    if ymask & zmask:
        raise OverlapError("Y and Z overlap")
    supp = g.support_mask()
    leak = supp & ~(ymask | zmask)
    if leak:
        raise SupportLeak(f"{var_name((leak & -leak).bit_length() - 1)} is in neither Y nor Z")
    yv = tuple(sorted_vars(mask_vars(supp & ymask)))
    zv = tuple(sorted_vars(mask_vars(supp & zmask)))
    rows, cols = 1 << len(yv), 1 << len(zv)
    if rows * cols > max_entries:
        raise MatrixTooLarge(f"{rows}x{cols} matrix exceeds {max_entries} entries")
    ent = np.zeros((rows, cols), dtype=np.int64)
    for m, c in g.terms.items():
        ent[_spread(m & ymask, yv), _spread(m & zmask, zv)] = c
    return CoeffMatrix(yv, zv, ent, g.p)


def rank_mod_p(a: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over GF(p) by Gaussian elimination."""
    if p == 2:
        return rank_gf2(a)
    if p >= 2**31:
        raise ValueError("p must be below 2^31 so products fit in int64")
    m = np.array(a, dtype=np.int64) % p
    if m.size == 0:
        return 0
    if m.shape[0] > m.shape[1]:
        m = m.T.copy()
    n_rows, n_cols = m.shape
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, c]), -1, p)
        m[r, c:] = m[r, c:] * inv % p
        below = m[r + 1 :, c]
        rows = np.flatnonzero(below)
        if rows.size:
            rows += r + 1
            f = m[rows, c][:, None]
            m[rows, c:] = (m[rows, c:] - f * m[r, c:] % p) % p
        r += 1
    return r


def rank_gf2(a: np.ndarray) -> int:
    """GF(2) rank with rows packed into Python ints."""
    rows = []
    for row in np.asarray(a) % 2:
        v = 0
        for k in np.flatnonzero(row):
            v |= 1 << int(k)
        rows.append(v)
    rank = 0
    pivots: dict[int, int] = {}
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top in pivots:
                v ^= pivots[top]
            else:
                pivots[top] = v
                rank += 1
                break
    return rank


def rank(mat: CoeffMatrix, cross_check: int | None = None) -> int:
    """Exact rank over GF(mat.p).

    With ``cross_check`` set to a second prime, the entries are lifted to
    the symmetric range (-p/2, p/2] and the rank recomputed mod that prime;
    a mismatch raises PrimeDisagreement.
    """
    r = rank_mod_p(mat.entries, mat.p)
    if cross_check is not None:
        half = mat.p // 2
        lifted = np.where(mat.entries > half, mat.entries - mat.p, mat.entries)
        r2 = rank_mod_p(lifted, cross_check)
        if r2 != r:
            raise PrimeDisagreement(f"rank {r} mod {mat.p} but {r2} mod {cross_check}")
    return r


def poly_rank(g: Poly, Y: Iterable[int], Z: Iterable[int], cross_check: int | None = None) -> int:
    return rank(coefficient_matrix(g, Y, Z), cross_check)


def rank_of_product(factors: Sequence[tuple[Poly, Iterable[int], Iterable[int]]], check: bool = False) -> int:
    """∏ rank(M_(Y_i,Z_i)(g_i)) for factors on pairwise disjoint variable sets.

    With ``check`` the rank of the expanded product is computed as well and
    must agree.
    """
    seen = 0
    total = 1
    ys, zs = [], []
    for g, Yi, Zi in factors:
        Yi, Zi = list(Yi), list(Zi)
        vs = mask_of(Yi) | mask_of(Zi)
        if vs & seen:
            raise OverlapError("factor variable sets overlap")
        seen |= vs
        ys += Yi
        zs += Zi
        total *= poly_rank(g, Yi, Zi)
    if check:
        prod = None
        for g, _, _ in factors:
            prod = g if prod is None else prod * g
        direct = poly_rank(prod, ys, zs) if prod is not None else 1
        if direct != total:
            raise AssertionError(f"multiplicativity failed: {direct} != {total}")
    return total


def rank_report(g: Poly, Y: Sequence[int], Z: Sequence[int], cross_check: int | None = None) -> RankReport:
    m = min(len(Y), len(Z))
    return RankReport(poly_rank(g, Y, Z, cross_check), m, 2**m)


def _det_mod(a: list[list[int]], p: int) -> int:
    n = len(a)
    total = 0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1
        for i in range(n):
            prod = prod * a[i][perm[i]] % p
            if not prod:
                break
        total += -prod if inv % 2 else prod
    return total % p


def rank_by_minors(a: np.ndarray, p: int) -> int:
    """Largest k with a nonzero k x k minor (Leibniz expansion); for tiny matrices only."""
    a = (np.asarray(a, dtype=np.int64) % p).tolist()
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    for k in range(min(n_rows, n_cols), 0, -1):
        for rs in itertools.combinations(range(n_rows), k):
            for cs in itertools.combinations(range(n_cols), k):
                if _det_mod([[a[r][c] for c in cs] for r in rs], p):
                    return k
    return 0


__all__ = [
    "ALT_PRIME",
    "CoeffMatrix",
    "MatrixTooLarge",
    "OverlapError",
    "PrimeDisagreement",
    "RankReport",
    "SupportLeak",
    "coefficient_matrix",
    "poly_rank",
    "rank",
    "rank_by_minors",
    "rank_gf2",
    "rank_mod_p",
    "rank_of_product",
    "rank_report",
]
