"""Iterated matrix multiplication: formulas, restrictions and rank experiments."""

from __future__ import annotations

from .decomp import DecompParams, Decomposition, RSimpleTerm, TProductTerm, decompose, default_params, verify_term
from .formula import Formula, Circuit, normalize_to_alternating, parse_sexp, format_sexp
from .imm import build_dc_circuit, build_dc_formula, imm_polynomial, predicted_sizes, size_table
from .poly import DEFAULT_PRIME, Poly, format_poly, parse_poly, xvar, yvar, zvar
from .rank import coefficient_matrix, poly_rank, rank, rank_of_product
from .restriction import RestrictionRho, apply_to_polynomial, imm_restricted_closed_form, restriction_from, sample_restriction

__version__ = "0.1.0"
