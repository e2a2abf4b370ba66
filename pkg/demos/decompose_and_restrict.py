"""Break a depth-2 formula for IMM_8 into product terms, then restrict each term.

Every term's rank under a random restriction obeys the imbalance bound, and
the ranks add up to at least the full rank 2^m of the restricted IMM_8.

    python3 demos/decompose_and_restrict.py
"""

from __future__ import annotations

from immlab.decomp import DecompParams, decompose
from immlab.experiments import term_restricted_bound
from immlab.formula import normalize_to_alternating
from immlab.imm import build_dc_formula, imm_polynomial
from immlab.poly import DEFAULT_PRIME, x_variables
from immlab.restriction import sample_restriction, trial_generator


def main() -> None:
    f = normalize_to_alternating(build_dc_formula(8, 2), 2)
    dec = decompose(f, DecompParams.make(2, p_bound=6, support_threshold=6), ambient=x_variables(8))
    print(f"formula size {f.size}: {len(dec.products)} product terms, {len(dec.simples)} simple terms, cases {dec.cases}")
    print("terms sum to IMM_8:", dec.polynomial() == imm_polynomial(8))
    for k in range(5):
        rho = sample_restriction(8, trial_generator(1, k))
        ranks = [term_restricted_bound(t, rho, DEFAULT_PRIME) for t in dec.terms]
        print(f"m={rho.m}: term ranks {[r for r, _ in ranks]}, all within bound {all(ok for _, ok in ranks)}, "
              f"sum {sum(r for r, _ in ranks)} >= {2 ** rho.m}")


if __name__ == "__main__":
    main()
