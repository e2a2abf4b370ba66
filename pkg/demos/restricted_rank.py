"""Sample restrictions of IMM_d and watch the partial derivative matrix stay full rank.

    python3 demos/restricted_rank.py [d] [trials]
"""

from __future__ import annotations

import sys

from immlab import imm_polynomial
from immlab.poly import format_poly
from immlab.rank import coefficient_matrix, poly_rank
from immlab.restriction import apply_to_polynomial, imm_restricted_closed_form, sample_restriction, trial_generator


def main(d: int = 9, trials: int = 5) -> None:
    f = imm_polynomial(d)
    print(f"IMM_{d} has {len(f)} monomials")
    for k in range(trials):
        rho = sample_restriction(d, trial_generator(0, k))
        g = apply_to_polynomial(f, rho)
        assert g == imm_restricted_closed_form(rho)
        mat = coefficient_matrix(g, rho.Y, rho.Z)
        print(f"pi={rho.pi} marked layers={rho.A}")
        print(f"  restricted: {format_poly(g)}")
        print(f"  matrix {mat.shape[0]}x{mat.shape[1]}, rank {poly_rank(g, rho.Y, rho.Z)} = 2^{rho.m}")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:3]))
