"""Formula and circuit sizes of the divide-and-conquer constructions as depth grows.

    python3 demos/depth_tradeoff.py
"""

from __future__ import annotations

from immlab.formula import evaluate_to_polynomial, normalize_to_alternating
from immlab.imm import build_dc_circuit, build_dc_formula, imm_polynomial, size_table


def main() -> None:
    print(f"{'d':>4} {'delta':>5} {'formula':>26} {'circuit':>26}")
    for row in size_table([8, 16, 32, 64], [1, 2, 3, 4, 5, 6]):
        print(f"{row.d:>4} {row.delta:>5} {row.formula_size:>26} {row.circuit_size:>26}")

    # the small cases are cheap enough to build and check outright
    for delta in (1, 2, 3):
        f = build_dc_formula(8, delta)
        c = build_dc_circuit(8, delta)
        same = evaluate_to_polynomial(f) == imm_polynomial(8) == evaluate_to_polynomial(c)
        n = normalize_to_alternating(f, delta)
        print(f"d=8 delta={delta}: formula {f.size}, circuit {c.size}, normalized {n.size}, computes IMM_8: {same}")


if __name__ == "__main__":
    main()
