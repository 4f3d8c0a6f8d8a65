"""Power-difference identity and the constant c_p, with a corrupted-symbol control.

    python3 demos/power_difference_bound.py
"""

import math

from nc_heat.doi import PhiKernel, estimate_cp, identity_residual, random_positive, trial_rng, verify_nonlinearity
from nc_heat.errors import BoundViolated


def main():
    print("  p      c_p     worst ratio (q=1, 2, inf)")
    for p in (1.5, 2.0, 3.0, 4.0):
        c_p = 1.0 if p == 2.0 else estimate_cp(p)
        worst = [verify_nonlinearity(p, q, trials=50, dim=8, seed=0).max_theorem_ratio
                 for q in (1.0, 2.0, math.inf)]
        print(f"{p:4}  {c_p:8.5f}   " + "  ".join(f"{w:.4f}" for w in worst))
    print(f"c_3 - (1 + pi) = {estimate_cp(3.0) - (1 + math.pi):+.2e}")

    rng = trial_rng(0, 0)
    res, scale = identity_residual(random_positive(12, rng), random_positive(12, rng), 2.7)
    print(f"identity residual at dim 12, p=2.7: {res / scale:.2e} (relative)")

    try:
        verify_nonlinearity(3.0, 2.0, trials=5, dim=6, seed=0, kernel=PhiKernel(3.0, diagonal_override=30.0))
    except BoundViolated as exc:
        print(f"corrupted symbol caught: {exc}")


if __name__ == "__main__":
    main()
