"""Blow-up versus global existence across the exponent p, classical line and matrix model.

    python3 demos/fujita_sweep.py
"""

from nc_heat.algebra import model_config
from nc_heat.classical import classical_sweep
from nc_heat.evolve import MatrixModel, boundary_bracket, classify_cell, fujita_params


def show(records):
    for r in records:
        print(f"  p={r.p:<5} A={r.amplitude:<5} {r.outcome:<17} t_detect={r.t_detect:<10.4g} {r.note}")
    lo, hi = boundary_bracket(records)
    print(f"  boundary bracket at the smallest amplitude: [{lo}, {hi}]")


def main():
    fp = fujita_params(2, 3.0)
    print(f"d=2, p=3: q={fp.q}, beta={fp.beta}, C_beta={fp.C_beta:.6f}, gamma factor={fp.gamma_factor:.6f}")

    print("\nclassical line (critical exponent 3), Gaussian data, horizon 1e4:")
    show(classical_sweep(1, (2.0, 2.5, 3.5, 4.0), (0.01,), 1e4, 40.0, 1024))

    print("\nmatrix model (critical exponent 2), amplitude 1e-2, horizon 50:")
    model = MatrixModel(model_config(N=1600))
    show([classify_cell(model, model.gaussian_data(0.01), p, 50.0, 0.01) for p in (1.5, 3.0)])


if __name__ == "__main__":
    main()
