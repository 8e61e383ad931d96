"""Step-halving study of the Numerov eigenvalue: successive differences and their ratios.

    python3 scripts/numerov_order.py --lam 0.5 --steps 0.04 0.02 0.01 0.005 0.0025
"""

import argparse
import sys

from qlmriccati import yukawa
from qlmriccati.reference_solver import energy_at_step
from qlmriccati.zeroth_iteration import solve_eta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--steps", type=float, nargs="+", default=[0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125])
    args = ap.parse_args(argv)

    spec = yukawa(args.lam)
    E0 = solve_eta(spec).E0
    bracket = (1.2 * E0, 0.8 * E0)
    energies = [energy_at_step(spec, h, bracket, tol=1e-15) for h in args.steps]
    prev_diff = None
    for h, E, E_prev in zip(args.steps[1:], energies[1:], energies):
        diff = abs(E - E_prev)
        ratio = f"{prev_diff / diff:.2f}" if prev_diff else "-"
        print(f"h={h:<9g} E={E:.15f}  |E(h)-E(2h)|={diff:.3e}  ratio={ratio}")
        prev_diff = diff


if __name__ == "__main__":
    sys.exit(main())
