"""QLM energy errors per iteration and the fitted order, from the analytic and from detuned guesses.

    python3 scripts/convergence_study.py --lam 0.2 --detune 1.0 1.1 1.3
"""

import argparse
import sys

from qlmriccati import yukawa
from qlmriccati.qlm_engine import QLMConfig, convergence_order, default_grid, solve, yukawa_guess
from qlmriccati.report import usable_errors
from qlmriccati.zeroth_iteration import make_params, solve_eta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=0.2)
    ap.add_argument("--detune", type=float, nargs="+", default=[1.0, 1.1, 1.3],
                    help="factors applied to the self-consistent eta of the guess")
    ap.add_argument("--tol", type=float, default=1e-12)
    args = ap.parse_args(argv)

    spec = yukawa(args.lam)
    p0 = solve_eta(spec)
    grid = default_grid(p0.eta, mu=spec.mu)
    for factor in args.detune:
        p = make_params(min(p0.eta * factor, spec.mu), spec.mu, spec.m)
        recs = solve(spec, yukawa_guess(p, grid), p.E0, QLMConfig(tol=args.tol, max_iter=30))
        errs = usable_errors(recs)
        fit = convergence_order(errs) if errs.size >= 2 else (float("nan"), float("nan"))
        print(f"eta x {factor}: E_final = {recs[-1].E:.14f} after {recs[-1].n} steps; "
              f"errors = {', '.join(f'{e:.2e}' for e in errs)}; p = {fit[0]:.2f}, C = {fit[1]:.3g}")


if __name__ == "__main__":
    sys.exit(main())
