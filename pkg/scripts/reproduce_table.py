"""Binding energies -E0, -E1, -E_D for a screening sweep, with relative errors.

    python3 scripts/reproduce_table.py --lambdas 0.2 0.5 0.8 --out results/table.csv
"""

import argparse
import sys
from pathlib import Path

from qlmriccati import yukawa
from qlmriccati.report import SolveConfig, provenance, table_row, write_csv

COLUMNS = ["lambda", "minus_E0", "minus_E1", "minus_E_D", "rel_err_E0", "rel_err_E1", "status"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.2, 0.5, 0.8])
    ap.add_argument("--tol-energy", type=float, default=1e-11)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args(argv)

    config = SolveConfig(tol_energy=args.tol_energy)
    rows = []
    for lam in args.lambdas:
        row = table_row(yukawa(lam), config)
        E_D = row["E_D"]
        rows.append({
            "lambda": lam, "minus_E0": -row["E0"], "minus_E1": -row["E1"], "minus_E_D": -E_D,
            "rel_err_E0": abs(row["E0"] - E_D) / abs(E_D), "rel_err_E1": abs(row["E1"] - E_D) / abs(E_D),
            "status": row["status"],
        })
        print(f"lambda={lam:<5} -E0={-row['E0']:.8f}  -E1={-row['E1']:.10f}  -E_D={-E_D:.10f}  "
              f"rel(E1)={rows[-1]['rel_err_E1']:.2e}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w") as fh:
            write_csv(fh, COLUMNS, rows, provenance(config, timestamp=False))


if __name__ == "__main__":
    sys.exit(main())
