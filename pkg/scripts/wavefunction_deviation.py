"""Deviation curves log10|1 - chi_n/chi_D| for n = 0, 1 and a summary per screening.

    python3 scripts/wavefunction_deviation.py --lambdas 0.2 0.5 0.8 --outdir results/
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from qlmriccati import yukawa
from qlmriccati.report import SolveConfig, columns_to_rows, wavefunction_data, write_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.2, 0.5, 0.8])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--outdir", type=Path, default=None)
    args = ap.parse_args(argv)

    config = SolveConfig(grid_points=args.points)
    for lam in args.lambdas:
        data = wavefunction_data(yukawa(lam), config)
        d0, d1 = data.columns["dev_0"], data.columns["dev_1"]
        keep = np.isfinite(d1)
        r = data.columns["r"]
        print(f"lambda={lam}: range r <= {r[keep][-1]:.1f} bohr, max dev0 = {np.max(d0[keep]):.2f}, "
              f"max dev1 = {np.max(d1[keep]):.2f} at r = {r[keep][np.argmax(d1[keep])]:.2f}, "
              f"median dev0 - dev1 = {np.median(d0[keep] - d1[keep]):.2f} (band limit {math.log10(5e-4):.2f})")
        if args.outdir:
            args.outdir.mkdir(parents=True, exist_ok=True)
            with (args.outdir / f"wavefunction_lambda{lam}.csv").open("w") as fh:
                write_csv(fh, list(data.columns), columns_to_rows(data.columns))


if __name__ == "__main__":
    sys.exit(main())
