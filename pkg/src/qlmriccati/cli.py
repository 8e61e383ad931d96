"""Command-line interface: ``qlmriccati {table,wavefunction,converge,solve}``.

Settings come from built-in defaults, then an optional key=value config file
(``--config PATH`` or the ``QLMRICCATI_CONFIG`` environment variable), then
command-line flags. Exit codes: 0 success, 2 no bound state, 3 numerical
non-convergence, 4 bad arguments.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from qlmriccati import __version__
from qlmriccati.errors import DomainError, MaxIterExceeded, NoBoundState, NonConvergence, QLMError
from qlmriccati.report import (
    SOLVE_CSV_COLUMNS,
    SolveConfig,
    columns_to_rows,
    converge_rows,
    fitted_order,
    make_spec,
    provenance,
    report_to_json,
    rows_to_json,
    run_qlm,
    solve_report,
    solve_report_rows,
    table_row,
    wavefunction_data,
    write_csv,
)
from qlmriccati.first_iteration import energy_first
from qlmriccati.zeroth_iteration import solve_eta

CONFIG_ENV = "QLMRICCATI_CONFIG"
EXIT_OK, EXIT_NO_BOUND, EXIT_NONCONVERGENCE, EXIT_BAD_ARGS = 0, 2, 3, 4
DEFAULT_LAMBDAS = (0.2, 0.5, 0.8)
TABLE_COLUMNS = ["lambda", "minus_E0", "minus_E1", "minus_E_D", "status"]
CONVERGE_COLUMNS = ["n", "E_n", "abs_error", "delta_E", "residual_norm"]

# config-file keys -> argparse destinations
_CONFIG_KEYS = {
    "potential": ("potential", str),
    "g": ("g", float),
    "lambda": ("lam", float),
    "mass": ("mass", float),
    "tol-energy": ("tol_energy", float),
    "tol-quad": ("tol_quad", float),
    "rmax": ("rmax", float),
    "grid-points": ("grid_points", int),
    "grid": ("grid", str),
    "iterations": ("iterations", str),
    "format": ("format", str),
    "digits": ("digits", int),
    "max-iter": ("max_iter", int),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_ARGS, f"{self.prog}: error: {message}\n")


def read_config(path: str | os.PathLike) -> dict:
    """Parse a key=value file; '#' starts a comment. Keys use the long flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        dest, conv = _CONFIG_KEYS[key]
        try:
            out[dest] = conv(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--potential", choices=["yukawa", "coulomb"], default="yukawa")
    p.add_argument("--g", type=float, default=1.0, help="coupling strength (Hartree Bohr)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.2, help="screening parameter (1/Bohr)")
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--tol-energy", type=float, default=1e-10, help="energy tolerance (Hartree)")
    p.add_argument("--tol-quad", type=float, default=1e-11, help="quadrature tolerance for E1")
    p.add_argument("--rmax", type=float, default=None, help="outer radius (Bohr)")
    p.add_argument("--grid-points", type=int, default=None)
    p.add_argument("--grid", choices=["gauss", "uniform", "log"], default=None)
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--format", choices=["csv", "json", "table"], default="table")
    p.add_argument("--output", default=None, help="write to PATH instead of stdout")
    p.add_argument("--no-provenance", action="store_true", help="omit the provenance/timestamp record")
    p.add_argument("--digits", type=int, default=10, help="significant digits in --format table")
    p.add_argument("--config", default=None, help=f"key=value settings file (else ${CONFIG_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qlmriccati", description="QLM ground states of screened Coulomb potentials.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    t = sub.add_parser("table", help="E0, E1 and E_D for a list of screening parameters")
    t.add_argument("lambdas", nargs="*", type=float, help="screening values (default 0.2 0.5 0.8)")
    w = sub.add_parser("wavefunction", help="chi_D, chi_0, chi_1 and their deviations")
    w.add_argument("--iterations", default="0,1,D", help="comma list from {0,1,D}")
    c = sub.add_parser("converge", help="QLM iteration history and fitted convergence order")
    s = sub.add_parser("solve", help="full report for one potential")
    for p in (t, w, c, s):
        _common(p)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        try:
            cfg = read_config(path)
        except (OSError, UsageError) as exc:
            parser.exit(EXIT_BAD_ARGS, f"qlmriccati: error: {exc}\n")
        # flags given explicitly win: re-parse with the file values as defaults
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _config(args) -> SolveConfig:
    return SolveConfig(tol_energy=args.tol_energy, tol_quad=args.tol_quad, r_max=args.rmax,
                       grid=args.grid, grid_points=args.grid_points, max_iter=args.max_iter)


def _num(x, digits: int) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, float) and math.isnan(x):
        return "-"
    if isinstance(x, int):
        return str(x)
    return f"{x:.{digits}g}"


def format_table(columns, rows, digits: int) -> str:
    cells = [list(columns)] + [[_num(r[c], digits) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(s.rjust(w) for s, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _emit(args, columns, rows, prov, meta=None, title=None):
    if args.format == "csv":
        import io

        buf = io.StringIO()
        write_csv(buf, columns, rows, prov, meta)
        text = buf.getvalue()
    elif args.format == "json":
        text = rows_to_json(columns, rows, prov, meta)
    else:
        head = "# units: r=bohr energy=hartree\n"
        if title:
            head += f"# {title}\n"
        if meta:
            head += "".join(f"# {k} = {_num(v, args.digits)}\n" for k, v in meta.items())
        text = head + format_table(columns, rows, args.digits)
    _write(args, text)


def _write(args, text: str):
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _prov(args, config, grid_meta=None):
    return None if args.no_provenance else provenance(config, grid_meta)


def cmd_table(args) -> int:
    config = _config(args)
    lambdas = args.lambdas or list(DEFAULT_LAMBDAS)
    if args.potential == "coulomb":
        lambdas = [0.0]
    rows = []
    for lam in lambdas:
        spec = make_spec(args.potential, lam, args.g, args.mass)
        row = table_row(spec, config)
        rows.append({"lambda": lam, "minus_E0": -row["E0"], "minus_E1": -row["E1"],
                     "minus_E_D": -row["E_D"], "status": row["status"]})
    _emit(args, TABLE_COLUMNS, rows, _prov(args, config), title="energies in Hartree, sign flipped")
    return EXIT_OK


def _iterations(text: str) -> tuple[str, ...]:
    items = tuple(s.strip().upper() for s in text.split(",") if s.strip())
    if not items or any(s not in ("0", "1", "D") for s in items):
        raise UsageError(f"--iterations must be a comma list from 0,1,D; got {text!r}")
    return items


def cmd_wavefunction(args) -> int:
    config = _config(args)
    spec = make_spec(args.potential, args.lam, args.g, args.mass)
    data = wavefunction_data(spec, config, _iterations(args.iterations))
    columns = list(data.columns)
    meta = {"E0": data.p.E0, "E1": data.first.E1, "E_D": data.ref.E_D}
    _emit(args, columns, columns_to_rows(data.columns), _prov(args, config, data.grid.metadata()), meta)
    return EXIT_OK


def cmd_converge(args) -> int:
    config = _config(args)
    spec = make_spec(args.potential, args.lam, args.g, args.mass)
    p = solve_eta(spec)
    status = EXIT_OK
    try:
        records = run_qlm(spec, config, p)
    except MaxIterExceeded as exc:
        records = exc.history
        status = EXIT_NONCONVERGENCE
        print(f"qlmriccati: {exc}", file=sys.stderr)
    order, const = fitted_order(records)
    E1 = energy_first(p, spec, tol=config.tol_quad).E1
    meta = {"fitted_order_p": order, "fitted_constant_C": const, "E1_closed_form": E1,
            "converged": status == EXIT_OK}
    grid_meta = records[-1].u.grid.metadata()
    _emit(args, CONVERGE_COLUMNS, converge_rows(records), _prov(args, config, grid_meta), meta)
    return status


def cmd_solve(args) -> int:
    config = _config(args)
    spec = make_spec(args.potential, args.lam, args.g, args.mass)
    report = solve_report(spec, config, with_curves=args.format == "json", timestamp=not args.no_provenance)
    if args.format == "json":
        _write(args, report_to_json(report, include_provenance=not args.no_provenance))
        return EXIT_OK
    meta = {"E_qlm": report.E_qlm, "iterations": len(report.qlm_history) - 1}
    prov = None if args.no_provenance else report.provenance
    _emit(args, SOLVE_CSV_COLUMNS, solve_report_rows(report), prov, meta, title=spec.describe())
    return EXIT_OK


COMMANDS = {"table": cmd_table, "wavefunction": cmd_wavefunction, "converge": cmd_converge, "solve": cmd_solve}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NoBoundState as exc:
        print(f"qlmriccati: no bound state: {exc}", file=sys.stderr)
        return EXIT_NO_BOUND
    except NonConvergence as exc:
        print(f"qlmriccati: no convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (UsageError, DomainError) as exc:
        print(f"qlmriccati: error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except QLMError as exc:  # pragma: no cover - remaining library errors
        print(f"qlmriccati: error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
