"""Report assembly and flat-file serialization.

Every float is written as a decimal string with 17 significant digits, which
parses back to the identical double. CSV files start with a units comment
line and an optional provenance comment line; JSON files are one object with
the same information as fields.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from qlmriccati import __version__
from qlmriccati.errors import DomainError, NoBoundState
from qlmriccati.first_iteration import FirstIterResult, energy_first
from qlmriccati.grid import RadialFunction, RadialGrid, build_grid
from qlmriccati.potential import Family, PotentialSpec, coulomb, yukawa
from qlmriccati.qlm_engine import IterationRecord, QLMConfig, convergence_order, default_grid, solve, yukawa_guess
from qlmriccati.reference_solver import EigenResult, sample_chi, solve_ground_state
from qlmriccati.zeroth_iteration import GuessParams, chi0, solve_eta

UNITS_LINE = "# units: r=bohr energy=hartree"
PROVENANCE_PREFIX = "# provenance: "
META_PREFIX = "# meta: "
UNITS = {"r": "bohr", "energy": "hartree"}
# chi_D below this fraction of its maximum is excluded from deviation curves
DEVIATION_FLOOR = 1e-8
# log10 of the smallest reported relative deviation (exact agreement maps here)
DEVIATION_CAP = -16.0


def fmt(x) -> str:
    """Decimal string with 17 significant digits; round-trips any double."""
    return "%.17g" % float(x)


def parse(s: str) -> float:
    return float(s)


@dataclass(frozen=True)
class SolveConfig:
    """Numerical settings shared by the CLI commands."""

    tol_energy: float = 1e-10
    tol_quad: float = 1e-11
    r_max: float | None = None
    grid: str | None = None
    grid_points: int | None = None
    max_iter: int = 20

    def __post_init__(self):
        if not self.tol_energy > 0 or not self.tol_quad > 0:
            raise DomainError("tolerances must be positive")
        if self.r_max is not None and not self.r_max > 0:
            raise DomainError("rmax must be positive")
        if self.grid_points is not None and self.grid_points < 4:
            raise DomainError("grid-points must be at least 4")
        if self.max_iter < 1:
            raise DomainError("iterations must be at least 1")


@dataclass(eq=False)
class SolveReport:
    """Energies, optional QLM history and deviation curves for one potential."""

    spec: PotentialSpec
    E0: float | None = None
    E1: float | None = None
    E_D: float | None = None
    qlm_history: list[IterationRecord] | None = None
    deviation_curves: dict[str, RadialFunction] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def E_qlm(self) -> float | None:
        return self.qlm_history[-1].E if self.qlm_history else None


def provenance(config: SolveConfig, grid_meta: dict | None = None, timestamp: bool = True) -> dict:
    out = {
        "tool": "qlmriccati",
        "version": __version__,
        "python": platform.python_version(),
        "tol_energy": config.tol_energy,
        "tol_quad": config.tol_quad,
    }
    if grid_meta:
        out["grid"] = grid_meta
    if timestamp:
        out["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return out


def make_spec(potential: str, lam: float, g: float = 1.0, m: float = 1.0) -> PotentialSpec:
    if potential == "coulomb":
        return coulomb(g=g, m=m)
    if potential == "yukawa":
        return yukawa(lam, g=g, m=m)
    raise DomainError(f"unsupported potential {potential!r}")


# -- computations ------------------------------------------------------------

def reference(spec: PotentialSpec, config: SolveConfig, hint: float | None = None) -> EigenResult:
    return solve_ground_state(spec, tol=config.tol_energy, energy_hint=hint)


def table_row(spec: PotentialSpec, config: SolveConfig) -> dict:
    """E0, E1, E_D for one potential; failures are recorded, not raised."""
    row = {"lambda": spec.screening, "E0": math.nan, "E1": math.nan, "E_D": math.nan, "status": "ok"}
    notes = []
    p = None
    try:
        p = solve_eta(spec)
        row["E0"] = p.E0
        row["E1"] = energy_first(p, spec, tol=config.tol_quad, r_max=config.r_max).E1
    except NoBoundState:
        notes.append("no zeroth-order bound state")
    try:
        row["E_D"] = reference(spec, config, p.E0 if p else None).E_D
    except NoBoundState:
        notes.append("no bound state")
    if notes:
        row["status"] = "; ".join(notes)
    return row


def deviation(chi_n, chi_D) -> np.ndarray:
    """log10 |1 - chi_n/chi_D| where chi_D exceeds the floor, NaN elsewhere.

    Both inputs must be unit-normalized and positive. Exact agreement is
    capped at ``DEVIATION_CAP``.
    """
    chi_n = np.asarray(chi_n, dtype=float)
    chi_D = np.asarray(chi_D, dtype=float)
    keep = chi_D > DEVIATION_FLOOR * np.max(chi_D)
    out = np.full(chi_D.shape, np.nan)
    rel = np.abs(1.0 - chi_n[keep] / chi_D[keep])
    out[keep] = np.log10(np.maximum(rel, 10.0**DEVIATION_CAP))
    return out


def sampling_grid(config: SolveConfig, r_max: float, default_spacing: str = "uniform") -> RadialGrid:
    spacing = config.grid or default_spacing
    r_max = config.r_max if config.r_max is not None else r_max
    if spacing != "gauss" and config.grid_points is None:
        return build_grid(spacing, r_max, 2000, r_min=r_max / 2000 if spacing == "uniform" else 1e-6)
    return build_grid(spacing, r_max, config.grid_points)


@dataclass(frozen=True, eq=False)
class WavefunctionData:
    grid: RadialGrid
    columns: dict[str, np.ndarray]
    p: GuessParams
    first: FirstIterResult
    ref: EigenResult


def wavefunction_data(spec: PotentialSpec, config: SolveConfig, iterations=("0", "1", "D")) -> WavefunctionData:
    """Unit-normalized chi_D, chi_0, chi_1 and the deviation curves on one grid."""
    p = solve_eta(spec)
    first = energy_first(p, spec, tol=config.tol_quad)
    ref = reference(spec, config, p.E0)
    eta_D = math.sqrt(-2.0 * spec.m * ref.E_D)
    r_top = min(40.0 / eta_D, ref.r_max)
    if config.r_max is not None and config.r_max > ref.r_max:
        raise DomainError(f"rmax exceeds the direct solver range {ref.r_max:.6g}")
    grid = sampling_grid(config, r_top)
    r = grid.points
    cols = {"r": r}
    chi_D = sample_chi(ref, r)
    c0 = chi0(p, r)
    c1 = first.chi1(r)
    if "D" in iterations:
        cols["chi_D"] = chi_D
    if "0" in iterations:
        cols["chi_0"] = c0
    if "1" in iterations:
        cols["chi_1"] = c1
    if "D" in iterations:
        if "0" in iterations:
            cols["dev_0"] = deviation(c0, chi_D)
        if "1" in iterations:
            cols["dev_1"] = deviation(c1, chi_D)
    return WavefunctionData(grid, cols, p, first, ref)


def run_qlm(spec: PotentialSpec, config: SolveConfig, p: GuessParams | None = None) -> list[IterationRecord]:
    """Full QLM run from the analytic guess; raises MaxIterExceeded with history."""
    p = p or solve_eta(spec)
    grid = default_grid(p.eta, spacing=config.grid or "gauss", n_points=config.grid_points,
                        r_max=config.r_max, mu=spec.mu)
    return solve(spec, yukawa_guess(p, grid), p.E0, QLMConfig(max_iter=config.max_iter, tol=config.tol_energy))


def usable_errors(records: list[IterationRecord], floor: float = 1e-13) -> np.ndarray:
    """|E_n - E_final| for the iterates before the last, above a roundoff floor."""
    E_final = records[-1].E
    err = np.array([abs(rec.E - E_final) for rec in records[:-1]])
    scale = max(abs(E_final), 1.0)
    keep = err > floor * scale
    # stop at the first error that has reached roundoff
    if not np.all(keep):
        err = err[: int(np.argmin(keep))]
    return err


def fitted_order(records: list[IterationRecord]) -> tuple[float, float]:
    """(p, C) of e_{n+1} ~ C e_n^p over the usable iterations, NaN if too few."""
    err = usable_errors(records)
    if err.size < 2:
        return math.nan, math.nan
    return convergence_order(err)


def converge_rows(records: list[IterationRecord]) -> list[dict]:
    E_final = records[-1].E
    return [
        {"n": rec.n, "E_n": rec.E, "abs_error": abs(rec.E - E_final), "delta_E": rec.delta_E,
         "residual_norm": rec.residual_norm}
        for rec in records
    ]


def solve_report(spec: PotentialSpec, config: SolveConfig, with_curves: bool = True,
                 timestamp: bool = True) -> SolveReport:
    """Everything for one potential: E0, E1, E_D, QLM history and deviations."""
    p = solve_eta(spec)
    first = energy_first(p, spec, tol=config.tol_quad)
    ref = reference(spec, config, p.E0)
    history = run_qlm(spec, config, p)
    curves = {}
    grid_meta = history[-1].u.grid.metadata()
    if with_curves:
        data = wavefunction_data(spec, config)
        for key in ("dev_0", "dev_1"):
            curves[key] = RadialFunction(data.grid, data.columns[key], "deviation")
    return SolveReport(spec, p.E0, first.E1, ref.E_D, history, curves,
                       provenance(config, grid_meta, timestamp))


# -- CSV ---------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


def write_csv(stream, columns: list[str], rows, prov: dict | None = None, meta: dict | None = None):
    """Units line, optional provenance/meta comment lines, header row, data rows."""
    stream.write(UNITS_LINE + "\n")
    if prov is not None:
        stream.write(PROVENANCE_PREFIX + json.dumps(prov, sort_keys=True) + "\n")
    if meta is not None:
        stream.write(META_PREFIX + json.dumps({k: _cell(v) for k, v in meta.items()}, sort_keys=True) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])


def read_csv(text: str):
    """Inverse of :func:`write_csv`. Returns (columns, rows, provenance, meta).

    Cells that parse as floats are returned as floats, others as strings.
    """
    prov, meta = None, None
    lines = []
    for line in text.splitlines():
        if line.startswith(PROVENANCE_PREFIX):
            prov = json.loads(line[len(PROVENANCE_PREFIX):])
        elif line.startswith(META_PREFIX):
            meta = {k: _maybe_float(v) for k, v in json.loads(line[len(META_PREFIX):]).items()}
        elif not line.startswith("#"):
            lines.append(line)
    reader = csv.reader(io.StringIO("\n".join(lines)))
    columns = next(reader)
    rows = [{c: _maybe_float(v) for c, v in zip(columns, rec)} for rec in reader]
    return columns, rows, prov, meta


def _maybe_float(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def columns_to_rows(columns: dict[str, np.ndarray]) -> list[dict]:
    keys = list(columns)
    return [dict(zip(keys, vals)) for vals in zip(*(columns[k] for k in keys))]


# -- JSON ----------------------------------------------------------------------

def rows_to_json(columns: list[str], rows, prov: dict | None = None, meta: dict | None = None) -> str:
    obj = {"units": UNITS, "columns": columns, "rows": [{c: _cell(r[c]) for c in columns} for r in rows]}
    if meta is not None:
        obj["meta"] = {k: _cell(v) for k, v in meta.items()}
    if prov is not None:
        obj["provenance"] = prov
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def rows_from_json(text: str):
    obj = json.loads(text)
    rows = [{k: _maybe_float(v) for k, v in r.items()} for r in obj["rows"]]
    meta = {k: _maybe_float(v) for k, v in obj["meta"].items()} if "meta" in obj else None
    return obj["columns"], rows, obj.get("provenance"), meta


def _opt(x):
    return None if x is None else fmt(x)


def _grid_to_obj(g: RadialGrid) -> dict:
    obj = {"spacing": g.spacing, "r_max": fmt(g.r_max), "order": g.order}
    if g.spacing == "gauss":
        obj["edges"] = [fmt(e) for e in g.edges]
    else:
        obj["points"] = [fmt(x) for x in g.points]
    return obj


def _grid_from_obj(obj: dict) -> RadialGrid:
    r_max = parse(obj["r_max"])
    if obj["spacing"] == "gauss":
        edges = np.array([parse(e) for e in obj["edges"]])
        order = int(obj["order"])
        n = edges.size - 1
        grid = RadialGrid.gauss(r_max, panel_width=r_max / n, order=order)
        if not np.array_equal(grid.edges, edges):
            raise DomainError("stored Gauss panel edges do not match a uniform panel layout")
        return grid
    return RadialGrid(np.array([parse(x) for x in obj["points"]]), r_max, obj["spacing"])


def report_to_json(report: SolveReport, include_provenance: bool = True) -> str:
    """SolveReport as one JSON object; grids are stored once and referenced by key."""
    grids: dict[int, tuple[str, RadialGrid]] = {}

    def ref(g: RadialGrid) -> str:
        if id(g) not in grids:
            grids[id(g)] = (f"g{len(grids)}", g)
        return grids[id(g)][0]

    spec = report.spec
    obj = {
        "units": UNITS,
        "spec": {"family": spec.family.value, "g": fmt(spec.g), "lambda": fmt(spec.lam), "m": fmt(spec.m)},
        "energies": {"E0": _opt(report.E0), "E1": _opt(report.E1), "E_D": _opt(report.E_D),
                     "E_qlm": _opt(report.E_qlm)},
    }
    if report.qlm_history is not None:
        obj["qlm_history"] = [
            {"n": rec.n, "E": fmt(rec.E), "delta_E": fmt(rec.delta_E), "residual_norm": fmt(rec.residual_norm),
             "u": {"grid": ref(rec.u.grid), "kind": rec.u.kind, "values": [fmt(v) for v in rec.u.values]}}
            for rec in report.qlm_history
        ]
    obj["deviation_curves"] = {
        k: {"grid": ref(f.grid), "kind": f.kind, "values": [fmt(v) for v in f.values]}
        for k, f in report.deviation_curves.items()
    }
    obj["grids"] = {name: _grid_to_obj(g) for name, g in grids.values()}
    if include_provenance:
        obj["provenance"] = report.provenance
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def report_from_json(text: str) -> SolveReport:
    obj = json.loads(text)
    s = obj["spec"]
    family = Family(s["family"])
    if family is Family.CUSTOM:
        raise DomainError("custom potentials cannot be restored from JSON")
    spec = PotentialSpec(family, g=parse(s["g"]), lam=parse(s["lambda"]), m=parse(s["m"]))
    grids = {k: _grid_from_obj(v) for k, v in obj.get("grids", {}).items()}

    def func(o):
        return RadialFunction(grids[o["grid"]], np.array([parse(v) for v in o["values"]]), o["kind"])

    history = None
    if "qlm_history" in obj:
        history = [IterationRecord(int(h["n"]), parse(h["E"]), func(h["u"]), parse(h["delta_E"]),
                                   parse(h["residual_norm"])) for h in obj["qlm_history"]]
    en = obj["energies"]

    def opt(v):
        return None if v is None else parse(v)

    return SolveReport(spec, opt(en["E0"]), opt(en["E1"]), opt(en["E_D"]), history,
                       {k: func(v) for k, v in obj["deviation_curves"].items()}, obj.get("provenance", {}))


# solve reports in CSV: one tidy row per scalar (energies and history); curves are JSON-only
SOLVE_CSV_COLUMNS = ["quantity", "n", "value"]


def solve_report_rows(report: SolveReport) -> list[dict]:
    rows = []
    for name in ("E0", "E1", "E_D"):
        v = getattr(report, name)
        if v is not None:
            rows.append({"quantity": name, "n": "", "value": v})
    for rec in report.qlm_history or []:
        for name in ("E", "delta_E", "residual_norm"):
            rows.append({"quantity": name, "n": rec.n, "value": getattr(rec, name)})
    return rows


def solve_report_from_rows(rows: list[dict]) -> dict:
    """Numeric fields of a solve CSV: energies and per-iteration scalars."""
    out = {"history": {}}
    for row in rows:
        if row["n"] == "":
            out[row["quantity"]] = row["value"]
        else:
            out["history"].setdefault(int(row["n"]), {})[row["quantity"]] = row["value"]
    return out
