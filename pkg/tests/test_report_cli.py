import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlmriccati import coulomb, yukawa
from qlmriccati.cli import main, read_config, UsageError
from qlmriccati.report import (
    DEVIATION_CAP,
    UNITS_LINE,
    SolveConfig,
    deviation,
    fitted_order,
    fmt,
    parse,
    read_csv,
    report_from_json,
    report_to_json,
    rows_from_json,
    run_qlm,
    solve_report,
    solve_report_from_rows,
    solve_report_rows,
    table_row,
    wavefunction_data,
    write_csv,
)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_decimal_round_trip(x):
    assert parse(fmt(x)) == x
    assert math.copysign(1, parse(fmt(x))) == math.copysign(1, x)


@pytest.mark.parametrize("lam, E0, E1, ED", [
    (0.2, 0.32679, 0.32680851, 0.32680851),
    (0.5, 0.14795, 0.1481170, 0.1481170),
])
def test_table_rows(lam, E0, E1, ED):
    row = table_row(yukawa(lam), SolveConfig())
    digits = len(str(E1).split(".")[1])
    assert round(-row["E0"], 5) == E0
    assert round(-row["E1"], digits) == E1
    assert round(-row["E_D"], digits) == ED
    assert row["status"] == "ok"


def test_table_row_coulomb():
    row = table_row(coulomb(), SolveConfig())
    for key in ("E0", "E1", "E_D"):
        assert row[key] == pytest.approx(-0.5, abs=1e-9)


def test_table_reports_unbound_rows_inline(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code, _, _ = run(capsys, "table", "0.2", "1.3", "--format", "csv", "--no-provenance", "--output", str(out))
    assert code == 0
    cols, rows, prov, _ = read_csv(out.read_text())
    assert prov is None
    assert [r["lambda"] for r in rows] == [0.2, 1.3]
    assert rows[0]["status"] == "ok"
    assert "no bound state" in rows[1]["status"] and math.isnan(rows[1]["minus_E_D"])


def test_table_is_deterministic_and_round_trips(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "table", "--format", "csv", "--no-provenance", "--output", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.splitlines()[0] == UNITS_LINE
    cols, rows, _, _ = read_csv(text)
    buf = io.StringIO()
    write_csv(buf, cols, rows)
    assert buf.getvalue() == text


def test_table_json_round_trip(capsys, tmp_path):
    path = tmp_path / "t.json"
    run(capsys, "table", "0.5", "--format", "json", "--output", str(path))
    cols, rows, prov, _ = rows_from_json(path.read_text())
    assert prov["tool"] == "qlmriccati" and "timestamp" in prov
    assert rows[0]["minus_E1"] == -table_row(yukawa(0.5), SolveConfig())["E1"]


def test_provenance_line(capsys):
    _, out, _ = run(capsys, "table", "0.2", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == UNITS_LINE and lines[1].startswith("# provenance: ")
    assert json.loads(lines[1][len("# provenance: "):])["tol_energy"] == 1e-10


def test_table_text_digits(capsys):
    _, out, _ = run(capsys, "table", "0.2", "--digits", "8")
    assert "0.32680851" in out


def test_deviation_floor_and_cap():
    chi_D = np.array([1.0, 0.5, 1e-9, 0.0])
    dev = deviation(np.array([1.0, 0.49, 1e-9, 0.0]), chi_D)
    assert dev[0] == DEVIATION_CAP
    assert dev[1] == pytest.approx(math.log10(0.02))
    assert np.isnan(dev[2]) and np.isnan(dev[3])


def test_wavefunction_first_iteration_accuracy():
    cols = wavefunction_data(yukawa(0.2), SolveConfig()).columns
    d0, d1 = cols["dev_0"], cols["dev_1"]
    keep = np.isfinite(d1)
    assert np.nanmax(d1) <= -4 + 1
    assert np.median(d0[keep] - d1[keep]) > 0
    for key in ("chi_D", "chi_0", "chi_1"):
        assert np.all(cols[key] > 0)


def test_wavefunction_coulomb_sits_at_floor():
    cols = wavefunction_data(coulomb(), SolveConfig()).columns
    assert np.nanmax(cols["dev_0"]) < -8 and np.nanmax(cols["dev_1"]) < -8


def test_wavefunction_csv_round_trip(capsys, tmp_path):
    path = tmp_path / "w.csv"
    code, _, _ = run(capsys, "wavefunction", "--lambda", "0.5", "--format", "csv", "--no-provenance",
                     "--grid", "log", "--grid-points", "300", "--output", str(path))
    assert code == 0
    cols, rows, _, meta = read_csv(path.read_text())
    assert cols == ["r", "chi_D", "chi_0", "chi_1", "dev_0", "dev_1"]
    data = wavefunction_data(yukawa(0.5), SolveConfig(grid="log", grid_points=300))
    for c in cols:
        np.testing.assert_array_equal(np.array([r[c] for r in rows]), data.columns[c])
    assert meta["E_D"] == data.ref.E_D


def test_wavefunction_subset(capsys):
    code, out, _ = run(capsys, "wavefunction", "--iterations", "1,D", "--format", "csv", "--no-provenance",
                       "--grid-points", "50")
    assert code == 0
    cols, _, _, _ = read_csv(out)
    assert cols == ["r", "chi_D", "chi_1", "dev_1"]


def test_converge_report(capsys):
    code, out, _ = run(capsys, "converge", "--format", "csv", "--no-provenance")
    assert code == 0
    cols, rows, _, meta = read_csv(out)
    assert rows[1]["E_n"] == pytest.approx(meta["E1_closed_form"], abs=1e-8)
    # errors at the rounding floor (~1e-16) are not part of the quadratic regime
    e = [r["abs_error"] for r in rows if r["abs_error"] > 1e-13]
    assert len(e) >= 2
    for a, b in zip(e, e[1:]):
        assert b <= 10 * meta["fitted_constant_C"] * a**2
    assert meta["fitted_order_p"] >= 1.7


def test_converge_coulomb():
    recs = run_qlm(coulomb(), SolveConfig())
    assert recs[-1].n == 1
    assert math.isnan(fitted_order(recs)[0])


def test_solve_json_round_trip():
    report = solve_report(yukawa(0.5), SolveConfig())
    text = report_to_json(report)
    back = report_from_json(text)
    assert (back.E0, back.E1, back.E_D, back.E_qlm) == (report.E0, report.E1, report.E_D, report.E_qlm)
    assert back.spec == report.spec
    for a, b in zip(report.qlm_history, back.qlm_history):
        assert (a.n, a.E, a.residual_norm) == (b.n, b.E, b.residual_norm)
        assert a.delta_E == b.delta_E or (math.isnan(a.delta_E) and math.isnan(b.delta_E))
        np.testing.assert_array_equal(a.u.values, b.u.values)
        np.testing.assert_array_equal(a.u.grid.points, b.u.grid.points)
    for key, f in report.deviation_curves.items():
        np.testing.assert_array_equal(back.deviation_curves[key].values, f.values)
        np.testing.assert_array_equal(back.deviation_curves[key].grid.points, f.grid.points)
    assert report_to_json(back) == text


def test_solve_csv_round_trip(capsys):
    code, out, _ = run(capsys, "solve", "--lambda", "0.8", "--format", "csv", "--no-provenance")
    assert code == 0
    _, rows, _, meta = read_csv(out)
    got = solve_report_from_rows(rows)
    report = solve_report(yukawa(0.8), SolveConfig(), with_curves=False)
    assert (got["E0"], got["E1"], got["E_D"]) == (report.E0, report.E1, report.E_D)
    assert got["history"][len(report.qlm_history) - 1]["E"] == report.E_qlm == meta["E_qlm"]


def test_solve_rows_shape():
    report = solve_report(coulomb(), SolveConfig(), with_curves=False)
    rows = solve_report_rows(report)
    assert rows[0] == {"quantity": "E0", "n": "", "value": -0.5}


@pytest.mark.parametrize("argv, code", [
    (["solve", "--lambda", "1.5"], 2),
    (["converge", "--max-iter", "1"], 3),
    (["solve", "--tol-energy", "-1"], 4),
    (["wavefunction", "--iterations", "0,7"], 4),
])
def test_exit_codes(capsys, argv, code):
    assert main(argv) == code


def test_argparse_errors_exit_4():
    for argv in (["table", "--bogus"], ["solve", "--grid", "mapped"], []):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 4


def test_config_file_and_precedence(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nlambda = 0.5\ndigits=6\nformat = csv\n")
    assert read_config(cfg)["lam"] == 0.5
    _, out, _ = run(capsys, "solve", "--config", str(cfg), "--no-provenance")
    assert "E_D,,-0.14811702" in out
    _, out, _ = run(capsys, "solve", "--config", str(cfg), "--lambda", "0.8", "--no-provenance")
    assert "E_D,,-0.04470430" in out
    monkeypatch.setenv("QLMRICCATI_CONFIG", str(cfg))
    _, out, _ = run(capsys, "table", "0.2", "--no-provenance")
    assert out.startswith(UNITS_LINE) and "lambda,minus_E0" in out


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        read_config(bad)
    with pytest.raises(SystemExit) as info:
        main(["solve", "--config", str(bad)])
    assert info.value.code == 4


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qlmriccati.cli", "table", "0", "--no-provenance"],
                          capture_output=True, text=True, check=True)
    assert "0.5" in proc.stdout
