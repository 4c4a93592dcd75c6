#!/usr/bin/env python3
"""
Test script to verify config parsing, CSV/SVG output, peak detection, sweeps and the command line.
"""
import math
import sys
import xml.etree.ElementTree as ET
sys.path.append('.')

import numpy as np
import pytest

from app import main
from src.config_parser import parse_config
from src.emitters import emit_csv, emit_svg, read_csv
from src.errors import ConfigError, ParameterDomainError
from src.peak_detector import MIN_ROWS, detect_peaks, linewidth_GHz
from src.specfun import chi_phase
from src.sweep_runner import GHZ, SweepRow, SweepRunner
from src.validator import check_levels, validate_command

REFERENCE_CONFIG = """
# reference device, beta_L = 1.75
device.beta_L = 1.75
device.L = 210e-12
device.C = 1e-13
device.R_eff = 8e6
device.T = 0.05
drive.nu = 25.756e9
"""
IN_BAND_NU = 25.756e9
PHENOMENOLOGY_POINTS = 801


def make_row(phi_x, W, split=1e-24, f1=25.0, f2=26.0, nu=25e9):
    return SweepRow(phi_x=phi_x, nu=nu, E_f1=2e-22 + split, E_f2=2e-22, E_0=1e-22, E_L=1e-22, E_R=1.1e-22,
                    f1_GHz=f1, f2_GHz=f2, gamma1=1e6, gamma2=2e6, rho_f1=1e-4, rho_f2=2e-4,
                    W=W, W_osc=0.1 * W)


def test_parse_reference_config():
    print("Testing config parsing...")
    print("=" * 50)
    config = parse_config(REFERENCE_CONFIG)
    assert config.device.beta_L == 1.75
    assert config.drive.nu == [25.756e9]
    assert config.drive.I_amp is None
    assert config.sweep.phi_x_min is None and config.sweep.seed_phi_x is None
    assert config.output.csv == "sweep.csv"
    params = config.device_params(phi_x=0.01)
    assert params.phi_x == 0.01 and params.R_eff == 8e6
    print("✅ defaults filled in")


def test_hash_inside_value_is_not_a_comment():
    config = parse_config(REFERENCE_CONFIG + "output.csv = runs/a#b.csv   # trailing note\n"
                          + "  # indented comment\noutput.svg = plot#1.svg\n")
    assert config.output.csv == "runs/a#b.csv"
    assert config.output.svg == "plot#1.svg"
    assert config.device.T == 0.05


def test_auto_and_list_values():
    config = parse_config(REFERENCE_CONFIG.replace("drive.nu = 25.756e9", "drive.nu = 24e9, 26e9")
                          + "sweep.phi_x_min = auto\nsweep.phi_x_max = AUTO\ndrive.I_amp = auto\n")
    assert config.drive.nu == [24e9, 26e9]
    assert config.sweep.phi_x_max is None


def test_missing_key_is_named():
    with pytest.raises(ConfigError) as info:
        parse_config(REFERENCE_CONFIG.replace("device.C = 1e-13\n", ""))
    assert info.value.key == "device.C"
    assert "device.C" in str(info.value)


def test_out_of_range_value_reports_key_and_line():
    text = REFERENCE_CONFIG.replace("device.L = 210e-12", "device.L = -1")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == "device.L"
    assert info.value.line == 4
    assert str(info.value).startswith("line 4: ")


def test_beta_above_limit_rejected():
    with pytest.raises(ConfigError):
        parse_config(REFERENCE_CONFIG.replace("device.beta_L = 1.75", "device.beta_L = 5.0"))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config(REFERENCE_CONFIG + "device.Lj = 1\n")
    assert "unknown key device.Lj" in str(info.value)
    assert info.value.line == 9


def test_syntax_and_duplicate_errors_carry_lines():
    with pytest.raises(ConfigError) as info:
        parse_config("device.beta_L 1.75\n")
    assert info.value.line == 1
    with pytest.raises(ConfigError) as info:
        parse_config(REFERENCE_CONFIG + "device.T = 0.1\n")
    assert info.value.line == 9
    assert "duplicate" in str(info.value)
    with pytest.raises(ConfigError):
        parse_config("beta_L = 1.75\n")


def test_half_auto_range_rejected():
    with pytest.raises(ConfigError):
        parse_config(REFERENCE_CONFIG + "sweep.phi_x_min = 0.01\n")


def test_overrides():
    config = parse_config(REFERENCE_CONFIG)
    changed = config.with_overrides(nu=[30e9], points=11, r_eff=4e6, seed_phi_x=0.02, out="x.csv")
    assert changed.drive.nu == [30e9]
    assert changed.sweep.n_points == 11
    assert changed.device.R_eff == 4e6
    assert changed.sweep.seed_phi_x == 0.02
    assert changed.output.csv == "x.csv"
    assert config.device.R_eff == 8e6
    with pytest.raises(ConfigError):
        config.with_overrides(r_eff=-1.0)


def test_csv_layout_and_round_trip(tmp_path):
    print("Testing CSV output...")
    rows = [make_row(0.01 * i, 10.0 * i) for i in range(3)]
    path = tmp_path / "rows.csv"
    emit_csv(rows, str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# units:")
    data = [line for line in lines if not line.startswith("#")]
    assert len(data) == 4
    assert data[0].split(",")[:2] == ["phi_x", "nu"]
    assert read_csv(str(path)) == rows
    print("✅ header plus one line per row")


def test_csv_is_deterministic(tmp_path):
    rows = [make_row(0.01 * i, 10.0 * i) for i in range(5)] + [SweepRow.failed(0.05, 25e9, "no_crossing")]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(rows, str(first))
    emit_csv(rows, str(second))
    assert first.read_bytes() == second.read_bytes()
    restored = read_csv(str(first))
    assert math.isnan(restored[-1].W)
    assert restored[-1].flags == "error:no_crossing"


def test_empty_csv_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], str(tmp_path / "empty.csv"))


def test_svg_is_well_formed(tmp_path):
    rows = [make_row(0.01 * i, math.exp(-(i - 10) ** 2 / 8.0)) for i in range(21)]
    path = tmp_path / "plot.svg"
    emit_svg(rows, str(path))
    root = ET.parse(str(path)).getroot()
    polylines = [el for el in root.iter() if el.tag.endswith("polyline")]
    assert len(polylines) == 1
    assert len(polylines[0].get("points").split()) == 21


def test_peak_detection_needs_rows():
    with pytest.raises(ParameterDomainError):
        detect_peaks([make_row(0.01 * i, 1.0) for i in range(MIN_ROWS - 1)])


def test_monotone_rate_has_no_peaks():
    report = detect_peaks([make_row(0.01 * i, float(i)) for i in range(40)])
    assert report.peaks == []
    assert report.classification == "other"


def test_three_peak_classification():
    print("Testing peak classification on a synthetic three-peak sweep...")
    rows = []
    for phi in np.linspace(-1.0, 1.0, 201):
        W = sum(math.exp(-((phi - c) / 0.05) ** 2) for c in (-0.5, 0.0, 0.5))
        split = (abs(phi) + 0.01) * 1e-24
        f1, f2 = (25.0, 30.0) if phi < 0 else (20.0, 25.0)
        rows.append(make_row(float(phi), W, split=split, f1=f1, f2=f2))
    report = detect_peaks(rows)
    assert report.classification == "three_peak"
    assert abs(report.crossing_phi_x) < 1e-12
    assert [p.kind for p in report.peaks] == ["pump_f1", "tunneling", "pump_f2"]
    assert report.of_kind("pump_f1")[0].resonance_mismatch_GHz == pytest.approx(0.0)
    assert report.of_kind("tunneling")[0].width_fwhm == pytest.approx(2.0 * 0.05 * math.sqrt(math.log(2.0)), rel=0.05)
    print("✅ pump_f1, tunneling, pump_f2")


def test_single_peak_classification():
    rows = [make_row(float(phi), math.exp(-(phi / 0.05) ** 2), split=(abs(phi) + 0.01) * 1e-24)
            for phi in np.linspace(-1.0, 1.0, 101)]
    assert detect_peaks(rows).classification == "one_peak"


def test_serial_and_parallel_sweeps_identical(tmp_path):
    print("Testing serial and parallel sweeps...")
    runner = SweepRunner(parse_config(REFERENCE_CONFIG), progress=False)
    crossing = runner.crossing
    span = 3.0 * crossing.width
    base = (REFERENCE_CONFIG + "drive.I_amp = 1e-10\nsweep.n_points = 8\n"
            + f"sweep.phi_x_min = {crossing.phi_x0 - span!r}\nsweep.phi_x_max = {crossing.phi_x0 + span!r}\n"
            + f"sweep.seed_phi_x = {crossing.phi_x0!r}\n")
    outputs = []
    for workers in (1, 2):
        config = parse_config(base + f"sweep.workers = {workers}\n")
        rows = SweepRunner(config, progress=False).run(config.drive.nu[0])
        assert len(rows) == 8
        assert [r.phi_x for r in rows] == sorted(r.phi_x for r in rows)
        path = tmp_path / f"sweep_{workers}.csv"
        emit_csv(rows, str(path))
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    rows = read_csv(str(tmp_path / "sweep_1.csv"))
    assert all(r.W >= 0.0 for r in rows if not r.flags.startswith("error:"))
    print("✅ byte-identical CSV")


@pytest.fixture(scope="module")
def reference_runner():
    return SweepRunner(parse_config(REFERENCE_CONFIG + "drive.I_amp = 1e-10\n"), progress=False)


@pytest.fixture(scope="module")
def phenomenology_grid(reference_runner):
    lo, hi = reference_runner.phi_x_range([IN_BAND_NU])
    return np.linspace(lo, hi, PHENOMENOLOGY_POINTS)


@pytest.fixture(scope="module")
def in_band_rows(reference_runner, phenomenology_grid):
    return reference_runner.run(IN_BAND_NU, phenomenology_grid)


def pair_frequencies(rows):
    f1 = np.array([r.f1_GHz for r in rows])
    f2 = np.array([r.f2_GHz for r in rows])
    return f1, f2


def pumped_frequency(row, kind):
    return row.f1_GHz if kind == "pump_f1" else row.f2_GHz


def test_three_peaks_inside_band(in_band_rows):
    print("Testing the full pipeline at 25.756 GHz...")
    print("=" * 50)
    f1, f2 = pair_frequencies(in_band_rows)
    nu_GHz = IN_BAND_NU / GHZ
    assert np.nanmin(f1) < nu_GHz < np.nanmax(f1)
    assert np.nanmin(f2) < nu_GHz < np.nanmax(f2)
    report = detect_peaks(in_band_rows)
    assert report.classification == "three_peak"
    print(f"✅ {[p.kind for p in report.peaks]}")


def test_one_peak_outside_band(reference_runner, phenomenology_grid, in_band_rows):
    f1, f2 = pair_frequencies(in_band_rows)
    above = (max(np.nanmax(f1), np.nanmax(f2)) + 1.0) * GHZ
    report = detect_peaks(reference_runner.run(above, phenomenology_grid))
    assert report.classification == "one_peak"


def test_central_peak_fixed_in_frequency(reference_runner, phenomenology_grid, in_band_rows):
    print("Testing the tunneling peak position against the drive frequency...")
    step = phenomenology_grid[1] - phenomenology_grid[0]
    positions = []
    for nu in (25.7e9, IN_BAND_NU, 25.8e9):
        rows = in_band_rows if nu == IN_BAND_NU else reference_runner.run(nu, phenomenology_grid)
        tunneling = detect_peaks(rows).of_kind("tunneling")
        assert len(tunneling) == 1, nu
        positions.append(tunneling[0].phi_x)
    assert max(positions) - min(positions) <= step * (1.0 + 1e-9)
    print("✅ central peak within one grid step")


def test_pump_peaks_on_resonance(in_band_rows):
    report = detect_peaks(in_band_rows)
    phi = [r.phi_x for r in in_band_rows]
    for kind in ("pump_f1", "pump_f2"):
        peak = report.of_kind(kind)[0]
        i = phi.index(peak.phi_x)
        row = in_band_rows[i]
        resolution = np.nanmax([abs(pumped_frequency(in_band_rows[j], kind) - pumped_frequency(row, kind))
                                for j in (i - 1, i + 1)])
        assert peak.resonance_mismatch_GHz <= max(linewidth_GHz(row, kind), resolution), kind


def test_pump_peak_narrows_with_resistance(reference_runner, in_band_rows):
    print("Testing the pump-peak width against R_eff...")
    report = detect_peaks(in_band_rows)
    pump = next(p for p in report.peaks if p.kind.startswith("pump"))
    phi = [r.phi_x for r in in_band_rows]
    i = phi.index(pump.phi_x)
    row, before, after = in_band_rows[i], in_band_rows[i - 1], in_band_rows[i + 1]
    slope = ((pumped_frequency(after, pump.kind) - pumped_frequency(before, pump.kind))
             / (after.phi_x - before.phi_x))
    centre = row.phi_x + (IN_BAND_NU / GHZ - pumped_frequency(row, pump.kind)) / slope
    base = parse_config(REFERENCE_CONFIG + "drive.I_amp = 1e-10\n"
                        + f"sweep.seed_phi_x = {reference_runner.crossing.phi_x0!r}\n")
    widths = []
    for r_eff in (1e6, 2e6, 4e6, 8e6):
        # Lorentzian FWHM 2*hbar*gamma, with every rate proportional to 1/R_eff
        expected = 2.0 * linewidth_GHz(row, pump.kind) * (base.device.R_eff / r_eff) / abs(slope)
        window = np.linspace(centre - 5.0 * expected, centre + 5.0 * expected, 121)
        rows = SweepRunner(base.with_overrides(r_eff=r_eff), progress=False).run(IN_BAND_NU, window)
        local = detect_peaks(rows)
        assert local.peaks, r_eff
        widths.append(max(local.peaks, key=lambda p: p.W).width_fwhm)
    print(f"FWHM for 1, 2, 4, 8 MOhm: {widths}")
    assert all(narrow < wide for wide, narrow in zip(widths, widths[1:]))
    print("✅ FWHM decreases strictly")


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.conf"
    path.write_text(REFERENCE_CONFIG.replace("device.L = 210e-12", "device.L = -1"), encoding="utf-8")
    assert main(["crossing", "--config", str(path)]) == 2
    assert "device.L" in capsys.readouterr().err
    assert main(["crossing", "--config", str(tmp_path / "missing.conf")]) == 2


def test_cli_plot(tmp_path):
    csv_path = tmp_path / "rows.csv"
    emit_csv([make_row(0.01 * i, float(i % 3)) for i in range(6)], str(csv_path))
    assert main(["plot", str(csv_path)]) == 0
    ET.parse(str(tmp_path / "rows.svg"))


def test_validate_harmonic_device():
    config = parse_config(REFERENCE_CONFIG.replace("device.beta_L = 1.75", "device.beta_L = 0.0"))
    report = validate_command(config)
    assert report.passed
    assert report.exit_status == 0


def test_validate_reference_device():
    print("Testing validate on the reference device...")
    report = validate_command(parse_config(REFERENCE_CONFIG))
    print(report.table())
    assert report.exit_status == 0
    rows = {c.name: c for c in report.checks}
    assert rows["residual_at_oracle"].passed
    assert rows["element_bound"].passed
    for name in ("me_0_f1", "me_0_f2", "me_exp_f1f2", "me_exp_Lf1", "me_exp_Lf2",
                 "me_exp_Rf1", "me_exp_Rf2", "me_00_exp"):
        assert rows[name].detail.startswith("worst of 10 phi_x points"), name
        assert rows[name].measured <= 0.25, name


def test_validate_catches_flipped_chi(monkeypatch):
    print("Testing that validate fails when the barrier-top phase changes sign...")
    monkeypatch.setattr("src.wkb_spectrum.chi_phase", lambda lam: -chi_phase(lam))
    monkeypatch.setattr("src.validator.CHECKS", [check_levels])
    report = validate_command(parse_config(REFERENCE_CONFIG))
    print(report.table())
    assert report.exit_status != 0
    failed = {c.name for c in report.checks if not c.passed}
    assert "chi_vs_gamma_phase" not in failed
    assert failed & {"levels_vs_oracle", "residual_at_oracle", "levels", "crossing"}
    print("✅ level comparison fails, exit status nonzero")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
