import time

import numpy as np
import pytest

from twpa_flux_sim.constants.presets import (
    BAND_POINTS,
    BAND_START_HZ,
    BAND_STOP_HZ,
    REFERENCE_RUNS,
)
from twpa_flux_sim.exceptions import InvalidParameters
from twpa_flux_sim.hb import homotopy_sweep, linear_ac, solve_pump
from twpa_flux_sim.models.harmonic import Drive, HarmonicGrid, SolverConfig
from twpa_flux_sim.netlist import build_twpa, flux_current_for, reference_design
from twpa_flux_sim.smallsignal import (
    IDLER_SIDEBAND,
    ConversionProblem,
    conversion_matrix,
    gain_rows,
    gain_sweep,
    guard_collision,
    power_gain_map,
)
from twpa_flux_sim.util.csv import write_frame

F_PUMP, PUMP, _ = REFERENCE_RUNS[0]
F_SIGNAL = 4.4e9


@pytest.fixture(scope="module")
def pumped(lossless_device, grid):
    return solve_pump(lossless_device, grid, Drive(pump_amplitude=PUMP))


def test_unpumped_conversion_is_block_diagonal(lossy_device, grid):
    base = solve_pump(lossy_device, grid, Drive())
    result = conversion_matrix(lossy_device, base, F_SIGNAL)
    n_ports = len(result.ports)
    n_sb = len(result.sidebands)

    blocks = result.s.reshape(n_sb, n_ports, n_sb, n_ports)
    for k in range(n_sb):
        for l in range(n_sb):
            if k != l:
                assert np.abs(blocks[k, :, l, :]).max() < 1e-10
    k0 = int(np.flatnonzero(result.sidebands == 0)[0])
    np.testing.assert_allclose(blocks[k0, :, k0, :], linear_ac(lossy_device, F_SIGNAL), atol=1e-10)


def test_lossless_pumped_device_conserves_photons(lossless_device, pumped):
    result = conversion_matrix(lossless_device, pumped, F_SIGNAL)
    for port in result.ports:
        assert result.photon_balance(port) == pytest.approx(1.0, abs=1e-6)


def test_idler_sits_at_two_pump_minus_signal(lossless_device, pumped):
    result = conversion_matrix(lossless_device, pumped, F_SIGNAL)
    assert -result.sideband_frequency(IDLER_SIDEBAND) == pytest.approx(2 * F_PUMP - F_SIGNAL)
    assert abs(result.element(2, IDLER_SIDEBAND, 1, 0)) > 0


def test_sideband_truncation(lossless_device, pumped):
    result = conversion_matrix(lossless_device, pumped, F_SIGNAL, sideband_count=2)
    np.testing.assert_array_equal(result.sidebands, [-2, -1, 0, 1, 2])
    assert result.s.shape == (15, 15)


def test_sideband_at_dc_is_rejected(lossless_device, pumped):
    with pytest.raises(InvalidParameters):
        conversion_matrix(lossless_device, pumped, F_PUMP)


def test_unconverged_pump_is_rejected(lossless_device, grid):
    config = SolverConfig(newton_max_iter=3, homotopy_max_bisections=1)
    failed = homotopy_sweep(lossless_device, grid, [Drive(pump_amplitude=1e-3)], config=config)
    with pytest.raises(InvalidParameters):
        ConversionProblem(lossless_device, failed[0])


def test_guard_collision():
    assert guard_collision(6e9, 4e9) == 6e9 + 1e3
    assert guard_collision(4e9 + 10.0, 4e9) == 4e9 + 1e3
    assert guard_collision(4.4e9, 4e9) == 4.4e9


@pytest.mark.parametrize("flux_ratio", [0.0, 0.5])
def test_pump_off_gain_is_zero(lossy_design, lossy_device, grid, flux_ratio):
    i_dc = flux_current_for(lossy_design, flux_ratio) if flux_ratio else 0.0
    result = gain_sweep(lossy_device, grid, Drive(dc_flux_current=i_dc), [3e9, 4.4e9, 6e9])
    assert result.converged
    assert np.abs(result.gain_db).max() < 1e-9
    assert result.rows[2].f_signal == 6e9 + 1e3


def test_weak_pump_gain_is_negligible(lossy_device, grid):
    result = gain_sweep(lossy_device, grid, Drive(pump_amplitude=1e-9), [3e9, 4.4e9, 5.5e9])
    assert np.abs(result.gain_db).max() < 0.01


@pytest.mark.slow
def test_gain_grows_with_pump(full_device, grid):
    gain = [
        gain_sweep(full_device, grid, Drive(pump_amplitude=a), [F_SIGNAL]).gain_db[0]
        for a in (0.3e-6, 0.6e-6, PUMP)
    ]
    assert np.all(np.diff(gain) > 0)


@pytest.mark.slow
def test_flux_bias_changes_gain_profile(full_device, grid):
    device, design = full_device, reference_design()
    frequencies = [3e9, 4.4e9, 5.5e9]
    unbiased = gain_sweep(device, grid, Drive(pump_amplitude=PUMP), frequencies)
    biased = gain_sweep(
        device,
        grid,
        Drive(pump_amplitude=PUMP, dc_flux_current=flux_current_for(design, 0.5)),
        frequencies,
    )
    assert np.abs(unbiased.gain_db - biased.gain_db).max() > 1.0


def test_parallel_rows_match_serial(lossy_device, grid):
    base = solve_pump(lossy_device, grid, Drive(pump_amplitude=PUMP))
    frequencies = list(np.linspace(3e9, 5e9, 6))
    serial = gain_rows(lossy_device, base, None, frequencies)
    parallel = gain_rows(lossy_device, base, None, frequencies, threads=2)
    assert serial.rows == parallel.rows


def test_power_map_shape_and_zero_row(lossy_device, grid):
    frequencies = [3e9, 4.4e9]
    gain_map = power_gain_map(lossy_device, grid, [0.0, 0.5e-6], frequencies, 0.0)
    assert gain_map.gain_db.shape == (2, 2)
    assert np.abs(gain_map.gain_db[0]).max() < 1e-9
    assert gain_map.converged.all()
    frame = gain_map.to_frame()
    assert list(frame.columns) == ["pump_amplitude_a", "f_signal_hz", "gain_db", "converged"]
    assert len(frame) == 4
    assert gain_map.cut(4.3e9)["f_signal_hz"].iloc[0] == 4.4e9


def test_power_map_marks_failed_pumps(lossy_device, grid):
    config = SolverConfig(newton_max_iter=3, homotopy_max_bisections=1)
    gain_map = power_gain_map(
        lossy_device,
        grid,
        [0.0, 1e-3],
        [4.4e9],
        0.0,
        config=config,
    )
    assert gain_map.converged.tolist() == [[True], [False]]
    assert np.isnan(gain_map.gain_db[1, 0])


def test_power_map_needs_amplitudes(lossy_device, grid):
    with pytest.raises(InvalidParameters):
        power_gain_map(lossy_device, grid, [], [4.4e9], 0.0)


def test_coarse_grid_still_solves(lossy_device):
    grid = HarmonicGrid(f_pump=F_PUMP, n_harmonics=4, n_modulation=2)
    result = gain_sweep(lossy_device, grid, Drive(pump_amplitude=PUMP), [F_SIGNAL])
    assert result.converged
    assert np.isfinite(result.gain_db).all()


def test_rows_come_back_in_frequency_order(lossy_device, grid):
    requested = [5e9, 3e9, 4.4e9]
    result = gain_sweep(lossy_device, grid, Drive(pump_amplitude=PUMP), requested)
    assert result.frequencies.tolist() == sorted(requested)
    ascending = gain_sweep(lossy_device, grid, Drive(pump_amplitude=PUMP), sorted(requested))
    np.testing.assert_array_equal(result.gain_db, ascending.gain_db)


def test_sideband_truncation_is_converged(lossy_device, grid):
    base = solve_pump(lossy_device, grid, Drive(pump_amplitude=PUMP))
    narrow = ConversionProblem(lossy_device, base, sideband_count=4)
    wide = ConversionProblem(lossy_device, base, sideband_count=6)
    for f in (2.5e9, F_SIGNAL, 5.5e9, 7e9):
        s21_narrow = 20 * np.log10(abs(narrow.scatter(f).element(2, 0, 1, 0)))
        s21_wide = 20 * np.log10(abs(wide.scatter(f).element(2, 0, 1, 0)))
        assert s21_wide == pytest.approx(s21_narrow, abs=0.1)


def _reference_drive(run) -> Drive:
    i_dc = flux_current_for(reference_design(), run.flux_ratio) if run.flux_ratio else 0.0
    return Drive(pump_amplitude=run.pump_amplitude, dc_flux_current=i_dc)


def _band() -> list[float]:
    return list(np.linspace(BAND_START_HZ, BAND_STOP_HZ, BAND_POINTS))


@pytest.mark.slow
@pytest.mark.parametrize("run", REFERENCE_RUNS)
def test_full_device_amplifies(full_device, run, check_golden):
    grid = HarmonicGrid(f_pump=run.f_pump)
    result = gain_sweep(full_device, grid, _reference_drive(run), _band(), threads=4)
    assert len(result.rows) == BAND_POINTS
    assert all(r.converged for r in result.rows)
    assert np.nanmax(result.gain_db) > 3

    name = f"gain_fp{run.f_pump / 1e9:g}_flux{run.flux_ratio:g}.csv"
    check_golden(result.to_frame(), name)


@pytest.mark.slow
def test_full_band_runtime_and_thread_independence(full_device, tmp_path):
    run = REFERENCE_RUNS[0]
    grid = HarmonicGrid(f_pump=run.f_pump)

    started = time.perf_counter()
    parallel = gain_sweep(full_device, grid, _reference_drive(run), _band(), threads=4)
    elapsed = time.perf_counter() - started
    assert elapsed <= 120, f"523-point sweep took {elapsed:.1f} s"

    serial = gain_sweep(full_device, grid, _reference_drive(run), _band(), threads=1)
    a = write_frame(parallel.to_frame(), tmp_path / "parallel.csv")
    b = write_frame(serial.to_frame(), tmp_path / "serial.csv")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.slow
def test_lossless_gain_is_symmetric_about_pump():
    netlist = build_twpa(reference_design(tan_delta=0.0))
    run = REFERENCE_RUNS[0]
    detunings = [0.3e9, 0.6e9, 1.1e9]
    signals = [run.f_pump + d for d in detunings] + [run.f_pump - d for d in detunings]
    result = gain_sweep(
        netlist,
        HarmonicGrid(f_pump=run.f_pump),
        Drive(pump_amplitude=run.pump_amplitude),
        signals,
    )
    gain = dict(zip(result.frequencies, result.gain_db, strict=True))
    for d in detunings:
        above, below = gain[run.f_pump + d], gain[run.f_pump - d]
        assert above > 3
        assert above == pytest.approx(below, abs=1.0)
