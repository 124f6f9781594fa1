import numpy as np
import pytest

from twpa_flux_sim.constants.presets import REFERENCE_RUNS
from twpa_flux_sim.exceptions import GuardExceeded, InsufficientLength, InvalidParameters
from twpa_flux_sim.hb import solve_pump
from twpa_flux_sim.hb.stamp import LinearNetwork
from twpa_flux_sim.models.harmonic import Drive
from twpa_flux_sim.models.transient import Source, TransientConfig
from twpa_flux_sim.netlist import build_twpa, parse_netlist, reference_design
from twpa_flux_sim.smallsignal import gain_sweep
from twpa_flux_sim.tdoracle import cell_count, energy_balance, hb_cross_check, spectrum, transient

F_PUMP, PUMP, _ = REFERENCE_RUNS[0]


@pytest.fixture(scope="module")
def resonator():
    return parse_netlist("P1 a 0 R=50 port=1\nL1 a 0 1n\nC1 a 0 1p\n")


def _sampled(f, periods, per_period):
    return np.arange(periods * per_period + 1) / (f * per_period)


def test_spectrum_of_sinusoid():
    f = 1e9
    t = _sampled(f, 10, 100)
    x = 2.5 * np.sin(2 * np.pi * f * t)
    amplitudes = spectrum(t, x, f, 4)
    assert amplitudes[1] == pytest.approx(-2.5j, abs=1e-10)
    assert np.abs(np.delete(amplitudes, 1)).max() < 1e-10


def test_spectrum_separates_harmonics():
    f = 2e9
    t = _sampled(f, 8, 64)
    x = 0.3 + np.cos(2 * np.pi * f * t) + 0.2 * np.cos(6 * np.pi * f * t + 0.4)
    amplitudes = spectrum(t, x, f, 4)
    assert amplitudes[0] == pytest.approx(0.3, abs=1e-12)
    assert amplitudes[1] == pytest.approx(1.0, abs=1e-12)
    assert amplitudes[3] == pytest.approx(0.2 * np.exp(0.4j), abs=1e-12)
    assert abs(amplitudes[2]) < 1e-12
    assert abs(amplitudes[4]) < 1e-12


def test_spectrum_needs_whole_periods():
    f = 1e9
    with pytest.raises(InsufficientLength):
        spectrum(_sampled(f, 1, 100), np.zeros(101), f, 2)
    t = np.arange(1001) * 1e-9 / 99.5
    with pytest.raises(InsufficientLength):
        spectrum(t, np.zeros_like(t), f, 2)
    with pytest.raises(InsufficientLength):
        spectrum(np.zeros(1), np.zeros(1), f, 2)


def test_config_validation():
    source = Source(port=1, amplitude=1e-6, frequency=4e9)
    with pytest.raises(InvalidParameters):
        TransientConfig(t_stop=100e-9, dt=1e-11, sources=(source,))
    with pytest.raises(InvalidParameters):
        TransientConfig(t_stop=10e-9, dt=1e-12, sources=(source,))
    with pytest.raises(InvalidParameters):
        Source(port=1, amplitude=1e-6, frequency=0.0)
    config = TransientConfig.periodic((source,), f_base=4e9, periods=200, steps_per_period=100)
    assert config.n_steps == 20000
    assert config.ramp_time == pytest.approx(20 / 4e9)


def test_zero_sources_stay_at_rest(lossy_device):
    result = transient(lossy_device, TransientConfig(t_stop=50e-12, dt=1e-12))
    assert np.all(result.flux == 0)
    assert result.source_energy[-1] == 0


def test_size_guard():
    netlist = build_twpa(reference_design(n_cells=21))
    assert cell_count(netlist) == 21
    with pytest.raises(GuardExceeded):
        transient(netlist, TransientConfig(t_stop=2e-12, dt=1e-12), override=False)


def test_unknown_record_node(resonator):
    config = TransientConfig(t_stop=2e-12, dt=1e-12, record_nodes=("nowhere",))
    with pytest.raises(InvalidParameters):
        transient(resonator, config)


def test_driven_resonator_matches_linear_response(resonator):
    f = 3e9
    config = TransientConfig.periodic(
        (Source(port=1, amplitude=1e-6, frequency=f),),
        f_base=f,
        record_nodes=("a",),
    )
    result = transient(resonator, config)
    measured = spectrum(result.time, result.series("a"), f, 1)[1]

    y = LinearNetwork(resonator).nodal_matrix(2 * np.pi * f).toarray()[0, 0]
    expected = 1e-6 / y
    assert abs(measured - expected) <= 1e-3 * abs(expected)


def test_lossless_energy_balance(resonator):
    f = 3e9
    config = TransientConfig.periodic((Source(port=1, amplitude=1e-6, frequency=f),), f_base=f)
    result = transient(resonator, config)
    balance = energy_balance(result)
    assert balance["loss_j"] == 0
    assert balance["source_j"] > 0
    assert balance["relative_error"] < 5e-3


@pytest.mark.slow
def test_matches_harmonic_balance(lossless_device, grid):
    solution = solve_pump(lossless_device, grid, Drive(pump_amplitude=PUMP))
    table = hb_cross_check(lossless_device, solution, nodes=("s3",), harmonics=4)
    magnitude = np.hypot(table["hb_re"], table["hb_im"])
    significant = table[magnitude > 1e-3 * magnitude.max()]
    assert set(significant["harmonic"]) >= {1, 3}
    assert significant["relative_error"].max() < 5e-3


@pytest.mark.slow
def test_halving_step_converges(lossless_device):
    def fundamental(steps_per_period):
        config = TransientConfig.periodic(
            (Source(port=1, amplitude=PUMP, frequency=F_PUMP),),
            f_base=F_PUMP,
            steps_per_period=steps_per_period,
            record_nodes=("s3",),
        )
        result = transient(lossless_device, config)
        return spectrum(result.time, result.series("s3"), F_PUMP, 1)[1]

    coarse, fine = fundamental(100), fundamental(200)
    assert abs(coarse - fine) < 1e-3 * abs(fine)


@pytest.mark.slow
def test_two_tone_gain_matches_small_signal(lossless_device, grid):
    f_signal = 4.4e9
    f_base = 0.4e9
    signal = Source(port=1, amplitude=1e-9, frequency=f_signal)
    pump = Source(port=1, amplitude=PUMP, frequency=F_PUMP)

    def output(sources):
        config = TransientConfig.periodic(
            sources,
            f_base=f_base,
            steps_per_period=600,
            record_nodes=("s3",),
        )
        result = transient(lossless_device, config)
        return abs(spectrum(result.time, result.series("s3"), f_base, 11)[11])

    measured_db = 20 * np.log10(output((pump, signal)) / output((signal,)))
    predicted_db = gain_sweep(
        lossless_device,
        grid,
        Drive(pump_amplitude=PUMP),
        [f_signal],
    ).gain_db[0]
    assert measured_db == pytest.approx(predicted_db, abs=0.5)
