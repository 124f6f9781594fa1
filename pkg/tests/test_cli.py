import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from twpa_flux_sim.cli import cli
from twpa_flux_sim.models.snail import SnailParams
from twpa_flux_sim.netlist import build_twpa, reference_design, save_netlist
from twpa_flux_sim.snail import flux_map
from twpa_flux_sim.util.csv import snail_frame

SMALL_DEVICE = "device.n_cells=3\ndevice.tan_delta=0.0021\n"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def manifest(tmp_path):
    path = tmp_path / "small.manifest"
    path.write_text(SMALL_DEVICE)
    return path


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "0.3.0" in result.output


def test_fluxmap_outputs(runner, tmp_path):
    out = tmp_path / "flux"
    result = runner.invoke(cli, ["fluxmap", "--flux-axis", "0:1:101", "--out", str(out)])
    assert result.exit_code == 0, result.output

    frame = pd.read_csv(out / "snail.csv")
    assert list(frame.columns) == [
        "flux_ratio",
        "phi_star",
        "alpha_tilde",
        "beta",
        "gamma",
        "l_eff_H",
    ]
    assert len(frame) == 101
    assert frame["gamma"].iloc[0] == pytest.approx(0.04423, abs=1e-5)
    assert frame["beta"].iloc[0] == 0
    assert frame["gamma"].iloc[-1] == pytest.approx(frame["gamma"].iloc[0], abs=1e-9)
    assert (frame["gamma"].iloc[:51] < 0).any()
    assert (out / "gamma.svg").exists()


def test_fluxmap_is_byte_identical(runner, tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = runner.invoke(cli, ["fluxmap", "--flux-axis", "-0.5:0.5:21", "--out", str(out)])
        assert result.exit_code == 0, result.output
        outputs.append(((out / "snail.csv").read_bytes(), (out / "gamma.svg").read_bytes()))
    assert outputs[0] == outputs[1]


def test_fluxmap_reads_snail_from_netlist(runner, tmp_path):
    snail = SnailParams(i_c=4e-6, r=0.3)
    path = tmp_path / "device.net"
    save_netlist(build_twpa(reference_design(n_cells=2, snail=snail)), path)
    out = tmp_path / "flux"
    result = runner.invoke(
        cli,
        ["fluxmap", "--netlist", str(path), "--flux-axis", "0:0.5:11", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output

    frame = pd.read_csv(out / "snail.csv")
    expected = snail_frame(flux_map(snail, np.linspace(0, 0.5, 11).tolist()))
    assert frame["gamma"].to_numpy() == pytest.approx(expected["gamma"].to_numpy(), rel=1e-6)
    assert frame["gamma"].iloc[0] != pytest.approx(0.04423, abs=1e-3)


def test_fluxmap_preset_matches_default(runner, tmp_path):
    csvs = []
    for name, extra in (("default", []), ("preset", ["--preset", "table1"])):
        out = tmp_path / name
        args = ["fluxmap", "--flux-axis", "0:1:5", "--out", str(out), *extra]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        csvs.append((out / "snail.csv").read_bytes())
    assert csvs[0] == csvs[1]


def test_fluxmap_netlist_without_snail(runner, tmp_path, lc_ladder):
    path = tmp_path / "ladder.net"
    save_netlist(lc_ladder, path)
    args = ["fluxmap", "--netlist", str(path), "--flux-axis", "0:1:3", "--out", str(tmp_path)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 2


@pytest.mark.parametrize("axis", ["0:1:0", "0:1", "a:b:c"])
def test_fluxmap_bad_axis(runner, tmp_path, axis):
    result = runner.invoke(cli, ["fluxmap", "--flux-axis", axis, "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_gain_unpumped(runner, manifest, tmp_path):
    out = tmp_path / "gain"
    result = runner.invoke(
        cli,
        [
            "gain",
            "--manifest",
            str(manifest),
            "--fp",
            "4e9",
            "--pump-ua",
            "0",
            "--flux",
            "0",
            "--band",
            "3e9:5e9:3",
            "--out",
            str(out),
        ],
    )
    assert result.exit_code == 0, result.output

    frame = pd.read_csv(out / "gain.csv")
    assert list(frame.columns) == [
        "f_signal_hz",
        "gain_db",
        "s21_on_re",
        "s21_on_im",
        "s21_off_re",
        "s21_off_im",
        "idler_re",
        "idler_im",
        "converged",
    ]
    assert frame["gain_db"].abs().max() < 1e-9
    assert frame["converged"].all()
    assert (out / "gain.svg").exists()

    record = json.loads((out / "run.json").read_text())
    assert record["mutual_inductance_h"] == pytest.approx(3.63e-12, rel=1e-2)
    assert record["points"] == 3
    assert record["manifest"]["device"]["n_cells"] == 3


def test_gain_from_netlist_file(runner, tmp_path):
    path = tmp_path / "device.net"
    save_netlist(build_twpa(reference_design(n_cells=2)), path)
    out = tmp_path / "gain"
    result = runner.invoke(
        cli,
        [
            "gain",
            "--netlist",
            str(path),
            "--fp",
            "4e9",
            "--pump-ua",
            "0.5",
            "--flux",
            "0.5",
            "--band",
            "3e9:5e9:2",
            "--out",
            str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    record = json.loads((out / "run.json").read_text())
    assert record["i_dc_a"] == pytest.approx(0.285e-3, rel=1e-3)


@pytest.mark.parametrize(
    "args",
    [
        ["--fp", "4e9", "--pump-ua", "1"],
        ["--flux", "0", "--pump-ua", "1"],
        ["--fp", "4e9", "--flux", "0", "--idc", "1e-4"],
        ["--fp", "4e9", "--flux", "0", "--band", "5e9:4e9:3"],
    ],
)
def test_gain_input_errors(runner, manifest, tmp_path, args):
    result = runner.invoke(
        cli,
        ["gain", "--manifest", str(manifest), "--out", str(tmp_path), *args],
    )
    assert result.exit_code == 2


def test_gain_bad_netlist(runner, tmp_path):
    path = tmp_path / "broken.net"
    path.write_text("P1 a 0 R=50 port=1\nQ1 a 0 1n\n")
    result = runner.invoke(
        cli,
        ["gain", "--netlist", str(path), "--fp", "4e9", "--flux", "0", "--out", str(tmp_path)],
    )
    assert result.exit_code == 2


def test_gain_solver_failure_writes_csv(runner, tmp_path):
    path = tmp_path / "strict.manifest"
    path.write_text(SMALL_DEVICE + "solver.newton_max_iter=2\nsolver.homotopy_max_bisections=0\n")
    out = tmp_path / "gain"
    result = runner.invoke(
        cli,
        [
            "gain",
            "--manifest",
            str(path),
            "--fp",
            "4e9",
            "--pump-ua",
            "1000",
            "--flux",
            "0",
            "--band",
            "3e9:5e9:3",
            "--out",
            str(out),
        ],
    )
    assert result.exit_code == 3
    frame = pd.read_csv(out / "gain.csv")
    assert not frame["converged"].any()
    assert frame["gain_db"].isna().all()


def test_power_map(runner, manifest, tmp_path):
    out = tmp_path / "map"
    result = runner.invoke(
        cli,
        [
            "power-map",
            "--manifest",
            str(manifest),
            "--fp",
            "4e9",
            "--pumps-ua",
            "0,0.5",
            "--flux",
            "0",
            "--band",
            "4e9:5e9:3",
            "--out",
            str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out / "map.csv")
    assert len(frame) == 6
    cut = pd.read_csv(out / "cut_4.4GHz.csv")
    assert list(cut["pump_amplitude_a"]) == [0.0, 0.5e-6]
    assert (out / "map.svg").exists()


def test_power_map_needs_ascending_pumps(runner, manifest, tmp_path):
    result = runner.invoke(
        cli,
        [
            "power-map",
            "--manifest",
            str(manifest),
            "--fp",
            "4e9",
            "--pumps-ua",
            "1,0.5",
            "--flux",
            "0",
            "--out",
            str(tmp_path),
        ],
    )
    assert result.exit_code == 2
