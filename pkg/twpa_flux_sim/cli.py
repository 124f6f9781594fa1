"""`twpa-flux-sim` command line: gain sweeps, power maps and SNAIL flux maps.

Exit codes: 0 success, 2 bad input (manifest, netlist, design), 3 solver failure. Result
files that could be computed are written before a non-zero exit.
"""

import functools
import json
import sys
import time
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import click
import numpy as np
from loguru import logger

from twpa_flux_sim import __version__
from twpa_flux_sim.constants.paths import RUN_METADATA_NAME
from twpa_flux_sim.constants.physics import FLUX_QUANTUM
from twpa_flux_sim.constants.presets import PRESETS
from twpa_flux_sim.exceptions import InputError, ManifestError, SolverError, ZeroCoupling
from twpa_flux_sim.hb.pump import solve_pump
from twpa_flux_sim.models.circuit import Netlist, TwpaDesign
from twpa_flux_sim.models.harmonic import Drive
from twpa_flux_sim.models.manifest import RunManifest, build_manifest, load_manifest
from twpa_flux_sim.models.results import GainResult
from twpa_flux_sim.models.snail import SnailParams
from twpa_flux_sim.models.transient import Source, TransientConfig
from twpa_flux_sim.netlist.build import (
    FLUX_PORT,
    INPUT_PORT,
    OUTPUT_PORT,
    build_twpa,
    flux_current_for,
    flux_current_from_netlist,
    flux_ratio_for,
    mutual_inductance,
    preset_design,
    snail_from_netlist,
)
from twpa_flux_sim.netlist.parse import load_netlist
from twpa_flux_sim.smallsignal import gain_sweep, power_gain_map
from twpa_flux_sim.snail import flux_map
from twpa_flux_sim.tdoracle import energy_balance, hb_cross_check, transient
from twpa_flux_sim.util.csv import snail_frame, write_frame
from twpa_flux_sim.util.logging import setup_logging
from twpa_flux_sim.util.plot import plot_flux_map, plot_gain, plot_power_map


EXIT_INPUT = 2
EXIT_SOLVER = 3
ORACLE_CELLS = 3
ORACLE_FLOOR = 1e-3


@dataclass
class Device:
    netlist: Netlist
    design: TwpaDesign | None

    def flux_current(self, flux_ratio: float) -> float:
        if self.design is not None:
            return flux_current_for(self.design, flux_ratio)
        return flux_current_from_netlist(self.netlist, flux_ratio)

    def flux_ratio(self, i_dc: float) -> float:
        if self.design is not None:
            return flux_ratio_for(self.design, i_dc)
        return i_dc / flux_current_from_netlist(self.netlist, 1.0)

    def snail(self) -> SnailParams:
        if self.design is not None:
            return self.design.snail
        return snail_from_netlist(self.netlist)

    def calibration(self) -> dict[str, float]:
        """Mutual inductance and the half-quantum current, for run.json."""
        try:
            i_one = self.flux_current(1.0)
        except ZeroCoupling:
            return {}
        m = mutual_inductance(self.design) if self.design else FLUX_QUANTUM / i_one
        return {"mutual_inductance_h": m, "i_dc_half_quantum_a": i_one / 2}


def _handle_errors(fn: Callable) -> Callable:
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputError as e:
            logger.error(f"{type(e).__name__}: {e}")
            sys.exit(EXIT_INPUT)
        except SolverError as e:
            logger.error(f"{type(e).__name__}: {e}")
            sys.exit(EXIT_SOLVER)

    return wrapper


def _parse_band(value: str | None) -> dict[str, Any]:
    if value is None:
        return {}
    try:
        start, stop, points = value.split(":")
        return {"band.start": float(start), "band.stop": float(stop), "band.points": int(points)}
    except ValueError:
        raise click.BadParameter(f"expected f1:f2:n, got {value!r}", param_hint="--band") from None


def _parse_list(value: str | None, scale: float = 1.0) -> list[float] | None:
    if value is None:
        return None
    try:
        return [float(v) * scale for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from None


def _manifest(
    manifest: Path | None,
    flags: dict[str, Any],
) -> RunManifest:
    overrides = {k: v for k, v in flags.items() if v is not None}
    if manifest is not None:
        return load_manifest(manifest, overrides)
    return build_manifest({}, overrides)


def manifest_options(fn: Callable) -> Callable:
    options = [
        click.option("--manifest", type=click.Path(path_type=Path, dir_okay=False)),
        click.option("--preset", type=click.Choice(PRESETS)),
        click.option("--netlist", "netlist_path", type=click.Path(path_type=Path, dir_okay=False)),
        click.option("--fp", type=float, help="Pump frequency (Hz)."),
        click.option("--pump-ua", type=float, help="Pump current amplitude (µA)."),
        click.option("--flux", type=float, help="External flux ratio Phi_ext/Phi_0."),
        click.option("--idc", type=float, help="DC flux-line current (A)."),
        click.option("--band", help="Signal band f1:f2:n (Hz, Hz, points)."),
        click.option("--out", type=click.Path(path_type=Path, file_okay=False)),
        click.option("--threads", type=int),
        click.option("--oracle", is_flag=True, default=None),
        click.option("--log-level", default=None),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _flags(
    *,
    preset,
    netlist_path,
    fp,
    pump_ua,
    flux,
    idc,
    band,
    out,
    threads,
    oracle,
    **extra,
) -> dict[str, Any]:
    return {
        "preset": preset,
        "netlist": str(netlist_path) if netlist_path else None,
        "grid.f_pump": fp,
        "drive.pump_amplitude": pump_ua * 1e-6 if pump_ua is not None else None,
        "drive.flux_ratio": flux,
        "drive.i_dc": idc,
        "out": str(out) if out else None,
        "threads": threads,
        "oracle": oracle,
        **_parse_band(band),
        **extra,
    }


def resolve_device(manifest: RunManifest, *, n_cells: int | None = None) -> Device:
    if manifest.netlist is not None:
        if n_cells is not None:
            raise ManifestError("Cannot truncate a device loaded from a netlist file")
        return Device(load_netlist(manifest.netlist), None)

    overrides = manifest.device.overrides()
    if n_cells is not None:
        overrides["n_cells"] = n_cells
    design = preset_design(manifest.preset, **overrides)
    return Device(build_twpa(design), design)


def resolve_drive(manifest: RunManifest, device: Device) -> tuple[Drive, float]:
    """Drive plus the flux ratio it corresponds to."""
    kind, value = manifest.require_flux()
    if kind == "flux_ratio":
        ratio, i_dc = value, device.flux_current(value) if value else 0.0
    else:
        ratio, i_dc = device.flux_ratio(value), value
    return (
        Drive(
            pump_amplitude=manifest.drive.pump_amplitude,
            dc_flux_current=i_dc,
            pump_port=INPUT_PORT,
            flux_port=FLUX_PORT,
        ),
        ratio,
    )


def write_run_json(
    manifest: RunManifest,
    path: Path,
    *,
    started: float,
    **fields: Any,
) -> Path:
    record = {
        "version": __version__,
        "manifest": manifest.model_dump(mode="json"),
        **fields,
        "wall_time_s": time.perf_counter() - started,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, default=str) + "\n", encoding="utf-8")
    return path


@click.group()
@click.version_option(__version__)
def cli():
    """Harmonic-balance simulation of flux-tunable SNAIL traveling-wave amplifiers."""


@cli.command()
@manifest_options
@_handle_errors
def gain(manifest: Path | None, log_level: str | None, **kwargs):
    """Gain against signal frequency: gain.csv, gain.svg, run.json."""
    setup_logging(log_level)
    started = time.perf_counter()
    run = _manifest(manifest, _flags(**kwargs))
    device = resolve_device(run)
    grid = run.grid.harmonic_grid()
    drive, ratio = resolve_drive(run, device)
    frequencies = run.band.frequencies()
    out = run.out

    failure: SolverError | None = None
    try:
        result = gain_sweep(
            device.netlist,
            grid,
            drive,
            frequencies,
            config=run.solver,
            threads=run.threads,
        )
    except SolverError as e:
        failure = e
        result = GainResult.failed(frequencies, str(e))

    write_frame(result.to_frame(), out / "gain.csv")
    plot_gain(
        result,
        out / "gain.svg",
        title=f"f_p = {grid.f_pump / 1e9:g} GHz, {drive.pump_amplitude * 1e6:g} µA,"
        f" flux {ratio:.3g}",
    )

    fields: dict[str, Any] = {}
    if run.oracle and failure is None:
        fields["oracle"] = _oracle(run, drive, out)

    write_run_json(
        run,
        out / RUN_METADATA_NAME,
        started=started,
        **device.calibration(),
        flux_ratio=ratio,
        i_dc_a=drive.dc_flux_current,
        solver=result.stats,
        points=len(result.rows),
        points_converged=sum(r.converged for r in result.rows),
        **fields,
    )

    if failure is not None:
        raise failure
    if not result.converged:
        logger.error("Some signal frequencies did not solve; see gain.csv.")
        sys.exit(EXIT_SOLVER)
    logger.success(f"Wrote {out / 'gain.csv'}.")


@cli.command("power-map")
@manifest_options
@click.option("--pumps-ua", help="Comma-separated pump amplitudes (µA), ascending.")
@_handle_errors
def power_map(manifest: Path | None, log_level: str | None, pumps_ua: str | None, **kwargs):
    """Gain against pump amplitude and signal frequency: map.csv, map.svg, cut_*.csv."""
    setup_logging(log_level)
    started = time.perf_counter()
    run = _manifest(
        manifest,
        _flags(**kwargs, **{"sweep.pump_amplitudes": _parse_list(pumps_ua, 1e-6)}),
    )
    amplitudes = run.sweep.pump_amplitudes
    if not amplitudes:
        raise ManifestError("sweep.pump_amplitudes (--pumps-ua) is required")
    if amplitudes != sorted(amplitudes):
        raise ManifestError("sweep.pump_amplitudes must be ascending")

    device = resolve_device(run)
    grid = run.grid.harmonic_grid()
    drive, ratio = resolve_drive(run, device)
    out = run.out

    gain_map = power_gain_map(
        device.netlist,
        grid,
        amplitudes,
        run.band.frequencies(),
        ratio,
        config=run.solver,
        threads=run.threads,
        dc_flux_current=drive.dc_flux_current,
    )

    write_frame(gain_map.to_frame(), out / "map.csv")
    plot_power_map(
        gain_map,
        out / "map.svg",
        title=f"f_p = {grid.f_pump / 1e9:g} GHz, flux {ratio:.3g}",
    )
    for f_cut in run.sweep.cuts:
        write_frame(gain_map.cut(f_cut), out / f"cut_{f_cut / 1e9:g}GHz.csv")

    write_run_json(
        run,
        out / RUN_METADATA_NAME,
        started=started,
        **device.calibration(),
        flux_ratio=ratio,
        i_dc_a=drive.dc_flux_current,
        solver=[r.stats for r in gain_map.results],
        cells_converged=int(gain_map.converged.sum()),
        cells=int(gain_map.converged.size),
    )
    if not gain_map.converged.all():
        logger.error("Some map cells did not solve; they are NaN in map.csv.")
        sys.exit(EXIT_SOLVER)
    logger.success(f"Wrote {out / 'map.csv'}.")


@cli.command()
@click.option("--manifest", type=click.Path(path_type=Path, dir_okay=False))
@click.option("--preset", type=click.Choice(PRESETS))
@click.option("--netlist", "netlist_path", type=click.Path(path_type=Path, dir_okay=False))
@click.option("--flux-axis", help="start:stop:n flux ratios, endpoints included.")
@click.option("--out", type=click.Path(path_type=Path, file_okay=False))
@click.option("--log-level", default=None)
@_handle_errors
def fluxmap(
    manifest: Path | None,
    preset: str | None,
    netlist_path: Path | None,
    flux_axis: str | None,
    out: Path | None,
    log_level: str | None,
):
    """SNAIL expansion coefficients against external flux: snail.csv, gamma.svg."""
    setup_logging(log_level)
    overrides: dict[str, Any] = {
        "preset": preset,
        "netlist": str(netlist_path) if netlist_path else None,
        "out": str(out) if out else None,
    }
    if flux_axis is not None:
        try:
            start, stop, n = flux_axis.split(":")
            overrides["sweep.flux_ratios"] = np.linspace(
                float(start),
                float(stop),
                int(n),
            ).tolist()
        except ValueError:
            raise click.BadParameter(
                f"expected start:stop:n, got {flux_axis!r}",
                param_hint="--flux-axis",
            ) from None
    run = _manifest(manifest, overrides)

    ratios = run.sweep.flux_ratios
    if not ratios:
        raise ManifestError("sweep.flux_ratios (--flux-axis) is empty")

    params = resolve_device(run).snail()
    logger.info(f"SNAIL: i_c={params.i_c:.4g} A, r={params.r:.4g}, n_big={params.n_big}.")
    rows = flux_map(params, ratios)
    frame = snail_frame(rows)
    write_frame(frame, run.out / "snail.csv")
    plot_flux_map(frame["flux_ratio"].to_numpy(), frame["gamma"].to_numpy(), run.out / "gamma.svg")
    logger.success(f"Wrote {run.out / 'snail.csv'}.")


@cli.command("transient", hidden=True)
@manifest_options
@click.option("--cells", type=int, default=ORACLE_CELLS, show_default=True)
@click.option("--periods", type=int, default=200, show_default=True)
@_handle_errors
def transient_run(
    manifest: Path | None,
    log_level: str | None,
    cells: int,
    periods: int,
    **kwargs,
):
    """Time-domain run of a truncated device: timeseries.csv, run.json."""
    setup_logging(log_level)
    started = time.perf_counter()
    run = _manifest(manifest, _flags(**kwargs))
    device = resolve_device(run, n_cells=cells)
    grid = run.grid.harmonic_grid()
    drive, ratio = resolve_drive(run, device)

    sources = (Source(INPUT_PORT, drive.pump_amplitude, grid.f_pump),)
    config = TransientConfig.periodic(
        sources,
        f_base=grid.f_pump,
        periods=periods,
        dc_flux_current=drive.dc_flux_current,
        flux_port=FLUX_PORT,
        record_nodes=("s0", f"s{cells}"),
    )
    result = transient(device.netlist, config)
    write_frame(result.to_frame(), run.out / "timeseries.csv")
    write_run_json(
        run,
        run.out / RUN_METADATA_NAME,
        started=started,
        cells=cells,
        flux_ratio=ratio,
        energy=energy_balance(result),
        substeps=result.substeps,
    )


def _oracle(run: RunManifest, drive: Drive, out: Path) -> dict[str, Any]:
    """Compare harmonic balance against the transient on a truncated copy of the device."""
    device = resolve_device(run, n_cells=ORACLE_CELLS)
    solution = solve_pump(device.netlist, run.grid.harmonic_grid(), drive, config=run.solver)
    table = hb_cross_check(
        device.netlist,
        solution,
        nodes=(f"s{ORACLE_CELLS}",),
    )
    write_frame(table, out / "oracle.csv")
    magnitude = np.hypot(table["hb_re"], table["hb_im"])
    # Harmonics the pump does not excite (DC and even ones at zero flux) carry no signal.
    significant = table[magnitude > ORACLE_FLOOR * magnitude.max()]
    worst = float(significant["relative_error"].max()) if len(significant) else 0.0
    logger.info(f"Oracle cross-check: worst harmonic deviation {worst:.2%}.")
    return {"cells": ORACLE_CELLS, "max_relative_error": worst, "output_port": OUTPUT_PORT}


def main():
    cli()
