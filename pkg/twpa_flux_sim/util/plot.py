"""Static SVG figures, rendered headless and free of timestamps."""

from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG as FigureCanvas
from matplotlib.colors import TwoSlopeNorm
from matplotlib.figure import Figure

from twpa_flux_sim.models.results import GainResult, PowerGainMap

_RC = {"svg.hashsalt": "twpa-flux-sim", "svg.fonttype": "none"}


def _save(fig: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with mpl.rc_context(_RC):
        FigureCanvas(fig).print_svg(path, metadata={"Date": None})
    return path


def plot_gain(result: GainResult, path: Path, *, title: str = "") -> Path:
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(result.frequencies / 1e9, result.gain_db, color="tab:blue")
    ax.axhline(0, color="0.6", linewidth=0.8)
    ax.set_xlabel("Signal frequency (GHz)")
    ax.set_ylabel("Gain (dB)")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_power_map(gain_map: PowerGainMap, path: Path, *, title: str = "") -> Path:
    fig = Figure(figsize=(7, 4.5))
    ax = fig.add_subplot()
    gain = np.ma.masked_invalid(gain_map.gain_db)
    peak = float(np.nanmax(np.abs(gain_map.gain_db))) if gain.count() else 1.0
    mesh = ax.pcolormesh(
        gain_map.frequencies / 1e9,
        gain_map.pump_amplitudes * 1e6,
        gain,
        shading="nearest",
        cmap="RdBu_r",
        norm=TwoSlopeNorm(vcenter=0.0, vmin=-max(peak, 1e-3), vmax=max(peak, 1e-3)),
    )
    # Unconverged cells stay blank against a grey background.
    ax.set_facecolor("0.85")
    fig.colorbar(mesh, ax=ax, label="Gain (dB)")
    ax.set_xlabel("Signal frequency (GHz)")
    ax.set_ylabel("Pump amplitude (µA)")
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_flux_map(ratios: np.ndarray, gamma: np.ndarray, path: Path) -> Path:
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot()
    ax.plot(ratios, gamma, color="tab:red")
    ax.axhline(0, color="0.6", linewidth=0.8)
    ax.set_xlabel(r"$\Phi_{ext}/\Phi_0$")
    ax.set_ylabel(r"$\gamma$")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)
