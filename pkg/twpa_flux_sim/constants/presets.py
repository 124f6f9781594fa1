from typing import Final, NamedTuple

# Device parameters of the 700-cell flux-tunable SNAIL amplifier.
REFERENCE_DEVICE: Final[dict[str, float | int]] = {
    "n_cells": 700,
    "i_c": 2.19e-6,
    "r": 0.07,
    "c_j": 50e-15,
    "c_g": 250e-15,
    "l_add": 70e-15,
    "l_f": 190e-12,
    "c_f": 0.076e-12,
    "l_g": 20.0e-9,
}
TAN_DELTA: Final = 2.1e-3
Z_PORT: Final = 50.0

# DC current through the flux line that puts half a flux quantum in each SNAIL loop.
HALF_QUANTUM_I_DC: Final = 0.285e-3

N_HARMONICS: Final = 8
N_MODULATION: Final = 4

BAND_START_HZ: Final = 2e9
BAND_STOP_HZ: Final = 9e9
BAND_POINTS: Final = 523

POWER_CUT_HZ: Final = 4.4e9


class ReferenceRun(NamedTuple):
    f_pump: float
    pump_amplitude: float
    flux_ratio: float


# NOTE: (f_pump [Hz], pump current amplitude [A], flux ratio) of the gain comparisons.
REFERENCE_RUNS: Final[list[ReferenceRun]] = [
    ReferenceRun(4e9, 1.02e-6, 0.0),
    ReferenceRun(6e9, 0.852e-6, 0.0),
    ReferenceRun(8e9, 1.02e-6, 0.0),
    ReferenceRun(4e9, 1.05e-6, 0.5),
    ReferenceRun(6e9, 0.992e-6, 0.5),
    ReferenceRun(8e9, 1.0e-6, 0.5),
]

PRESETS: Final = ("table1",)
