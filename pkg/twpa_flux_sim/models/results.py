from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

GAIN_COLUMNS = [
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


@dataclass(frozen=True)
class ConversionResult:
    """Scattering between every (port, sideband) pair of a pumped circuit.

    Sideband `k` sits at `f_signal + k * f_pump`; waves are normalized to photon flux,
    so a lossless circuit conserves `sum(sign(f_k) |S|^2)` down each column.
    """

    f_signal: float
    f_pump: float
    sidebands: np.ndarray
    ports: tuple[int, ...]
    s: np.ndarray

    def index(self, port: int, sideband: int) -> int:
        k = int(np.flatnonzero(self.sidebands == sideband)[0])
        return k * len(self.ports) + self.ports.index(port)

    def element(self, out_port: int, out_sideband: int, in_port: int, in_sideband: int) -> complex:
        return complex(
            self.s[self.index(out_port, out_sideband), self.index(in_port, in_sideband)],
        )

    def sideband_frequency(self, sideband: int) -> float:
        return self.f_signal + sideband * self.f_pump

    def photon_balance(self, in_port: int, in_sideband: int = 0) -> float:
        """Signed photon flux leaving all ports per photon sent into one input."""
        column = self.s[:, self.index(in_port, in_sideband)]
        signs = np.repeat(np.sign(self.f_signal + self.sidebands * self.f_pump), len(self.ports))
        return float(np.sum(signs * np.abs(column) ** 2))


@dataclass(frozen=True)
class GainRow:
    f_signal: float
    s21_on: complex
    s21_off: complex
    s_idler: complex
    converged: bool = True
    reason: str | None = None

    @property
    def gain_db(self) -> float:
        if not self.converged:
            return float("nan")
        return float(20 * np.log10(abs(self.s21_on)) - 20 * np.log10(abs(self.s21_off)))

    @classmethod
    def failed(cls, f_signal: float, reason: str) -> "GainRow":
        nan = complex(np.nan, np.nan)
        return cls(f_signal, nan, nan, nan, converged=False, reason=reason)


@dataclass
class GainResult:
    rows: list[GainRow]
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([r.f_signal for r in self.rows])

    @property
    def gain_db(self) -> np.ndarray:
        return np.array([r.gain_db for r in self.rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "f_signal_hz": self.frequencies,
                "gain_db": self.gain_db,
                "s21_on_re": [r.s21_on.real for r in self.rows],
                "s21_on_im": [r.s21_on.imag for r in self.rows],
                "s21_off_re": [r.s21_off.real for r in self.rows],
                "s21_off_im": [r.s21_off.imag for r in self.rows],
                "idler_re": [r.s_idler.real for r in self.rows],
                "idler_im": [r.s_idler.imag for r in self.rows],
                "converged": [r.converged for r in self.rows],
            },
            columns=GAIN_COLUMNS,
        )

    @classmethod
    def failed(cls, frequencies: list[float], reason: str) -> "GainResult":
        return cls(
            rows=[GainRow.failed(f, reason) for f in frequencies],
            stats={"converged": False, "failure": reason},
        )


@dataclass
class PowerGainMap:
    """Gain (dB) indexed by (pump amplitude, signal frequency); NaN where unsolved."""

    pump_amplitudes: np.ndarray
    frequencies: np.ndarray
    results: list[GainResult]

    @property
    def gain_db(self) -> np.ndarray:
        return np.vstack([r.gain_db for r in self.results])

    @property
    def converged(self) -> np.ndarray:
        return np.array([[row.converged for row in r.rows] for r in self.results])

    def to_frame(self) -> pd.DataFrame:
        amplitudes, frequencies = np.meshgrid(
            self.pump_amplitudes,
            self.frequencies,
            indexing="ij",
        )
        return pd.DataFrame(
            {
                "pump_amplitude_a": amplitudes.ravel(),
                "f_signal_hz": frequencies.ravel(),
                "gain_db": self.gain_db.ravel(),
                "converged": self.converged.ravel(),
            },
        )

    def cut(self, f_signal: float) -> pd.DataFrame:
        """Gain against pump amplitude at the grid frequency nearest `f_signal`."""
        column = int(np.argmin(np.abs(self.frequencies - f_signal)))
        return pd.DataFrame(
            {
                "pump_amplitude_a": self.pump_amplitudes,
                "f_signal_hz": self.frequencies[column],
                "gain_db": self.gain_db[:, column],
                "converged": self.converged[:, column],
            },
        )
