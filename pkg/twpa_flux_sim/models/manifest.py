"""Run manifests: everything needed to reproduce a sweep, validated with pydantic.

A manifest file is either a JSON object or flat `key=value` lines, with `#` comments.
Values are JSON-decoded when possible (`points=523`, `pump_amplitudes=[1e-7, 2e-7]`) and
taken as strings otherwise. Dotted keys address nested sections:

    preset=table1
    grid.f_pump=4e9
    drive.pump_amplitude=1.02e-6
    drive.flux_ratio=0
    solver.newton_tol=1e-10
"""

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from twpa_flux_sim._types import CapacitancePlacement, FluxChokePlacement
from twpa_flux_sim.constants import presets
from twpa_flux_sim.constants.paths import DEFAULT_OUTPUT_DIR
from twpa_flux_sim.exceptions import ManifestError
from twpa_flux_sim.models.harmonic import HarmonicGrid, SolverConfig


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DeviceSettings(_Section):
    """Overrides applied on top of the preset device."""

    n_cells: int | None = Field(default=None, ge=1)
    tan_delta: float | None = Field(default=None, ge=0)
    coupling_k: float | None = Field(default=None, ge=-1, le=1)
    alternate_polarity: bool | None = None
    cj_placement: CapacitancePlacement | None = None
    lg_placement: FluxChokePlacement | None = None

    def overrides(self) -> dict[str, Any]:
        return self.model_dump(exclude_none=True)


class GridSettings(_Section):
    f_pump: float | None = Field(default=None, gt=0)
    n_harmonics: int = Field(default=presets.N_HARMONICS, ge=1)
    n_modulation: int = Field(default=presets.N_MODULATION, ge=1)
    oversampling: int = Field(default=4, ge=1)

    def harmonic_grid(self) -> HarmonicGrid:
        if self.f_pump is None:
            raise ManifestError("grid.f_pump (--fp) is required")
        return HarmonicGrid(
            f_pump=self.f_pump,
            n_harmonics=self.n_harmonics,
            n_modulation=self.n_modulation,
            oversampling=self.oversampling,
        )


class DriveSettings(_Section):
    pump_amplitude: float = Field(default=0.0, ge=0)
    flux_ratio: float | None = None
    i_dc: float | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _one_flux(self) -> "DriveSettings":
        if self.flux_ratio is not None and self.i_dc is not None:
            raise ValueError("give either flux_ratio or i_dc, not both")
        return self


class BandSettings(_Section):
    start: float = Field(default=presets.BAND_START_HZ, gt=0)
    stop: float = Field(default=presets.BAND_STOP_HZ, gt=0)
    points: int = Field(default=presets.BAND_POINTS, ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> "BandSettings":
        if self.stop <= self.start:
            raise ValueError(f"band stop {self.stop} must exceed start {self.start}")
        return self

    def frequencies(self) -> list[float]:
        step = (self.stop - self.start) / (self.points - 1)
        return [self.start + i * step for i in range(self.points)]


class SweepSettings(_Section):
    pump_amplitudes: list[float] = Field(default_factory=list)
    flux_ratios: list[float] = Field(default_factory=list)
    cuts: list[float] = Field(default_factory=lambda: [presets.POWER_CUT_HZ])


class RunManifest(_Section):
    preset: Literal["table1"] | None = None
    netlist: Path | None = None
    device: DeviceSettings = DeviceSettings()
    grid: GridSettings = GridSettings()
    drive: DriveSettings = DriveSettings()
    band: BandSettings = BandSettings()
    sweep: SweepSettings = SweepSettings()
    solver: SolverConfig = Field(default_factory=SolverConfig)
    out: Path = DEFAULT_OUTPUT_DIR
    threads: int = Field(default=1, ge=1)
    # Reserved: every computation is deterministic; no random seeds are drawn.
    deterministic: bool = True
    oracle: bool = False

    @model_validator(mode="after")
    def _one_device(self) -> "RunManifest":
        if self.preset is not None and self.netlist is not None:
            raise ValueError("give either preset or netlist, not both")
        return self

    def require_flux(self) -> tuple[str, float]:
        """("flux_ratio" | "i_dc", value); exactly one must be set for gain runs."""
        if self.drive.flux_ratio is not None:
            return "flux_ratio", self.drive.flux_ratio
        if self.drive.i_dc is not None:
            return "i_dc", self.drive.i_dc
        raise ManifestError("One of drive.flux_ratio (--flux) or drive.i_dc (--idc) is required")


def parse_manifest_text(text: str) -> dict[str, Any]:
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ManifestError(f"Manifest is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ManifestError("JSON manifest must be an object")
        return data

    flat: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ManifestError(f"line {lineno}: expected key=value, got {raw!r}")
        flat[key.strip()] = _decode(value.strip())
    return nest(flat)


def nest(flat: dict[str, Any]) -> dict[str, Any]:
    """Expand dotted keys into nested dictionaries."""
    out: dict[str, Any] = {}
    for key, value in flat.items():
        *parents, leaf = key.split(".")
        node = out
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ManifestError(f"{key}: {part} is both a value and a section")
            node = child
        node[leaf] = value
    return out


def merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_manifest(
    data: dict[str, Any],
    overrides: dict[str, Any] | None = None,
) -> RunManifest:
    """Validate `data` with flat dotted-key `overrides` (CLI flags) applied on top."""
    merged = merge(data, nest(overrides or {}))
    try:
        return RunManifest.model_validate(merged)
    except ValidationError as e:
        raise ManifestError(_describe(e)) from e


def load_manifest(path: Path, overrides: dict[str, Any] | None = None) -> RunManifest:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ManifestError(f"Cannot read manifest {path}: {e}") from e
    return build_manifest(parse_manifest_text(text), overrides)


def _decode(value: str) -> Any:
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def _describe(error: ValidationError) -> str:
    problems = [
        f"{'.'.join(str(p) for p in item['loc']) or 'manifest'}: {item['msg']}"
        for item in error.errors()
    ]
    return "Invalid manifest: " + "; ".join(problems)
