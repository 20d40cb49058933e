"""
Run configuration: key=value text with [sections], validated strictly by pydantic
"""

import logging
import re
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..core.config import LabConfig, ConfigParseError, ConfigValidationError
from ..core.eulerian import from_momentum
from ..core.models import BlowupPolicy, TimeStepper
from ..core.spectral import PeriodicField, PeriodicGrid, resample, trig_polynomial
from .io import read_snapshot

logger = logging.getLogger(__name__)

ROOT_KEYS = ("solver", "seed", "sobolev_s")
SECTIONS = ("grid", "time", "initial", "probes", "output", "analyticity", "blowup")

_SECTION = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_MODE = re.compile(r"^\(\s*([^,()]+)\s*,\s*([^,()]+)\s*,\s*([^,()]+)\s*\)$")


def parse_modes(text: str) -> List[Tuple[int, float, float]]:
    """
    Parse "(k, a, b) + (k, a, b) + ..." into (wavenumber, cos, sin) triples.

    Raises:
        ValueError: On malformed terms or negative wavenumbers
    """
    modes = []
    for term in text.split("+"):
        match = _MODE.match(term.strip())
        if not match:
            raise ValueError(f"malformed mode term '{term.strip()}', expected (k, a, b)")
        k_text, a_text, b_text = match.groups()
        k = int(k_text)
        if k < 0:
            raise ValueError(f"wavenumber must be nonnegative, got {k}")
        modes.append((k, float(a_text), float(b_text)))
    return modes


def format_modes(modes: List[Tuple[int, float, float]]) -> str:
    return " + ".join(f"({k}, {a!r}, {b!r})" for k, a, b in modes)


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSettings(Section):
    n: int = Field(default=LabConfig.DEFAULT_GRID_POINTS, ge=LabConfig.MIN_GRID_POINTS)

    @field_validator("n")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("grid size must be even")
        return value


class TimeSettings(Section):
    dt: Optional[float] = Field(default=None, gt=0)
    cfl: Optional[float] = Field(default=None, gt=0, le=1)
    t_end: float = Field(gt=0)
    max_steps: int = Field(default=LabConfig.DEFAULT_MAX_STEPS, gt=0)

    @model_validator(mode="after")
    def _one_clock(self):
        if self.dt is not None and self.cfl is not None:
            raise ValueError("dt and cfl are mutually exclusive, set only one")
        if self.dt is None and self.cfl is None:
            raise ValueError("one of dt or cfl is required")
        return self

    def stepper(self) -> TimeStepper:
        return TimeStepper(dt=self.dt, cfl=self.cfl, t_end=self.t_end, max_steps=self.max_steps)


class InitialSettings(Section):
    kind: Literal["fourier", "momentum", "file", "profile"]
    modes: Optional[List[Tuple[int, float, float]]] = None
    path: Optional[str] = None
    name: Optional[str] = None

    @field_validator("modes", mode="before")
    @classmethod
    def _parse_modes(cls, value: Any):
        if isinstance(value, str):
            return parse_modes(value)
        return value

    @model_validator(mode="after")
    def _source_present(self):
        if self.kind in ("fourier", "momentum") and not self.modes:
            raise ValueError(f"kind={self.kind} needs modes")
        if self.kind == "file" and not self.path:
            raise ValueError("kind=file needs path")
        if self.kind == "profile" and not self.name:
            raise ValueError("kind=profile needs name")
        return self


class ProbeSettings(Section):
    stride: int = Field(default=1, ge=1)


class OutputSettings(Section):
    dir: Optional[str] = None


class AnalyticitySettings(Section):
    enabled: bool = False
    s: float = Field(default=0.1, gt=0, lt=1)
    k_max: int = Field(default=LabConfig.ES_K_MAX, ge=5)


class BlowupSettings(Section):
    c1_threshold: float = Field(default=LabConfig.C1_THRESHOLD, gt=0)
    dt_min: float = Field(default=LabConfig.DT_MIN, gt=0)

    def policy(self) -> BlowupPolicy:
        return BlowupPolicy(c1_threshold=self.c1_threshold, dt_min=self.dt_min)


class RunConfig(Section):
    """A complete, validated experiment description."""
    solver: Literal["eulerian", "flowmap", "conservative"] = "eulerian"
    seed: int = 0
    sobolev_s: float = Field(
        default=LabConfig.DEFAULT_SOBOLEV_S,
        ge=LabConfig.SOBOLEV_S_RANGE[0],
        le=LabConfig.SOBOLEV_S_RANGE[1],
    )
    grid: GridSettings = GridSettings()
    time: TimeSettings
    initial: InitialSettings
    probes: ProbeSettings = ProbeSettings()
    output: OutputSettings = OutputSettings()
    analyticity: AnalyticitySettings = AnalyticitySettings()
    blowup: BlowupSettings = BlowupSettings()

    @model_validator(mode="after")
    def _resolvable(self):
        for k, _, _ in self.initial.modes or []:
            if k >= self.grid.n // 2:
                raise ValueError(f"mode {k} is not resolved on a grid of {self.grid.n} points")
        return self


def _raise_validation(error: ValidationError):
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"])
    message = first["msg"]
    if first["type"] == "extra_forbidden":
        message = "unknown key"
    elif first["type"] == "missing":
        message = "required key is missing"
    if not key:
        # Only the cross-section resolvability check reports at the root
        key = "initial.modes"
    raise ConfigValidationError(message, key=key)


def validate_config(values: Dict[str, Any]) -> RunConfig:
    """Validate a nested dict, translating pydantic errors into ConfigValidationError."""
    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        _raise_validation(e)


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a run configuration.

    Args:
        text: key=value lines; [section] headers; '#' starts a comment

    Returns:
        Validated RunConfig with defaults filled in

    Raises:
        ConfigParseError: Malformed line, duplicate key or key outside a known place
        ConfigValidationError: Unknown key, bad value or violated invariant
    """
    values: Dict[str, Any] = {}
    section: Optional[str] = None

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = _SECTION.match(line)
        if header:
            section = header.group(1)
            if section in values and not isinstance(values[section], dict):
                raise ConfigParseError(f"section '{section}' clashes with a root key", line=number)
            values.setdefault(section, {})
            continue
        entry = _ENTRY.match(line)
        if not entry:
            raise ConfigParseError(f"expected 'key = value' or '[section]', got '{line}'", line=number)
        key, value = entry.group(1), entry.group(2).strip()
        target = values if section is None else values[section]
        if key in target:
            raise ConfigParseError(f"duplicate key '{key}'", line=number)
        target[key] = value

    logger.debug(f"Parsed config keys: {sorted(values)}")
    return validate_config(values)


def load_config(path: str) -> RunConfig:
    """Read and parse a configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"cannot read config {path}: {e}")
    return parse_config(text)


def render_config(config: RunConfig) -> str:
    """Write a RunConfig back in the key=value grammar."""
    lines = [f"solver = {config.solver}", f"seed = {config.seed}", f"sobolev_s = {config.sobolev_s!r}"]
    dumped = config.model_dump()
    for section in SECTIONS:
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in dumped[section].items():
            if value is None:
                continue
            if key == "modes":
                value = format_modes(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def with_overrides(config: RunConfig, **overrides: Any) -> RunConfig:
    """
    Copy of a config with dotted-key overrides, revalidated.

    Example:
        with_overrides(cfg, **{"time.t_end": 0.2, "grid.n": 128, "solver": "flowmap"})
    """
    values = config.model_dump()
    for dotted, value in overrides.items():
        target = values
        *parents, leaf = dotted.split(".")
        for part in parents:
            target = target[part]
        target[leaf] = value
    return validate_config(values)


# Named momentum profiles m0(x) for kind = profile
PROFILES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "smooth": lambda x: 1.0 / (1.0 - 0.8 * np.cos(2 * np.pi * x)),
}


def build_initial(config: RunConfig) -> PeriodicField:
    """
    Initial velocity u0 on the configured grid.

    fourier modes define u0 directly; momentum modes and profiles define
    m0 and u0 = Lambda^{-2} m0; file snapshots are resampled onto grid.n.

    Raises:
        ConfigValidationError: Unknown profile name
        InvalidFieldError: Unreadable snapshot file
    """
    grid = PeriodicGrid(config.grid.n)
    initial = config.initial
    if initial.kind == "fourier":
        return trig_polynomial(grid, initial.modes)
    if initial.kind == "momentum":
        return from_momentum(trig_polynomial(grid, initial.modes))
    if initial.kind == "profile":
        if initial.name not in PROFILES:
            raise ConfigValidationError(
                f"unknown profile '{initial.name}', choose from {sorted(PROFILES)}", key="initial.name"
            )
        return from_momentum(PeriodicField.from_function(grid, PROFILES[initial.name]))
    loaded = read_snapshot(Path(initial.path))
    if loaded.grid != grid:
        logger.info(f"Resampling {initial.path} from n={loaded.grid.n} to n={grid.n}")
        loaded = resample(loaded, grid)
    return loaded
