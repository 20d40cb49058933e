"""
Pydantic models for solver settings, diagnostics records and experiment reports
"""

import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import LabConfig


class LabModel(BaseModel):
    """Base model; non-finite floats are written as NaN/Infinity so reports round-trip."""
    model_config = ConfigDict(ser_json_inf_nan="constants")


# Solver settings
class TimeStepper(LabModel):
    """Explicit RK4 clock: fixed dt or CFL-adaptive, never both."""
    model_config = ConfigDict(extra="forbid")

    scheme: Literal["rk4"] = "rk4"
    dt: Optional[float] = Field(default=None, gt=0)
    cfl: Optional[float] = Field(default=None, gt=0, le=1)
    t_end: float = Field(gt=0)
    max_steps: int = Field(default=LabConfig.DEFAULT_MAX_STEPS, gt=0)

    @model_validator(mode="after")
    def _one_clock(self):
        if (self.dt is None) == (self.cfl is None):
            raise ValueError("exactly one of dt and cfl must be set")
        return self


class BlowupPolicy(LabModel):
    """Thresholds that turn an integration into a blow-up outcome."""
    c1_threshold: float = Field(default=LabConfig.C1_THRESHOLD, gt=0)
    dt_min: float = Field(default=LabConfig.DT_MIN, gt=0)


# Diagnostics
DIAGNOSTIC_COLUMNS = (
    "t", "h1", "h2", "h1_energy", "mean_u", "min_m", "c1", "hs",
    "orbit_residual", "persistence_ratio",
)


class DiagnosticsRecord(LabModel):
    """Per-probe time series; undefined entries are stored as nan."""
    sobolev_s: float = LabConfig.DEFAULT_SOBOLEV_S
    t: List[float] = []
    h1: List[float] = []
    h2: List[float] = []
    h1_energy: List[float] = []
    mean_u: List[float] = []
    min_m: List[float] = []
    c1: List[float] = []
    hs: List[float] = []
    orbit_residual: List[float] = []
    persistence_ratio: List[float] = []

    def append(self, **values: float):
        if self.t and values["t"] <= self.t[-1]:
            raise ValueError(f"probe time {values['t']} does not follow {self.t[-1]}")
        for column in DIAGNOSTIC_COLUMNS:
            getattr(self, column).append(float(values.get(column, math.nan)))

    def __len__(self) -> int:
        return len(self.t)

    def rows(self) -> List[List[float]]:
        return [[getattr(self, column)[i] for column in DIAGNOSTIC_COLUMNS] for i in range(len(self.t))]

    def relative_drift(self, column: str) -> float:
        """max |q(t) - q(0)| / max(|q(0)|, 1e-300); nan if q(0) is undefined."""
        series = getattr(self, column)
        if not series or math.isnan(series[0]):
            return math.nan
        reference = series[0]
        scale = max(abs(reference), 1e-300)
        return max(abs(value - reference) for value in series) / scale


class BiHamiltonianReport(LabModel):
    """Residuals of the Hamiltonian evolution identities at one time."""
    time: float = 0.0
    residual_b2: float = Field(ge=0)
    residual_b1: float = Field(ge=0)
    residual_b1_energy: float = Field(ge=0)
    gateaux_error_h1: float = Field(ge=0)
    gateaux_error_h2: float = Field(ge=0)
    mean_defect: float = 0.0
    kernel_constant: float = 0.0


# Analyticity
class EsNormConfig(LabModel):
    """Truncation settings for the E_s norm."""
    s: float = Field(gt=0, lt=1)
    k_max: int = Field(default=LabConfig.ES_K_MAX, ge=5)
    include_zero: bool = False


class EsNormProfile(LabModel):
    value: float
    argmax: int
    truncated: bool


class RadiusEstimate(LabModel):
    """Exponential-decay fit of a field's Fourier tail."""
    time: Optional[float] = None
    sigma: float = Field(ge=0)
    fit_quality: float = Field(ge=0, le=1)
    tail_floor: float = math.nan
    modes_used: int = 0
    defined: bool = True
    lower_bound: bool = False


class EsPropertyReport(LabModel):
    s: float
    s_prime: float
    samples: int
    product_constant: float
    dx_constant: float
    lambda_ratio: float
    lambda_dx_ratio: float
    worst_product_pair: Optional[List[int]] = None
    worst_dx_sample: Optional[int] = None
    seed: Optional[int] = None


class LipschitzReport(LabModel):
    s: float
    s_prime: float
    radius: float
    trials: int
    seed: int
    constant: float
    scaled_constant: float = 0.0
    skipped: int = 0
    worst_trial: Optional[int] = None


class SourceCheckReport(LabModel):
    s: float
    s_prime: float
    zero_state_norm: float
    growth_ratio: float
    samples: int


# Harness reports
class RunSummary(LabModel):
    """Outcome of one harness run, written as run.json."""
    outcome: Literal["completed", "blowup", "breakdown"]
    solver: str
    final_time: float
    t_end: float
    reason: Optional[str] = None
    drifts: Dict[str, float] = {}
    files: Dict[str, str] = {}
    config: Dict = {}
    version: str


class CompareReport(LabModel):
    norm: Literal["sup", "l2", "hs"]
    times: List[float]
    distances: List[float]
    max_distance: float


class ConvergenceReport(LabModel):
    axis: Literal["dt", "n"]
    levels: List[float]
    errors: List[float]
    ratios: List[float]
    order: Optional[float] = None


class PerturbationReport(LabModel):
    seed: int
    amplitudes: List[float]
    distances: List[float]
    normalized: List[float]
    monotone: bool


class BiHamiltonianStudy(LabModel):
    """Bi-Hamiltonian checks along a run; failed probes keep their error message."""
    n: int
    reports: List[BiHamiltonianReport] = []
    failures: Dict[str, str] = {}


class RadiusTrack(LabModel):
    estimates: List[RadiusEstimate] = []
    es_norm: Optional[EsNormProfile] = None


class CkCheckReport(LabModel):
    lipschitz: List[LipschitzReport] = []
    source: List[SourceCheckReport] = []


class CommandSummary(LabModel):
    """Top-level run.json of a study subcommand."""
    command: str
    status: Literal["completed", "blowup", "breakdown", "failed"]
    message: Optional[str] = None
    files: Dict[str, str] = {}
    config: Dict = {}
    version: str


class EsPropsStudy(LabModel):
    seed: int
    n: int
    reports: List[EsPropertyReport] = []
