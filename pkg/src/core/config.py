"""
Configuration management and exception hierarchy for the Novikov lab
"""

import os


class LabConfig:
    """Configuration settings for the numerical laboratory."""

    # Grid defaults
    DEFAULT_GRID_POINTS = 256
    MIN_GRID_POINTS = 8

    # Spectral calculus
    MAX_DERIVATIVE_ORDER = 8
    DEALIAS_FACTOR = 2
    REFINEMENT_FACTOR = 8
    SOBOLEV_S_RANGE = (-4.0, 8.0)

    # Diffeomorphism inversion (safeguarded Newton)
    ROOT_TOLERANCE = 1e-12
    ROOT_MAX_ITERATIONS = 100

    # Blow-up policy defaults
    C1_THRESHOLD = 1e3
    DT_MIN = 1e-10
    DEFAULT_MAX_STEPS = 1_000_000

    # Analyticity
    ES_K_MAX = 30
    ES_OVERFLOW = 1e300
    ES_TRUNCATION_RATIO = 1e-3
    SPECTRAL_NOISE_FLOOR = 1e-13
    RADIUS_MIN_MODES = 2
    RADIUS_MIN_WAVENUMBER = 2

    # Diagnostics
    DEFAULT_SOBOLEV_S = 3.0
    GATEAUX_EPSILON = 1e-5
    MOMENTUM_FLOOR = 1e-10

    # Output (env override for the harness)
    OUTPUT_DIR = os.getenv('NOVIKOV_LAB_OUT') or "novikov_out"
    CSV_FORMAT = "%.17g"

    # MCP server
    MCP_PORT = int(os.getenv('NOVIKOV_LAB_PORT') or 3090)


class LabException(Exception):
    """Base exception for all lab errors."""
    pass


class InvalidFieldError(LabException):
    """Raised when a field carries non-finite samples or a bad grid."""
    pass


class IncompatibleGridError(LabException):
    """Raised when fields living on different grids are combined."""
    pass


class UnsupportedOrderError(LabException):
    """Raised when a derivative order or Sobolev index is outside the supported range."""
    pass


class JacobianNonpositiveError(LabException):
    """Raised when a flow map stops being a diffeomorphism."""

    def __init__(self, message: str, min_jacobian: float = float("nan"), time: float = float("nan")):
        super().__init__(message)
        self.min_jacobian = min_jacobian
        self.time = time
        # Trajectory collected before the breakdown, attached by the integrators
        self.partial = None


class NonpositiveMomentumError(LabException):
    """Raised when a functional needs m > 0 and the momentum is not positive."""
    pass


class MomentumVanishesError(LabException):
    """Raised when a Hamiltonian operator needs 1/m and m touches zero."""
    pass


class BlowupDetectedError(LabException):
    """Raised when an integration trips the blow-up policy."""

    def __init__(self, message: str, last_state=None, time: float = float("nan"), reason: str = ""):
        super().__init__(message)
        self.last_state = last_state
        self.time = time
        self.reason = reason
        self.partial = None


class MaxStepsExceededError(LabException):
    """Raised when an integration needs more steps than allowed."""

    def __init__(self, message: str, last_state=None, time: float = float("nan")):
        super().__init__(message)
        self.last_state = last_state
        self.time = time
        self.partial = None


class ConfigParseError(LabException):
    """Raised when a run configuration cannot be parsed."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class ConfigValidationError(LabException):
    """Raised when a parsed configuration violates its invariants."""

    def __init__(self, message: str, key: str = ""):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class ProbeMisalignmentError(LabException):
    """Raised when two runs are compared at different probe times."""
    pass


class InsufficientLevelsError(LabException):
    """Raised when a convergence study has too few levels."""
    pass
