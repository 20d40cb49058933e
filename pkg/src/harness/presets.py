"""
Named experiment presets, stored in the run-config grammar
"""

from typing import Dict

from ..core.config import ConfigValidationError
from .settings import RunConfig, parse_config

PRESETS: Dict[str, str] = {
    "constant": """
solver = eulerian

[grid]
n = 32

[time]
dt = 0.01
t_end = 1.0

[initial]
kind = fourier
modes = (0, 1.5, 0)
""",
    # Sign-condition data: m0 = 1 + cos 2 pi x touches zero at x = 1/2
    "reference": """
solver = eulerian

[grid]
n = 256

[time]
dt = 1e-3
t_end = 1.0

[initial]
kind = momentum
modes = (0, 1, 0) + (1, 1, 0)

[probes]
stride = 50
""",
    "positive": """
solver = eulerian

[grid]
n = 128

[time]
dt = 1e-3
t_end = 1.0

[initial]
kind = momentum
modes = (0, 1, 0) + (1, 0.5, 0)

[probes]
stride = 50
""",
    "smooth": """
solver = eulerian

[grid]
n = 128

[time]
dt = 1e-3
t_end = 0.25

[initial]
kind = profile
name = smooth

[probes]
stride = 50
""",
    "fast": """
solver = eulerian

[grid]
n = 64

[time]
dt = 1e-3
t_end = 0.5

[initial]
kind = momentum
modes = (0, 2, 0) + (1, 2, 0)

[probes]
stride = 100
""",
    "analytic-small": """
solver = eulerian

[grid]
n = 64

[time]
dt = 1e-3
t_end = 0.1

[initial]
kind = fourier
modes = (1, 0.1, 0)

[probes]
stride = 20

[analyticity]
enabled = true
s = 0.1
""",
    # m0 = 100 cos 2 pi x steepens until the C^1 norm passes 25 (it starts near 18)
    "sign-changing": """
solver = eulerian

[grid]
n = 128

[time]
cfl = 0.5
t_end = 1.0

[initial]
kind = momentum
modes = (1, 100, 0)

[probes]
stride = 20

[blowup]
c1_threshold = 25
""",
}


def preset(name: str) -> RunConfig:
    """
    Parsed configuration of a named preset.

    Raises:
        ConfigValidationError: Unknown preset name
    """
    if name not in PRESETS:
        raise ConfigValidationError(f"unknown preset '{name}', choose from {sorted(PRESETS)}", key="preset")
    return parse_config(PRESETS[name])
