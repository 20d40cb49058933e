"""
CSV and JSON emission for harness runs, with readers for every format written
"""

import logging
from pathlib import Path
from typing import Dict, Type, TypeVar

import numpy as np
from pydantic import BaseModel

from ..core.config import LabConfig, InvalidFieldError
from ..core.models import DIAGNOSTIC_COLUMNS, DiagnosticsRecord
from ..core.spectral import PeriodicField, PeriodicGrid

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = "x,value"
LAGRANGIAN_HEADER = "x,eta,eta_jacobian,zeta"
DIAGNOSTICS_HEADER = ",".join(DIAGNOSTIC_COLUMNS)

ModelT = TypeVar("ModelT", bound=BaseModel)


def _write_table(path: Path, header: str, table: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt=LabConfig.CSV_FORMAT)
    logger.debug(f"Wrote {path}")
    return path


def _read_table(path: Path, header: str) -> np.ndarray:
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        first = handle.readline().strip()
    if first != header:
        raise InvalidFieldError(f"{path}: expected header '{header}', found '{first}'")
    return np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)


def snapshot_name(index: int, t: float) -> str:
    """File name of the index-th probe; the index keeps names unique for close probe times."""
    return f"u_{index:05d}_t{t:.6f}.csv"


def write_snapshot(path: Path, u: PeriodicField) -> Path:
    """Field snapshot: header "x,value", one row per grid point."""
    return _write_table(Path(path), SNAPSHOT_HEADER, np.column_stack([u.grid.points, u.samples]))


def read_snapshot(path: Path) -> PeriodicField:
    """
    Read a field snapshot back onto its grid.

    Raises:
        InvalidFieldError: Wrong header, non-uniform x column or bad grid size
    """
    table = _read_table(Path(path), SNAPSHOT_HEADER)
    grid = PeriodicGrid(table.shape[0])
    if not np.allclose(table[:, 0], grid.points, atol=1e-12):
        raise InvalidFieldError(f"{path}: x column is not the uniform grid of {grid.n} points")
    return PeriodicField(grid, table[:, 1])


def lagrangian_name(index: int, t: float) -> str:
    return f"eta_{index:05d}_t{t:.6f}.csv"


def write_lagrangian(path: Path, rows: np.ndarray) -> Path:
    return _write_table(Path(path), LAGRANGIAN_HEADER, rows)


def read_lagrangian(path: Path) -> np.ndarray:
    return _read_table(Path(path), LAGRANGIAN_HEADER)


def write_diagnostics(path: Path, record: DiagnosticsRecord) -> Path:
    """Diagnostics CSV; undefined entries are written as nan."""
    table = np.array(record.rows(), dtype=float).reshape(len(record), len(DIAGNOSTIC_COLUMNS))
    return _write_table(Path(path), DIAGNOSTICS_HEADER, table)


def read_diagnostics(path: Path, sobolev_s: float = LabConfig.DEFAULT_SOBOLEV_S) -> DiagnosticsRecord:
    table = _read_table(Path(path), DIAGNOSTICS_HEADER)
    columns: Dict[str, list] = {
        name: [float(value) for value in table[:, index]] for index, name in enumerate(DIAGNOSTIC_COLUMNS)
    }
    return DiagnosticsRecord(sobolev_s=sobolev_s, **columns)


def write_json(path: Path, model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    logger.debug(f"Wrote {path}")
    return path


def read_json(path: Path, model: Type[ModelT]) -> ModelT:
    return model.model_validate_json(Path(path).read_text(encoding="utf-8"))
