from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from dnlsist import constants
from dnlsist.errors import ConfigError, ReflectionError
from dnlsist.grids import SpatialGrid, SpectralGrid
from dnlsist.services.direct_scattering import ScatteringData

logger = logging.getLogger(__name__)


def write_potential(path: Path, grid: SpatialGrid, values: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([grid.nodes, np.real(values), np.imag(values)])
    np.savetxt(
        path, table, delimiter=",", header=constants.POTENTIAL_HEADER, comments="", fmt="%.17g"
    )
    logger.debug("wrote %d potential samples to %s", grid.Nx, path)
    return path


def read_potential(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """(x, u) columns of a potential CSV."""
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read potential table {path}: {exc}") from exc
    if table.shape[1] != 3:
        raise ConfigError(f"{path}: expected columns {constants.POTENTIAL_HEADER}")
    return table[:, 0], table[:, 1] + 1j * table[:, 2]


def write_scattering(path: Path, data: ScatteringData) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack(
        [
            data.grid.nodes,
            data.a.real,
            data.a.imag,
            data.r_plus.real,
            data.r_plus.imag,
            data.r_minus.real,
            data.r_minus.imag,
        ]
    )
    np.savetxt(
        path, table, delimiter=",", header=constants.SCATTERING_HEADER, comments="", fmt="%.17g"
    )
    return path


def read_scattering(path: Path, grid: SpectralGrid) -> dict[str, np.ndarray]:
    """Columns a, r_plus and r_minus of a scattering CSV, checked against `grid`."""
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ReflectionError(f"cannot read scattering table {path}: {exc}") from exc
    if table.shape[1] != 7:
        raise ReflectionError(f"{path}: expected columns {constants.SCATTERING_HEADER}")
    if table.shape[0] != grid.Nz or not np.allclose(table[:, 0], grid.nodes, atol=1e-12):
        raise ReflectionError(
            f"{path}: z column does not match the configured grid (Z={grid.Z}, Nz={grid.Nz})"
        )
    return {
        "a": table[:, 1] + 1j * table[:, 2],
        "r_plus": table[:, 3] + 1j * table[:, 4],
        "r_minus": table[:, 5] + 1j * table[:, 6],
    }


def scattering_metadata(data: ScatteringData, **extra: Any) -> dict[str, Any]:
    return {
        "grid": {"Z": data.grid.Z, "Nz": data.grid.Nz},
        "a_inf": [data.a_inf.real, data.a_inf.imag],
        "c0_sq": data.c0_sq,
        "parity_defect": data.parity_defect,
        "unresolved_nodes": data.unresolved,
        **extra,
    }


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=_jsonable), encoding="utf-8")
    return path


def read_json(path: Path) -> dict[str, Any]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")
