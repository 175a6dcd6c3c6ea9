from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from dnlsist import constants
from dnlsist.errors import ConfigError
from dnlsist.profiles import DEFAULT_PROFILE, PROFILES
from dnlsist.utils import clamp


@dataclass(slots=True)
class RunConfig:
    L: float = 20.0
    Nx: int = 1024
    Z: float = 40.0
    Nz: int = 2048
    potential: dict[str, Any] = field(default_factory=lambda: dict(DEFAULT_PROFILE))
    times: list[float] = field(default_factory=lambda: [0.5])
    solver_tol: float = constants.SOLVER_TOL
    roundtrip_tol: float = constants.ROUNDTRIP_TOL
    unitarity_tol: float = constants.UNITARITY_TOL
    gluing_tol: float = constants.GLUING_TOL
    relation_tol: float = constants.RELATION_TOL
    edge_floor: float = constants.EDGE_FLOOR
    decay_floor: float = constants.DECAY_FLOOR
    a_floor: float = constants.A_FLOOR
    gmres_restart: int = constants.GMRES_RESTART
    neumann_threshold: float = constants.NEUMANN_THRESHOLD
    jost_order: int = 4
    z_im: float | None = None  # winding rectangle height, None means Z
    winding_samples: int = constants.WINDING_SAMPLES
    pde_cfl: float = constants.PDE_CFL
    nyquist_safety: float = constants.NYQUIST_SAFETY
    threads: int | None = None
    deterministic: bool = False
    fault_injection: dict[str, float] = field(default_factory=dict)

    @property
    def winding_height(self) -> float:
        return self.Z if self.z_im is None else self.z_im

    @property
    def worker_threads(self) -> int | None:
        return 1 if self.deterministic else self.threads

    def tolerances(self) -> dict[str, float]:
        return {
            "solver_tol": self.solver_tol,
            "roundtrip_tol": self.roundtrip_tol,
            "unitarity_tol": self.unitarity_tol,
            "gluing_tol": self.gluing_tol,
            "relation_tol": self.relation_tol,
        }

    def validate(self) -> RunConfig:
        for name, tol in self.tolerances().items():
            if not tol > 0:
                raise ConfigError(f"{name} must be positive, got {tol}")
        if not all(math.isfinite(t) for t in self.times):
            raise ConfigError(f"times must be finite, got {self.times}")
        for name in ("Nx", "Nz"):
            n = getattr(self, name)
            if n < 8 or n & (n - 1):
                raise ConfigError(f"{name} must be a power of two >= 8, got {n}")
        if not (self.L > 0 and self.Z > 0):
            raise ConfigError(f"grid extents must be positive, got L={self.L}, Z={self.Z}")
        if self.jost_order not in (2, 4):
            raise ConfigError(f"jost_order must be 2 or 4, got {self.jost_order}")
        return self


def _coerce_bool(val, default: bool) -> bool:
    if isinstance(val, bool):
        return val
    return default


def _coerce_int(val, default: int, lo: int, hi: int) -> int:
    if isinstance(val, bool):
        return default
    try:
        num = int(val)
    except Exception:
        return default
    return int(clamp(num, lo, hi))


def _coerce_float(val, default: float) -> float:
    if isinstance(val, bool):
        return default
    try:
        num = float(val)
    except Exception:
        return default
    return num if math.isfinite(num) else default


def _coerce_optional_float(val) -> float | None:
    if val is None or isinstance(val, bool):
        return None
    try:
        return float(val)
    except Exception:
        return None


def _coerce_threads(val) -> int | None:
    if val is None:
        return None
    return _coerce_int(val, 1, 1, 1024)


def _coerce_times(val) -> list[float]:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        val = [val]
    if not isinstance(val, list):
        return [0.5]
    out: list[float] = []
    for t in val:
        if isinstance(t, bool):
            raise ConfigError(f"times entries must be numbers, got {t!r}")
        try:
            out.append(float(t))
        except Exception as exc:
            raise ConfigError(f"times entries must be numbers, got {t!r}") from exc
    return out


def _coerce_potential(val) -> dict[str, Any]:
    if val is None:
        return dict(DEFAULT_PROFILE)
    if not isinstance(val, dict) or not isinstance(val.get("kind"), str):
        raise ConfigError("potential must be an object with a string 'kind'")
    kind = val["kind"].lower()
    if kind != "csv" and kind not in PROFILES:
        known = ", ".join(sorted([*PROFILES, "csv"]))
        raise ConfigError(f"unknown potential kind {kind!r} (known: {known})")
    if kind == "csv" and not isinstance(val.get("path"), str):
        raise ConfigError("csv potential needs a 'path'")
    return {**val, "kind": kind}


def _coerce_faults(val) -> dict[str, float]:
    if not isinstance(val, dict):
        return {}
    faults: dict[str, float] = {}
    for key, num in val.items():
        if isinstance(key, str) and isinstance(num, (int, float)) and not isinstance(num, bool):
            faults[key] = float(num)
    return faults


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    grids = data.get("grids", {})
    if not isinstance(grids, dict):
        grids = {}
    tols = data.get("tolerances", {})
    if not isinstance(tols, dict):
        tols = {}
    merged = {**data, **grids, **tols}
    defaults = RunConfig()

    def num(key: str) -> float:
        return _coerce_float(merged.get(key), getattr(defaults, key))

    cfg = RunConfig(
        L=num("L"),
        Nx=_coerce_int(merged.get("Nx"), defaults.Nx, 0, 1 << 20),
        Z=num("Z"),
        Nz=_coerce_int(merged.get("Nz"), defaults.Nz, 0, 1 << 20),
        potential=_coerce_potential(merged.get("potential")),
        times=_coerce_times(merged.get("times", defaults.times)),
        solver_tol=num("solver_tol"),
        roundtrip_tol=num("roundtrip_tol"),
        unitarity_tol=num("unitarity_tol"),
        gluing_tol=num("gluing_tol"),
        relation_tol=num("relation_tol"),
        edge_floor=num("edge_floor"),
        decay_floor=num("decay_floor"),
        a_floor=num("a_floor"),
        gmres_restart=_coerce_int(merged.get("gmres_restart"), defaults.gmres_restart, 5, 500),
        neumann_threshold=num("neumann_threshold"),
        jost_order=_coerce_int(merged.get("jost_order"), defaults.jost_order, 2, 4),
        z_im=_coerce_optional_float(merged.get("z_im")),
        winding_samples=_coerce_int(
            merged.get("winding_samples"), defaults.winding_samples, 16, 1 << 16
        ),
        pde_cfl=num("pde_cfl"),
        nyquist_safety=num("nyquist_safety"),
        threads=_coerce_threads(merged.get("threads")),
        deterministic=_coerce_bool(merged.get("deterministic"), defaults.deterministic),
        fault_injection=_coerce_faults(merged.get("fault_injection")),
    )
    return cfg.validate()


def load_config(path: Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except Exception as exc:
        raise ConfigError(f"could not read config {path}: {exc}") from exc
    cfg = config_from_dict(data)
    src = cfg.potential.get("path")
    if cfg.potential["kind"] == "csv" and not Path(src).is_absolute():
        # tables are looked up next to the config file
        cfg.potential = {**cfg.potential, "path": str(path.parent / src)}
    return cfg


def save_config(cfg: RunConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(asdict(cfg), indent=2))
