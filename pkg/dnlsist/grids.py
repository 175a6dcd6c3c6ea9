from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import signal

from dnlsist import constants
from dnlsist.errors import DecayError, GridError
from dnlsist.profiles import get_profile
from dnlsist.utils import integrate, spectral_derivative

logger = logging.getLogger(__name__)


def _check_count(name: str, n: int) -> None:
    if int(n) != n or n < 8 or int(n) & (int(n) - 1):
        raise GridError(f"{name} must be a power of two >= 8, got {n}")


@dataclass(frozen=True, slots=True)
class SpatialGrid:
    L: float
    Nx: int

    def __post_init__(self) -> None:
        _check_count("Nx", self.Nx)
        if not self.L > 0:
            raise GridError(f"L must be positive, got {self.L}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.Nx

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.Nx) - self.Nx // 2) * self.dx

    @property
    def origin_index(self) -> int:
        return self.Nx // 2


@dataclass(frozen=True, slots=True)
class SpectralGrid:
    Z: float
    Nz: int

    def __post_init__(self) -> None:
        _check_count("Nz", self.Nz)
        if not self.Z > 0:
            raise GridError(f"Z must be positive, got {self.Z}")

    @property
    def dz(self) -> float:
        return 2.0 * self.Z / self.Nz

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.Nz) - self.Nz // 2) * self.dz

    @property
    def zero_index(self) -> int:
        return self.Nz // 2


@dataclass(frozen=True, slots=True)
class NormBundle:
    l1: float
    l2: float
    l3: float
    linf: float
    l2_weighted: float
    h11: float
    dxl1: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.__slots__}


@dataclass(frozen=True, slots=True)
class SampledPotential:
    grid: SpatialGrid
    values: np.ndarray
    derivative: np.ndarray = field(repr=False)

    @classmethod
    def from_values(
        cls,
        grid: SpatialGrid,
        values: np.ndarray,
        *,
        edge_floor: float = constants.EDGE_FLOOR,
    ) -> SampledPotential:
        u = np.asarray(values, dtype=complex)
        if u.shape != (grid.Nx,):
            raise GridError(f"expected {grid.Nx} samples, got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise DecayError("potential has non-finite samples")
        edge = max(abs(u[0]), abs(u[-1]))
        if edge >= edge_floor:
            raise DecayError(
                f"potential is not truncatable on [-{grid.L}, {grid.L}]: "
                f"edge magnitude {edge:.3e} >= floor {edge_floor:.1e}",
                details={"edge": float(edge), "edge_floor": edge_floor},
            )
        u.setflags(write=False)
        du = spectral_derivative(u, grid.dx)
        du.setflags(write=False)
        return cls(grid=grid, values=u, derivative=du)

    def scaled(self, c: complex) -> SampledPotential:
        return SampledPotential.from_values(self.grid, c * self.values, edge_floor=np.inf)

    def refined(self, factor: int) -> SampledPotential:
        """Trigonometric interpolant of the samples on a grid `factor` times finer."""
        grid = SpatialGrid(self.grid.L, self.grid.Nx * factor)
        values = signal.resample(self.values, grid.Nx)
        return SampledPotential.from_values(grid, values, edge_floor=np.inf)

    @property
    def mass(self) -> float:
        return float(integrate(np.abs(self.values) ** 2, self.grid.dx))


def make_grids(L: float, Nx: int, Z: float, Nz: int) -> tuple[SpatialGrid, SpectralGrid]:
    return SpatialGrid(L=float(L), Nx=int(Nx)), SpectralGrid(Z=float(Z), Nz=int(Nz))


def sample_potential(
    profile: Mapping[str, Any] | Callable[[np.ndarray], np.ndarray] | np.ndarray,
    grid: SpatialGrid,
    *,
    edge_floor: float = constants.EDGE_FLOOR,
) -> SampledPotential:
    """Sample a named profile spec, a callable, or tabulated values onto `grid`.

    Named specs look like ``{"kind": "gaussian", "amplitude": 0.3}``; tabulated
    input is a ``(x, u)`` pair of arrays and is linearly interpolated, zero
    outside the table.
    """
    x = grid.nodes
    if isinstance(profile, Mapping):
        values = get_profile(str(profile["kind"]))(x, profile)
    elif callable(profile):
        values = profile(x)
    else:
        table_x, table_u = profile
        table_u = np.asarray(table_u, dtype=complex)
        values = np.interp(x, table_x, table_u.real, left=0.0, right=0.0) + 1j * np.interp(
            x, table_x, table_u.imag, left=0.0, right=0.0
        )
    values = np.broadcast_to(np.asarray(values, dtype=complex), x.shape)
    return SampledPotential.from_values(grid, np.array(values), edge_floor=edge_floor)


def zero_potential(grid: SpatialGrid) -> SampledPotential:
    return SampledPotential.from_values(grid, np.zeros(grid.Nx, dtype=complex))


def norms(u: SampledPotential) -> NormBundle:
    dx = u.grid.dx
    x = u.grid.nodes
    mod = np.abs(u.values)
    dmod = np.abs(u.derivative)
    weight = 1.0 + x**2
    l2_sq = float(integrate(mod**2, dx))
    l2w_sq = float(integrate(weight * mod**2, dx))
    dl2w_sq = float(integrate(weight * dmod**2, dx))
    return NormBundle(
        l1=float(integrate(mod, dx)),
        l2=float(np.sqrt(l2_sq)),
        l3=float(integrate(mod**3, dx)) ** (1.0 / 3.0),
        linf=float(mod.max(initial=0.0)),
        l2_weighted=float(np.sqrt(l2w_sq)),
        h11=float(np.sqrt(l2w_sq + dl2w_sq)),
        dxl1=float(integrate(dmod, dx)),
    )


def truncation_report(u: SampledPotential) -> dict[str, float]:
    """Edge magnitudes and the share of mass in the outer tenth of the domain."""
    mod_sq = np.abs(u.values) ** 2
    outer = np.abs(u.grid.nodes) > 0.9 * u.grid.L
    total = float(mod_sq.sum())
    return {
        "edge_left": float(abs(u.values[0])),
        "edge_right": float(abs(u.values[-1])),
        "outer_mass_fraction": float(mod_sq[outer].sum() / total) if total else 0.0,
    }
