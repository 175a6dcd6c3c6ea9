"""Cauchy integral machinery on the uniform z-grid.

Conventions: with the FFT of ``f`` written ``F(k) = sum f(z) e^{-ikz}``, the
Plemelj projections act as Fourier multipliers

    P+  ->  1 on k > 0, 1/2 at k = 0 and at the Nyquist mode, 0 on k < 0
    P-  -> -1 on k < 0, -1/2 at k = 0 and at the Nyquist mode, 0 on k > 0

so ``P+ - P- = I`` holds mode by mode. ``H = i(P+ + P-)`` has multiplier
``i*sign(k)``, giving ``H(1/(1+z^2)) = -z/(1+z^2)`` and ``P+- = +-1/2 - (i/2)H``.
All transforms run on a 2x zero-padded copy of the data.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft

from dnlsist import constants
from dnlsist.errors import DecayError
from dnlsist.grids import SpectralGrid
from dnlsist.utils import edge_taper


@dataclass(frozen=True, slots=True)
class GridFunction:
    grid: SpectralGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape[-1] != self.grid.Nz:
            raise DecayError(
                f"grid function has {self.values.shape[-1]} samples, grid has {self.grid.Nz}"
            )

    @classmethod
    def checked(
        cls,
        grid: SpectralGrid,
        values: np.ndarray,
        *,
        decay_floor: float = constants.DECAY_FLOOR,
    ) -> GridFunction:
        f = cls(grid=grid, values=np.asarray(values, dtype=complex))
        f.require_decay(decay_floor)
        return f

    def require_decay(self, decay_floor: float = constants.DECAY_FLOOR) -> None:
        """Raise DecayError unless the edge values sit below `decay_floor` (relative to max |f|)."""
        f = self.values
        if not np.all(np.isfinite(f)):
            raise DecayError("grid function has non-finite values")
        scale = max(1.0, float(np.abs(f).max(initial=0.0)))
        edge = float(max(np.abs(f[..., 0]).max(), np.abs(f[..., -1]).max()))
        if edge > decay_floor * scale:
            raise DecayError(
                f"grid function does not decay at z = +-{self.grid.Z}: "
                f"edge {edge:.3e} > floor {decay_floor:.1e}",
                details={"edge": edge, "decay_floor": decay_floor},
            )

    def tapered(self, width: int) -> GridFunction:
        """Raised-cosine taper over `width` nodes at each end."""
        return GridFunction(self.grid, self.values * edge_taper(self.grid.Nz, width))


@lru_cache(maxsize=32)
def _multipliers(n: int) -> tuple[np.ndarray, np.ndarray]:
    sign = np.sign(fft.fftfreq(2 * n))
    sign[n] = 0.0  # Nyquist of the padded transform
    plus = 0.5 * (1.0 + sign)
    minus = -0.5 * (1.0 - sign)
    plus.setflags(write=False)
    minus.setflags(write=False)
    return plus, minus


def _apply(values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    spectrum = fft.fft(values, n=2 * n, axis=-1)
    return fft.ifft(multiplier * spectrum, axis=-1)[..., :n]


def project_plus(values: np.ndarray) -> np.ndarray:
    """P+ on raw arrays (last axis is z); no decay checks."""
    return _apply(values, _multipliers(values.shape[-1])[0])


def project_minus(values: np.ndarray) -> np.ndarray:
    return _apply(values, _multipliers(values.shape[-1])[1])


def hilbert(f: GridFunction, *, decay_floor: float = constants.DECAY_FLOOR) -> GridFunction:
    f.require_decay(decay_floor)
    plus, minus = _multipliers(f.grid.Nz)
    return GridFunction(f.grid, _apply(f.values, 1j * (plus + minus)))


def plemelj_plus(f: GridFunction, *, decay_floor: float = constants.DECAY_FLOOR) -> GridFunction:
    f.require_decay(decay_floor)
    return GridFunction(f.grid, project_plus(f.values))


def plemelj_minus(f: GridFunction, *, decay_floor: float = constants.DECAY_FLOOR) -> GridFunction:
    f.require_decay(decay_floor)
    return GridFunction(f.grid, project_minus(f.values))


def plemelj_plus_lifted(
    f: GridFunction, height: float, *, decay_floor: float = constants.DECAY_FLOOR
) -> GridFunction:
    """Values of the Cauchy integral C(f) on the line Im w = height > 0."""
    f.require_decay(decay_floor)
    n = f.grid.Nz
    k = 2.0 * np.pi * fft.fftfreq(2 * n, d=f.grid.dz)
    plus, _ = _multipliers(n)
    damp = np.exp(-np.abs(k) * height)
    return GridFunction(f.grid, _apply(f.values, plus * damp))


def cauchy_offline(f: GridFunction, w: complex) -> complex:
    """Trapezoidal (1/2 pi i) * integral of f(s)/(s - w) ds, Im w != 0."""
    w = complex(w)
    if w.imag == 0.0:
        raise ValueError(f"Cauchy integral off the line needs Im(w) != 0, got {w}")
    s = f.grid.nodes
    return complex(np.sum(f.values / (s - w)) * f.grid.dz / (2j * np.pi))


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.dz))
