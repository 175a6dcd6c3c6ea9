"""Pseudospectral reference solver for i u_t + u_xx + i(|u|^2 u)_x = 0 on [-L, L)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import fft

from dnlsist import constants
from dnlsist.errors import SolverError
from dnlsist.grids import SampledPotential, SpatialGrid
from dnlsist.profiles import soliton_field
from dnlsist.utils import integrate, spectral_derivative, wavenumbers

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class PDEState:
    grid: SpatialGrid
    values: np.ndarray
    t: float
    dt: float

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")

    def with_dt(self, dt: float) -> PDEState:
        return replace(self, dt=float(dt))


@dataclass(frozen=True, slots=True)
class ConservedQuantities:
    I0: float
    I1: float
    I2: float

    def as_dict(self) -> dict[str, float]:
        return {"I0": self.I0, "I1": self.I1, "I2": self.I2}

    def relative_drift(self, reference: ConservedQuantities) -> dict[str, float]:
        out = {}
        for name, ref in reference.as_dict().items():
            scale = abs(ref) if ref else 1.0
            out[name] = abs(getattr(self, name) - ref) / scale
        return out


def initial_state(
    u: SampledPotential,
    *,
    cfl: float = constants.PDE_CFL,
    dt: float | None = None,
    t: float = 0.0,
) -> PDEState:
    """State at time `t`; the step defaults to cfl * dx^2 and never exceeds it."""
    limit = cfl * u.grid.dx**2
    step = limit if dt is None else min(float(dt), limit)
    return PDEState(grid=u.grid, values=np.array(u.values), t=float(t), dt=step)


def _dealias_mask(n: int) -> np.ndarray:
    index = np.abs(fft.fftfreq(n) * n)
    return index < n / 3.0


def step_dnls(state: PDEState, t_end: float) -> PDEState:
    """Integrating-factor RK4 in Fourier space up to `t_end`.

    The linear phase e^{-i k^2 tau} is applied exactly; the nonlinear term
    -(|u|^2 u)_x is evaluated pseudospectrally and 2/3-dealiased.
    """
    span = float(t_end) - state.t
    if span < 0:
        raise ValueError(f"t_end = {t_end} is before the current time {state.t}")
    if span == 0:
        return state
    steps = max(1, math.ceil(span / state.dt - 1e-12))
    h = span / steps
    k = wavenumbers(state.grid.Nx, state.grid.dx)
    mask = _dealias_mask(state.grid.Nx)
    half = np.exp(-0.5j * k**2 * h)
    full = half * half
    ik = -1j * k * mask

    def nonlinear(spec: np.ndarray) -> np.ndarray:
        u = fft.ifft(spec)
        return ik * fft.fft(np.abs(u) ** 2 * u)

    spec = fft.fft(state.values)
    for n in range(steps):
        a = nonlinear(spec)
        b = nonlinear(half * (spec + 0.5 * h * a))
        c = nonlinear(half * spec + 0.5 * h * b)
        d = nonlinear(full * spec + h * half * c)
        spec = full * spec + (h / 6.0) * (full * a + 2.0 * half * (b + c) + d)
        if not np.all(np.isfinite(spec)):
            t_fail = state.t + (n + 1) * h
            raise SolverError(
                f"reference solver blew up at step {n + 1} (t = {t_fail:.6g})",
                details={"step": n + 1, "t": t_fail, "dt": h},
            )
    logger.debug("advanced %d steps of %.3e to t = %.6g", steps, h, t_end)
    return PDEState(grid=state.grid, values=fft.ifft(spec), t=float(t_end), dt=state.dt)


def _mirror(values: np.ndarray) -> np.ndarray:
    return np.conj(np.roll(values[::-1], 1))


def reference_solution(
    u0: SampledPotential, t: float, *, cfl: float = constants.PDE_CFL
) -> np.ndarray:
    """Reference solution at time `t`, advanced forwards or backwards from t = 0.

    Negative times use the symmetry u(x, -t) = conj(u(-x, t)) of the equation.
    """
    if t >= 0:
        return step_dnls(initial_state(u0, cfl=cfl), t).values
    mirrored = SampledPotential.from_values(u0.grid, _mirror(u0.values), edge_floor=np.inf)
    return _mirror(step_dnls(initial_state(mirrored, cfl=cfl), -t).values)


def conserved_quantities(u: SampledPotential | PDEState) -> ConservedQuantities:
    values = np.asarray(u.values)
    dx = u.grid.dx
    du = u.derivative if isinstance(u, SampledPotential) else spectral_derivative(values, dx)
    ub = np.conj(values)
    mod2 = np.abs(values) ** 2
    momentum = 1j * integrate(ub * du - values * np.conj(du), dx) - integrate(mod2**2, dx)
    energy = (
        integrate(np.abs(du) ** 2, dx)
        + 0.75j * integrate(mod2 * (values * np.conj(du) - du * ub), dx)
        + 0.5 * integrate(mod2**3, dx)
    )
    return ConservedQuantities(
        I0=float(integrate(mod2, dx)),
        I1=float(np.real(momentum)),
        I2=float(np.real(energy)),
    )


def soliton_solution(
    omega: float, grid: SpatialGrid, t: float = 0.0, *, edge_floor: float = constants.EDGE_FLOOR
) -> SampledPotential:
    """Stationary solitary wave at time t; the profile turns with the phase e^{i omega^2 t}."""
    values = soliton_field(grid.nodes, {"omega": omega}) * np.exp(1j * omega**2 * t)
    return SampledPotential.from_values(grid, values, edge_floor=edge_floor)


def soliton_profile(
    omega: float, grid: SpatialGrid, *, edge_floor: float = constants.EDGE_FLOOR
) -> SampledPotential:
    return soliton_solution(omega, grid, 0.0, edge_floor=edge_floor)
