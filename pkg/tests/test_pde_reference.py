from __future__ import annotations

import numpy as np
import pytest

from dnlsist.errors import SolverError
from dnlsist.grids import SampledPotential, SpatialGrid, sample_potential, zero_potential
from dnlsist.services import pde_reference as pde
from dnlsist.utils import wavenumbers


def _gaussian(amplitude: float = 0.3, L: float = 16.0, Nx: int = 256):
    return sample_potential({"kind": "gaussian", "amplitude": amplitude}, SpatialGrid(L, Nx))


def test_time_step_is_capped_by_the_cfl_limit() -> None:
    u = _gaussian()
    limit = u.grid.dx**2

    assert pde.initial_state(u).dt == pytest.approx(limit)
    assert pde.initial_state(u, dt=1.0).dt == pytest.approx(limit)
    assert pde.initial_state(u, dt=0.5 * limit).dt == pytest.approx(0.5 * limit)
    with pytest.raises(ValueError):
        pde.PDEState(grid=u.grid, values=u.values, t=0.0, dt=0.0)


def test_zero_stays_zero() -> None:
    state = pde.initial_state(zero_potential(SpatialGrid(L=8.0, Nx=64)))

    after = pde.step_dnls(state, 0.3)

    assert np.all(after.values == 0.0)
    assert after.t == 0.3


def test_cannot_step_backwards() -> None:
    state = pde.initial_state(_gaussian(), t=1.0)

    with pytest.raises(ValueError):
        pde.step_dnls(state, 0.5)
    assert pde.step_dnls(state, 1.0) is state


def test_weak_field_follows_the_free_evolution() -> None:
    u = _gaussian(amplitude=1e-4)
    t = 0.4
    k = wavenumbers(u.grid.Nx, u.grid.dx)

    after = pde.step_dnls(pde.initial_state(u), t)

    free = np.fft.ifft(np.exp(-1j * k**2 * t) * np.fft.fft(u.values))
    error = np.linalg.norm(after.values - free) / np.linalg.norm(free)
    assert error < 1e-6


def test_conserved_quantities_drift_little() -> None:
    state = pde.initial_state(_gaussian())
    before = pde.conserved_quantities(state)

    after = pde.conserved_quantities(pde.step_dnls(state, 0.2))

    drift = after.relative_drift(before)
    assert drift["I0"] < 1e-8
    assert drift["I1"] < 1e-6
    assert drift["I2"] < 1e-6


def test_conserved_quantities_accept_both_inputs() -> None:
    u = _gaussian()

    from_potential = pde.conserved_quantities(u)
    from_state = pde.conserved_quantities(pde.initial_state(u))

    assert from_potential.I0 == pytest.approx(0.09 * np.sqrt(np.pi / 2.0), rel=1e-10)
    assert from_state.as_dict() == pytest.approx(from_potential.as_dict(), rel=1e-10, abs=1e-14)


def test_zero_field_has_zero_invariants() -> None:
    q = pde.conserved_quantities(zero_potential(SpatialGrid(L=8.0, Nx=64)))

    assert q.as_dict() == {"I0": 0.0, "I1": 0.0, "I2": 0.0}
    assert q.relative_drift(q) == {"I0": 0.0, "I1": 0.0, "I2": 0.0}


def test_soliton_profile() -> None:
    grid = SpatialGrid(L=30.0, Nx=2048)

    u = pde.soliton_profile(1.0, grid)

    assert abs(u.values[grid.origin_index]) == pytest.approx(2.0)
    assert pde.conserved_quantities(u).I0 == pytest.approx(2.0 * np.pi, rel=1e-8)
    later = pde.soliton_solution(1.0, grid, t=0.5)
    assert np.allclose(np.abs(later.values), np.abs(u.values))


def test_blow_up_is_reported() -> None:
    u = _gaussian(amplitude=50.0, L=8.0, Nx=64)
    state = pde.initial_state(u).with_dt(0.5)

    with pytest.raises(SolverError) as info:
        pde.step_dnls(state, 200.0)

    assert info.value.details["step"] >= 1


@pytest.mark.slow
def test_soliton_keeps_its_shape() -> None:
    grid = SpatialGrid(L=30.0, Nx=2048)
    u = pde.soliton_profile(1.0, grid)

    after = pde.step_dnls(pde.initial_state(u), 1.0)

    assert np.max(np.abs(np.abs(after.values) - np.abs(u.values))) < 1e-5


@pytest.mark.slow
def test_time_stepping_is_fourth_order() -> None:
    u = _gaussian(amplitude=1.0, L=16.0, Nx=128)
    t = 0.5

    def run(dt: float) -> np.ndarray:
        return pde.step_dnls(pde.initial_state(u, dt=dt), t).values

    coarse, medium, fine = run(0.01), run(0.005), run(0.0025)

    ratio = np.linalg.norm(coarse - medium) / np.linalg.norm(medium - fine)
    assert 12.0 < ratio < 20.0


def test_negative_times_run_the_mirrored_field_forwards() -> None:
    u = _gaussian(amplitude=0.5, L=16.0, Nx=128)

    back = pde.reference_solution(u, -0.1, cfl=0.01)
    earlier = SampledPotential.from_values(u.grid, back, edge_floor=np.inf)
    again = pde.step_dnls(pde.initial_state(earlier, cfl=0.01), 0.1).values

    assert np.max(np.abs(again - u.values)) < 1e-8
    assert np.array_equal(
        pde.reference_solution(u, 0.1), pde.step_dnls(pde.initial_state(u), 0.1).values
    )
