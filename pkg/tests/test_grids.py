from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnlsist import grids
from dnlsist.errors import DecayError, GridError


def test_make_grids_spacings_and_zero_nodes() -> None:
    xgrid, zgrid = grids.make_grids(L=20.0, Nx=32, Z=40.0, Nz=128)

    assert xgrid.dx == 1.25
    assert zgrid.dz == 0.625
    assert xgrid.nodes[xgrid.origin_index] == 0.0
    assert zgrid.nodes[zgrid.zero_index] == 0.0
    assert xgrid.nodes[0] == -20.0
    assert zgrid.nodes[-1] == 40.0 - 0.625


@pytest.mark.parametrize("n", [9, 4, 0, 1000])
def test_grid_counts_must_be_powers_of_two(n: int) -> None:
    with pytest.raises(GridError):
        grids.SpatialGrid(L=1.0, Nx=n)
    with pytest.raises(GridError):
        grids.SpectralGrid(Z=1.0, Nz=n)


def test_grid_extent_must_be_positive() -> None:
    with pytest.raises(GridError):
        grids.SpatialGrid(L=0.0, Nx=16)


def test_slow_tail_fails_the_edge_floor() -> None:
    xgrid = grids.SpatialGrid(L=2.0, Nx=64)

    with pytest.raises(DecayError) as info:
        grids.sample_potential({"kind": "sech", "amplitude": 1.0}, xgrid)

    assert info.value.details["edge"] > 1e-10


def test_sample_count_is_checked() -> None:
    with pytest.raises(GridError):
        grids.SampledPotential.from_values(grids.SpatialGrid(L=1.0, Nx=16), np.zeros(8))


def test_gaussian_norms_match_closed_forms() -> None:
    xgrid = grids.SpatialGrid(L=20.0, Nx=1024)
    u = grids.sample_potential({"kind": "gaussian"}, xgrid)

    nb = grids.norms(u)

    assert nb.l2**2 == pytest.approx(0.09 * np.sqrt(np.pi / 2.0), rel=1e-10)
    assert nb.l1 == pytest.approx(0.3 * np.sqrt(np.pi), rel=1e-10)
    assert nb.linf == pytest.approx(0.3)
    assert u.mass == pytest.approx(nb.l2**2)


def test_spectral_derivative_of_sampled_gaussian() -> None:
    xgrid = grids.SpatialGrid(L=20.0, Nx=1024)
    x = xgrid.nodes
    u = grids.sample_potential({"kind": "gaussian"}, xgrid)

    assert np.max(np.abs(u.derivative - (-2.0 * x * 0.3 * np.exp(-(x**2))))) < 1e-10


def test_soliton_mass_is_two_pi() -> None:
    xgrid = grids.SpatialGrid(L=30.0, Nx=2048)
    u = grids.sample_potential({"kind": "soliton", "omega": 1.0}, xgrid)

    assert u.mass == pytest.approx(2.0 * np.pi, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(c=st.complex_numbers(min_magnitude=0.1, max_magnitude=10.0))
def test_norms_are_homogeneous(c: complex) -> None:
    xgrid = grids.SpatialGrid(L=10.0, Nx=256)
    u = grids.sample_potential({"kind": "gaussian"}, xgrid)

    scaled = grids.norms(u.scaled(c))
    base = grids.norms(u)

    assert scaled.l2 == pytest.approx(abs(c) * base.l2, rel=1e-12)
    assert scaled.h11 == pytest.approx(abs(c) * base.h11, rel=1e-12)
    assert scaled.l3 == pytest.approx(abs(c) * base.l3, rel=1e-10)


def test_tabulated_potential_is_interpolated_and_zero_outside() -> None:
    xgrid = grids.SpatialGrid(L=4.0, Nx=16)
    table_x = np.array([-1.0, 0.0, 1.0])
    table_u = np.array([0.0, 1.0 + 1.0j, 0.0])

    u = grids.sample_potential((table_x, table_u), xgrid)

    x = xgrid.nodes
    assert u.values[xgrid.origin_index] == 1.0 + 1.0j
    assert u.values[x == 0.5][0] == pytest.approx(0.5 + 0.5j)
    assert np.all(u.values[np.abs(x) >= 1.0] == 0.0)


def test_callable_profile_and_zero_potential() -> None:
    xgrid = grids.SpatialGrid(L=10.0, Nx=128)

    u = grids.sample_potential(lambda x: 0.1 / np.cosh(x) ** 8, xgrid)
    zero = grids.zero_potential(xgrid)

    assert u.values.dtype == complex
    assert zero.mass == 0.0
    assert grids.norms(zero).h11 == 0.0


def test_truncation_report_flags_outer_mass() -> None:
    xgrid = grids.SpatialGrid(L=10.0, Nx=128)
    centred = grids.sample_potential({"kind": "gaussian"}, xgrid)
    shifted = grids.sample_potential({"kind": "gaussian", "center": 9.5}, xgrid, edge_floor=1.0)

    assert grids.truncation_report(centred)["outer_mass_fraction"] < 1e-20
    assert grids.truncation_report(shifted)["outer_mass_fraction"] > 0.4


def test_refined_potential_interpolates_the_samples() -> None:
    u = grids.sample_potential({"kind": "gaussian"}, grids.SpatialGrid(L=12.0, Nx=256))

    fine = u.refined(4)

    x = fine.grid.nodes
    assert fine.grid.Nx == 1024 and fine.grid.L == 12.0
    assert np.allclose(fine.values[::4], u.values, rtol=0.0, atol=1e-12)
    assert np.max(np.abs(fine.values - 0.3 * np.exp(-(x**2)))) < 1e-10
    assert np.max(np.abs(fine.derivative + 2.0 * x * fine.values)) < 1e-8
