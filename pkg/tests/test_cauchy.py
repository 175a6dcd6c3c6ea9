from __future__ import annotations

import numpy as np
import pytest
from scipy.special import dawsn

from dnlsist import cauchy
from dnlsist.errors import DecayError
from dnlsist.grids import SpectralGrid


def _hermite_bump(grid: SpectralGrid) -> cauchy.GridFunction:
    z = grid.nodes
    return cauchy.GridFunction.checked(grid, (4.0 * z**2 - 2.0) * np.exp(-(z**2)))


def test_projections_differ_by_the_identity() -> None:
    grid = SpectralGrid(Z=20.0, Nz=1024)
    f = _hermite_bump(grid)

    plus = cauchy.plemelj_plus(f).values
    minus = cauchy.plemelj_minus(f).values

    assert np.max(np.abs(plus - minus - f.values)) < 1e-13


def test_positive_frequencies_belong_to_the_upper_half_plane() -> None:
    grid = SpectralGrid(Z=20.0, Nz=1024)
    z = grid.nodes
    f = cauchy.GridFunction.checked(grid, np.exp(10j * z - 0.5 * z**2))

    assert np.max(np.abs(cauchy.plemelj_plus(f).values - f.values)) < 1e-8
    assert np.max(np.abs(cauchy.plemelj_minus(f).values)) < 1e-8


def test_boundary_values_of_a_function_analytic_above() -> None:
    grid = SpectralGrid(Z=200.0, Nz=16384)
    z = grid.nodes
    f = cauchy.GridFunction.checked(grid, 1.0 / (z + 1j) ** 4)

    plus = cauchy.plemelj_plus(f).values
    minus = cauchy.plemelj_minus(f).values

    inner = np.abs(z) <= 50.0
    assert np.max(np.abs(plus - f.values)[inner]) < 1e-6
    assert np.max(np.abs(minus)[inner]) < 1e-6
    assert cauchy.cauchy_offline(f, 2j) == pytest.approx(1.0 / 81.0, abs=1e-6)


def test_hilbert_of_gaussian_is_dawson() -> None:
    grid = SpectralGrid(Z=40.0, Nz=4096)
    z = grid.nodes
    f = cauchy.GridFunction.checked(grid, np.exp(-(z**2)))

    h = cauchy.hilbert(f).values

    inner = np.abs(z) <= 3.0
    expected = -2.0 / np.sqrt(np.pi) * dawsn(z)
    assert np.max(np.abs(h - expected)[inner]) < 1e-3


def test_hilbert_is_an_isometry_on_zero_mean_data() -> None:
    grid = SpectralGrid(Z=20.0, Nz=2048)
    f = _hermite_bump(grid)

    h = cauchy.hilbert(f)

    assert abs(cauchy.l2_norm(h) - cauchy.l2_norm(f)) / cauchy.l2_norm(f) < 1e-6


def test_lifted_projection_matches_direct_quadrature() -> None:
    grid = SpectralGrid(Z=20.0, Nz=2048)
    f = _hermite_bump(grid)
    height = 0.5

    lifted = cauchy.plemelj_plus_lifted(f, height).values

    for k in (grid.zero_index - 40, grid.zero_index, grid.zero_index + 25):
        direct = cauchy.cauchy_offline(f, grid.nodes[k] + 1j * height)
        assert abs(lifted[k] - direct) < 1e-6


def test_cauchy_integral_decays_like_the_mean() -> None:
    grid = SpectralGrid(Z=20.0, Nz=1024)
    f = cauchy.GridFunction.checked(grid, np.exp(-(grid.nodes**2)))
    w = 100j

    scaled = w * cauchy.cauchy_offline(f, w)

    assert scaled == pytest.approx(-np.sqrt(np.pi) / (2j * np.pi), abs=1e-3)


def test_cauchy_offline_needs_an_off_line_point() -> None:
    grid = SpectralGrid(Z=4.0, Nz=16)
    f = cauchy.GridFunction(grid, np.zeros(16, dtype=complex))

    with pytest.raises(ValueError):
        cauchy.cauchy_offline(f, 1.5)


def test_checked_rejects_slow_decay_and_taper_fixes_it() -> None:
    grid = SpectralGrid(Z=10.0, Nz=256)
    z = grid.nodes
    slow = 1.0 / (1.0 + z**2)

    with pytest.raises(DecayError):
        cauchy.GridFunction.checked(grid, slow)

    tapered = cauchy.GridFunction(grid, slow.astype(complex)).tapered(16)
    assert cauchy.GridFunction.checked(grid, tapered.values).values[0] == 0.0


def test_grid_function_length_must_match() -> None:
    with pytest.raises(DecayError):
        cauchy.GridFunction(SpectralGrid(Z=1.0, Nz=16), np.zeros(8))


def test_projectors_refuse_data_that_reaches_the_box_edge() -> None:
    grid = SpectralGrid(Z=40.0, Nz=2048)
    z = grid.nodes
    slow = cauchy.GridFunction(grid, (1.0 / (1.0 + z**2)).astype(complex))

    with pytest.raises(DecayError, match="does not decay"):
        cauchy.hilbert(slow)
    with pytest.raises(DecayError):
        cauchy.plemelj_plus(slow)
    with pytest.raises(DecayError):
        cauchy.plemelj_minus(slow)
    with pytest.raises(DecayError):
        cauchy.plemelj_plus_lifted(slow, 0.5)

    assert cauchy.hilbert(slow, decay_floor=1e-2).values.shape == (2048,)
