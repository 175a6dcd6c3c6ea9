from __future__ import annotations

import numpy as np

from dnlsist import utils


def _periodic_nodes(n: int = 64) -> tuple[np.ndarray, float]:
    dx = 2.0 * np.pi / n
    return np.arange(n) * dx - np.pi, dx


def test_clamp_bounds() -> None:
    assert utils.clamp(5, 0, 10) == 5
    assert utils.clamp(-1, 0, 10) == 0
    assert utils.clamp(11, 0, 10) == 10


def test_spectral_derivative_is_exact_on_trig_polynomials() -> None:
    x, dx = _periodic_nodes()

    du = utils.spectral_derivative(np.sin(3 * x) + np.cos(5 * x), dx)

    assert np.allclose(du, 3 * np.cos(3 * x) - 5 * np.sin(5 * x), atol=1e-12)


def test_fourier_shift_moves_band_limited_samples() -> None:
    x, dx = _periodic_nodes()

    shifted = utils.fourier_shift(np.exp(2j * x), dx, 0.3 * dx)

    assert np.allclose(shifted, np.exp(2j * (x + 0.3 * dx)), atol=1e-12)


def test_running_integrals_agree_on_totals() -> None:
    values = np.array([1.0, 2.0, 3.0, 4.0])

    left = utils.running_integral_from_left(values, 0.5)
    right = utils.running_integral_from_right(values, 0.5)

    assert left[0] == 0.0
    assert right[-1] == 0.0
    assert np.isclose(left[-1], utils.integrate(values, 0.5))
    # from the right means minus the tail, so the two differ by the total
    assert np.allclose(left - right, left[-1])


def test_raised_cosine_endpoints() -> None:
    w = utils.raised_cosine(np.array([-3.0, -2.0, 0.0, 2.0, 3.0]), 2.0)

    assert np.allclose(w, [0.0, 0.0, 0.5, 1.0, 1.0])


def test_edge_taper_is_symmetric() -> None:
    taper = utils.edge_taper(10, 3)

    assert taper[0] == 0.0
    assert np.all(taper[3:7] == 1.0)
    assert np.allclose(taper, taper[::-1])
    assert np.all(utils.edge_taper(5, 0) == 1.0)


def test_spectral_derivative_agrees_with_running_integrals_and_shifts() -> None:
    dx = 40.0 / 1024
    x = (np.arange(1024) - 512) * dx
    f = np.exp(-(x**2) + 0.5j * x)

    df = utils.spectral_derivative(f, dx)

    assert np.max(np.abs(df - (-2.0 * x + 0.5j) * f)) < 1e-10
    assert np.max(np.abs(utils.running_integral_from_left(df, dx) - (f - f[0]))) < dx**2
    h = 1e-4 * dx
    central = (utils.fourier_shift(f, dx, h) - utils.fourier_shift(f, dx, -h)) / (2.0 * h)
    assert np.max(np.abs(central - df)) < 1e-6
    assert abs(np.real(utils.integrate(np.conj(f) * df, dx))) < 1e-12
