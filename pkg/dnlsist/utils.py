from __future__ import annotations

import numpy as np
from scipy import fft
from scipy.integrate import cumulative_trapezoid, trapezoid


def clamp(v: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, v))


def wavenumbers(n: int, spacing: float) -> np.ndarray:
    return 2.0 * np.pi * fft.fftfreq(n, d=spacing)


def spectral_derivative(values: np.ndarray, spacing: float) -> np.ndarray:
    """Periodic spectral derivative along the last axis; the Nyquist mode is dropped."""
    n = values.shape[-1]
    k = wavenumbers(n, spacing)
    k[n // 2] = 0.0
    return fft.ifft(1j * k * fft.fft(values, axis=-1), axis=-1)


def fourier_shift(values: np.ndarray, spacing: float, shift: float) -> np.ndarray:
    """Trigonometric interpolant of `values` evaluated at nodes + shift."""
    n = values.shape[-1]
    k = wavenumbers(n, spacing)
    phase = np.exp(1j * k * shift)
    phase[n // 2] = np.cos(k[n // 2] * shift)
    return fft.ifft(phase * fft.fft(values, axis=-1), axis=-1)


def integrate(values: np.ndarray, spacing: float) -> complex | float:
    return trapezoid(values, dx=spacing, axis=-1)


def running_integral_from_left(values: np.ndarray, spacing: float) -> np.ndarray:
    return cumulative_trapezoid(values, dx=spacing, initial=0.0, axis=-1)


def running_integral_from_right(values: np.ndarray, spacing: float) -> np.ndarray:
    """Integral from the last node to each node, i.e. minus the tail integral."""
    tail = cumulative_trapezoid(values[..., ::-1], dx=spacing, initial=0.0, axis=-1)
    return -tail[..., ::-1]


def raised_cosine(x: np.ndarray, half_width: float) -> np.ndarray:
    """Weight rising from 0 at x=-half_width to 1 at x=+half_width."""
    s = np.clip((x + half_width) / (2.0 * half_width), 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * s)


def edge_taper(n: int, width: int) -> np.ndarray:
    out = np.ones(n)
    if width <= 0:
        return out
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(width) / width)
    out[:width] = ramp
    out[n - width :] = ramp[::-1]
    return out