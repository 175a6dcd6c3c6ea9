from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from dnlsist.errors import ConfigError

ProfileBuilder = Callable[[np.ndarray, Mapping[str, float]], np.ndarray]


def gaussian_field(x: np.ndarray, params: Mapping[str, float]) -> np.ndarray:
    amp = params["amplitude"]
    width = params["width"]
    s = x - params["center"]
    return amp * np.exp(-((s / width) ** 2) + 1j * params["chirp"] * s**2)


def sech_field(x: np.ndarray, params: Mapping[str, float]) -> np.ndarray:
    s = (x - params["center"]) / params["width"]
    return (params["amplitude"] / np.cosh(s)).astype(complex)


def soliton_envelope(x: np.ndarray, omega: float) -> np.ndarray:
    return np.sqrt(4.0 * omega / np.cosh(2.0 * omega * x))


def soliton_mass_below(x: np.ndarray, omega: float) -> np.ndarray:
    """Closed form of the running mass, i.e. the integral of phi^2 from -inf to x."""
    gd = 2.0 * np.arctan(np.tanh(omega * x))
    return 2.0 * gd + np.pi


def soliton_field(x: np.ndarray, params: Mapping[str, float]) -> np.ndarray:
    omega = params["omega"]
    if not omega > 0:
        raise ConfigError(f"soliton omega must be positive, got {omega}")
    phase = -0.75 * soliton_mass_below(x, omega)
    return soliton_envelope(x, omega) * np.exp(1j * phase)


@dataclass(frozen=True)
class Profile:
    key: str
    label: str
    build: ProfileBuilder
    defaults: dict[str, float] = field(default_factory=dict)

    def params(self, spec: Mapping[str, Any]) -> dict[str, float]:
        out = dict(self.defaults)
        for name in self.defaults:
            if name not in spec:
                continue
            try:
                out[name] = float(spec[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(
                    f"{self.key}.{name} must be a number, got {spec[name]!r}"
                ) from exc
        return out

    def __call__(self, x: np.ndarray, spec: Mapping[str, Any] | None = None) -> np.ndarray:
        return np.asarray(self.build(np.asarray(x, dtype=float), self.params(spec or {})))


PROFILES: dict[str, Profile] = {
    "gaussian": Profile(
        key="gaussian",
        label="Gaussian",
        build=gaussian_field,
        defaults={"amplitude": 0.3, "width": 1.0, "center": 0.0, "chirp": 0.0},
    ),
    "sech": Profile(
        key="sech",
        label="Hyperbolic secant",
        build=sech_field,
        defaults={"amplitude": 0.3, "width": 1.0, "center": 0.0},
    ),
    "soliton": Profile(
        key="soliton",
        label="Stationary soliton",
        build=soliton_field,
        defaults={"omega": 1.0},
    ),
}

DEFAULT_PROFILE: dict[str, Any] = {"kind": "gaussian", **PROFILES["gaussian"].defaults}


def get_profile(key: str) -> Profile:
    try:
        return PROFILES[key]
    except KeyError:
        raise ConfigError(f"unknown profile {key!r}") from None
