from __future__ import annotations

import json

import numpy as np
import pytest

from dnlsist import constants, datafiles
from dnlsist.errors import ConfigError, ReflectionError
from dnlsist.grids import SpatialGrid, SpectralGrid, sample_potential
from dnlsist.services.direct_scattering import scattering_coefficients


def _scattering():
    u = sample_potential({"kind": "gaussian"}, SpatialGrid(L=8.0, Nx=64))
    return scattering_coefficients(u, SpectralGrid(Z=4.0, Nz=32), threads=1)


def test_potential_file_round_trip(tmp_path) -> None:
    grid = SpatialGrid(L=4.0, Nx=16)
    values = np.exp(-(grid.nodes**2)) * (1.0 + 0.5j)

    path = datafiles.write_potential(tmp_path / "out" / "u.csv", grid, values)

    assert path.read_text().splitlines()[0] == constants.POTENTIAL_HEADER
    x, u = datafiles.read_potential(path)
    assert np.array_equal(x, grid.nodes)
    assert np.array_equal(u, values)


def test_potential_file_errors(tmp_path) -> None:
    with pytest.raises(ConfigError):
        datafiles.read_potential(tmp_path / "missing.csv")

    bad = tmp_path / "bad.csv"
    bad.write_text("x,re_u\n0,1\n")
    with pytest.raises(ConfigError):
        datafiles.read_potential(bad)


def test_scattering_file_is_checked_against_the_grid(tmp_path) -> None:
    data = _scattering()
    path = datafiles.write_scattering(tmp_path / "scattering.csv", data)

    columns = datafiles.read_scattering(path, data.grid)

    assert np.array_equal(columns["a"], data.a)
    assert np.array_equal(columns["r_minus"], data.r_minus)
    with pytest.raises(ReflectionError):
        datafiles.read_scattering(path, SpectralGrid(Z=4.0, Nz=64))
    with pytest.raises(ReflectionError):
        datafiles.read_scattering(path, SpectralGrid(Z=5.0, Nz=32))


def test_json_payloads_accept_numpy_and_complex(tmp_path) -> None:
    data = _scattering()
    payload = datafiles.scattering_metadata(
        data, winding=np.int64(0), samples=np.arange(3), point=1 + 2j
    )

    path = datafiles.write_json(tmp_path / "meta.json", payload)

    loaded = datafiles.read_json(path)
    assert loaded["grid"] == {"Z": 4.0, "Nz": 32}
    assert loaded["winding"] == 0
    assert loaded["samples"] == [0, 1, 2]
    assert loaded["point"] == [1.0, 2.0]
    assert loaded["a_inf"] == [data.a_inf.real, data.a_inf.imag]


def test_read_json_errors(tmp_path) -> None:
    path = tmp_path / "list.json"
    path.write_text(json.dumps([1, 2]))

    with pytest.raises(ConfigError):
        datafiles.read_json(path)
    with pytest.raises(ConfigError):
        datafiles.read_json(tmp_path / "absent.json")
