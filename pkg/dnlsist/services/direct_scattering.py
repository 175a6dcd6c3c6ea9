"""Direct scattering for the Kaup-Newell spectral problem, written in z = lambda^2.

The Jost columns are integrated in ODE form. The m-type columns solve
``m' = diag(0, 2iz) m + Q1 m`` and the n-type columns solve
``n' = diag(-2iz, 0) n + Q2 n``. Each state carries a third component:
``w = phi2 / lambda`` for the m-type (``w' = m2``) and ``v = phi1 / lambda``
for the n-type (``v' = -n1``). With those, the Wronskians for ``a``,
``2i*lambda*b`` and ``b/lambda`` are formed at x = 0 without dividing by lambda.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal, TypeVar

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.linalg import expm

from dnlsist import constants
from dnlsist.errors import ResonanceDetected, WindingUnresolved
from dnlsist.grids import SampledPotential, SpectralGrid, norms
from dnlsist.services.workers import chunked, default_thread_count, parallel_map
from dnlsist.utils import (
    fourier_shift,
    running_integral_from_left,
    running_integral_from_right,
)

logger = logging.getLogger(__name__)

R = TypeVar("R")

JostKind = Literal["m_minus", "m_plus", "n_minus", "n_plus"]

# family, integration direction (+1 from the left edge, -1 from the right edge)
_KINDS: dict[str, tuple[str, int]] = {
    "m_minus": ("m", 1),
    "m_plus": ("m", -1),
    "n_minus": ("n", 1),
    "n_plus": ("n", -1),
}
_STAGES: dict[int, tuple[float, ...]] = {
    2: (0.5,),
    4: (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0),
}


@dataclass(frozen=True, slots=True)
class JostTrace:
    kind: str
    z: complex
    values: np.ndarray  # (Nx, 2)
    aux: np.ndarray  # w for m-type, v for n-type
    limit_value: np.ndarray
    unresolved: bool = False


@dataclass(frozen=True, slots=True)
class AsymptoticData:
    m_inf_minus: np.ndarray
    m_inf_plus: np.ndarray
    n_inf_minus: np.ndarray
    n_inf_plus: np.ndarray
    q1_minus: np.ndarray
    q1_plus: np.ndarray
    q2_minus: np.ndarray
    q2_plus: np.ndarray
    s1_minus: np.ndarray
    s1_plus: np.ndarray
    s2_minus: np.ndarray
    s2_plus: np.ndarray
    aux_leading: dict[str, np.ndarray] = field(default_factory=dict)

    def state(self, kind: str, index: int, z: complex) -> np.ndarray:
        """State of the given Jost kind at node `index` from the 1/z expansion."""
        side = "minus" if kind.endswith("minus") else "plus"
        aux = self.aux_leading[kind][index] / z
        if kind.startswith("m"):
            m_inf = getattr(self, f"m_inf_{side}")[index]
            q1 = getattr(self, f"q1_{side}")[index]
            q2 = getattr(self, f"q2_{side}")[index]
            return np.array([m_inf + q1 / z, q2 / z, aux])
        n_inf = getattr(self, f"n_inf_{side}")[index]
        s1 = getattr(self, f"s1_{side}")[index]
        s2 = getattr(self, f"s2_{side}")[index]
        return np.array([s1 / z, n_inf + s2 / z, aux])


@dataclass(frozen=True, slots=True)
class ScatteringData:
    grid: SpectralGrid
    a: np.ndarray
    bl: np.ndarray  # 2i*lambda*b
    bs: np.ndarray  # b/lambda
    r_plus: np.ndarray
    r_minus: np.ndarray
    a_inf: complex
    c0_sq: float
    parity_defect: float = 0.0
    unresolved: int = 0


@dataclass(frozen=True, slots=True)
class SmallNormCheck:
    satisfied: bool
    lhs: float

    @property
    def margin(self) -> float:
        return 0.5 - self.lhs


@dataclass(frozen=True, slots=True)
class SpectralHealthReport:
    min_abs_a_real_line: float
    winding_number_upper_half: int
    small_norm_satisfied: bool
    c0_sq: float

    @property
    def consistent(self) -> bool:
        if not self.small_norm_satisfied:
            return True
        return self.winding_number_upper_half == 0 and self.min_abs_a_real_line > 0

    @property
    def admissible(self) -> bool:
        return self.winding_number_upper_half == 0 and self.c0_sq > 0

    def as_dict(self) -> dict[str, float | int | bool]:
        return {
            "min_abs_a_real_line": self.min_abs_a_real_line,
            "winding_number_upper_half": self.winding_number_upper_half,
            "small_norm_satisfied": self.small_norm_satisfied,
            "c0_sq": self.c0_sq,
        }


# --- stepping ---------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _Cells:
    """z-independent part of the generator at the stage points of every cell."""

    dx: float
    m_blocks: tuple[np.ndarray, ...]  # each (Nx-1, 3, 3)
    n_blocks: tuple[np.ndarray, ...]

    def blocks(self, family: str) -> tuple[np.ndarray, ...]:
        return self.m_blocks if family == "m" else self.n_blocks


def _potential_blocks(u: np.ndarray, du: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mod2 = np.abs(u) ** 2
    ub = np.conj(u)
    m = np.zeros(u.shape + (3, 3), dtype=complex)
    m[:, 0, 0] = mod2 / 2j
    m[:, 0, 1] = u / 2j
    m[:, 1, 0] = (-2j * np.conj(du) - ub * mod2) / 2j
    m[:, 1, 1] = -mod2 / 2j
    m[:, 2, 1] = 1.0
    n = np.zeros(u.shape + (3, 3), dtype=complex)
    n[:, 0, 0] = mod2 / 2j
    n[:, 0, 1] = (-2j * du + u * mod2) / 2j
    n[:, 1, 0] = -ub / 2j
    n[:, 1, 1] = -mod2 / 2j
    n[:, 2, 0] = -1.0
    return m, n


def _cells(u: SampledPotential, order: int) -> _Cells:
    if order not in _STAGES:
        raise ValueError(f"stepping order must be 2 or 4, got {order}")
    dx = u.grid.dx
    m_blocks, n_blocks = [], []
    for c in _STAGES[order]:
        uc = fourier_shift(u.values, dx, c * dx)[:-1]
        duc = fourier_shift(u.derivative, dx, c * dx)[:-1]
        m, n = _potential_blocks(uc, duc)
        m_blocks.append(m)
        n_blocks.append(n)
    return _Cells(dx=dx, m_blocks=tuple(m_blocks), n_blocks=tuple(n_blocks))


def _spectral_part(family: str, z: np.ndarray) -> np.ndarray:
    lam = np.zeros(z.shape + (3, 3), dtype=complex)
    if family == "m":
        lam[:, 1, 1] = 2j * z
    else:
        lam[:, 0, 0] = -2j * z
    return lam


def _magnus(lam: np.ndarray, stages: tuple[np.ndarray, ...], h: float) -> np.ndarray:
    if len(stages) == 1:
        return h * (lam + stages[0])
    a1 = lam + stages[0]
    a2 = lam + stages[1]
    return 0.5 * h * (a1 + a2) + (math.sqrt(3.0) * h * h / 12.0) * (a2 @ a1 - a1 @ a2)


def _sweep(
    cells: _Cells,
    kind: str,
    z: np.ndarray,
    stop: int,
    trace: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate from the kind's starting edge to node `stop`; returns (Nz, 3)."""
    family, direction = _KINDS[kind]
    blocks = cells.blocks(family)
    lam = _spectral_part(family, z)
    nx = blocks[0].shape[0] + 1
    y = np.zeros(z.shape + (3,), dtype=complex)
    y[:, 0 if family == "m" else 1] = 1.0
    if direction > 0:
        start, order = 0, range(0, stop)
    else:
        start, order = nx - 1, range(nx - 2, stop - 1, -1)
    if trace is not None:
        trace[:, start] = y
    for j in order:
        omega = _magnus(lam, tuple(b[j] for b in blocks), cells.dx)
        step = expm(omega if direction > 0 else -omega)
        y = (step @ y[..., None])[..., 0]
        if trace is not None:
            trace[:, j + 1 if direction > 0 else j] = y
    return y


def _resolved(z: np.ndarray, dx: float) -> np.ndarray:
    return 2.0 * np.abs(np.real(z)) * dx <= np.pi


def _check_half_plane(kind: str, z: complex) -> None:
    upper = kind in ("m_minus", "n_plus")
    if (upper and z.imag < 0) or (not upper and z.imag > 0):
        half = "upper" if upper else "lower"
        raise ValueError(f"{kind} is analytic in the {half} half-plane, got z = {z}")


def solve_jost(
    u: SampledPotential, z: complex, kind: JostKind, *, order: int = 4
) -> JostTrace:
    if kind not in _KINDS:
        raise ValueError(f"unknown Jost kind {kind!r}")
    z = complex(z)
    _check_half_plane(kind, z)
    nx = u.grid.Nx
    family, direction = _KINDS[kind]
    if not _resolved(np.array([z]), u.grid.dx)[0]:
        logger.warning(
            "z = %s is unresolved on dx = %.3g; substituting the large-z limit", z, u.grid.dx
        )
        asym = asymptotic_data(u)
        states = np.stack([asym.state(kind, j, z) for j in range(nx)])
        far = nx - 1 if direction > 0 else 0
        return JostTrace(
            kind=kind,
            z=z,
            values=states[:, :2],
            aux=states[:, 2],
            limit_value=states[far, :2],
            unresolved=True,
        )
    trace = np.zeros((1, nx, 3), dtype=complex)
    stop = nx - 1 if direction > 0 else 0
    _sweep(_cells(u, order), kind, np.array([z]), stop, trace)
    states = trace[0]
    return JostTrace(
        kind=kind,
        z=z,
        values=states[:, :2],
        aux=states[:, 2],
        limit_value=states[stop, :2].copy(),
    )


def volterra_residual(trace: JostTrace, u: SampledPotential) -> float:
    """Max defect of the Volterra equation, integrals by cumulative Simpson."""
    if trace.z.imag != 0.0:
        raise ValueError("Volterra residual is evaluated for real z only")
    z = trace.z.real
    x = u.grid.nodes
    dx = u.grid.dx
    family, direction = _KINDS[trace.kind]
    block = _potential_blocks(u.values, u.derivative)[0 if family == "m" else 1][:, :2, :2]
    rhs = np.einsum("xij,xj->xi", block, trace.values)

    def running(f: np.ndarray) -> np.ndarray:
        total = cumulative_simpson(f, dx=dx, initial=0.0)
        return total if direction > 0 else total - total[-1]

    phase = np.exp(2j * z * x)
    out = np.empty_like(trace.values)
    if family == "m":
        out[:, 0] = 1.0 + running(rhs[:, 0])
        out[:, 1] = phase * running(rhs[:, 1] / phase)
    else:
        out[:, 0] = running(rhs[:, 0] * phase) / phase
        out[:, 1] = 1.0 + running(rhs[:, 1])
    return float(np.max(np.abs(out - trace.values)))


# --- large-z data -------------------------------------------------------------


def asymptotic_data(u: SampledPotential) -> AsymptoticData:
    dx = u.grid.dx
    uu = u.values
    du = u.derivative
    ub = np.conj(uu)
    mod2 = np.abs(uu) ** 2
    mod4 = mod2**2
    mass = {
        "minus": running_integral_from_left(mod2, dx),
        "plus": running_integral_from_right(mod2, dx),
    }
    fields: dict[str, np.ndarray] = {}
    aux: dict[str, np.ndarray] = {}
    for side, running in (
        ("minus", running_integral_from_left),
        ("plus", running_integral_from_right),
    ):
        m_inf = np.exp(mass[side] / 2j)
        n_inf = np.conj(m_inf)
        jq = running(uu * np.conj(du) + mod4 / 2j, dx)
        js = running(ub * du - mod4 / 2j, dx)
        fields[f"m_inf_{side}"] = m_inf
        fields[f"n_inf_{side}"] = n_inf
        fields[f"q1_{side}"] = -0.25 * m_inf * jq
        # product rule on u-bar m_inf and u n_inf, with m_inf' = |u|^2 m_inf / 2i
        fields[f"q2_{side}"] = (np.conj(du) + ub * mod2 / 2j) * m_inf / 2j
        fields[f"s1_{side}"] = -(du - uu * mod2 / 2j) * n_inf / 2j
        # sign fixed by n2 = conj(m1) on the real line
        fields[f"s2_{side}"] = -0.25 * n_inf * js
        aux[f"m_{side}"] = ub * m_inf / 2j
        aux[f"n_{side}"] = uu * n_inf / 2j
    return AsymptoticData(**fields, aux_leading=aux)


def jost_asymptotic_defects(
    u: SampledPotential, z: float, *, order: int = 4
) -> tuple[float, float]:
    """sup_x |m2| of m- at real z, before and after removing the q2/z term."""
    trace = solve_jost(u, z, "m_minus", order=order)
    if trace.unresolved:
        raise ValueError(f"z = {z} is not resolved on dx = {u.grid.dx:.3g}")
    m2 = trace.values[:, 1]
    q2 = asymptotic_data(u).q2_minus
    return float(np.max(np.abs(m2))), float(np.max(np.abs(m2 - q2 / z)))


# --- scattering coefficients ----------------------------------------------------


def _origin_states(
    cells: _Cells, z: np.ndarray, kinds: tuple[str, ...], origin: int
) -> dict[str, np.ndarray]:
    return {kind: _sweep(cells, kind, z, origin) for kind in kinds}


def _a_from_states(z: np.ndarray, m_minus: np.ndarray, n_plus: np.ndarray) -> np.ndarray:
    return m_minus[:, 0] * n_plus[:, 1] - z * m_minus[:, 2] * n_plus[:, 2]


def _coefficients_chunk(
    cells: _Cells, z: np.ndarray, origin: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = _origin_states(cells, z, ("m_minus", "m_plus", "n_plus"), origin)
    mm, mp = s["m_minus"], s["m_plus"]
    a = _a_from_states(z, mm, s["n_plus"])
    bl = mp[:, 0] * mm[:, 1] - mp[:, 1] * mm[:, 0]
    bs = mp[:, 0] * mm[:, 2] - mm[:, 0] * mp[:, 2]
    return a, bl, bs


def _map_over_z(
    fn: Callable[[np.ndarray], R], z: np.ndarray, threads: int | None
) -> tuple[list[R], list[slice]]:
    parts = chunked(z.size, default_thread_count() if threads is None else threads)
    return parallel_map(lambda sl: fn(z[sl]), parts, threads=threads), parts


def reflection_from_traces(
    z: np.ndarray, a: np.ndarray, bl: np.ndarray, bs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """r+ = -b/(2i lambda a) and r- = 2i lambda b/a, with r- = 4z r+ imposed.

    Near z = 0 r+ comes from the b/lambda trace, elsewhere from 2i lambda b / 4z.
    """
    near = np.abs(z) <= constants.REGULARIZATION_SPLIT
    z_safe = np.where(near, 1.0, z)
    r_plus = np.where(near, -bs / (2j * a), bl / (4.0 * z_safe * a))
    return r_plus, 4.0 * z * r_plus


def defocusing_margin(z: np.ndarray, r_plus: np.ndarray, r_minus: np.ndarray) -> float:
    """min over z < 0 of 1 + Re(conj(r+) r-); 1 when the grid has no z < 0 nodes."""
    neg = z < 0
    if not np.any(neg):
        return 1.0
    return float(np.min(1.0 + np.real(np.conj(r_plus[neg]) * r_minus[neg])))


def scattering_coefficients(
    u: SampledPotential,
    zgrid: SpectralGrid,
    *,
    a_floor: float = constants.A_FLOOR,
    order: int = 4,
    threads: int | None = None,
) -> ScatteringData:
    z = zgrid.nodes
    a_inf = complex(np.exp(-0.5j * u.mass))
    a = np.full(z.shape, a_inf, dtype=complex)
    bl = np.zeros(z.shape, dtype=complex)
    bs = np.zeros(z.shape, dtype=complex)

    resolved = np.flatnonzero(_resolved(z, u.grid.dx))
    unresolved = z.size - resolved.size
    if unresolved:
        logger.warning(
            "%d z-nodes beyond |z| = %.3g are unresolved on dx = %.3g; using a -> a_inf",
            unresolved,
            np.pi / (2.0 * u.grid.dx),
            u.grid.dx,
        )
    if resolved.size:
        cells = _cells(u, order)
        origin = u.grid.origin_index
        zr = z[resolved]
        results, parts = _map_over_z(
            lambda zs: _coefficients_chunk(cells, zs, origin), zr, threads
        )
        for sl, (ca, cbl, cbs) in zip(parts, results):
            a[resolved[sl]] = ca
            bl[resolved[sl]] = cbl
            bs[resolved[sl]] = cbs

    i0 = zgrid.zero_index
    a[i0] = 1.0
    bl[i0] = 0.0

    weakest = int(np.argmin(np.abs(a)))
    if abs(a[weakest]) < a_floor:
        raise ResonanceDetected(
            f"|a(z)| = {abs(a[weakest]):.3e} < {a_floor:.1e} at z = {z[weakest]:.6g}: "
            "resonance on the real line",
            details={"z": float(z[weakest]), "abs_a": float(abs(a[weakest]))},
        )

    parity = float(np.max(np.abs(bl - 2j * z * bs)))
    r_plus, r_minus = reflection_from_traces(z, a, bl, bs)
    data = ScatteringData(
        grid=zgrid,
        a=a,
        bl=bl,
        bs=bs,
        r_plus=r_plus,
        r_minus=r_minus,
        a_inf=a_inf,
        c0_sq=defocusing_margin(z, r_plus, r_minus),
        parity_defect=parity,
        unresolved=unresolved,
    )
    logger.info(
        "scattering data: max|r+| = %.3e, c0^2 = %.6f, parity defect = %.2e",
        float(np.max(np.abs(r_plus))),
        data.c0_sq,
        parity,
    )
    return data


def a_values(
    u: SampledPotential, z: np.ndarray, *, order: int = 4, threads: int | None = None
) -> np.ndarray:
    """a(z) from the x = 0 Wronskian, for z on the real line or in the upper half-plane."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise ValueError("a(z) is analytic in the upper half-plane only")
    out = np.full(z.shape, np.exp(-0.5j * u.mass), dtype=complex)
    resolved = np.flatnonzero(_resolved(z, u.grid.dx))
    if resolved.size:
        cells = _cells(u, order)
        origin = u.grid.origin_index

        def chunk(zs: np.ndarray) -> np.ndarray:
            s = _origin_states(cells, zs, ("m_minus", "n_plus"), origin)
            return _a_from_states(zs, s["m_minus"], s["n_plus"])

        results, parts = _map_over_z(chunk, z[resolved], threads)
        for sl, vals in zip(parts, results):
            out[resolved[sl]] = vals
    return out


def a_from_limit(u: SampledPotential, z: float, *, order: int = 4) -> complex:
    """a(z) as the x -> +inf limit of the first component of m-."""
    return complex(solve_jost(u, z, "m_minus", order=order).limit_value[0])


def unitarity_report(S: ScatteringData) -> float:
    prod = np.real(np.conj(S.r_plus) * S.r_minus)
    return float(np.max(np.abs(np.abs(S.a) ** 2 * (1.0 + prod) - 1.0)))


# --- hypotheses -------------------------------------------------------------------


def small_norm_criterion(u: SampledPotential) -> SmallNormCheck:
    nb = norms(u)
    lhs = 0.5 * nb.l2**2 + 0.5 * math.sqrt(nb.l1 * (2.0 * nb.dxl1 + nb.l3**3))
    return SmallNormCheck(satisfied=lhs < 0.5, lhs=lhs)


def _rectangle(Z: float, height: float, samples: int) -> np.ndarray:
    t = np.arange(samples) / samples
    bottom = -Z + 2.0 * Z * t
    right = Z + 1j * height * t
    top = Z - 2.0 * Z * t + 1j * height
    left = -Z + 1j * height * (1.0 - t)
    return np.concatenate([bottom, right, top, left])


def winding_number(
    u: SampledPotential,
    Z: float,
    height: float,
    *,
    samples: int = constants.WINDING_SAMPLES,
    order: int = 4,
    threads: int | None = None,
) -> int:
    """Zeros of a inside [-Z, Z] x [0, height], by summed argument increments."""
    n = samples
    for _ in range(constants.WINDING_MAX_REFINE + 1):
        contour = _rectangle(Z, height, n)
        a = a_values(u, contour, order=order, threads=threads)
        steps = np.angle(np.roll(a, -1) / a)
        if np.max(np.abs(steps)) < 0.5 * np.pi:
            return int(round(float(np.sum(steps)) / (2.0 * np.pi)))
        logger.debug(
            "argument step %.3f too large with %d samples per edge", np.max(np.abs(steps)), n
        )
        n *= 2
    raise WindingUnresolved(
        f"argument of a(z) is not resolved with {n // 2} samples per edge",
        suggested_samples=n,
    )


def spectral_health(
    u: SampledPotential,
    zgrid: SpectralGrid,
    *,
    scattering: ScatteringData | None = None,
    z_im: float | None = None,
    samples: int = constants.WINDING_SAMPLES,
    a_floor: float = constants.A_FLOOR,
    order: int = 4,
    threads: int | None = None,
) -> SpectralHealthReport:
    if scattering is None:
        try:
            scattering = scattering_coefficients(
                u, zgrid, a_floor=a_floor, order=order, threads=threads
            )
        except ResonanceDetected as exc:
            # the winding count is meaningless with a zero of a on the contour
            logger.error("no spectral health report: resonance at z = %.6g", exc.details["z"])
            raise
    height = zgrid.Z if z_im is None else z_im
    report = SpectralHealthReport(
        min_abs_a_real_line=float(np.min(np.abs(scattering.a))),
        winding_number_upper_half=winding_number(
            u, zgrid.Z, height, samples=samples, order=order, threads=threads
        ),
        small_norm_satisfied=small_norm_criterion(u).satisfied,
        c0_sq=scattering.c0_sq,
    )
    if not report.consistent:
        logger.error("small-norm potential reported spectral data: %s", report.as_dict())
    return report


def lipschitz_probe_a(
    u: SampledPotential,
    direction: np.ndarray,
    zgrid: SpectralGrid,
    deltas: tuple[float, ...] = (1e-2, 1e-3, 1e-4),
    *,
    order: int = 4,
) -> list[float]:
    """Ratios sup|a - a~| / |u - u~|_{H^{1,1}} along u~ = u + delta * direction."""
    base = scattering_coefficients(u, zgrid, order=order, threads=1).a
    ratios = []
    for delta in deltas:
        shifted = SampledPotential.from_values(
            u.grid, u.values + delta * direction, edge_floor=np.inf
        )
        diff = SampledPotential.from_values(u.grid, delta * direction, edge_floor=np.inf)
        a = scattering_coefficients(shifted, zgrid, order=order, threads=1).a
        ratios.append(float(np.max(np.abs(a - base)) / norms(diff).h11))
    return ratios
