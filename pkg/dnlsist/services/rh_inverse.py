"""Riemann-Hilbert solves on the real z-line and potential reconstruction.

For fixed x the positive half-line system reads

    mu_-  = e1 + P-(r_-  e^{2izx} eta_+)
    eta_+ = e2 + P+(conj(r_+) e^{-2izx} mu_-)

and the negative half-line system is the same with P+ and P- exchanged and the
reflection data replaced by the delta-modified pair. Vector components decouple,
so each component is a linear system in 2*Nz unknowns.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from dnlsist import constants
from dnlsist.cauchy import GridFunction, project_minus, project_plus
from dnlsist.errors import ReflectionError, SolverError
from dnlsist.grids import SpatialGrid, SpectralGrid
from dnlsist.services.direct_scattering import ScatteringData, defocusing_margin
from dnlsist.services.workers import chunked, default_thread_count, parallel_map
from dnlsist.settings import RunConfig
from dnlsist.utils import (
    integrate,
    raised_cosine,
    running_integral_from_left,
    running_integral_from_right,
    spectral_derivative,
)

logger = logging.getLogger(__name__)

Projector = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, slots=True)
class ReflectionPair:
    grid: SpectralGrid
    r_plus: np.ndarray
    r_minus: np.ndarray
    c0_sq: float
    a_inf: complex | None = None  # attached by the direct transform

    @classmethod
    def from_scattering(
        cls,
        data: ScatteringData,
        *,
        relation_tol: float = constants.RELATION_TOL,
        decay_floor: float = constants.DECAY_FLOOR,
    ) -> ReflectionPair:
        pair = validate_reflection(
            GridFunction(data.grid, data.r_plus),
            GridFunction(data.grid, data.r_minus),
            relation_tol=relation_tol,
            decay_floor=decay_floor,
        )
        return replace(pair, a_inf=data.a_inf)

    @property
    def sup_abs(self) -> float:
        """sup |r| with |r|^2 = |conj(r+) r-|."""
        return float(np.sqrt(np.max(np.abs(np.conj(self.r_plus) * self.r_minus))))


@dataclass(frozen=True, slots=True)
class DeltaFactor:
    grid: SpectralGrid
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    r_plus_delta: np.ndarray
    r_minus_delta: np.ndarray


@dataclass(frozen=True, slots=True)
class RHSolution:
    """Solved columns on the z-grid; arrays are (Nz, 2) with vector components last."""

    x: float
    mu_minus: np.ndarray | None = None
    eta_plus: np.ndarray | None = None
    mu_plus_delta: np.ndarray | None = None
    eta_minus_delta: np.ndarray | None = None
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True, slots=True)
class ReconstructedPotential:
    grid: SpatialGrid
    values: np.ndarray
    gluing_defect: float
    max_residual: float
    phase_defect: float | None = None
    derivative_values: np.ndarray | None = None
    derivative_defect: float | None = None

    @property
    def mass(self) -> float:
        return float(integrate(np.abs(self.values) ** 2, self.grid.dx))

    def report(self) -> dict[str, float | None]:
        return {
            "gluing_defect": self.gluing_defect,
            "max_rh_residual": self.max_residual,
            "phase_defect": self.phase_defect,
            "derivative_defect": self.derivative_defect,
            "I0": self.mass,
        }


@dataclass(frozen=True, slots=True)
class SolverOptions:
    tol: float = constants.SOLVER_TOL
    restart: int = constants.GMRES_RESTART
    maxiter: int = constants.GMRES_MAXITER
    neumann_threshold: float = constants.NEUMANN_THRESHOLD

    @classmethod
    def from_config(cls, cfg: RunConfig) -> SolverOptions:
        return cls(
            tol=cfg.solver_tol,
            restart=cfg.gmres_restart,
            neumann_threshold=cfg.neumann_threshold,
        )


@dataclass(frozen=True, slots=True)
class PositivityReport:
    min_form: float
    min_eigenvalue: float
    bound: np.ndarray
    holds: bool


@dataclass(frozen=True, slots=True)
class _JumpSystem:
    z: np.ndarray
    dz: float
    r_plus: np.ndarray
    r_minus: np.ndarray
    outer: Projector  # projection in the mu equation
    inner: Projector  # projection in the eta equation

    def weights(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        phase = np.exp(2j * self.z * x)
        return self.r_minus * phase, np.conj(self.r_plus) / phase


# --- reflection data --------------------------------------------------------------


def validate_reflection(
    r_plus: GridFunction,
    r_minus: GridFunction,
    *,
    relation_tol: float = constants.RELATION_TOL,
    decay_floor: float = constants.DECAY_FLOOR,
) -> ReflectionPair:
    if r_plus.grid != r_minus.grid:
        raise ReflectionError("r+ and r- live on different z-grids")
    grid = r_plus.grid
    rp = GridFunction.checked(grid, r_plus.values, decay_floor=decay_floor).values
    rm = GridFunction.checked(grid, r_minus.values, decay_floor=decay_floor).values
    z = grid.nodes
    defect = float(np.max(np.abs(rm - 4.0 * z * rp)))
    scale = max(1.0, float(np.max(np.abs(rm))))
    if defect > relation_tol * scale:
        raise ReflectionError(
            f"r- = 4z r+ violated: max defect {defect:.3e} > {relation_tol:.1e}",
            details={"relation_defect": defect},
        )
    c0_sq = defocusing_margin(z, rp, rm)
    if not c0_sq > 0:
        raise ReflectionError(
            f"1 + Re(conj(r+) r-) reaches {c0_sq:.4g} on z < 0; data are inadmissible",
            details={"c0_sq": c0_sq},
        )
    return ReflectionPair(grid=grid, r_plus=rp, r_minus=rm, c0_sq=c0_sq)


def reflection_norms(r: ReflectionPair) -> dict[str, float]:
    """L^{2,1} and H^1 norms of r+ and r-."""
    z = r.grid.nodes
    dz = r.grid.dz
    out = {}
    for name, values in (("r_plus", r.r_plus), ("r_minus", r.r_minus)):
        mod2 = np.abs(values) ** 2
        dmod2 = np.abs(spectral_derivative(values, dz)) ** 2
        out[f"{name}_l21"] = float(np.sqrt(integrate((1.0 + z**2) * mod2, dz)))
        out[f"{name}_h1"] = float(np.sqrt(integrate(mod2 + dmod2, dz)))
    return out


def delta_factor(r: ReflectionPair) -> DeltaFactor:
    jump = 1.0 + np.real(np.conj(r.r_plus) * r.r_minus)
    worst = float(jump.min())
    if not worst > 0:
        raise ReflectionError(
            f"1 + conj(r+) r- reaches {worst:.4g}; the scalar factorization needs it positive",
            details={"min_jump": worst},
        )
    log_jump = np.log(jump)
    delta_plus = np.exp(project_plus(log_jump))
    delta_minus = np.exp(project_minus(log_jump))
    gauge = np.conj(delta_plus * delta_minus)
    return DeltaFactor(
        grid=r.grid,
        delta_plus=delta_plus,
        delta_minus=delta_minus,
        r_plus_delta=gauge * r.r_plus,
        r_minus_delta=gauge * r.r_minus,
    )


# --- linear systems ---------------------------------------------------------------


def _positive_system(r: ReflectionPair) -> _JumpSystem:
    return _JumpSystem(
        z=r.grid.nodes,
        dz=r.grid.dz,
        r_plus=r.r_plus,
        r_minus=r.r_minus,
        outer=project_minus,
        inner=project_plus,
    )


def _negative_system(d: DeltaFactor) -> _JumpSystem:
    return _JumpSystem(
        z=d.grid.nodes,
        dz=d.grid.dz,
        r_plus=d.r_plus_delta,
        r_minus=d.r_minus_delta,
        outer=project_plus,
        inner=project_minus,
    )


def _rhs(n: int, component: int) -> np.ndarray:
    b = np.zeros(2 * n, dtype=complex)
    if component == 0:
        b[:n] = 1.0
    else:
        b[n:] = 1.0
    return b


def _solve_component(
    system: _JumpSystem, x: float, component: int, opts: SolverOptions
) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Returns (mu, eta, residual, iterations) for one vector component."""
    n = system.z.size
    rho, sigma = system.weights(x)

    def kernel(X: np.ndarray) -> np.ndarray:
        return np.concatenate([system.outer(rho * X[n:]), system.inner(sigma * X[:n])])

    b = _rhs(n, component)
    if not np.any(rho) and not np.any(sigma):
        return b[:n].copy(), b[n:].copy(), 0.0, 0

    iterations = 0
    X = None
    if max(np.abs(rho).max(), np.abs(sigma).max()) < opts.neumann_threshold:
        Y = b.copy()
        for iterations in range(1, opts.maxiter + 1):
            Y_next = b + kernel(Y)
            step = float(np.max(np.abs(Y_next - Y)))
            Y = Y_next
            if step < opts.tol:
                X = Y
                break
        else:
            logger.debug("Neumann series stalled at x = %.4g; switching to GMRES", x)

    if X is None:
        op = LinearOperator((2 * n, 2 * n), matvec=lambda X: X - kernel(X), dtype=complex)
        counter = [0]

        def count(_: float) -> None:
            counter[0] += 1

        X, info = gmres(
            op,
            b,
            x0=b.copy(),
            rtol=opts.tol,
            atol=0.0,
            restart=opts.restart,
            maxiter=opts.maxiter,
            callback=count,
            callback_type="pr_norm",
        )
        iterations = counter[0]
        if info != 0:
            raise SolverError(
                f"GMRES did not converge at x = {x:.6g} (info {info}, {iterations} iterations)",
                details={"x": x, "info": int(info), "iterations": iterations},
            )

    residual = float(np.max(np.abs(X - kernel(X) - b)))
    return X[:n], X[n:], residual, iterations


def _solve_full(
    system: _JumpSystem, x: float, opts: SolverOptions
) -> tuple[np.ndarray, np.ndarray, float, int]:
    parts = [_solve_component(system, x, c, opts) for c in (0, 1)]
    mu = np.stack([p[0] for p in parts], axis=-1)
    eta = np.stack([p[1] for p in parts], axis=-1)
    return mu, eta, max(p[2] for p in parts), sum(p[3] for p in parts)


def solve_rh_positive(
    r: ReflectionPair, x: float, opts: SolverOptions | None = None
) -> RHSolution:
    mu, eta, residual, iterations = _solve_full(_positive_system(r), x, opts or SolverOptions())
    return RHSolution(
        x=float(x), mu_minus=mu, eta_plus=eta, residual=residual, iterations=iterations
    )


def solve_rh_negative(
    d: DeltaFactor, x: float, opts: SolverOptions | None = None
) -> RHSolution:
    mu, eta, residual, iterations = _solve_full(_negative_system(d), x, opts or SolverOptions())
    return RHSolution(
        x=float(x),
        mu_plus_delta=mu,
        eta_minus_delta=eta,
        residual=residual,
        iterations=iterations,
    )


def dense_system(
    source: ReflectionPair | DeltaFactor, x: float, component: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Dense matrix and right-hand side of one component system; for small Nz only."""
    system = (
        _positive_system(source)
        if isinstance(source, ReflectionPair)
        else _negative_system(source)
    )
    n = system.z.size
    rho, sigma = system.weights(x)
    eye = np.eye(n)
    outer = system.outer(eye).T * rho
    inner = system.inner(eye).T * sigma
    A = np.block([[eye, -outer], [-inner, eye]])
    return A, _rhs(n, component)


# --- reconstruction ------------------------------------------------------------------


def _moment(system: _JumpSystem, x: float, mu_first: np.ndarray) -> complex:
    weight = np.conj(system.r_plus) * np.exp(-2j * system.z * x)
    return complex(2.0 / (math.pi * 1j) * np.sum(weight * mu_first) * system.dz)


def _derivative_moment(system: _JumpSystem, x: float, eta_second: np.ndarray) -> complex:
    """exp(-(i/2) Phi) d/dx(conj(u) exp(-(i/2) Phi)), Phi = int_{+inf}^x |u|^2."""
    weight = system.r_minus * np.exp(2j * system.z * x)
    return complex(-1.0 / math.pi * np.sum(weight * eta_second) * system.dz)


def _moments(
    system: _JumpSystem,
    xs: np.ndarray,
    opts: SolverOptions,
    threads: int | None,
    *,
    derivative: bool = False,
) -> tuple[np.ndarray, np.ndarray, float]:
    if xs.size == 0:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=complex), 0.0

    def run(sl: slice) -> tuple[np.ndarray, np.ndarray, float]:
        values = np.empty(sl.stop - sl.start, dtype=complex)
        slopes = np.zeros(sl.stop - sl.start, dtype=complex)
        worst = 0.0
        for k, x in enumerate(xs[sl]):
            mu, _, residual, iterations = _solve_component(system, float(x), 0, opts)
            values[k] = _moment(system, float(x), mu)
            if derivative:
                _, eta, second, more = _solve_component(system, float(x), 1, opts)
                slopes[k] = _derivative_moment(system, float(x), eta)
                residual = max(residual, second)
                iterations += more
            worst = max(worst, residual)
            logger.debug("x = %.4g: %d iterations, residual %.2e", x, iterations, residual)
        return values, slopes, worst

    n_parts = default_thread_count() if threads is None else threads
    results = parallel_map(run, chunked(xs.size, n_parts * 4), threads=threads)
    return (
        np.concatenate([v for v, _, _ in results]),
        np.concatenate([s for _, s, _ in results]),
        max(w for _, _, w in results),
    )


def _phase_defect(mass: float, a_inf: complex) -> float:
    target = -2.0 * np.angle(a_inf)
    return float(abs((mass - target + 2.0 * np.pi) % (4.0 * np.pi) - 2.0 * np.pi))


def reconstruct(
    r: ReflectionPair,
    xgrid: SpatialGrid,
    *,
    opts: SolverOptions | None = None,
    gluing_tol: float = constants.GLUING_TOL,
    threads: int | None = None,
    derivative: bool = False,
) -> ReconstructedPotential:
    """Recover u on `xgrid` from both half-line problems, blended near x = 0.

    The two solves produce the same gauge-transformed field
    ``v = u exp(i int_{+inf}^x |u|^2)`` and u follows from |v| = |u| by a cumulative
    phase integral, from the right edge for x >= 0 and from the left edge (with
    the a_inf phase) for x < 0.

    With ``derivative=True`` the second vector component is solved as well and
    u_x is rebuilt from it; ``derivative_defect`` compares that against the
    spectral derivative of the reconstructed u.
    """
    opts = opts or SolverOptions()
    x = xgrid.nodes
    dx = xgrid.dx
    half = min(constants.OVERLAP_HALF_WIDTH, xgrid.L / 8.0)
    right = x >= -half
    left = x <= half

    v_pos = np.zeros(x.shape, dtype=complex)
    v_neg = np.zeros(x.shape, dtype=complex)
    w_pos = np.zeros(x.shape, dtype=complex)
    w_neg = np.zeros(x.shape, dtype=complex)
    v_pos[right], w_pos[right], res_pos = _moments(
        _positive_system(r), x[right], opts, threads, derivative=derivative
    )
    v_neg[left], w_neg[left], res_neg = _moments(
        _negative_system(delta_factor(r)), x[left], opts, threads, derivative=derivative
    )

    overlap = right & left
    gluing = float(np.max(np.abs(v_pos[overlap] - v_neg[overlap]), initial=0.0))
    weight = raised_cosine(x, half)
    v = weight * v_pos + (1.0 - weight) * v_neg

    mod2 = np.abs(v) ** 2
    mass = float(integrate(mod2, dx))
    a_inf = r.a_inf if r.a_inf is not None else complex(np.exp(-0.5j * mass))
    gauge = np.where(
        x >= 0.0,
        np.exp(-1j * running_integral_from_right(mod2, dx)),
        np.conj(a_inf) ** 2 * np.exp(-1j * running_integral_from_left(mod2, dx)),
    )
    u = v * gauge

    u_x = None
    slope_defect = None
    if derivative:
        w = weight * w_pos + (1.0 - weight) * w_neg
        v_x = np.conj(w - 0.5j * mod2 * np.conj(v))
        u_x = (v_x - 1j * mod2 * v) * gauge
        spectral = spectral_derivative(u, dx)
        scale = float(np.max(np.abs(spectral), initial=0.0))
        slope_defect = float(np.max(np.abs(u_x - spectral), initial=0.0)) / (scale or 1.0)

    phase = _phase_defect(mass, r.a_inf) if r.a_inf is not None else None
    result = ReconstructedPotential(
        grid=xgrid,
        values=u,
        gluing_defect=gluing,
        max_residual=max(res_pos, res_neg),
        phase_defect=phase,
        derivative_values=u_x,
        derivative_defect=slope_defect,
    )
    logger.info(
        "reconstructed u on %d nodes: gluing defect %.2e, max RH residual %.2e",
        x.size,
        gluing,
        result.max_residual,
    )
    if gluing > gluing_tol:
        raise SolverError(
            f"half-line reconstructions disagree on the overlap by {gluing:.3e} "
            f"(tolerance {gluing_tol:.1e})",
            details=result.report(),
        )
    return result


# --- diagnostics ---------------------------------------------------------------------


def jump_residual(r: ReflectionPair, solution: RHSolution) -> float:
    """max |M+ - M- - M- R| with M+ and eta- rebuilt from the solved columns."""
    if solution.mu_minus is None or solution.eta_plus is None:
        raise ValueError("jump residual needs a positive half-line solution")
    rho, sigma = _positive_system(r).weights(solution.x)
    mu_minus = solution.mu_minus
    eta_plus = solution.eta_plus
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    mu_plus = e1 + project_plus(rho * eta_plus.T).T
    eta_minus = e2 + project_minus(sigma * mu_minus.T).T
    product = np.real(np.conj(r.r_plus) * r.r_minus)[:, None]
    first = mu_plus - mu_minus - (product * mu_minus + rho[:, None] * eta_minus)
    second = eta_plus - eta_minus - sigma[:, None] * mu_minus
    return float(max(np.abs(first).max(), np.abs(second).max()))


def _jump_matrices(r: ReflectionPair, x: float) -> np.ndarray:
    z = r.grid.nodes
    mod = np.sqrt(np.abs(np.conj(r.r_plus) * r.r_minus))
    rl = mod * np.exp(1j * np.angle(r.r_plus))
    phase = np.exp(2j * z * x)
    s = np.zeros(z.shape + (2, 2), dtype=complex)
    sign = np.where(z >= 0, 1.0, -1.0)
    s[:, 0, 0] = sign * mod**2
    s[:, 0, 1] = sign * np.conj(rl) / phase
    s[:, 1, 0] = rl * phase
    return np.eye(2) + s


def positivity_bound(
    r: ReflectionPair, x: float = 0.0, *, samples: int = 64, seed: int = 0
) -> PositivityReport:
    """Sampled Re g^* (I + S) g / |g|^2 against the lower bound on each z-node."""
    z = r.grid.nodes
    mats = _jump_matrices(r, x)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    forms = np.real(np.einsum("si,zij,sj->zs", np.conj(g), mats, g))
    hermitian = 0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2)))
    eigen = np.linalg.eigvalsh(hermitian)[:, 0]

    positive = z > 0
    sup_pos = float(np.sqrt(np.abs(np.conj(r.r_plus) * r.r_minus))[positive].max(initial=0.0))
    bound = np.where(positive, (1.0 + sup_pos) ** -2, r.c0_sq)
    slack = 1e-12
    holds = bool(np.all(forms.min(axis=1) >= bound - slack) and np.all(eigen >= bound - slack))
    return PositivityReport(
        min_form=float(forms.min()),
        min_eigenvalue=float(eigen.min()),
        bound=bound,
        holds=holds,
    )


def fredholm_probe(r: ReflectionPair, xs: np.ndarray) -> np.ndarray:
    """Smallest singular value of the dense positive-side operator at each x."""
    if r.grid.Nz > 512:
        raise ValueError(f"dense probe is meant for Nz <= 512, got {r.grid.Nz}")
    out = np.empty(len(xs))
    for k, x in enumerate(xs):
        A, _ = dense_system(r, float(x))
        out[k] = np.linalg.svd(A, compute_uv=False).min()
    return out


def column_decay_profile(
    r: ReflectionPair, xs: np.ndarray, opts: SolverOptions | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """<x> |eta_+^(1)(x; .)|_{L^2_z} at each x, and its supremum over [x, max xs]."""
    opts = opts or SolverOptions()
    system = _positive_system(r)
    weighted = np.empty(len(xs))
    for k, x in enumerate(xs):
        _, eta, _, _ = _solve_component(system, float(x), 0, opts)
        weighted[k] = math.sqrt(1.0 + x * x) * math.sqrt(
            float(np.sum(np.abs(eta) ** 2)) * system.dz
        )
    tail_sup = np.maximum.accumulate(weighted[::-1])[::-1]
    return weighted, tail_sup
