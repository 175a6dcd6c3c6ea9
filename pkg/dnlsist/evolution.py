from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from dnlsist import constants
from dnlsist.errors import EigenvalueDetected
from dnlsist.grids import SampledPotential, SpectralGrid
from dnlsist.services.direct_scattering import (
    SpectralHealthReport,
    scattering_coefficients,
    spectral_health,
)
from dnlsist.services.pde_reference import ConservedQuantities, conserved_quantities
from dnlsist.services.rh_inverse import (
    ReconstructedPotential,
    ReflectionPair,
    SolverOptions,
    reconstruct,
    reflection_norms,
)
from dnlsist.services.workers import parallel_map
from dnlsist.settings import RunConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class EvolvedReflection:
    base: ReflectionPair
    t: float
    pair: ReflectionPair

    @property
    def r_plus(self) -> np.ndarray:
        return self.pair.r_plus

    @property
    def r_minus(self) -> np.ndarray:
        return self.pair.r_minus


@dataclass(frozen=True, slots=True)
class NyquistReport:
    t: float
    z_eff: float
    t_max: float
    resolved: bool

    def as_dict(self) -> dict[str, float | bool]:
        return {
            "t": self.t,
            "z_eff": self.z_eff,
            "t_max": self.t_max,
            "resolved": self.resolved,
        }


@dataclass(frozen=True, slots=True)
class PropagatedPotential:
    t: float
    potential: ReconstructedPotential
    a_inf: complex
    conserved: ConservedQuantities
    nyquist: NyquistReport
    reflection_norms: dict[str, float]

    def report(self) -> dict:
        return {
            "t": self.t,
            "a_inf": [self.a_inf.real, self.a_inf.imag],
            "conserved": self.conserved.as_dict(),
            "nyquist": self.nyquist.as_dict(),
            "reflection_norms": self.reflection_norms,
            **self.potential.report(),
        }


def evolve_scattering(r: ReflectionPair | EvolvedReflection, t: float) -> EvolvedReflection:
    """Multiply r+- by e^{4iz^2 t}; composing with an evolved pair adds the times."""
    if isinstance(r, EvolvedReflection):
        base, source, t_total = r.base, r.pair, r.t + t
    else:
        base, source, t_total = r, r, t
    phase = np.exp(4j * source.grid.nodes**2 * t)
    pair = replace(source, r_plus=source.r_plus * phase, r_minus=source.r_minus * phase)
    return EvolvedReflection(base=base, t=float(t_total), pair=pair)


def effective_support(r: ReflectionPair, floor: float = constants.SUPPORT_FLOOR) -> float:
    """Largest |z| where |r+| or |r-| exceeds floor * max."""
    mod = np.maximum(np.abs(r.r_plus), np.abs(r.r_minus))
    peak = float(mod.max(initial=0.0))
    if peak == 0.0:
        return 0.0
    return float(np.abs(r.grid.nodes[mod > floor * peak]).max())


def nyquist_check(
    r: ReflectionPair, t: float, *, safety: float = constants.NYQUIST_SAFETY
) -> NyquistReport:
    """Resolution of e^{4iz^2 t} on the z-grid over the support of r."""
    z_eff = effective_support(r)
    dz = r.grid.dz
    t_max = math.inf if z_eff == 0.0 else math.pi * safety / (8.0 * z_eff * dz)
    report = NyquistReport(t=float(t), z_eff=z_eff, t_max=t_max, resolved=abs(t) < t_max)
    if not report.resolved:
        logger.warning(
            "e^{4iz^2 t} is under-resolved at t = %.4g (limit %.4g for |z| <= %.3g); "
            "refine the z-grid",
            t,
            t_max,
            z_eff,
        )
    return report


def check_hypotheses(health: SpectralHealthReport) -> None:
    if health.winding_number_upper_half > 0:
        raise EigenvalueDetected(
            f"a(z) has {health.winding_number_upper_half} zero(s) in the upper half-plane; "
            "the potential carries eigenvalues",
            details=health.as_dict(),
        )


def ist_propagate(
    u0: SampledPotential,
    times: Sequence[float],
    zgrid: SpectralGrid,
    cfg: RunConfig | None = None,
) -> list[PropagatedPotential]:
    """Direct transform once, evolve the reflection data, reconstruct at every time."""
    cfg = cfg or RunConfig()
    threads = cfg.worker_threads
    data = scattering_coefficients(
        u0, zgrid, a_floor=cfg.a_floor, order=cfg.jost_order, threads=threads
    )
    health = spectral_health(
        u0,
        zgrid,
        scattering=data,
        z_im=cfg.z_im,
        samples=cfg.winding_samples,
        order=cfg.jost_order,
        threads=threads,
    )
    check_hypotheses(health)
    pair = ReflectionPair.from_scattering(
        data, relation_tol=cfg.relation_tol, decay_floor=cfg.decay_floor
    )
    opts = SolverOptions.from_config(cfg)
    inner_threads = 1 if len(times) > 1 else threads

    def run(t: float) -> PropagatedPotential:
        evolved = evolve_scattering(pair, t).pair
        nyquist = nyquist_check(evolved, t, safety=cfg.nyquist_safety)
        rec = reconstruct(
            evolved, u0.grid, opts=opts, gluing_tol=cfg.gluing_tol, threads=inner_threads
        )
        rec_potential = SampledPotential.from_values(u0.grid, rec.values, edge_floor=np.inf)
        return PropagatedPotential(
            t=float(t),
            potential=rec,
            a_inf=data.a_inf,
            conserved=conserved_quantities(rec_potential),
            nyquist=nyquist,
            reflection_norms=reflection_norms(evolved),
        )

    results = parallel_map(run, [float(t) for t in times], threads=threads)
    for item in results:
        logger.info("t = %.4g: I0 = %.8f", item.t, item.conserved.I0)
    return results
