from __future__ import annotations

import argparse
import logging
from collections.abc import Callable, Sequence
from dataclasses import replace
from pathlib import Path

import numpy as np

from dnlsist import __version__
from dnlsist.cauchy import GridFunction
from dnlsist.datafiles import (
    read_json,
    read_potential,
    read_scattering,
    scattering_metadata,
    write_json,
    write_potential,
    write_scattering,
)
from dnlsist.errors import DnlsError, SolverError
from dnlsist.evolution import check_hypotheses, ist_propagate
from dnlsist.grids import (
    SampledPotential,
    SpatialGrid,
    make_grids,
    sample_potential,
    truncation_report,
)
from dnlsist.services.direct_scattering import (
    ScatteringData,
    scattering_coefficients,
    spectral_health,
    unitarity_report,
)
from dnlsist.services.pde_reference import conserved_quantities, reference_solution
from dnlsist.services.rh_inverse import (
    ReconstructedPotential,
    ReflectionPair,
    SolverOptions,
    reconstruct,
    validate_reflection,
)
from dnlsist.settings import RunConfig, load_config, save_config
from dnlsist.validation import run_suites

logger = logging.getLogger("dnlsist")

Command = Callable[[RunConfig, argparse.Namespace], int]


def load_potential(cfg: RunConfig, grid: SpatialGrid) -> SampledPotential:
    if cfg.potential["kind"] == "csv":
        table = read_potential(Path(cfg.potential["path"]))
        return sample_potential(table, grid, edge_floor=cfg.edge_floor)
    return sample_potential(cfg.potential, grid, edge_floor=cfg.edge_floor)


def _relative_error(values: np.ndarray, reference: np.ndarray) -> float:
    ref = float(np.linalg.norm(reference))
    diff = float(np.linalg.norm(values - reference))
    return diff / ref if ref else diff


def _forward(cfg: RunConfig, out: Path) -> tuple[SampledPotential, ScatteringData, dict]:
    xgrid, zgrid = make_grids(cfg.L, cfg.Nx, cfg.Z, cfg.Nz)
    u = load_potential(cfg, xgrid)
    data = scattering_coefficients(
        u, zgrid, a_floor=cfg.a_floor, order=cfg.jost_order, threads=cfg.worker_threads
    )
    health = spectral_health(
        u,
        zgrid,
        scattering=data,
        z_im=cfg.z_im,
        samples=cfg.winding_samples,
        order=cfg.jost_order,
        threads=cfg.worker_threads,
    )
    meta = scattering_metadata(
        data,
        health=health.as_dict(),
        unitarity_defect=unitarity_report(data),
        truncation=truncation_report(u),
    )
    write_scattering(out / "scattering.csv", data)
    write_json(out / "scattering.json", meta)
    logger.info("scattering data written to %s", out)
    check_hypotheses(health)
    return u, data, meta


def _write_reconstruction(
    out: Path, name: str, rec: ReconstructedPotential, extra: dict | None = None
) -> dict:
    write_potential(out / f"{name}.csv", rec.grid, rec.values)
    report = {**rec.report(), **(extra or {})}
    write_json(out / f"{name}.json", report)
    return report


def cmd_forward(cfg: RunConfig, args: argparse.Namespace) -> int:
    _forward(cfg, args.out)
    return 0


def cmd_inverse(cfg: RunConfig, args: argparse.Namespace) -> int:
    xgrid, zgrid = make_grids(cfg.L, cfg.Nx, cfg.Z, cfg.Nz)
    source = args.scattering or args.out / "scattering.csv"
    columns = read_scattering(source, zgrid)
    pair = validate_reflection(
        GridFunction(zgrid, columns["r_plus"]),
        GridFunction(zgrid, columns["r_minus"]),
        relation_tol=cfg.relation_tol,
        decay_floor=cfg.decay_floor,
    )
    meta_path = source.with_suffix(".json")
    if meta_path.exists():
        re_a, im_a = read_json(meta_path)["a_inf"]
        pair = replace(pair, a_inf=complex(re_a, im_a))
    rec = reconstruct(
        pair,
        xgrid,
        opts=SolverOptions.from_config(cfg),
        gluing_tol=cfg.gluing_tol,
        threads=cfg.worker_threads,
        derivative=args.compare,
    )
    extra = {}
    if args.compare:
        extra["relative_l2_error"] = _relative_error(rec.values, load_potential(cfg, xgrid).values)
    _write_reconstruction(args.out, "potential", rec, extra)
    return 0


def cmd_roundtrip(cfg: RunConfig, args: argparse.Namespace) -> int:
    u, data, _ = _forward(cfg, args.out)
    pair = ReflectionPair.from_scattering(
        data, relation_tol=cfg.relation_tol, decay_floor=cfg.decay_floor
    )
    rec = reconstruct(
        pair,
        u.grid,
        opts=SolverOptions.from_config(cfg),
        gluing_tol=cfg.gluing_tol,
        threads=cfg.worker_threads,
        derivative=True,
    )
    err = _relative_error(rec.values, u.values)
    _write_reconstruction(args.out, "roundtrip", rec, {"relative_l2_error": err})
    logger.info("roundtrip relative L2 error %.3e", err)
    if err > cfg.roundtrip_tol:
        raise SolverError(
            f"roundtrip error {err:.3e} exceeds {cfg.roundtrip_tol:.1e}",
            details={"relative_l2_error": err},
        )
    return 0


def _reference_run(u0: SampledPotential, cfg: RunConfig, times: Sequence[float]) -> dict:
    return {t: reference_solution(u0, t, cfl=cfg.pde_cfl) for t in times}


def cmd_evolve(cfg: RunConfig, args: argparse.Namespace) -> int:
    xgrid, zgrid = make_grids(cfg.L, cfg.Nx, cfg.Z, cfg.Nz)
    u0 = load_potential(cfg, xgrid)
    results = ist_propagate(u0, cfg.times, zgrid, cfg)
    reference = _reference_run(u0, cfg, cfg.times) if args.compare else {}
    initial = conserved_quantities(u0)
    report = {"initial_conserved": initial.as_dict(), "times": []}
    for item in results:
        write_potential(args.out / f"potential_t{item.t:g}.csv", xgrid, item.potential.values)
        entry = item.report()
        entry["conserved_drift"] = item.conserved.relative_drift(initial)
        if item.t in reference:
            entry["cross_solver_error"] = _relative_error(
                item.potential.values, reference[item.t]
            )
        report["times"].append(entry)
    write_json(args.out / "evolve.json", report)
    return 0


def cmd_compare(cfg: RunConfig, args: argparse.Namespace) -> int:
    xgrid, zgrid = make_grids(cfg.L, cfg.Nx, cfg.Z, cfg.Nz)
    u0 = load_potential(cfg, xgrid)
    results = ist_propagate(u0, cfg.times, zgrid, cfg)
    reference = _reference_run(u0, cfg, cfg.times)
    initial = conserved_quantities(u0)
    rows = []
    for item in results:
        pde_values = reference[item.t]
        pde_potential = SampledPotential.from_values(xgrid, pde_values, edge_floor=np.inf)
        rows.append(
            {
                "t": item.t,
                "relative_l2_error": _relative_error(item.potential.values, pde_values),
                "ist_drift": item.conserved.relative_drift(initial),
                "pde_drift": conserved_quantities(pde_potential).relative_drift(initial),
            }
        )
        write_potential(args.out / f"pde_t{item.t:g}.csv", xgrid, pde_values)
    write_json(args.out / "compare.json", {"initial_conserved": initial.as_dict(), "times": rows})
    return 0


def cmd_validate(cfg: RunConfig, args: argparse.Namespace) -> int:
    xgrid, _ = make_grids(cfg.L, cfg.Nx, cfg.Z, cfg.Nz)
    report = run_suites(cfg, u=load_potential(cfg, xgrid))
    write_json(args.out / "validate.json", report.as_dict())
    failed = [r.name for r in report.results if not r.passed]
    if failed:
        logger.error("failed suites: %s", ", ".join(failed))
        return 2
    return 0


COMMANDS: dict[str, Command] = {
    "forward": cmd_forward,
    "inverse": cmd_inverse,
    "evolve": cmd_evolve,
    "roundtrip": cmd_roundtrip,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnlsist",
        description="Inverse scattering transform for the derivative NLS equation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--scattering", type=Path, default=None, help="scattering CSV for inverse")
    parser.add_argument("--compare", action="store_true", help="add cross-checks to reports")
    parser.add_argument("--deterministic", action="store_true", help="run in a single thread")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(name)s] %(message)s",
    )
    try:
        cfg = load_config(args.config)
        if args.deterministic:
            cfg.deterministic = True
        if args.threads is not None:
            cfg.threads = max(1, args.threads)
        args.out.mkdir(parents=True, exist_ok=True)
        save_config(cfg, args.out / "config.json")
        return COMMANDS[args.command](cfg, args)
    except DnlsError as exc:
        logger.error("%s", exc.user_message)
        return exc.exit_code
