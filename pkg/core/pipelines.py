"""
Pipelines behind the `aniso` management command.

Each run writes into <output_dir>/<command>-<hash12>/ where the hash covers
the run configuration and the bytes of every input file, so identical runs
land in the same directory with byte-identical artifacts.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from core.exceptions import ConfigurationError
from core.schemas import RunConfig
from core.utils import content_hash, write_json, write_table
from geometry.catalog import parse_body
from gridcalc.catalog import parse_field
from gridcalc.io import read_young_csv, write_grid_csv
from rearrangement.profiles import distribution
from rearrangement.symmetrization import integrand_symmetral, symmetral, triple_symmetral
from verification.diagnostics import extremality_diagnostics, sandwich_constants
from verification.engine import verify_inequality, young_grid_for
from verification.generators import generate_prop51, generate_prop52
from verification.schemas import SCHEMA_VERSION, Report
from young.catalog import parse_young
from young.conjugation import conjugate_fast, convexify, involution_check, validate_young
from young.functions import Young1D, YoungND, as_sampled
from young.levelsets import level_volume_profile

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2


@dataclass
class RunResult:
    exit_code: int
    directory: Path
    payload: Dict[str, Any] = field(default_factory=dict)


def build_phi(spec: str, dim: int) -> Tuple[YoungND, Optional[float]]:
    """
    Catalog Young functions as given; `csv:` tables replaced by their lower
    convex envelope, with max |Phi** - Phi| as the second value.
    """
    if spec.startswith("csv:"):
        table = read_young_csv(spec[4:])
        envelope, deviation = convexify(table)
        if deviation > 1e-9 * max(1.0, envelope.max_finite):
            logger.warning(f"{table.label} is not convex; using its double conjugate (deviation {deviation:.3g})")
        return envelope, deviation
    return parse_young(spec, dim), None


def _require(config: RunConfig, *names: str) -> None:
    missing = [f"--{name}" for name in names if getattr(config, name) in (None, "")]
    if missing:
        raise ConfigurationError(f"{config.command} needs {', '.join(missing)}")


def _sampled_phi(config: RunConfig):
    phi, deviation = build_phi(config.phi, config.dim)
    return phi, as_sampled(phi, resolution=config.young_res or config.res), deviation


def _inner_deviation(first, second) -> float:
    grid = first.grid
    mask = grid.inner_mask(0.5) & first.finite_mask & np.isfinite(second.values)
    if not mask.any():
        return float("nan")
    return float(np.max(np.abs(first.values[mask] - second.values[mask])))


def run_conjugate(config: RunConfig, directory: Path) -> Tuple[Dict[str, Any], int]:
    _require(config, "phi")
    phi, sampled, deviation = _sampled_phi(config)
    conj = conjugate_fast(sampled)
    validation = validate_young(phi, seed=config.seed, grid=sampled.grid)
    summary = {
        "grid": sampled.grid.describe(),
        "involution_deviation": involution_check(sampled),
        "valid": validation.is_valid,
        "problems": validation.problems(),
        "convexification_deviation": deviation,
    }
    closed = phi.closed_conjugate()
    if closed is not None:
        summary["closed_form_deviation"] = _inner_deviation(conj, closed.sample(conj.grid))
    write_grid_csv(directory / "phi.csv", sampled.grid, sampled.values)
    write_grid_csv(directory / "conjugate.csv", conj.grid, conj.values)
    return {"summary": summary}, EXIT_OK


def run_symmetrize_body(config: RunConfig, directory: Path) -> Tuple[Dict[str, Any], int]:
    _require(config, "phi", "K")
    _, sampled, deviation = _sampled_phi(config)
    K = parse_body(config.K, config.dim)
    phiK = integrand_symmetral(sampled, K)
    values = phiK.sample(sampled.grid)
    profile = level_volume_profile(phiK)
    write_grid_csv(directory / "phi_K.csv", values.grid, values.values)
    write_table(directory / "level_volume.csv", pd.DataFrame({"s": profile.levels, "nu": profile.nu}))
    summary = {
        "level_ceiling": phiK.level_ceiling(),
        "concavity_defect": profile.concavity_defect,
        "nondecreasing": profile.nondecreasing,
        "convexification_deviation": deviation,
    }
    return {"summary": summary}, EXIT_OK


def run_symmetrize_fn(config: RunConfig, directory: Path) -> Tuple[Dict[str, Any], int]:
    _require(config, "phi", "K")
    _, sampled, deviation = _sampled_phi(config)
    K = parse_body(config.K, config.dim)
    triple = triple_symmetral(sampled, K)
    write_grid_csv(directory / "triple.csv", triple.grid, triple.values)
    summary = {"deviation_from_phi": _inner_deviation(sampled, triple), "convexification_deviation": deviation}
    return {"summary": summary}, EXIT_OK


def run_symmetrize_u(config: RunConfig, directory: Path) -> Tuple[Dict[str, Any], int]:
    _require(config, "u", "K")
    u = parse_field(config.u, config.dim, config.res, config.box, config.seed)
    K = parse_body(config.K, u.dim)
    uK = symmetral(u, K)
    mu = distribution(u, count=config.levels)
    muK = distribution(uK, levels=mu.breakpoints)
    write_grid_csv(directory / "u_K.csv", uK.grid, uK.values)
    frame = pd.DataFrame({"t": mu.breakpoints, "mu": mu.values, "mu_K": muK.values})
    write_table(directory / "distribution.csv", frame)
    summary = {
        "max_distribution_gap": float(np.max(np.abs(mu.values - muK.values))),
        "cell_volume": u.grid.cell_volume,
    }
    return {"summary": summary}, EXIT_OK


def _verify(
    config: RunConfig,
    u,
    phi: YoungND,
    directory: Path,
    diagnose: bool = False,
    deviation: Optional[float] = None,
) -> Tuple[Report, int]:
    K = parse_body(config.K or "square", u.dim)
    young_grid = None
    if config.young_res is not None:
        uK = symmetral(u, K)
        young_grid = young_grid_for([u, uK], phi, resolution=config.young_res)
    levels = None
    if config.levels is not None:
        span = u.esssup - u.essinf
        levels = u.essinf + span * np.linspace(0.05, 0.95, config.levels)
    report = verify_inequality(
        u, phi, K, young_grid=young_grid, levels=levels, refinement_levels=config.refinement_levels
    )
    report.summary["convexification_deviation"] = deviation
    if diagnose:
        records, summary = extremality_diagnostics(
            u, phi, K, levels=levels, young_grid=young_grid, tolerance=config.residual_tolerance
        )
        report.diagnostics = records
        report.summary["diagnostics"] = summary
        write_table(directory / "diagnostics.csv", report.diagnostics_frame())
    write_table(directory / "levels.csv", report.level_frame())
    write_table(directory / "refinement.csv", pd.DataFrame([p.model_dump() for p in report.refinement]))
    uK = symmetral(u, K)
    write_grid_csv(directory / "u_K.csv", uK.grid, uK.values)
    return report, EXIT_VIOLATION if report.verdict == "violation" else EXIT_OK


def run_verify(config: RunConfig, directory: Path) -> Tuple[Report, int]:
    _require(config, "u", "phi")
    u = parse_field(config.u, config.dim, config.res, config.box, config.seed)
    phi, deviation = build_phi(config.phi, u.dim)
    return _verify(config, u, phi, directory, deviation=deviation)


def run_diagnose(config: RunConfig, directory: Path) -> Tuple[Report, int]:
    _require(config, "u", "phi")
    u = parse_field(config.u, config.dim, config.res, config.box, config.seed)
    phi, deviation = build_phi(config.phi, u.dim)
    return _verify(config, u, phi, directory, diagnose=True, deviation=deviation)


def run_gen_prop51(config: RunConfig, directory: Path):
    L = parse_body(config.L or "square", config.dim)
    A = Young1D.parse(config.A or "power,2")
    u, phi = generate_prop51(L, A, x0=config.x0, resolution=config.res, half_width=config.box)
    write_grid_csv(directory / "u.csv", u.grid, u.values)
    if config.then_verify:
        return _verify(config, u, phi, directory, diagnose=True)
    return {"summary": {"u": u.label, "phi": phi.label, "grid": u.grid.describe()}}, EXIT_OK


def run_gen_prop52(config: RunConfig, directory: Path):
    _require(config, "phi")
    phi, deviation = build_phi(config.phi, config.dim)
    t1, t2, t3 = config.t
    u = generate_prop52(phi, config.a, t1, t2, t3, x0=config.x0, resolution=config.res, half_width=config.box)
    write_grid_csv(directory / "u.csv", u.grid, u.values)
    if config.then_verify:
        return _verify(config, u, phi, directory, diagnose=True, deviation=deviation)
    return {"summary": {"u": u.label, "grid": u.grid.describe(), "convexification_deviation": deviation}}, EXIT_OK


def run_sandwich(config: RunConfig, directory: Path) -> Tuple[Dict[str, Any], int]:
    _require(config, "phi", "K")
    _, sampled, deviation = _sampled_phi(config)
    K = parse_body(config.K, config.dim)
    c1, c2 = sandwich_constants(sampled, K)
    return {"summary": {"c1": c1, "c2": c2, "convexification_deviation": deviation}}, EXIT_OK


PIPELINES: Dict[str, Callable] = {
    "conjugate": run_conjugate,
    "symmetrize-body": run_symmetrize_body,
    "symmetrize-fn": run_symmetrize_fn,
    "symmetrize-u": run_symmetrize_u,
    "verify": run_verify,
    "gen-prop51": run_gen_prop51,
    "gen-prop52": run_gen_prop52,
    "diagnose": run_diagnose,
    "sandwich": run_sandwich,
}


def run_directory(config: RunConfig) -> Tuple[Path, str]:
    settings = config.model_dump(exclude={"output_dir"})
    digest = content_hash(json.dumps(settings, sort_keys=True), *config.input_files())
    return config.output_root / f"{config.command}-{digest[:12]}", digest


def run(config: RunConfig) -> RunResult:
    """
    Execute the pipeline named by config.command and write its artifacts.

    Exit code 0 for holds/equality, 2 for a violation verdict. Errors
    propagate as AnisoException subclasses.
    """
    directory, digest = run_directory(config)
    directory.mkdir(parents=True, exist_ok=True)
    logger.info(f"Running {config.command} into {directory}")
    result, exit_code = PIPELINES[config.command](config, directory)

    settings = config.model_dump(exclude={"output_dir"})
    if isinstance(result, Report):
        result.command = config.command
        result.config = settings
        result.content_hash = digest
        result.seed = config.seed
        payload = result.model_dump()
        path = directory / "report.json"
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": config.command,
            "config": settings,
            "content_hash": digest,
            "seed": config.seed,
            **result,
        }
        path = directory / "result.json"
    write_json(path, payload)
    return RunResult(exit_code=exit_code, directory=directory, payload=payload)
