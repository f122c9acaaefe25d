"""
End-to-end check of the anisotropic Polya-Szego inequality

    integral of Phi_•K•(grad u^K)  <=  integral of Phi(grad u)

with a per-level chain of intermediate quantities and a refinement trace.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import nnls

from core.exceptions import AnisoException, ArgumentError, LevelGridTooShortError
from core.grids import UniformGrid
from core.utils import aniso_setting
from geometry.bodies import ConvexBody
from geometry.catalog import disc
from gridcalc.catalog import tent
from gridcalc.coarea import (
    band_mask,
    chain_levels,
    default_band_width,
    level_integral,
    minus_mu_prime_at,
    nonvanishing,
)
from gridcalc.fields import GridFunction, dirichlet_functional, truncate_below
from rearrangement.profiles import Profile, distribution
from rearrangement.symmetrization import TripleSymmetral, symmetral, triple_symmetral_parts
from verification.schemas import LevelRecord, RefinementPoint, Report
from young.catalog import quadratic
from young.functions import SampledYoung, YoungND, as_sampled
from young.levelsets import maximizer_profile

logger = logging.getLogger(__name__)


def young_grid_for(
    fields: Sequence[GridFunction],
    phi: YoungND,
    box_factor: Optional[float] = None,
    resolution: Optional[int] = None,
) -> UniformGrid:
    """
    Dual box for Phi: box_factor times the largest gradient of the fields.
    A sampled Phi keeps its own grid.
    """
    if isinstance(phi, SampledYoung):
        return phi.grid
    box_factor = aniso_setting("box_factor", box_factor)
    resolution = aniso_setting("young_resolution", resolution)
    largest = max(float(np.max(f.gradient_norm())) for f in fields)
    half_width = box_factor * largest if largest > 0 else getattr(phi, "half_width", 2.0)
    return UniformGrid.box(half_width, resolution, phi.dim)


@dataclass
class ChainContext:
    """Everything the per-level chain needs, computed once."""

    u: GridFunction
    uK: GridFunction
    parts: TripleSymmetral
    K: ConvexBody
    dt: float
    mu: Profile
    phi_values: np.ndarray = field(repr=False)
    triple_values: np.ndarray = field(repr=False)
    weight_u: np.ndarray = field(repr=False)
    weight_uK: np.ndarray = field(repr=False)
    tolerance: float = 0.05


def build_context(
    u: GridFunction, uK: GridFunction, phi: YoungND, parts: TripleSymmetral, K: ConvexBody
) -> ChainContext:
    dt = max(default_band_width(u), default_band_width(uK))
    # fill lazy caches before the per-level work fans out to threads
    parts.conjugate.level_support_profile(np.zeros(u.dim), [0.0])
    with np.errstate(invalid="ignore"):
        phi_values = np.asarray(phi.evaluate(u.gradient()), dtype=float)
        triple_values = np.asarray(parts.triple.evaluate(uK.gradient()), dtype=float)
    return ChainContext(
        u=u,
        uK=uK,
        parts=parts,
        K=K,
        dt=dt,
        mu=distribution(u),
        phi_values=np.where(np.isnan(phi_values), np.inf, phi_values),
        triple_values=np.where(np.isnan(triple_values), np.inf, triple_values),
        weight_u=nonvanishing(u),
        weight_uK=nonvanishing(uK),
        tolerance=aniso_setting("chain_tolerance"),
    )


def representative_gradient(uK: GridFunction, K: ConvexBody, band: np.ndarray, weight: np.ndarray):
    """
    Gradient of u^K at the band node whose h_K(-grad u^K) is the median, with
    the relative spread of h_K(-grad u^K) over the band.
    """
    usable = band & (weight > 0)
    if not usable.any():
        return None, float("nan")
    gradients = uK.gradient()[usable]
    tau = K.support(-gradients)
    order = np.argsort(tau, kind="stable")
    median = order[len(order) // 2]
    scale = max(float(np.median(tau)), 1e-300)
    return gradients[median], float((np.max(tau) - np.min(tau)) / scale)


def level_record(context: ChainContext, t: float) -> LevelRecord:
    """
    Chain at level t, from the Phi side of u to the Phi_•K• side of u^K:

        phi_term >= support_term >= isoperimetric_u
                  = isoperimetric_uK = support_term_uK = triple_term
    """
    u, uK, dt = context.u, context.uK, context.dt
    n = u.dim
    conj = context.parts.conjugate
    sym = context.parts.symmetral
    band_uK = band_mask(uK, t, dt)
    xi, _ = representative_gradient(uK, context.K, band_uK, context.weight_uK)
    if xi is None:
        return LevelRecord(t=t, band=dt, band_tolerance=0.0, note="empty band")
    try:
        s_t = maximizer_profile(sym, xi).s_star
    except LevelGridTooShortError as e:
        return LevelRecord(t=t, band=dt, band_tolerance=0.0, note=str(e))

    phi_term = level_integral(u, np.where(context.weight_u > 0, context.phi_values, 0.0), t, dt)

    band_u = band_mask(u, t, dt) & (context.weight_u > 0)
    support = np.zeros(u.values.shape)
    if band_u.any():
        support[band_u] = conj.sublevel_support(s_t, u.gradient()[band_u]) - s_t
    support_term = level_integral(u, support, t, dt)

    above_u = u.volume_above(t, strict=False)
    above_uK = uK.volume_above(t, strict=False)
    set_volume = float(conj.sublevel_volume(s_t))
    set_volume_K = float(sym.sublevel_volume(s_t))
    minus_mu_prime = minus_mu_prime_at(context.mu, t, dt)
    isoperimetric_u = n * above_u ** ((n - 1) / n) * set_volume ** (1.0 / n) - s_t * minus_mu_prime
    inverse_uK = level_integral(uK, context.weight_uK, t, dt)
    isoperimetric_uK = n * above_uK ** ((n - 1) / n) * set_volume_K ** (1.0 / n) - s_t * inverse_uK

    band_K = band_uK & (context.weight_uK > 0)
    analytic = np.zeros(uK.values.shape)
    analytic[band_K] = sym.sublevel_support(s_t, uK.gradient()[band_K]) - s_t
    support_term_uK = level_integral(uK, analytic, t, dt)
    triple_term = level_integral(uK, np.where(context.weight_uK > 0, context.triple_values, 0.0), t, dt)

    terms = [phi_term, support_term, isoperimetric_u, isoperimetric_uK, support_term_uK, triple_term]
    finite = [abs(v) for v in terms if np.isfinite(v)]
    band_tolerance = context.tolerance * (max(finite) if finite else 0.0)
    dominance = phi_term >= support_term - band_tolerance and support_term >= isoperimetric_u - band_tolerance
    equalities = (
        abs(isoperimetric_u - isoperimetric_uK) <= band_tolerance
        and abs(isoperimetric_uK - support_term_uK) <= band_tolerance
        and abs(support_term_uK - triple_term) <= band_tolerance
    )
    return LevelRecord(
        t=float(t),
        band=dt,
        band_tolerance=band_tolerance,
        s_t=float(s_t),
        phi_term=phi_term,
        support_term=support_term,
        isoperimetric_u=isoperimetric_u,
        isoperimetric_uK=isoperimetric_uK,
        support_term_uK=support_term_uK,
        triple_term=triple_term,
        dominance_holds=bool(dominance),
        equalities_hold=bool(equalities),
    )


async def _bounded(semaphore: asyncio.Semaphore, func, *args):
    async with semaphore:
        return await asyncio.to_thread(func, *args)


async def gather_levels(func, levels: Sequence[float], *args, threads: Optional[int] = None) -> list:
    """Run func(*args, t) for every level on worker threads; results keep level order."""
    semaphore = asyncio.Semaphore(aniso_setting("threads", threads))
    tasks = [_bounded(semaphore, func, *args, float(t)) for t in levels]
    return await asyncio.gather(*tasks)


def lipschitz_on_range(phi_sampled: SampledYoung, radius: float) -> float:
    """Largest finite-difference slope of Phi over the ball of the gradient range."""
    parts = np.gradient(np.where(phi_sampled.finite_mask, phi_sampled.values, np.nan), *phi_sampled.grid.spacing)
    if phi_sampled.dim == 1:
        parts = [parts]
    slope = np.linalg.norm(np.stack(parts, axis=-1), axis=-1)
    inside = np.linalg.norm(phi_sampled.grid.coordinates, axis=-1) <= radius * (1.0 + 1e-12)
    usable = inside & np.isfinite(slope)
    return float(np.max(slope[usable])) if usable.any() else 0.0


def error_estimate(
    u: GridFunction,
    uK: GridFunction,
    phi_sampled: SampledYoung,
    dt: float,
    phi_terms: List[float],
    constants: Optional[Tuple[float, float]] = None,
) -> float:
    """
    err(h) = C1 h Lip(Phi on the gradient range) |supp grad u| + C2 dt max_t phi_term(t).
    """
    c1, c2 = constants or error_constants()
    first, second = error_features(u, uK, phi_sampled, dt, phi_terms)
    return float(c1 * first + c2 * second)


def error_features(
    u: GridFunction, uK: GridFunction, phi_sampled: SampledYoung, dt: float, phi_terms: List[float]
) -> Tuple[float, float]:
    """The two terms of the error model without their constants."""
    radius = max(float(np.max(u.gradient_norm())), float(np.max(uK.gradient_norm())))
    lip = lipschitz_on_range(phi_sampled, radius)
    support = np.count_nonzero(u.gradient_norm() > aniso_setting("gradient_floor")) * u.grid.cell_volume
    finite_terms = [abs(v) for v in phi_terms if v is not None and np.isfinite(v)]
    band_scale = max(finite_terms) if finite_terms else 0.0
    return u.grid.max_spacing * lip * support, dt * band_scale


def error_constants() -> Tuple[float, float]:
    """C1, C2 from settings when both are given, otherwise calibrated once per process."""
    model = aniso_setting("error_model")
    if model.get("c1") is not None and model.get("c2") is not None:
        return float(model["c1"]), float(model["c2"])
    return calibrated_constants()


@lru_cache(maxsize=None)
def calibrated_constants() -> Tuple[float, float]:
    model = calibrate_error_model()
    return model["c1"], model["c2"]


def both_sides(u: GridFunction, phi: YoungND, K: ConvexBody, triple: SampledYoung):
    uK = symmetral(u, K)
    rhs = dirichlet_functional(u, phi)
    lhs = dirichlet_functional(uK, triple)
    return uK, lhs, rhs


def classify(lhs: float, rhs: float, err: float) -> str:
    if np.isinf(lhs) and np.isinf(rhs):
        return "indeterminate"
    if np.isinf(rhs):
        return "inequality-holds"
    if np.isinf(lhs):
        return "indeterminate"
    excess = lhs - rhs
    if abs(excess) <= err:
        return "equality-within-tol"
    if excess < 0:
        return "inequality-holds"
    return "violation"


def coarse_young(phi_sampled: SampledYoung, factor: int) -> SampledYoung:
    """Phi restricted to every `factor`-th node of its grid; the full grid when that is too coarse."""
    try:
        grid = phi_sampled.grid.coarsen(factor)
    except ArgumentError:
        return phi_sampled
    if min(grid.shape) < 16:
        return phi_sampled
    return as_sampled(phi_sampled, grid)


def refinement_trace(
    u: GridFunction,
    phi: YoungND,
    K: ConvexBody,
    phi_sampled: SampledYoung,
    finest: RefinementPoint,
    levels: Optional[int] = None,
    constants: Optional[Tuple[float, float]] = None,
) -> List[RefinementPoint]:
    """
    Both sides with u and Phi restricted to every 2nd, 4th, ... node of their
    grids; coarsest first, `finest` last.
    """
    levels = aniso_setting("refinement_levels", levels)
    points = []
    for k in range(levels, 0, -1):
        factor = 2**k
        field_k = u.coarsen(factor)
        if min(field_k.grid.shape) < 16:
            continue
        phi_k = coarse_young(phi_sampled, factor)
        try:
            triple_k = triple_symmetral_parts(phi_k, K).triple
            uK_k, lhs_k, rhs_k = both_sides(field_k, phi, K, triple_k)
        except AnisoException as e:
            logger.warning(f"Refinement level {factor} skipped: {e}")
            continue
        dt_k = max(default_band_width(field_k), default_band_width(uK_k))
        err_k = error_estimate(field_k, uK_k, phi_k, dt_k, [], constants)
        points.append(
            RefinementPoint(
                shape=list(field_k.grid.shape),
                spacing=field_k.grid.max_spacing,
                lhs=lhs_k,
                rhs=rhs_k,
                excess=lhs_k - rhs_k if np.isfinite(lhs_k) and np.isfinite(rhs_k) else 0.0,
                error_estimate=err_k,
            )
        )
    points.append(finest)
    return points


def violation_persists(trace: List[RefinementPoint], ratio: Optional[float] = None) -> bool:
    """
    An excess is confirmed when the next coarser grid shows it above its own
    error estimate and refinement keeps at least `ratio` of it.
    """
    ratio = aniso_setting("refinement_ratio", ratio)
    if len(trace) < 2:
        return True
    coarse, fine = trace[-2], trace[-1]
    return coarse.excess > coarse.error_estimate and fine.excess >= ratio * coarse.excess


def verify_inequality(
    u: GridFunction,
    phi: YoungND,
    K: ConvexBody,
    young_grid: Optional[UniformGrid] = None,
    levels=None,
    refinement_levels: Optional[int] = None,
    threads: Optional[int] = None,
) -> Report:
    """
    Compute u^K and Phi_•K•, both functionals, the per-level chain and a verdict.

    "violation" needs lhs - rhs above the error model on the finest grid and
    an excess that persists under refinement (see `violation_persists`).
    """
    warnings: List[str] = []
    uK = symmetral(u, K)
    grid = young_grid or young_grid_for([u, uK], phi)
    phi_sampled = as_sampled(phi, grid)
    parts = triple_symmetral_parts(phi_sampled, K)
    if not K.is_origin_symmetric():
        warnings.append(f"{K.label} is not origin-symmetric; Phi_K follows the -K sub-level convention")

    rhs = dirichlet_functional(u, phi)
    lhs = dirichlet_functional(uK, parts.triple)

    context = build_context(u, uK, phi, parts, K)
    levels = chain_levels(u) if levels is None else np.asarray(levels, dtype=float)
    records = asyncio.run(gather_levels(level_record, levels, context, threads=threads))
    for record in records:
        if record.note:
            warnings.append(f"t={record.t:.6g}: {record.note}")

    constants = error_constants()
    err = error_estimate(u, uK, phi_sampled, context.dt, [r.phi_term for r in records], constants)
    verdict = classify(lhs, rhs, err)
    finest = RefinementPoint(
        shape=list(u.grid.shape),
        spacing=u.grid.max_spacing,
        lhs=lhs,
        rhs=rhs,
        excess=lhs - rhs if np.isfinite(lhs) and np.isfinite(rhs) else 0.0,
        error_estimate=err,
    )
    trace = refinement_trace(u, phi, K, phi_sampled, finest, refinement_levels, constants)
    if verdict == "violation" and not violation_persists(trace):
        warnings.append("Excess above the error model shrinks under refinement; treated as discretization error")
        verdict = "equality-within-tol"
    if verdict == "indeterminate":
        warnings.append("Both sides are infinite" if np.isinf(rhs) else "Left side is infinite")

    dominance = [r.dominance_holds for r in records if r.dominance_holds is not None]
    equalities = [r.equalities_hold for r in records if r.equalities_hold is not None]
    summary = {
        "levels": len(records),
        "dominance_fraction": float(np.mean(dominance)) if dominance else None,
        "equality_fraction": float(np.mean(equalities)) if equalities else None,
        "relative_gap": float((lhs - rhs) / rhs) if np.isfinite(rhs) and rhs > 0 and np.isfinite(lhs) else None,
        "error_model": {"c1": constants[0], "c2": constants[1]},
        "young_grid": grid.describe(),
        "u_grid": u.grid.describe(),
    }
    logger.info(f"verify {u.label} / {phi_sampled.label} / {K.label}: lhs={lhs:.6g} rhs={rhs:.6g} -> {verdict}")
    return Report(
        u=u.label,
        phi=getattr(phi, "label", ""),
        body=K.label,
        lhs=lhs,
        rhs=rhs,
        error_estimate=err,
        margin=float(rhs - lhs) if np.isfinite(lhs) and np.isfinite(rhs) else 0.0,
        verdict=verdict,
        levels=records,
        refinement=trace,
        summary=summary,
        warnings=warnings,
    )


def truncation_consistency(
    u: GridFunction,
    phi: YoungND,
    K: ConvexBody,
    fractions: Sequence[float] = (0.25, 0.5, 0.75),
    young_grid: Optional[UniformGrid] = None,
) -> List[dict]:
    """The inequality for max{u, t} at a few levels t, with the triple symmetral computed once."""
    uK = symmetral(u, K)
    grid = young_grid or young_grid_for([u, uK], phi)
    phi_sampled = as_sampled(phi, grid)
    triple = triple_symmetral_parts(phi_sampled, K).triple
    rows = []
    for fraction in fractions:
        t = u.essinf + fraction * (u.esssup - u.essinf)
        truncated = truncate_below(u, t)
        uK_t, lhs, rhs = both_sides(truncated, phi, K, triple)
        err = error_estimate(truncated, uK_t, phi_sampled, default_band_width(truncated), [])
        rows.append({"t": float(t), "lhs": lhs, "rhs": rhs, "error_estimate": err, "holds": lhs <= rhs + err})
    return rows


def calibrate_error_model(resolutions: Optional[Sequence[int]] = None, safety: Optional[float] = None) -> dict:
    """
    Fit C1, C2 >= 0 on the radial tent with Phi = |xi|^2/2 and K a disc, where both sides agree exactly.

    The fit is scaled so that the model covers every observed |lhs - rhs|,
    then multiplied by `safety`.
    """
    resolutions = tuple(aniso_setting("error_calibration_resolutions", resolutions))
    safety = aniso_setting("error_calibration_safety", safety)
    body = disc()
    phi = quadratic(2)
    features, observed = [], []
    for resolution in resolutions:
        grid = UniformGrid.box(1.6, resolution, 2)
        u = tent(body, grid)
        uK = symmetral(u, body)
        phi_sampled = as_sampled(phi, young_grid_for([u, uK], phi))
        parts = triple_symmetral_parts(phi_sampled, body)
        lhs = dirichlet_functional(uK, parts.triple)
        rhs = dirichlet_functional(u, phi)
        context = build_context(u, uK, phi, parts, body)
        integrand = np.where(context.weight_u > 0, context.phi_values, 0.0)
        phi_terms = [level_integral(u, integrand, t, context.dt) for t in chain_levels(u)]
        features.append(error_features(u, uK, phi_sampled, context.dt, phi_terms))
        observed.append(abs(lhs - rhs))

    matrix, target = np.asarray(features), np.asarray(observed)
    coefficients, _ = nnls(matrix, target)
    fitted = matrix @ coefficients
    if not np.any(fitted > 0):
        usable = matrix[:, 0] > 0
        first = float(np.max(target[usable] / matrix[usable, 0])) if usable.any() else 0.0
        coefficients = np.array([first, 0.0])
        fitted = matrix @ coefficients
    ratios = np.where(fitted > 0, target / np.where(fitted > 0, fitted, 1.0), 1.0)
    scale = safety * max(1.0, float(np.max(ratios)))
    c1, c2 = (scale * float(c) for c in coefficients)
    logger.info(f"Calibrated error model: c1={c1:.4g} c2={c2:.4g}")
    return {
        "c1": c1,
        "c2": c2,
        "observed": [float(v) for v in observed],
        "features": matrix.tolist(),
        "resolutions": list(resolutions),
        "safety": safety,
    }
