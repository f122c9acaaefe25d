"""
Level-by-level residuals of the conditions characterizing equality, and the
sandwich constants relating Phi_K and Phi_•K•.
"""

import asyncio
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from core.exceptions import LevelGridTooShortError
from core.grids import UniformGrid
from core.utils import aniso_setting, sphere_directions
from geometry.bodies import ConvexBody
from gridcalc.coarea import band_mask, chain_levels, default_band_width, level_integral, nonvanishing
from gridcalc.fields import GridFunction
from rearrangement.symmetrization import (
    TripleSymmetral,
    integrand_symmetral,
    symmetral,
    triple_symmetral,
    triple_symmetral_parts,
)
from verification.engine import gather_levels, representative_gradient, young_grid_for
from verification.schemas import DiagnosticLevel
from young.functions import SampledYoung, YoungND, as_sampled
from young.levelsets import maximizer_profile

logger = logging.getLogger(__name__)

BAND_SAMPLE = 256
CANDIDATE_LIMIT = 4096


@dataclass
class DiagnosticContext:
    u: GridFunction
    uK: GridFunction
    phi: YoungND
    K: ConvexBody
    parts: TripleSymmetral
    symmetral_sampled: SampledYoung
    dt: float
    weight_u: np.ndarray
    weight_uK: np.ndarray
    directions: np.ndarray
    uniqueness: bool


def _set_support(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    if len(points) > points.shape[1] + 1:
        try:
            points = points[ConvexHull(points).vertices]
        except QhullError:
            pass
    return np.max(directions @ points.T, axis=1)


def hull_volume(points: np.ndarray) -> float:
    if len(points) <= points.shape[1]:
        return 0.0
    try:
        return float(ConvexHull(points).volume)
    except QhullError:
        return 0.0


def interior_count(mask: np.ndarray) -> int:
    """Nodes of the mask whose axis neighbours are all in the mask."""
    inner = mask.copy()
    for axis in range(mask.ndim):
        inner[tuple(slice(None) if k != axis else slice(0, 1) for k in range(mask.ndim))] = False
        inner[tuple(slice(None) if k != axis else slice(-1, None) for k in range(mask.ndim))] = False
        inner &= np.roll(mask, 1, axis=axis) & np.roll(mask, -1, axis=axis)
    return int(np.count_nonzero(inner))


def fenchel_defects(
    gradients: np.ndarray,
    phi_values: np.ndarray,
    candidates: np.ndarray,
    candidate_values: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    For every gradient g: min over candidates xi of Phi(g) + Psi(xi) - <g, xi>,
    normalized by Phi(g) + Psi(xi), and the index of the minimizer.
    """
    total = phi_values[:, None] + candidate_values[None, :]
    defect = total - gradients @ candidates.T
    normalized = defect / np.maximum(np.abs(total), 1e-12)
    best = np.argmin(normalized, axis=1)
    return normalized[np.arange(len(gradients)), best], best


def _band_sample(mask: np.ndarray, limit: int = BAND_SAMPLE) -> np.ndarray:
    index = np.flatnonzero(mask)
    if len(index) > limit:
        index = index[np.linspace(0, len(index) - 1, limit).astype(int)]
    return index


def _subgradient_residual(
    u: GridFunction,
    band: np.ndarray,
    outer_values: np.ndarray,
    inner: SampledYoung,
    s_t: float,
    uniqueness: bool,
):
    """
    Fenchel-equality defect of grad u against xi in the level band {inner ~ s_t},
    90th percentile over band nodes, and the spread of near-minimizers.
    """
    index = _band_sample(band)
    if len(index) == 0:
        return None, None
    gradients = u.gradient().reshape(-1, u.dim)[index]
    values = outer_values.ravel()[index]
    finite = np.isfinite(values)
    gradients, values = gradients[finite], values[finite]
    if len(gradients) == 0:
        return None, None

    nodes = inner.grid.points()
    level_values = inner.values.ravel()
    scale = inner.grid.max_spacing * 2.0 * float(np.max(np.linalg.norm(gradients, axis=1)))
    near = np.isfinite(level_values) & (np.abs(level_values - s_t) <= max(scale, 1e-12))
    if not near.any():
        near = np.zeros(level_values.shape, dtype=bool)
        finite_index = np.flatnonzero(np.isfinite(level_values))
        closest = finite_index[np.argsort(np.abs(level_values[finite_index] - s_t))[:64]]
        near[closest] = True
    candidates = nodes[near]
    candidate_values = level_values[near]
    if len(candidates) > CANDIDATE_LIMIT:
        keep = np.linspace(0, len(candidates) - 1, CANDIDATE_LIMIT).astype(int)
        candidates, candidate_values = candidates[keep], candidate_values[keep]

    defects, best = fenchel_defects(gradients, values, candidates, candidate_values)
    residual = float(np.percentile(np.maximum(defects, 0.0), 90))

    spread = None
    if uniqueness:
        total = values[:, None] + candidate_values[None, :]
        normalized = (total - gradients @ candidates.T) / np.maximum(np.abs(total), 1e-12)
        threshold = normalized[np.arange(len(gradients)), best][:, None] + 1e-3
        diameters = []
        for row in range(len(gradients)):
            chosen = candidates[normalized[row] <= threshold[row]]
            diameters.append(float(np.max(np.linalg.norm(chosen - chosen[0], axis=1))) if len(chosen) > 1 else 0.0)
        spread = float(np.percentile(diameters, 90))
    return residual, spread


def diagnose_level(context: DiagnosticContext, t: float) -> DiagnosticLevel:
    u, uK, dt = context.u, context.uK, context.dt
    n = u.dim
    conj = context.parts.conjugate
    sym = context.parts.symmetral

    band_uK = band_mask(uK, t, dt)
    xi, spread = representative_gradient(uK, context.K, band_uK, context.weight_uK)
    if xi is None:
        return DiagnosticLevel(t=t, note="empty band")
    try:
        s_t = float(maximizer_profile(sym, xi).s_star)
    except LevelGridTooShortError as e:
        return DiagnosticLevel(t=t, constancy_spread=spread, note=f"extend the level grid: {e}")

    # (a) the sub-level set {Phi_• <= s_t} has interior
    sublevel = conj.values <= s_t
    interior = interior_count(sublevel)
    residual_a = 0.0 if interior >= 3**n else 1.0

    # (b) {u >= t} is a homothetic copy of -{Phi_• <= s_t}
    upper_set = u.values >= t
    upper_points = u.grid.points()[upper_set.ravel()]
    level_points = conj.grid.points()[sublevel.ravel()]
    residual_b = a_t = x_t = None
    quasi = None
    if len(upper_points) and len(level_points):
        upper_volume = len(upper_points) * u.grid.cell_volume
        level_volume = len(level_points) * conj.grid.cell_volume
        upper_center = upper_points.mean(axis=0)
        level_center = level_points.mean(axis=0)
        a_t = float((upper_volume / level_volume) ** (1.0 / n))
        x_t = upper_center + a_t * level_center
        theta = context.directions
        h_upper = (_set_support(upper_points, theta) - theta @ upper_center) / upper_volume ** (1.0 / n)
        h_level = (_set_support(level_points, -theta) + theta @ level_center) / level_volume ** (1.0 / n)
        residual_b = float(np.max(np.abs(h_upper - h_level)))
        hull = hull_volume(upper_points)
        quasi = float(min(1.0, upper_volume / hull)) if hull > 0 else 1.0

    # (c) grad u in the subdifferential of Phi_• at a point of {Phi_• = s_t}
    band_u = band_mask(u, t, dt) & (context.weight_u > 0)
    with np.errstate(invalid="ignore"):
        phi_values = np.asarray(context.phi.evaluate(u.gradient()), dtype=float)
    residual_c, uniqueness_spread = _subgradient_residual(u, band_u, phi_values, conj, s_t, context.uniqueness)

    # (d) the same for u^K against Phi_•K, whose conjugate is Phi_•K•
    band_K = band_uK & (context.weight_uK > 0)
    triple_values = context.parts.triple.evaluate(uK.gradient())
    residual_d, _ = _subgradient_residual(uK, band_K, triple_values, context.symmetral_sampled, s_t, False)

    # (e) equal 1/|grad| level integrals when s_t > 0
    residual_e = 0.0
    if s_t > 0:
        first = level_integral(u, context.weight_u, t, dt)
        second = level_integral(uK, context.weight_uK, t, dt)
        residual_e = float(abs(first - second) / max(second, 1e-300))

    return DiagnosticLevel(
        t=float(t),
        s_t=s_t,
        a_t=a_t,
        x_t=None if x_t is None else [float(v) for v in x_t],
        constancy_spread=spread,
        interior_nodes=interior,
        residual_a=residual_a,
        residual_b=residual_b,
        residual_c=residual_c,
        residual_d=residual_d,
        residual_e=residual_e,
        quasi_convexity=quasi,
        uniqueness_spread=uniqueness_spread,
    )


def summarize(levels: List[DiagnosticLevel], tolerance: Optional[float] = None) -> dict:
    """Residual percentiles and the fraction of levels below tolerance, per condition."""
    tolerance = aniso_setting("residual_tolerance", tolerance)
    threshold = aniso_setting("quasi_convex_threshold")
    summary = {"levels": len(levels), "tolerance": tolerance}
    for name in ("residual_a", "residual_b", "residual_c", "residual_d", "residual_e"):
        values = np.array([getattr(r, name) for r in levels if getattr(r, name) is not None], dtype=float)
        if values.size == 0:
            summary[name] = None
            continue
        summary[name] = {
            "p50": float(np.percentile(values, 50)),
            "p90": float(np.percentile(values, 90)),
            "max": float(np.max(values)),
            "fraction_below": float(np.mean(values <= tolerance)),
        }
    scores = [r.quasi_convexity for r in levels if r.quasi_convexity is not None]
    summary["quasi_convexity_min"] = float(min(scores)) if scores else None
    summary["quasi_convex"] = bool(min(scores) >= threshold) if scores else None
    spreads = [r.uniqueness_spread for r in levels if r.uniqueness_spread is not None]
    summary["uniqueness_spread_max"] = float(max(spreads)) if spreads else None
    return summary


def extremality_diagnostics(
    u: GridFunction,
    phi: YoungND,
    K: ConvexBody,
    levels=None,
    young_grid: Optional[UniformGrid] = None,
    threads: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> Tuple[List[DiagnosticLevel], dict]:
    """
    Per level t: s_t from the maximizer along grad u^K, the homothety fit
    (a_t, x_t) and residuals of conditions (a)-(e), plus a quasi-convexity score.
    """
    uK = symmetral(u, K)
    grid = young_grid or young_grid_for([u, uK], phi)
    parts = triple_symmetral_parts(as_sampled(phi, grid), K)
    context = DiagnosticContext(
        u=u,
        uK=uK,
        phi=phi,
        K=K,
        parts=parts,
        symmetral_sampled=parts.symmetral.sample(parts.conjugate.grid),
        dt=max(default_band_width(u), default_band_width(uK)),
        weight_u=nonvanishing(u),
        weight_uK=nonvanishing(uK),
        directions=sphere_directions(aniso_setting("support_directions"), u.dim),
        uniqueness=bool(getattr(phi, "strictly_convex", False) and getattr(phi, "differentiable", False)),
    )
    parts.conjugate.level_support_profile(np.zeros(u.dim), [0.0])
    parts.triple.evaluate(np.zeros((1, u.dim)))
    levels = chain_levels(u) if levels is None else np.asarray(levels, dtype=float)
    records = asyncio.run(gather_levels(diagnose_level, levels, context, threads=threads))
    summary = summarize(records, tolerance)
    if summary.get("quasi_convex") is False:
        logger.warning(f"Super-level sets of {u.label} are not convex: equality cannot hold")
    return records, summary


def sandwich_constants(
    phi: YoungND,
    K: ConvexBody,
    grid: Optional[UniformGrid] = None,
    quantile: Optional[float] = None,
    fraction: Optional[float] = None,
    iterations: int = 40,
) -> Tuple[float, float]:
    """
    Largest c1 and smallest c2 with Phi_K(c1 xi) <= Phi_•K•(xi) <= Phi_K(c2 xi)
    at a `quantile` share of the inner-box nodes.
    """
    quantile = aniso_setting("sandwich_quantile", quantile)
    fraction = aniso_setting("inner_box_fraction", fraction)
    sampled = as_sampled(phi, grid)
    triple = triple_symmetral(sampled, K)
    phi_K = integrand_symmetral(sampled, K)

    mask = sampled.grid.inner_mask(fraction) & np.isfinite(triple.values)
    points = sampled.grid.coordinates[mask]
    target = triple.values[mask]
    nonzero = np.linalg.norm(points, axis=1) > 0
    points, target = points[nonzero], target[nonzero]
    slack = 1e-9 * max(1.0, float(np.max(np.abs(target)))) if target.size else 0.0

    def below(c):
        return float(np.mean(phi_K.evaluate(c * points) <= target + slack))

    def above(c):
        return float(np.mean(phi_K.evaluate(c * points) >= target - slack))

    c1 = _geometric_search(below, quantile, iterations, increasing=False)
    c2 = _geometric_search(above, quantile, iterations, increasing=True)
    low, high = min(c1, c2), max(c1, c2)
    logger.info(f"Sandwich constants for {sampled.label} and {K.label}: c1={low:.4g} c2={high:.4g}")
    return low, high


def _geometric_search(share, quantile: float, iterations: int, increasing: bool) -> float:
    """
    Boundary c of {share(c) >= quantile}; `share` is nonincreasing in c when
    `increasing` is False (largest admissible c) and nondecreasing otherwise (smallest).
    """
    good, bad = 1.0, 1.0
    if increasing:
        while share(good) < quantile and good < 1e6:
            good *= 2.0
        bad = good
        while share(bad) >= quantile and bad > 1e-6:
            bad /= 2.0
    else:
        while share(good) < quantile and good > 1e-6:
            good /= 2.0
        bad = good
        while share(bad) >= quantile and bad < 1e6:
            bad *= 2.0
    for _ in range(iterations):
        middle = np.sqrt(good * bad)
        if share(middle) >= quantile:
            good = middle
        else:
            bad = middle
    return float(good)
