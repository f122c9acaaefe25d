"""
Legendre-Fenchel conjugation of sampled Young functions.

Both paths compute the same discrete transform

    Phi_•(xi) = max over finite nodes eta of <xi, eta> - Phi(eta)

on an output grid; conjugate_fast factors the sup axis by axis.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.exceptions import ValidationError
from core.grids import UniformGrid
from core.utils import aniso_setting
from young.functions import SampledYoung, YoungND, as_sampled, level_grid
from young.legendre import legendre_along_axis

logger = logging.getLogger(__name__)


def _conjugate_label(label: str) -> str:
    return f"{label}•"


def conjugate_oracle(phi: YoungND, out_grid: Optional[UniformGrid] = None, chunk: int = 64) -> SampledYoung:
    """Brute-force sup over every finite input node for every output node."""
    sampled = as_sampled(phi)
    out_grid = out_grid or sampled.grid
    finite = sampled.finite_mask.ravel()
    nodes = sampled.grid.points()[finite]
    values = sampled.values.ravel()[finite]

    queries = out_grid.points()
    result = np.empty(len(queries))
    for start in range(0, len(queries), chunk):
        block = queries[start : start + chunk]
        result[start : start + chunk] = np.max(block @ nodes.T - values[None, :], axis=1)
    return SampledYoung(out_grid, result.reshape(out_grid.shape), label=_conjugate_label(sampled.label))


def conjugate_fast(phi: YoungND, out_grid: Optional[UniformGrid] = None) -> SampledYoung:
    """
    Factored transform: one-dimensional discrete Legendre transforms along
    the last axis, then along each preceding axis applied to minus the
    partial result.
    """
    sampled = as_sampled(phi)
    out_grid = out_grid or sampled.grid
    if out_grid.dim != sampled.dim:
        raise ValidationError("Output grid dimension differs from the input")

    current = sampled.values
    for step, axis in enumerate(reversed(range(sampled.dim))):
        source = current if step == 0 else -current
        current = legendre_along_axis(source, sampled.grid.axes[axis], out_grid.axes[axis], axis)
    logger.debug(f"Conjugated {sampled.label} on {out_grid.shape}")
    return SampledYoung(out_grid, current, label=_conjugate_label(sampled.label))


def involution_check(phi: YoungND, fraction: Optional[float] = None) -> float:
    """max |(Phi_•)_• - Phi| over finite nodes of the inner box."""
    sampled = as_sampled(phi)
    fraction = aniso_setting("inner_box_fraction", fraction)
    bidual = conjugate_fast(conjugate_fast(sampled))
    mask = sampled.finite_mask & sampled.grid.inner_mask(fraction)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(bidual.values[mask] - sampled.values[mask])))


def conjugate_via_levelsets(phi: YoungND, directions, levels=None) -> np.ndarray:
    """
    Phi_•(xi) = sup over s >= 0 of h_{Phi <= s}(xi) - s, on a tabulated level grid.
    """
    sampled = as_sampled(phi)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    levels = level_grid(sampled.max_finite) if levels is None else np.asarray(levels, dtype=float)
    result = np.empty(len(directions))
    for i, xi in enumerate(directions):
        profile = sampled.level_support_profile(xi, levels)
        result[i] = np.max(profile - levels)
    return result


def fenchel_young_gap(phi: YoungND, conjugate: YoungND, sample: int = 32) -> float:
    """
    min over node pairs of Phi(xi) + Phi_•(eta) - <xi, eta> on a sample x sample subgrid of each.
    """
    left = as_sampled(phi)
    right = as_sampled(conjugate)
    xs, fx = _subsample(left, sample)
    ys, fy = _subsample(right, sample)
    if len(xs) == 0 or len(ys) == 0:
        return float("inf")
    gap = fx[:, None] + fy[None, :] - xs @ ys.T
    return float(np.min(gap))


def _subsample(sampled: SampledYoung, sample: int):
    stride = [max(1, n // sample) for n in sampled.grid.shape]
    index = tuple(slice(0, None, s) for s in stride)
    points = sampled.grid.coordinates[index].reshape(-1, sampled.dim)
    values = sampled.values[index].ravel()
    finite = np.isfinite(values)
    return points[finite], values[finite]


@dataclass
class YoungValidation:
    label: str
    zero_value: float
    finite_near_zero: bool
    rim_minimum: float
    convexity_excess: float
    tolerance: float

    @property
    def grows(self) -> bool:
        return self.rim_minimum > 0

    @property
    def is_valid(self) -> bool:
        return (
            abs(self.zero_value) <= self.tolerance
            and self.finite_near_zero
            and self.grows
            and self.convexity_excess <= self.tolerance
        )

    def problems(self):
        found = []
        if abs(self.zero_value) > self.tolerance:
            found.append(f"Phi(0) = {self.zero_value:.3g}")
        if not self.finite_near_zero:
            found.append("Phi is not finite near 0")
        if not self.grows:
            found.append("Phi vanishes somewhere on the box boundary")
        if self.convexity_excess > self.tolerance:
            found.append(f"convexity violated by {self.convexity_excess:.3g}")
        return found


def validate_young(
    phi: YoungND,
    seed: int = 0,
    strict: bool = False,
    triples: Optional[int] = None,
    grid: Optional[UniformGrid] = None,
) -> YoungValidation:
    """
    Check Phi(0) = 0, finiteness near 0, positivity on the box boundary and
    convexity on random triples (xi, eta, lambda).
    """
    sampled = as_sampled(phi, grid)
    count = aniso_setting("convexity_triples", triples)
    rng = np.random.default_rng(seed)
    box_grid = sampled.grid
    dim = sampled.dim
    h = box_grid.max_spacing

    origin = np.zeros((1, dim))
    zero_value = float(phi.evaluate(origin)[0])
    near = rng.uniform(-2 * h, 2 * h, size=(16, dim))
    finite_near_zero = bool(np.all(np.isfinite(phi.evaluate(near))))
    rim_minimum = float(np.min(sampled.values[box_grid.rim_mask(1)]))

    lower = np.asarray(box_grid.lower)
    upper = np.asarray(box_grid.upper)
    xi = rng.uniform(lower, upper, size=(count, dim))
    eta = rng.uniform(lower, upper, size=(count, dim))
    lam = rng.uniform(0.0, 1.0, size=(count, 1))
    fa = phi.evaluate(xi)
    fb = phi.evaluate(eta)
    fm = phi.evaluate(lam * xi + (1 - lam) * eta)
    both = np.isfinite(fa) & np.isfinite(fb)
    excess = fm[both] - (lam[both, 0] * fa[both] + (1 - lam[both, 0]) * fb[both])
    excess = np.where(np.isnan(excess), np.inf, excess)
    convexity_excess = float(np.max(excess)) if excess.size else 0.0

    if isinstance(phi, SampledYoung):
        finite = sampled.values[sampled.finite_mask]
        scale = float(np.max(finite)) if finite.size else 1.0
        tolerance = 4.0 * h * scale / max(float(np.min(box_grid.half_widths())), h)
    else:
        tolerance = 1e-9 * max(1.0, abs(float(np.max(fm[np.isfinite(fm)], initial=1.0))))

    record = YoungValidation(
        label=sampled.label,
        zero_value=zero_value,
        finite_near_zero=finite_near_zero,
        rim_minimum=rim_minimum,
        convexity_excess=max(convexity_excess, 0.0),
        tolerance=tolerance,
    )
    if not record.is_valid:
        message = f"{sampled.label} is not a Young function on its box: {'; '.join(record.problems())}"
        if strict:
            raise ValidationError(message)
        logger.warning(message)
    return record


def convexify(phi: YoungND, fraction: Optional[float] = None):
    """
    Lower convex envelope through the double conjugate on the same grid.

    Returns the envelope and max |Phi** - Phi| over finite nodes of the inner box.
    """
    sampled = as_sampled(phi)
    bidual = conjugate_fast(conjugate_fast(sampled))
    values = np.where(sampled.finite_mask, np.minimum(bidual.values, sampled.values), np.inf)
    mask = sampled.finite_mask & sampled.grid.inner_mask(aniso_setting("inner_box_fraction", fraction))
    deviation = float(np.max(np.abs(values[mask] - sampled.values[mask]))) if mask.any() else 0.0
    if deviation > 0:
        logger.info(f"Convexified {sampled.label}: deviation {deviation:.3g}")
    return sampled.with_values(values, label=sampled.label), deviation
