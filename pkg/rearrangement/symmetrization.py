"""
Symmetrization of functions and integrands with respect to a convex body K.

    u^K(x)    = u*(kappa gauge_K(x)^n)
    Phi_K(xi) = Phi_*(kappa gauge_K(-xi)^n)
    Phi_•K•   = ((Phi_•)_K)_•

with kappa = |K|. Sub-level sets of Phi_K are dilates of -K.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from core.exceptions import SymmetralBoxError
from core.grids import UniformGrid
from core.utils import aniso_setting
from geometry.bodies import ConvexBody
from gridcalc.fields import GridFunction
from rearrangement.profiles import (
    NONDECREASING,
    Profile,
    increasing_rearrangement,
    level_values,
    nodal_rearrangement,
)
from young.conjugation import conjugate_fast
from young.functions import SampledYoung, YoungND, as_sampled

logger = logging.getLogger(__name__)


def is_symmetral_of_itself(u: GridFunction, radius: np.ndarray) -> bool:
    """
    True when u is nonincreasing along nodes sorted by gauge_K, so that every
    super-level set on the grid is already a dilate of K.
    """
    order = np.argsort(radius, axis=None, kind="stable")
    ordered = u.values.ravel()[order]
    tolerance = 1e-12 * max(1.0, float(np.max(np.abs(ordered))))
    return bool(np.all(np.diff(ordered) <= tolerance))


def symmetral(u: GridFunction, K: ConvexBody) -> GridFunction:
    """
    The function equimeasurable with u whose super-level sets are dilates of K.

    u* comes from the sorted node values (see `nodal_rearrangement`); a field
    that is already K-symmetric on its grid is returned with its values unchanged.
    """
    u.ensure_decay()
    n = u.dim
    kappa = K.volume
    radius = K.gauge(u.grid.coordinates)
    if is_symmetral_of_itself(u, radius):
        return u

    u_star = nodal_rearrangement(u)
    values = u_star(kappa * radius**n)

    # the support of u^K is the dilate of K with volume |{u > essinf}|
    support_scale = (u.volume_above(u.essinf) / kappa) ** (1.0 / n)
    rim = u.grid.rim_mask(1)
    if support_scale > 0 and np.min(radius[rim]) < support_scale:
        raise SymmetralBoxError(
            f"The symmetral of {u.label or 'u'} with respect to {K.label} does not fit in the box "
            f"(support dilate {support_scale:.4g})"
        )
    if support_scale > 0 and np.min(radius[u.grid.rim_mask(3)]) < support_scale:
        logger.warning("Support of the symmetral comes within 3 cells of the box faces")

    return GridFunction(
        grid=u.grid,
        values=values,
        boundary_value=u.boundary_value,
        label=f"{u.label or 'u'}^K",
    )


class SymmetralYoung(YoungND):
    """
    Phi_K, represented by the sub-level volume profile V of Phi and the body K.

    Levels above `ceiling` (the largest level whose sub-level set of Phi
    stays inside its box) are treated as +inf.
    """

    def __init__(self, volume: Profile, K: ConvexBody, ceiling: float, label: str):
        self.volume = volume
        self.rearranged = increasing_rearrangement(volume)
        self.K = K
        self.kappa = K.volume
        self.ceiling = float(ceiling)
        self.dim = K.dim
        self.label = label

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        radius = self.K.gauge(-points)
        return self.rearranged(self.kappa * radius**self.dim)

    def level_ceiling(self) -> float:
        return self.ceiling

    def sublevel_volume(self, s) -> np.ndarray:
        s = np.minimum(np.asarray(s, dtype=float), self.ceiling)
        return self.volume(s)

    def sublevel_radius(self, s) -> np.ndarray:
        """r(s) with {Phi_K <= s} = r(s) (-K)."""
        return (self.sublevel_volume(s) / self.kappa) ** (1.0 / self.dim)

    def level_support_profile(self, xi, levels) -> np.ndarray:
        """h_{Phi_K <= s}(xi) = r(s) h_K(-xi)."""
        return self.sublevel_radius(levels) * float(self.K.support(-np.asarray(xi, dtype=float)))

    def sublevel_support(self, s: float, directions) -> np.ndarray:
        return float(self.sublevel_radius(s)) * self.K.support(-np.asarray(directions, dtype=float))


def integrand_symmetral(
    phi: YoungND,
    K: ConvexBody,
    grid: Optional[UniformGrid] = None,
    count: Optional[int] = None,
) -> SymmetralYoung:
    """
    Phi_K: sub-level sets {Phi_K <= s} are the dilates of -K with volume |{Phi <= s}|.
    """
    sampled = as_sampled(phi, grid)
    if not K.is_origin_symmetric():
        logger.warning(
            f"{K.label} is not origin-symmetric: Phi_K uses gauge_K(-xi), which differs from gauge_K(xi)"
        )
    ceiling = sampled.trusted_level
    levels = level_values(0.0, ceiling, aniso_setting("level_count", count))
    volume = Profile(levels, sampled.sublevel_volume(levels), NONDECREASING, "right")
    return SymmetralYoung(volume, K, ceiling, label=f"({sampled.label})_K")


class TripleSymmetral(NamedTuple):
    conjugate: SampledYoung
    symmetral: SymmetralYoung
    triple: SampledYoung


def triple_symmetral_parts(
    phi: YoungND, K: ConvexBody, grid: Optional[UniformGrid] = None
) -> TripleSymmetral:
    sampled = as_sampled(phi, grid)
    conj = conjugate_fast(sampled)
    sym = integrand_symmetral(conj, K)
    triple = conjugate_fast(sym.sample(conj.grid), out_grid=sampled.grid)
    triple.label = f"{sampled.label}•K•"
    logger.info(f"Triple symmetral of {sampled.label} with respect to {K.label} on {sampled.grid.shape}")
    return TripleSymmetral(conj, sym, triple)


def triple_symmetral(phi: YoungND, K: ConvexBody, grid: Optional[UniformGrid] = None) -> SampledYoung:
    """Phi_•K• = ((Phi_•)_K)_• through two fast conjugations on the same grid."""
    return triple_symmetral_parts(phi, K, grid).triple
