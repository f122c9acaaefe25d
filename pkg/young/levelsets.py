"""
Sub-level sets of Young functions and the level-set form of the conjugate.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.exceptions import LevelGridTooShortError
from core.grids import UniformGrid
from core.utils import sphere_directions
from geometry.bodies import ConvexBody
from young.catalog import radial
from young.conjugation import conjugate_fast
from young.functions import CatalogYoung, YoungND, Young1D, as_sampled, level_grid

logger = logging.getLogger(__name__)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SublevelSet:
    level: float
    mask: np.ndarray = field(repr=False)
    volume: float
    truncated: bool


def sublevel_set(phi: YoungND, s: float, grid: Optional[UniformGrid] = None) -> SublevelSet:
    """Nodes with Phi <= s; `truncated` when the set reaches the box faces."""
    sampled = as_sampled(phi, grid)
    mask = sampled.values <= s
    truncated = bool(mask[sampled.grid.rim_mask(1)].any())
    if truncated:
        logger.warning(f"Sub-level set {{{sampled.label} <= {s:g}}} is truncated by the box")
    return SublevelSet(
        level=float(s),
        mask=mask,
        volume=float(np.count_nonzero(mask) * sampled.grid.cell_volume),
        truncated=truncated,
    )


@dataclass
class RadialFactorization:
    """Phi = A(h_L) and Phi_• = A_•(gauge_L), with closed sub-level supports."""

    A: Young1D
    body: ConvexBody
    phi: CatalogYoung
    conjugate: CatalogYoung

    def sublevel_support(self, s, xi) -> np.ndarray:
        """h_{Phi <= s}(xi) = A^{-1}(s) gauge_L(xi)."""
        return self.A.inverse(s) * self.body.gauge(xi)

    def conjugate_sublevel_support(self, s, xi) -> np.ndarray:
        """h_{Phi_• <= s}(xi) = A_•^{-1}(s) h_L(xi)."""
        return self.A.conjugate().inverse(s) * self.body.support(xi)


def radial_factorization(A: Young1D, body: ConvexBody) -> RadialFactorization:
    phi = radial(A, body)
    return RadialFactorization(A=A, body=body, phi=phi, conjugate=phi.closed_conjugate())


@dataclass
class GrowthLimits:
    small_radii: np.ndarray
    small_ratios: np.ndarray
    large_radii: np.ndarray
    large_ratios: np.ndarray
    small_decreasing: bool
    large_increasing: bool
    vanishes_at_zero: bool
    superlinear: bool

    def as_dict(self) -> dict:
        return {
            "small_radii": self.small_radii.tolist(),
            "small_ratios": self.small_ratios.tolist(),
            "large_radii": self.large_radii.tolist(),
            "large_ratios": self.large_ratios.tolist(),
            "small_decreasing": self.small_decreasing,
            "large_increasing": self.large_increasing,
            "vanishes_at_zero": self.vanishes_at_zero,
            "superlinear": self.superlinear,
        }


def _shell_ratio(func, radius: float, theta: np.ndarray) -> float:
    return float(np.max(func(radius * theta)) / radius)


def _log_slope(radii: np.ndarray, ratios: np.ndarray) -> float:
    usable = np.isfinite(ratios) & (ratios > 0)
    if usable.sum() < 2:
        return 0.0 if not usable.any() else float("nan")
    return float(np.polyfit(np.log(radii[usable]), np.log(ratios[usable]), 1)[0])


def growth_limits(phi: YoungND, grid: Optional[UniformGrid] = None, directions: int = 64) -> GrowthLimits:
    """
    max over directions of Phi_•(r theta) / r on shells shrinking to 0 and
    growing to the box edge.
    """
    sampled = as_sampled(phi, grid)
    closed = phi.closed_conjugate()
    edge = float(np.min(sampled.grid.half_widths()))
    if closed is not None:
        func = closed.evaluate
        large_radii = edge * 2.0 ** np.arange(-3, 5)
    else:
        func = conjugate_fast(sampled).evaluate
        large_radii = edge * np.array([0.125, 0.25, 0.5, 0.95])
    small_radii = edge * 2.0 ** -np.arange(2, 12)
    theta = sphere_directions(directions, sampled.dim)

    small = np.array([_shell_ratio(func, r, theta) for r in small_radii])
    large = np.array([_shell_ratio(func, r, theta) for r in large_radii])
    tol = 1e-12
    # small radii are listed from large to small
    small_decreasing = bool(np.all(np.diff(small) <= tol * np.maximum(1.0, np.abs(small[:-1]))))
    large_increasing = bool(np.all(np.diff(large) >= -tol * np.maximum(1.0, np.abs(large[:-1]))))
    small_slope = _log_slope(small_radii, small)
    large_slope = _log_slope(large_radii, large)
    vanishes = bool(np.nan_to_num(small_slope) >= 0.1 or np.all(small == 0))
    if not vanishes:
        logger.info(f"Phi_•(xi)/|xi| does not vanish at 0 for {sampled.label}: Phi is not positive off 0")
    return GrowthLimits(
        small_radii=small_radii,
        small_ratios=small,
        large_radii=large_radii,
        large_ratios=large,
        small_decreasing=small_decreasing,
        large_increasing=large_increasing,
        vanishes_at_zero=vanishes,
        superlinear=bool(np.isinf(large).any() or np.nan_to_num(large_slope) >= 0.1),
    )


@dataclass
class MaximizerResult:
    s_star: float
    value: float
    at_zero: bool
    levels: np.ndarray = field(repr=False)
    profile: np.ndarray = field(repr=False)


def maximizer_profile(phiK, xi, levels=None, refine: int = 40) -> MaximizerResult:
    """
    argmax over s >= 0 of h_{phiK <= s}(xi) - s.

    The smallest maximizer on the tabulated levels is refined by a golden
    section search on the neighbouring interval.
    """
    xi = np.asarray(xi, dtype=float)
    levels = level_grid(phiK.level_ceiling()) if levels is None else np.asarray(levels, dtype=float)

    def phi_of(s):
        return phiK.level_support_profile(xi, np.atleast_1d(s)) - np.atleast_1d(s)

    profile = phi_of(levels)
    k = int(np.argmax(profile))
    if len(levels) > 1 and k == len(levels) - 1 and profile[-1] > profile[-2]:
        raise LevelGridTooShortError(
            f"h - s still increases at the last level {levels[-1]:.6g}",
            required_level=2.0 * float(levels[-1]),
        )
    best_s, best_value = float(levels[k]), float(profile[k])

    if len(levels) > 2 and refine > 0:
        a = float(levels[max(k - 1, 0)])
        b = float(levels[min(k + 1, len(levels) - 1)])
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc, fd = float(phi_of(c)[0]), float(phi_of(d)[0])
        for _ in range(refine):
            if fc >= fd:
                b, d, fd = d, c, fc
                c = b - GOLDEN * (b - a)
                fc = float(phi_of(c)[0])
            else:
                a, c, fc = c, d, fd
                d = a + GOLDEN * (b - a)
                fd = float(phi_of(d)[0])
        s, value = (c, fc) if fc >= fd else (d, fd)
        if value > best_value + 1e-14:
            best_s, best_value = s, value

    return MaximizerResult(
        s_star=best_s,
        value=best_value,
        at_zero=best_s == 0.0,
        levels=levels,
        profile=profile,
    )


@dataclass
class LevelVolumeProfile:
    levels: np.ndarray
    nu: np.ndarray
    concavity_defect: float
    nondecreasing: bool

    def is_concave(self, tolerance: float) -> bool:
        return self.concavity_defect <= tolerance


def level_volume_profile(phiK, levels=None) -> LevelVolumeProfile:
    """
    nu(s) = |{phiK <= s}|^{1/n} on the level grid, with the largest
    shortfall below the chord over consecutive level triples.
    """
    levels = level_grid(phiK.level_ceiling()) if levels is None else np.asarray(levels, dtype=float)
    nu = np.asarray(phiK.sublevel_volume(levels), dtype=float) ** (1.0 / phiK.dim)
    defect = 0.0
    if len(levels) >= 3:
        s0, s1, s2 = levels[:-2], levels[1:-1], levels[2:]
        weight = np.where(s2 > s0, (s1 - s0) / np.where(s2 > s0, s2 - s0, 1.0), 0.0)
        chord = (1 - weight) * nu[:-2] + weight * nu[2:]
        defect = float(max(0.0, np.max(chord - nu[1:-1])))
    return LevelVolumeProfile(
        levels=levels,
        nu=nu,
        concavity_defect=defect,
        nondecreasing=bool(np.all(np.diff(nu) >= 0)),
    )
