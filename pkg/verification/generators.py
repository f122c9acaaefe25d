"""
Fields and integrands for which the inequality is an equality.
"""

import logging
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from core.exceptions import ArgumentError, PreconditionError
from core.grids import UniformGrid
from core.utils import aniso_setting, sphere_directions
from geometry.bodies import ConvexBody
from gridcalc.fields import GridFunction, constant_like, truncate
from rearrangement.profiles import NONINCREASING, Profile
from young.catalog import radial
from young.conjugation import conjugate_fast
from young.functions import CatalogYoung, Young1D, YoungND, as_sampled

logger = logging.getLogger(__name__)

BOX_SCALE = 1.6


def linear_profile() -> Profile:
    """b(t) = 1 - t on [0, 1]."""
    return Profile(np.array([0.0, 1.0]), np.array([1.0, 0.0]), NONINCREASING, "right")


def generate_prop51(
    L: ConvexBody,
    A: Young1D,
    b: Optional[Profile] = None,
    x0=None,
    resolution: Optional[int] = None,
    half_width: Optional[float] = None,
) -> Tuple[GridFunction, CatalogYoung]:
    """
    Phi(xi) = A(h_L(-xi)), so that {Phi <= s} = -A^{-1}(s) L°, and
    u(x) = b^{-1}(gauge_L(x - x0)), so that {u >= t} = b(t) L + x0.
    """
    b = b or linear_profile()
    if b.interpretation != NONINCREASING:
        raise ArgumentError("b must be nonincreasing")
    x0 = np.zeros(L.dim) if x0 is None else np.asarray(x0, dtype=float)
    phi = radial(A, L.reflect())
    phi.label = f"A(h_L(-xi)):{A}:{L.label}"

    b_inverse = b.inverse("right", fill_above=float(b.breakpoints[0]))
    reach = float(np.max(b.values)) * L.max_radius() + float(np.max(np.abs(x0)))
    grid = UniformGrid.box(half_width or BOX_SCALE * reach, aniso_setting("default_resolution", resolution), L.dim)
    values = b_inverse(L.gauge(grid.coordinates - x0))
    u = GridFunction(grid, values, boundary_value=float(b.breakpoints[0]), label=f"prop51:{L.label}")
    logger.info(f"Built equality pair for L={L.label}, A={A}")
    return u, phi


def check_superlinear(phi: YoungND, grid: Optional[UniformGrid] = None, directions: int = 64) -> None:
    """
    Phi(xi)/|xi| must grow without bound; checked on the box boundary shells.
    """
    flag = getattr(phi, "superlinear", None)
    if flag is False:
        raise PreconditionError(f"{phi.label} is not superlinear: Phi(xi)/|xi| stays bounded as |xi| grows")
    if flag is True:
        return
    sampled = as_sampled(phi, grid)
    edge = float(np.min(sampled.grid.half_widths()))
    theta = sphere_directions(directions, sampled.dim)
    outer = np.min(sampled.evaluate(0.95 * edge * theta)) / (0.95 * edge)
    inner = np.min(sampled.evaluate(0.25 * edge * theta)) / (0.25 * edge)
    if not (np.isinf(outer) or outer > 1.5 * inner):
        raise PreconditionError(
            f"{sampled.label} does not look superlinear on its box: Phi/|xi| is {inner:.3g} at 1/4 "
            f"and {outer:.3g} at the boundary"
        )


def _sublevel_reach(conjugate, level: float, dim: int, directions: int = 64) -> float:
    """Largest |xi| with conjugate(xi) <= level, by bisection along sampled directions."""
    theta = sphere_directions(directions, dim)
    high = 1.0
    while np.any(conjugate(high * theta) <= level) and high < 1e6:
        high *= 2.0
    low = np.zeros(len(theta))
    upper = np.full(len(theta), high)
    for _ in range(50):
        middle = 0.5 * (low + upper)
        inside = conjugate(middle[:, None] * theta) <= level
        low = np.where(inside, middle, low)
        upper = np.where(inside, upper, middle)
    return float(np.max(upper))


def generate_prop52(
    phi: YoungND,
    a: float,
    t1: float,
    t2: float,
    t3: float,
    x0=None,
    resolution: Optional[int] = None,
    half_width: Optional[float] = None,
) -> GridFunction:
    """
    u(x) = T_{t1,t2}(t3 - a Phi_•((x0 - x)/a)), whose super-level sets are
    {u >= t} = -a {Phi_• <= (t3 - t)/a} + x0.
    """
    if a <= 0:
        raise ArgumentError("a must be positive")
    if not (t1 <= t2 <= t3):
        raise ArgumentError(f"Need t1 <= t2 <= t3, got {t1}, {t2}, {t3}")
    dim = phi.dim
    x0 = np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float)
    resolution = aniso_setting("default_resolution", resolution)
    if t1 == t2:
        grid = UniformGrid.box(half_width or 1.0, resolution, dim)
        return constant_like(grid, t1, label="prop52:constant")

    check_superlinear(phi)
    closed = phi.closed_conjugate()
    conjugate = closed.evaluate if closed is not None else conjugate_fast(as_sampled(phi)).evaluate

    if half_width is None:
        reach = a * _sublevel_reach(conjugate, (t3 - t1) / a, dim)
        half_width = BOX_SCALE * (reach + float(np.max(np.abs(x0))))
    grid = UniformGrid.box(half_width, resolution, dim)
    with np.errstate(invalid="ignore"):
        profile = t3 - a * conjugate((x0 - grid.coordinates) / a)
    finite = np.isfinite(profile)
    floor = min(float(np.min(profile[finite])), t1) if finite.any() else t1
    untruncated = GridFunction(grid, np.where(finite, profile, floor), boundary_value=t1)
    u = replace(truncate(untruncated, t1, t2), label=f"prop52:{phi.label}")
    logger.info(f"Built truncated conjugate profile for {phi.label} with a={a}, t=({t1}, {t2}, {t3})")
    return u
