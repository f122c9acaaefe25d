"""
Coarea-based level integrals and the -mu'(t) chain.

A level-line integral over {u = t} is replaced by a band average:

    integral over {u = t} of f / |grad u| dH  ~  (1/dt) integral over {|u - t| < dt/2} of f dx
"""

import logging
from typing import Optional

import numpy as np
import pandas as pd

from core.utils import aniso_setting, fixed_tree_sum
from geometry.bodies import ConvexBody
from gridcalc.fields import GridFunction

logger = logging.getLogger(__name__)


def default_band_width(u: GridFunction, divisions: Optional[int] = None) -> float:
    """max(2 h max|grad u|, (max u - min u) / divisions)."""
    divisions = aniso_setting("band_divisions", divisions)
    span = float(np.max(u.values) - np.min(u.values))
    steep = 2.0 * u.grid.max_spacing * float(np.max(u.gradient_norm()))
    return max(steep, span / divisions)


def band_mask(u: GridFunction, t: float, dt: float, centered: bool = True) -> np.ndarray:
    if centered:
        return (u.values > t - 0.5 * dt) & (u.values <= t + 0.5 * dt)
    return (u.values > t) & (u.values <= t + dt)


def level_integral(
    u: GridFunction,
    f,
    t: float,
    dt: Optional[float] = None,
    centered: bool = True,
) -> float:
    """
    (1/dt) times the integral of f over the band around {u = t}; `f` is a node field or a scalar.
    """
    dt = default_band_width(u) if dt is None else float(dt)
    resolve = 2.0 * u.grid.max_spacing * float(np.max(u.gradient_norm()))
    if dt < resolve * (1.0 - 1e-12):
        logger.warning(f"Band width {dt:.3g} does not resolve the level line at t={t:g} (need {resolve:.3g})")
    band = band_mask(u, t, dt, centered)
    if not band.any():
        logger.warning(f"Thin band: no nodes with u near t={t:g}")
        return 0.0
    weights = np.broadcast_to(np.asarray(f, dtype=float), u.values.shape)
    return fixed_tree_sum(weights[band]) * u.grid.cell_volume / dt


def minus_mu_prime_at(mu, t: float, dt: float) -> float:
    """
    -mu'(t) as the centered difference of mu across the band [t - dt/2, t + dt/2],
    clamped at 0 since mu is nonincreasing.

    The band is the one the level integrals average over.
    """
    return max(0.0, float(mu(t - 0.5 * dt) - mu(t + 0.5 * dt)) / dt)


def nonvanishing(u: GridFunction, floor: Optional[float] = None) -> np.ndarray:
    """Indicator of |grad u| >= floor."""
    floor = aniso_setting("gradient_floor", floor)
    return (u.gradient_norm() >= floor).astype(float)


def inverse_gradient(u: GridFunction, floor: Optional[float] = None) -> np.ndarray:
    """1/|grad u| where |grad u| >= floor, 0 elsewhere."""
    floor = aniso_setting("gradient_floor", floor)
    norm = u.gradient_norm()
    return np.where(norm >= floor, 1.0 / np.maximum(norm, floor), 0.0)


def chain_levels(u: GridFunction, count: Optional[int] = None, margin: Optional[float] = None) -> np.ndarray:
    """Uniform levels strictly inside (essinf, esssup), leaving out `margin` of the range at each end."""
    count = aniso_setting("chain_levels", count)
    margin = aniso_setting("level_margin", margin)
    low, high = u.essinf, u.esssup
    if not high > low:
        return np.zeros(0)
    span = high - low
    return np.linspace(low + margin * span, high - margin * span, count)


def mu_prime_chain(
    u: GridFunction,
    K: ConvexBody,
    levels=None,
    dt: Optional[float] = None,
    symmetral_u: Optional[GridFunction] = None,
    tolerance: Optional[float] = None,
) -> pd.DataFrame:
    """
    Per level t: the band integrals of 1/|grad u| over {u = t} and over
    {u^K = t}, and -mu'(t) by centered differences of the distribution function.
    """
    from rearrangement.profiles import distribution
    from rearrangement.symmetrization import symmetral

    tolerance = aniso_setting("chain_tolerance", tolerance)
    uK = symmetral_u if symmetral_u is not None else symmetral(u, K)
    levels = chain_levels(u) if levels is None else np.asarray(levels, dtype=float)
    dt = max(default_band_width(u), default_band_width(uK)) if dt is None else float(dt)
    mu = distribution(u)
    weight_u = nonvanishing(u)
    weight_uK = nonvanishing(uK)

    rows = []
    for t in levels:
        first = level_integral(u, weight_u, t, dt)
        second = level_integral(uK, weight_uK, t, dt)
        minus_mu_prime = minus_mu_prime_at(mu, t, dt)
        scale = max(second, minus_mu_prime, 1e-300)
        rows.append(
            {
                "t": float(t),
                "band": dt,
                "level_u": first,
                "level_uK": second,
                "minus_mu_prime": minus_mu_prime,
                "inequality_holds": first <= second * (1.0 + tolerance),
                "equality_holds": abs(second - minus_mu_prime) <= tolerance * scale,
            }
        )
    frame = pd.DataFrame(
        rows,
        columns=["t", "band", "level_u", "level_uK", "minus_mu_prime", "inequality_holds", "equality_holds"],
    )
    logger.info(
        f"mu' chain over {len(frame)} levels: inequality at {frame['inequality_holds'].mean() if len(frame) else 1:.0%}"
    )
    return frame
