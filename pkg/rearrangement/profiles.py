"""
Monotone tabulated profiles and their generalized inverses.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from core.exceptions import ArgumentError
from core.utils import aniso_setting, write_table
from gridcalc.fields import GridFunction

logger = logging.getLogger(__name__)

NONINCREASING = "nonincreasing"
NONDECREASING = "nondecreasing"


@dataclass(frozen=True, eq=False)
class Profile:
    """
    Piecewise-linear monotone map through (breakpoints[k], values[k]).

    Breakpoints are nondecreasing and may repeat; a repeated breakpoint is a
    jump, resolved by `continuity`: "right" takes the value after the jump,
    "left" the value before it. Outside the breakpoint range the nearest
    value is used unless `fill_below` / `fill_above` is given.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    interpretation: str = NONINCREASING
    continuity: str = "right"
    fill_below: Optional[float] = None
    fill_above: Optional[float] = None

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.shape != vals.shape or bp.ndim != 1 or bp.size == 0:
            raise ArgumentError("Profile needs matching non-empty one-dimensional tables")
        if np.any(np.diff(bp) < 0):
            raise ArgumentError("Profile breakpoints must be sorted")
        if self.interpretation not in (NONINCREASING, NONDECREASING):
            raise ArgumentError(f"Unknown interpretation {self.interpretation!r}")
        if self.continuity not in ("right", "left"):
            raise ArgumentError(f"Unknown continuity convention {self.continuity!r}")
        steps = np.diff(vals)
        if self.interpretation == NONINCREASING and np.any(steps > 0):
            raise ArgumentError("Profile values are not nonincreasing")
        if self.interpretation == NONDECREASING and np.any(steps < 0):
            raise ArgumentError("Profile values are not nondecreasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.breakpoints.size

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        bp, vals = self.breakpoints, self.values
        n = bp.size
        j = np.searchsorted(bp, x, side=self.continuity)
        lo = np.clip(j - 1, 0, n - 1)
        hi = np.clip(j, 0, n - 1)
        span = bp[hi] - bp[lo]
        default = 0.0 if self.continuity == "right" else 1.0
        weight = np.where(span > 0, (x - bp[lo]) / np.where(span > 0, span, 1.0), default)
        weight = np.clip(weight, 0.0, 1.0)
        with np.errstate(invalid="ignore"):
            blend = vals[lo] + weight * (vals[hi] - vals[lo])
        result = np.where(weight == 0.0, vals[lo], np.where(weight == 1.0, vals[hi], blend))
        if self.fill_below is not None:
            result = np.where(x < bp[0], self.fill_below, result)
        if self.fill_above is not None:
            result = np.where(x > bp[-1], self.fill_above, result)
        return result

    def inverse(self, continuity: str = "right", fill_below=None, fill_above=None) -> "Profile":
        """Generalized inverse: breakpoints and values swap roles."""
        if self.interpretation == NONINCREASING:
            bp, vals = self.values[::-1], self.breakpoints[::-1]
        else:
            bp, vals = self.values, self.breakpoints
        return Profile(bp, vals, self.interpretation, continuity, fill_below, fill_above)

    def to_frame(self, abscissa: str = "x", ordinate: str = "y") -> pd.DataFrame:
        return pd.DataFrame({abscissa: self.breakpoints, ordinate: self.values})

    def export_csv(self, path: Path, abscissa: str = "x", ordinate: str = "y") -> Path:
        header = [f"convention: {self.continuity}-continuous {self.interpretation}"]
        return write_table(path, self.to_frame(abscissa, ordinate), header)


def level_values(low: float, high: float, count: Optional[int] = None) -> np.ndarray:
    count = aniso_setting("level_count", count)
    if not high > low:
        return np.array([float(low)])
    return np.linspace(low, high, count)


def distribution(u: GridFunction, levels=None, count: Optional[int] = None) -> Profile:
    """
    mu(t) = |{u > t}| on a uniform level grid from essinf u to max u.
    """
    if levels is None:
        levels = level_values(u.essinf, float(np.max(u.values)), count)
    levels = np.asarray(levels, dtype=float)
    ordered = np.sort(u.values, axis=None)
    above = ordered.size - np.searchsorted(ordered, levels, side="right")
    mu = above * u.grid.cell_volume
    return Profile(levels, mu, NONINCREASING, "right")


def decreasing_rearrangement(mu: Profile) -> Profile:
    """u*(s) = inf{t : mu(t) <= s}, right-continuous and nonincreasing."""
    return mu.inverse("right", fill_above=float(mu.breakpoints[0]))


def flat_nodes(values: np.ndarray) -> np.ndarray:
    """Nodes whose value equals the value at every axis neighbour."""
    padded = np.pad(values, 1, mode="edge")
    flat = np.ones(values.shape, dtype=bool)
    center = tuple(slice(1, -1) for _ in range(values.ndim))
    for axis in range(values.ndim):
        for shift in (0, 2):
            index = list(center)
            index[axis] = slice(shift, shift + values.shape[axis])
            flat &= padded[tuple(index)] == values
    return flat


def nodal_rearrangement(u: GridFunction) -> Profile:
    """
    u*(s) from the node values of u above essinf, sorted in decreasing order.

    Every distinct value v is placed at the volume it occupies: a level line
    of e nodes sits at the middle of its e cells, a plateau of f flat nodes
    keeps v over f cells. Between consecutive values u* is linear, and it
    reaches essinf at the volume of {u > essinf}.
    """
    essinf = u.essinf
    cell = u.grid.cell_volume
    above = u.values > essinf
    if not above.any():
        return Profile(np.zeros(1), np.array([essinf]), NONINCREASING, "right", fill_above=essinf)

    values = u.values[above]
    flat = flat_nodes(u.values)[above]
    distinct, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    flat_counts = np.bincount(inverse, weights=flat, minlength=distinct.size)
    distinct, counts, flat_counts = distinct[::-1], counts[::-1], flat_counts[::-1]
    start = np.concatenate([[0.0], np.cumsum(counts)[:-1]])
    edge = counts - flat_counts

    breakpoints, levels = [], []
    for v, s0, e, f in zip(distinct, start, edge, flat_counts):
        first = s0 + 0.5 * e
        breakpoints.append(first)
        levels.append(v)
        if f > 0:
            breakpoints.append(first + f)
            levels.append(v)
    breakpoints.append(float(np.sum(counts)))
    levels.append(essinf)
    return Profile(np.asarray(breakpoints) * cell, np.asarray(levels), NONINCREASING, "right", fill_above=essinf)


def increasing_rearrangement(volume: Profile) -> Profile:
    """
    Phi_*(r) = inf{s : V(s) >= r} for the sub-level volume V(s) = |{Phi <= s}|;
    +inf past the largest tabulated volume.
    """
    if volume.interpretation != NONDECREASING:
        raise ArgumentError("increasing_rearrangement needs a nondecreasing volume profile")
    return volume.inverse("left", fill_below=float(volume.breakpoints[0]), fill_above=np.inf)
