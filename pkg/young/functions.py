"""
One- and n-dimensional Young functions over the extended reals.

+inf is an explicit value. Sampled functions are +inf outside their box.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from core.exceptions import CatalogParseError, YoungFunctionError
from core.grids import UniformGrid
from young.legendre import legendre_1d

logger = logging.getLogger(__name__)

BOX_TOLERANCE = 1e-9
FINITE_WEIGHT = 1.0 - 1e-9


@dataclass(frozen=True)
class Young1D:
    """
    A : [0, inf) -> [0, inf].

    kinds: power (c t^p), powerlog (t^p log(c + t)^q), exp (e^{t^alpha} - 1),
    interval (0 on [0, r], +inf beyond) and tabulated (piecewise linear, +inf
    past the last abscissa).
    """

    kind: str
    params: Tuple[float, ...] = ()
    abscissae: Optional[Tuple[float, ...]] = None
    ordinates: Optional[Tuple[float, ...]] = None

    @classmethod
    def parse(cls, spec: str) -> "Young1D":
        """Grammar: "power,p[,c]", "powerlog,p,q,c", "exp,alpha", "interval,r"."""
        parts = [p.strip() for p in spec.strip().split(",")]
        kind = parts[0].lower()
        try:
            numbers = tuple(float(p) for p in parts[1:])
        except ValueError:
            raise CatalogParseError(f"Non-numeric parameter in {spec!r}")

        if kind == "power":
            if len(numbers) not in (1, 2):
                raise CatalogParseError(f"power needs p[,c]: {spec!r}")
            p = numbers[0]
            c = numbers[1] if len(numbers) == 2 else 1.0
            if p < 1 or c <= 0:
                raise CatalogParseError(f"power needs p >= 1 and c > 0: {spec!r}")
            return cls("power", (p, c))
        if kind == "powerlog":
            if len(numbers) != 3:
                raise CatalogParseError(f"powerlog needs p,q,c: {spec!r}")
            p, q, c = numbers
            if p < 1 or c < 1:
                raise CatalogParseError(f"powerlog needs p >= 1 and c >= 1: {spec!r}")
            return cls("powerlog", (p, q, c))
        if kind == "exp":
            if len(numbers) != 1 or numbers[0] <= 0:
                raise CatalogParseError(f"exp needs alpha > 0: {spec!r}")
            return cls("exp", numbers)
        if kind == "interval":
            if len(numbers) != 1 or numbers[0] <= 0:
                raise CatalogParseError(f"interval needs r > 0: {spec!r}")
            return cls("interval", numbers)
        raise CatalogParseError(f"Unknown one-dimensional Young function {kind!r}")

    @classmethod
    def tabulated(cls, t: np.ndarray, values: np.ndarray) -> "Young1D":
        return cls("tabulated", (), tuple(np.asarray(t, float).tolist()), tuple(np.asarray(values, float).tolist()))

    def __str__(self) -> str:
        if self.kind == "tabulated":
            return f"tabulated[{len(self.abscissae)}]"
        return ",".join([self.kind] + [f"{p:g}" for p in self.params])

    def __call__(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        if self.kind == "power":
            p, c = self.params
            return c * t**p
        if self.kind == "powerlog":
            p, q, c = self.params
            return t**p * np.log(c + t) ** q
        if self.kind == "exp":
            (alpha,) = self.params
            with np.errstate(over="ignore"):
                return np.expm1(t**alpha)
        if self.kind == "interval":
            (r,) = self.params
            return np.where(t <= r, 0.0, np.inf)
        x = np.asarray(self.abscissae)
        y = np.asarray(self.ordinates)
        return np.where(t <= x[-1], np.interp(t, x, y), np.inf)

    @property
    def strictly_convex(self) -> bool:
        if self.kind == "power":
            return self.params[0] > 1
        return self.kind in ("powerlog", "exp")

    @property
    def superlinear(self) -> bool:
        if self.kind == "power":
            return self.params[0] > 1
        if self.kind == "powerlog":
            return self.params[0] > 1 or self.params[1] > 0
        return self.kind in ("exp", "interval")

    def domain_end(self, ceiling: float = 1e4) -> float:
        """Smallest t (found by doubling) with A(t) >= ceiling, or the edge of dom A."""
        if self.kind == "interval":
            return self.params[0]
        if self.kind == "tabulated":
            return self.abscissae[-1]
        t = 1.0
        while float(self(t)) < ceiling and t < 1e6:
            t *= 2.0
        return t

    def conjugate(self, count: int = 4097) -> "Young1D":
        """
        A_•(s) = sup_{t >= 0} (s t - A(t)); closed form for power and interval,
        tabulated discrete transform otherwise.
        """
        if self.kind == "power":
            p, c = self.params
            if p == 1:
                return Young1D("interval", (c,))
            q = p / (p - 1.0)
            return Young1D("power", (q, (p - 1.0) / p * (c * p) ** (-1.0 / (p - 1.0))))
        if self.kind == "interval":
            return Young1D("power", (1.0, self.params[0]))

        t = np.linspace(0.0, self.domain_end(), count)
        values = self(t)
        finite = np.isfinite(values)
        t, values = t[finite], values[finite]
        # chord slopes of the tabulation; A_• is affine between consecutive ones
        s = np.unique(np.concatenate([[0.0], np.diff(values) / np.diff(t)]))
        return Young1D.tabulated(s, legendre_1d(t, values, s))

    def inverse(self, s) -> np.ndarray:
        """Right-continuous generalized inverse sup{t : A(t) <= s}."""
        s = np.asarray(s, dtype=float)
        if self.kind == "power":
            p, c = self.params
            return (np.maximum(s, 0.0) / c) ** (1.0 / p)
        if self.kind == "interval":
            return np.full(s.shape, self.params[0])
        if self.kind == "exp":
            (alpha,) = self.params
            return np.log1p(np.maximum(s, 0.0)) ** (1.0 / alpha)
        t, values = self._table()
        # last abscissa whose value is <= s
        index = np.searchsorted(values, s, side="right") - 1
        index = np.clip(index, 0, len(t) - 1)
        upper = np.clip(index + 1, 0, len(t) - 1)
        span = values[upper] - values[index]
        frac = np.where(span > 0, (s - values[index]) / np.where(span > 0, span, 1.0), 0.0)
        return t[index] + np.clip(frac, 0.0, 1.0) * (t[upper] - t[index])

    def left_inverse(self, s) -> np.ndarray:
        """Left-continuous generalized inverse inf{t : A(t) >= s}."""
        s = np.asarray(s, dtype=float)
        if self.kind in ("power", "exp"):
            return self.inverse(s)
        if self.kind == "interval":
            return np.where(s <= 0, 0.0, self.params[0])
        t, values = self._table()
        index = np.searchsorted(values, s, side="left")
        index = np.clip(index, 0, len(t) - 1)
        lower = np.clip(index - 1, 0, len(t) - 1)
        span = values[index] - values[lower]
        frac = np.where(span > 0, (s - values[lower]) / np.where(span > 0, span, 1.0), 1.0)
        return t[lower] + np.clip(frac, 0.0, 1.0) * (t[index] - t[lower])

    def _table(self, count: int = 8193) -> Tuple[np.ndarray, np.ndarray]:
        if self.kind == "tabulated":
            return np.asarray(self.abscissae), np.asarray(self.ordinates)
        t = np.linspace(0.0, self.domain_end(), count)
        return t, self(t)

    def validate(self, samples: int = 257) -> None:
        t = np.linspace(0.0, self.domain_end(), samples)
        values = self(t)
        if float(self(0.0)) != 0.0:
            raise YoungFunctionError(f"A(0) = {float(self(0.0))} for {self}")
        finite = np.isfinite(values)
        if np.any(np.diff(values[finite]) < -1e-12):
            raise YoungFunctionError(f"{self} is decreasing somewhere")
        second = np.diff(values[finite], 2)
        if second.size and np.min(second) < -1e-9 * max(1.0, float(np.max(np.abs(values[finite])))):
            raise YoungFunctionError(f"{self} is not convex on its tabulation")


class YoungND(ABC):
    """
    Convex lower semicontinuous Phi : R^n -> [0, inf] with Phi(0) = 0.
    """

    dim: int = 2
    label: str = "Phi"
    strictly_convex: bool = False
    differentiable: bool = False

    @abstractmethod
    def evaluate(self, points) -> np.ndarray:
        """Values at points of shape (..., dim)."""

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)

    def closed_conjugate(self) -> Optional["YoungND"]:
        return None

    def check_range(self, points) -> Optional[float]:
        """Magnitude of the largest point outside the evaluation box, or None."""
        return None

    def sample(self, grid: UniformGrid) -> "SampledYoung":
        if grid.dim != self.dim:
            raise YoungFunctionError(f"{self.label} is {self.dim}-dimensional, grid is {grid.dim}-dimensional")
        values = np.asarray(self.evaluate(grid.coordinates), dtype=float)
        return SampledYoung(grid, values, label=self.label, source=self)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.label})"


class CatalogYoung(YoungND):
    """Closed-form Young function, optionally with a closed-form conjugate."""

    def __init__(
        self,
        label: str,
        dim: int,
        func: Callable[[np.ndarray], np.ndarray],
        conjugate: Optional[Callable[[], "CatalogYoung"]] = None,
        strictly_convex: bool = False,
        differentiable: bool = False,
        superlinear: bool = True,
        finite_valued: bool = True,
        half_width: float = 2.0,
    ):
        self.label = label
        self.dim = dim
        self._func = func
        self._conjugate = conjugate
        self.strictly_convex = strictly_convex
        self.differentiable = differentiable
        self.superlinear = superlinear
        self.finite_valued = finite_valued
        self.half_width = half_width

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.dim:
            raise YoungFunctionError(f"{self.label} expects {self.dim}-dimensional points")
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(self._func(points), dtype=float)

    def closed_conjugate(self) -> Optional["CatalogYoung"]:
        return self._conjugate() if self._conjugate is not None else None

    def default_grid(self, resolution: int) -> UniformGrid:
        return UniformGrid.box(self.half_width, resolution, self.dim)


class SampledYoung(YoungND):
    """
    Extended-real values on the nodes of a uniform grid.

    Evaluation interpolates linearly; a point is +inf when any node of its
    cell is +inf or when it lies outside the box.
    """

    def __init__(self, grid: UniformGrid, values, label: str = "Phi", source: Optional[YoungND] = None):
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(grid.shape):
            raise YoungFunctionError(f"Samples of shape {values.shape} do not match grid {grid.shape}")
        values = np.where(np.isnan(values), np.inf, values)
        self.grid = grid
        self.values = values
        self.dim = grid.dim
        self.label = label
        self.source = source
        if source is not None:
            self.strictly_convex = getattr(source, "strictly_convex", False)
            self.differentiable = getattr(source, "differentiable", False)

    @cached_property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @cached_property
    def _interpolators(self):
        filled = np.where(self.finite_mask, self.values, 0.0)
        value = RegularGridInterpolator(self.grid.axes, filled, bounds_error=False, fill_value=np.nan)
        weight = RegularGridInterpolator(
            self.grid.axes, self.finite_mask.astype(float), bounds_error=False, fill_value=0.0
        )
        return value, weight

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        flat = points.reshape(-1, self.dim)
        value, weight = self._interpolators
        result = value(flat)
        result = np.where((weight(flat) >= FINITE_WEIGHT) & np.isfinite(result), result, np.inf)
        return result.reshape(shape)

    def check_range(self, points) -> Optional[float]:
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        lower = np.asarray(self.grid.lower) - BOX_TOLERANCE
        upper = np.asarray(self.grid.upper) + BOX_TOLERANCE
        outside = np.any((points < lower) | (points > upper), axis=1)
        if not outside.any():
            return None
        return float(np.max(np.linalg.norm(points[outside], axis=1)))

    @property
    def max_finite(self) -> float:
        finite = self.values[self.finite_mask]
        return float(np.max(finite)) if finite.size else 0.0

    @cached_property
    def trusted_level(self) -> float:
        """
        Largest s whose sub-level set {Phi <= s} stays inside the box: the minimum over the box faces.
        """
        rim = self.values[self.grid.rim_mask(1)]
        level = float(np.min(rim))
        if np.isinf(level):
            return self.max_finite
        return level

    @cached_property
    def _sorted_nodes(self):
        points = self.grid.points()
        flat = self.values.ravel()
        order = np.argsort(flat, kind="stable")
        order = order[np.isfinite(flat[order])]
        return points[order], flat[order]

    def level_support_profile(self, xi, levels) -> np.ndarray:
        """h_{Phi <= s}(xi) for every s in `levels`, -inf for empty sub-level sets."""
        points, values = self._sorted_nodes
        projection = np.maximum.accumulate(points @ np.asarray(xi, dtype=float))
        count = np.searchsorted(values, np.asarray(levels, dtype=float), side="right")
        result = np.full(count.shape, -np.inf)
        present = count > 0
        result[present] = projection[count[present] - 1]
        return result

    def sublevel_points(self, s: float) -> np.ndarray:
        points, values = self._sorted_nodes
        return points[: np.searchsorted(values, s, side="right")]

    def sublevel_support(self, s: float, directions) -> np.ndarray:
        """h_{Phi <= s} for many directions at one level."""
        points = self.sublevel_points(s)
        directions = np.asarray(directions, dtype=float)
        if len(points) == 0:
            return np.full(directions.shape[:-1], -np.inf)
        points = _hull_points(points)
        return np.max(directions @ points.T, axis=-1)

    def sublevel_volume(self, s) -> np.ndarray:
        _, values = self._sorted_nodes
        return np.searchsorted(values, np.asarray(s, dtype=float), side="right") * self.grid.cell_volume

    def level_ceiling(self) -> float:
        return self.trusted_level

    def with_values(self, values, label: Optional[str] = None) -> "SampledYoung":
        return SampledYoung(self.grid, values, label=label or self.label, source=self.source)


def _hull_points(points: np.ndarray) -> np.ndarray:
    if len(points) <= points.shape[1] + 1:
        return points
    from scipy.spatial import ConvexHull, QhullError

    try:
        return points[ConvexHull(points).vertices]
    except QhullError:
        return points


def as_sampled(phi: YoungND, grid: Optional[UniformGrid] = None, resolution: Optional[int] = None) -> SampledYoung:
    """Sample a Young function on `grid` (default: its own box at `resolution`)."""
    if isinstance(phi, SampledYoung) and (grid is None or grid == phi.grid):
        return phi
    if grid is None:
        if not isinstance(phi, CatalogYoung):
            raise YoungFunctionError(f"{phi.label} needs an explicit grid")
        from core.utils import aniso_setting

        grid = phi.default_grid(aniso_setting("young_resolution", resolution))
    return phi.sample(grid)


def level_grid(s_max: float, count: Optional[int] = None, floor: Optional[float] = None) -> np.ndarray:
    """
    s = 0 followed by `count` geometric levels from floor * s_max to s_max.
    """
    from core.utils import aniso_setting

    count = aniso_setting("maximizer_levels", count)
    floor = aniso_setting("maximizer_floor", floor)
    if not np.isfinite(s_max) or s_max <= 0:
        return np.zeros(1)
    return np.concatenate([[0.0], np.geomspace(floor * s_max, s_max, count)])
