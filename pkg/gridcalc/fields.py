"""
Scalar fields on uniform box grids.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.exceptions import ArgumentError, GradientRangeError, NotInMdError
from core.grids import UniformGrid
from core.utils import fixed_tree_sum

logger = logging.getLogger(__name__)

RIM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Node values of u on a uniform grid; u equals `boundary_value` outside the box.

    `gradient_override` carries a chain-rule gradient for truncations and
    differences of fields, so that node-wise identities between gradients
    hold exactly.
    """

    grid: UniformGrid
    values: np.ndarray
    boundary_value: Optional[float] = None
    gradient_override: Optional[np.ndarray] = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != tuple(self.grid.shape):
            raise ArgumentError(f"Values of shape {values.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ArgumentError("Grid function values must be finite")
        object.__setattr__(self, "values", values)
        if self.boundary_value is None:
            object.__setattr__(self, "boundary_value", rim_mode(values, self.grid))

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def essinf(self) -> float:
        return float(self.boundary_value)

    @property
    def esssup(self) -> float:
        return float(max(np.max(self.values), self.boundary_value))

    def gradient(self) -> np.ndarray:
        """Central differences inside, one-sided at the rim; shape (*shape, dim)."""
        if self.gradient_override is not None:
            return self.gradient_override
        cached = self.__dict__.get("_gradient")
        if cached is None:
            parts = np.gradient(self.values, *self.grid.spacing, edge_order=1)
            if self.dim == 1:
                parts = [parts]
            cached = np.stack(parts, axis=-1)
            self.__dict__["_gradient"] = cached
        return cached

    def gradient_norm(self) -> np.ndarray:
        return np.linalg.norm(self.gradient(), axis=-1)

    def with_values(self, values, gradient=None, label: str = "") -> "GridFunction":
        return GridFunction(
            grid=self.grid,
            values=values,
            boundary_value=None,
            gradient_override=gradient,
            label=label or self.label,
        )

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise ArgumentError("Fields live on different grids")
        return GridFunction(
            grid=self.grid,
            values=self.values - other.values,
            boundary_value=self.boundary_value - other.boundary_value,
            gradient_override=self.gradient() - other.gradient(),
            label=f"{self.label}-{other.label}",
        )

    def rim_excess(self, width: int = 3) -> float:
        """Largest deviation from the boundary value within `width` cells of the box faces."""
        rim = self.grid.rim_mask(width)
        return float(np.max(np.abs(self.values[rim] - self.boundary_value)))

    def ensure_decay(self, width: int = 1) -> None:
        """Raise when u does not settle to its essential infimum at the rim."""
        excess = self.rim_excess(width)
        scale = max(1.0, float(np.max(np.abs(self.values))))
        if excess > RIM_TOLERANCE * scale:
            raise NotInMdError(
                f"Field {self.label or 'u'} differs from its rim value by {excess:.3g} at the box faces; "
                "its distribution function would be infinite"
            )
        if self.rim_excess(3) > RIM_TOLERANCE * scale:
            logger.warning(f"Support of {self.label or 'u'} comes within 3 cells of the box faces")

    def volume_above(self, level: float, strict: bool = True) -> float:
        mask = self.values > level if strict else self.values >= level
        return float(np.count_nonzero(mask) * self.grid.cell_volume)

    def coarsen(self, factor: int) -> "GridFunction":
        """Restriction to every `factor`-th node."""
        index = tuple(slice(0, None, factor) for _ in range(self.dim))
        coarse = self.grid.coarsen(factor)
        return GridFunction(
            grid=coarse,
            values=self.values[index][tuple(slice(0, n) for n in coarse.shape)],
            boundary_value=self.boundary_value,
            label=self.label,
        )


def rim_mode(values: np.ndarray, grid: UniformGrid) -> float:
    """Most frequent value on the outermost node layer."""
    rim = values[grid.rim_mask(1)]
    counts = Counter(np.round(rim, 12).tolist())
    return float(max(counts.items(), key=lambda item: (item[1], -item[0]))[0])


def gradient(u: GridFunction) -> np.ndarray:
    return u.gradient()


def truncate(u: GridFunction, t1: float, t2: float) -> GridFunction:
    """
    T_{t1,t2}(u): values clamped to [t1, t2]; the gradient is kept only where t1 < u < t2.
    """
    if not t1 < t2:
        raise ArgumentError(f"Truncation needs t1 < t2, got {t1} >= {t2}")
    values = np.clip(u.values, t1, t2)
    keep = (u.values > t1) & (u.values < t2)
    grad = u.gradient() * keep[..., None]
    return GridFunction(
        grid=u.grid,
        values=values,
        boundary_value=float(np.clip(u.boundary_value, t1, t2)),
        gradient_override=grad,
        label=f"T[{t1:g},{t2:g}]({u.label})" if u.label else "",
    )


def truncate_below(u: GridFunction, t: float) -> GridFunction:
    """T_t(u) = max{u, t}."""
    return truncate(u, t, np.inf)


def dirichlet_functional(u: GridFunction, phi, strict: bool = True) -> float:
    """
    Cell-volume weighted sum of Phi(grad u); +inf as soon as one node hits an infinite value.
    """
    grad = u.gradient()
    check = getattr(phi, "check_range", None)
    if check is not None:
        overflow = check(grad)
        if overflow is not None:
            message = (
                f"Gradient of magnitude {overflow:.6g} leaves the box of {getattr(phi, 'label', 'Phi')}"
            )
            if strict:
                raise GradientRangeError(message, magnitude=overflow)
            logger.warning(message)
    values = phi.evaluate(grad)
    if np.any(np.isposinf(values)):
        return float("inf")
    values = np.where(np.isnan(values), np.inf, values)
    if np.any(np.isposinf(values)):
        return float("inf")
    return fixed_tree_sum(values) * u.grid.cell_volume


def constant_like(grid: UniformGrid, value: float, label: str = "") -> GridFunction:
    return GridFunction(grid=grid, values=np.full(grid.shape, float(value)), boundary_value=float(value), label=label)
