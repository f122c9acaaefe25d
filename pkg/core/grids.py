"""
Uniform box grids shared by fields, sampled Young functions and perimeters.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np

from core.exceptions import ArgumentError


@dataclass(frozen=True)
class UniformGrid:
    """
    Tensor grid over the box [lower, upper].

    Node-centered grids put the first and last node on the box faces;
    cell-centered grids put one node in the middle of each of shape[k] cells.
    """

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    shape: Tuple[int, ...]
    centering: str = "node"

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.shape)):
            raise ArgumentError("Box bounds and resolution must have one entry per axis")
        if self.centering not in ("node", "cell"):
            raise ArgumentError(f"Unknown centering: {self.centering}")
        for lo, hi, n in zip(self.lower, self.upper, self.shape):
            if not hi > lo:
                raise ArgumentError(f"Empty box side [{lo}, {hi}]")
            if n < 2:
                raise ArgumentError(f"Resolution {n} is too small")

    @classmethod
    def box(
        cls,
        half_width: float,
        resolution: int,
        dim: int = 2,
        center: Sequence[float] | None = None,
        centering: str = "node",
    ) -> "UniformGrid":
        center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        return cls(
            lower=tuple(float(c - half_width) for c in center),
            upper=tuple(float(c + half_width) for c in center),
            shape=(int(resolution),) * dim,
            centering=centering,
        )

    @property
    def dim(self) -> int:
        return len(self.shape)

    @cached_property
    def spacing(self) -> np.ndarray:
        lower = np.asarray(self.lower)
        upper = np.asarray(self.upper)
        shape = np.asarray(self.shape)
        if self.centering == "node":
            return (upper - lower) / (shape - 1)
        return (upper - lower) / shape

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def max_spacing(self) -> float:
        return float(np.max(self.spacing))

    @cached_property
    def axes(self) -> Tuple[np.ndarray, ...]:
        axes = []
        for lo, hi, n, h in zip(self.lower, self.upper, self.shape, self.spacing):
            if self.centering == "node":
                axes.append(np.linspace(lo, hi, n))
            else:
                axes.append(lo + (np.arange(n) + 0.5) * h)
        return tuple(axes)

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates with shape (*shape, dim)."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def points(self) -> np.ndarray:
        return self.coordinates.reshape(-1, self.dim)

    def half_widths(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / 2.0

    def center(self) -> np.ndarray:
        return (np.asarray(self.upper) + np.asarray(self.lower)) / 2.0

    def inner_mask(self, fraction: float) -> np.ndarray:
        """Nodes within `fraction` of the half-width from the box center on every axis."""
        offset = np.abs(self.coordinates - self.center())
        limit = fraction * self.half_widths() * (1.0 + 1e-12)
        return np.all(offset <= limit, axis=-1)

    def rim_mask(self, width: int = 1) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.dim):
            index = [slice(None)] * self.dim
            index[axis] = slice(0, width)
            mask[tuple(index)] = True
            index[axis] = slice(-width, None)
            mask[tuple(index)] = True
        return mask

    def coarsen(self, factor: int) -> "UniformGrid":
        """Every `factor`-th node of a node-centered grid."""
        if self.centering != "node":
            raise ArgumentError("Only node-centered grids can be coarsened")
        shape = tuple((n - 1) // factor + 1 for n in self.shape)
        upper = tuple(
            lo + (m - 1) * factor * h
            for lo, m, h in zip(self.lower, shape, self.spacing)
        )
        return UniformGrid(self.lower, upper, shape, "node")

    def describe(self) -> dict:
        return {
            "lower": list(self.lower),
            "upper": list(self.upper),
            "shape": list(self.shape),
            "centering": self.centering,
        }
