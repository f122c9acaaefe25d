"""
Named test fields accepted on the command line.

    tent:<body>     max(0, 1 - gauge_body(x))
    bump:<body>     (1 - gauge_body(x)^2)_+^2
    paraboloid      clip(1 - |x|^2 / 2, 0, 1)
    twobump         two disjoint radial tents of different heights
    random:<k>      sum of k random smooth bumps (seeded)
    csv:<path>      grid CSV file
"""

import logging
from typing import Optional

import numpy as np

from core.exceptions import CatalogParseError
from core.grids import UniformGrid
from core.utils import aniso_setting
from geometry.catalog import parse_body
from gridcalc.fields import GridFunction
from gridcalc.io import read_grid_csv

logger = logging.getLogger(__name__)

FIELD_NAMES = ("tent", "bump", "paraboloid", "twobump", "random", "csv")
BOX_SCALE = 1.6


def _box(half_width: float, resolution: Optional[int], dim: int) -> UniformGrid:
    return UniformGrid.box(half_width, aniso_setting("default_resolution", resolution), dim)


def tent(body, grid: UniformGrid) -> GridFunction:
    values = np.maximum(0.0, 1.0 - body.gauge(grid.coordinates))
    return GridFunction(grid, values, boundary_value=0.0, label=f"tent:{body.label}")


def bump(body, grid: UniformGrid) -> GridFunction:
    values = np.maximum(0.0, 1.0 - body.gauge(grid.coordinates) ** 2) ** 2
    return GridFunction(grid, values, boundary_value=0.0, label=f"bump:{body.label}")


def paraboloid(grid: UniformGrid) -> GridFunction:
    values = np.clip(1.0 - 0.5 * np.sum(grid.coordinates**2, axis=-1), 0.0, 1.0)
    return GridFunction(grid, values, boundary_value=0.0, label="paraboloid")


def radial_tent(grid: UniformGrid, center, radius: float, height: float) -> np.ndarray:
    distance = np.linalg.norm(grid.coordinates - np.asarray(center, dtype=float), axis=-1)
    return height * np.maximum(0.0, 1.0 - distance / radius)


def two_bump(grid: UniformGrid) -> GridFunction:
    """Disjoint tents, so no super-level set below the lower peak is convex."""
    dim = grid.dim
    first = np.zeros(dim)
    second = np.zeros(dim)
    first[0], second[0] = -0.6, 0.65
    if dim > 1:
        second[1] = 0.2
    values = radial_tent(grid, first, 0.5, 1.0) + radial_tent(grid, second, 0.4, 0.7)
    return GridFunction(grid, values, boundary_value=0.0, label="twobump")


def random_bumps(grid: UniformGrid, count: int, seed: int = 0) -> GridFunction:
    rng = np.random.default_rng(seed)
    values = np.zeros(grid.shape)
    for _ in range(count):
        center = rng.uniform(-0.4, 0.4, size=grid.dim)
        radius = rng.uniform(0.25, 0.55)
        height = rng.uniform(0.3, 1.0)
        squared = np.sum((grid.coordinates - center) ** 2, axis=-1) / radius**2
        values += height * np.maximum(0.0, 1.0 - squared) ** 2
    return GridFunction(grid, values, boundary_value=0.0, label=f"random:{count}:{seed}")


def parse_field(
    spec: str,
    dim: int = 2,
    resolution: Optional[int] = None,
    half_width: Optional[float] = None,
    seed: int = 0,
) -> GridFunction:
    """
    Build a field from a catalog string; `half_width` overrides the default box.
    """
    if not spec:
        raise CatalogParseError("Empty field specification")
    name, _, argument = spec.strip().partition(":")
    name = name.lower()

    if name in ("tent", "bump"):
        if not argument:
            raise CatalogParseError(f"{name} needs a body: {name}:<body>")
        body = parse_body(argument, dim)
        grid = _box(half_width or BOX_SCALE * body.max_radius(), resolution, body.dim)
        return tent(body, grid) if name == "tent" else bump(body, grid)
    if name == "paraboloid":
        return paraboloid(_box(half_width or BOX_SCALE * np.sqrt(2.0), resolution, dim))
    if name == "twobump":
        return two_bump(_box(half_width or 1.5, resolution, dim))
    if name == "random":
        try:
            count = int(argument) if argument else 3
        except ValueError:
            raise CatalogParseError(f"Invalid bump count in {spec!r}")
        if count < 1:
            raise CatalogParseError("random needs at least one bump")
        return random_bumps(_box(half_width or 1.6, resolution, dim), count, seed)
    if name == "csv":
        if not argument:
            raise CatalogParseError("csv needs a file path: csv:<path>")
        grid, values = read_grid_csv(argument)
        return GridFunction(grid, values, label=f"csv:{argument}")

    raise CatalogParseError(f"Unknown field {name!r}; expected one of {', '.join(FIELD_NAMES)}")
