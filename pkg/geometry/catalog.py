"""
Named convex bodies accepted on the command line.

    square            [-1, 1]^n
    cross             conv{±e_i}
    hexagon           regular hexagon with unit inradius (2-D only)
    simplex           regular simplex centered at 0 with unit circumradius
    disc[:<n>]        regular n-gon inscribed in the unit circle (Fibonacci polytope in 3-D)
    polygon:<path>    CSV of vertex coordinates, one vertex per line
"""

import itertools
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from core.exceptions import CatalogParseError, InputFileError
from core.utils import aniso_setting, sphere_directions
from geometry.bodies import ConvexBody

logger = logging.getLogger(__name__)

BODY_NAMES = ("square", "cross", "hexagon", "simplex", "disc", "polygon")


def square(dim: int = 2, half_side: float = 1.0) -> ConvexBody:
    corners = np.array(list(itertools.product([-half_side, half_side], repeat=dim)))
    return ConvexBody(corners, label="square")


def cross(dim: int = 2, radius: float = 1.0) -> ConvexBody:
    eye = np.eye(dim) * radius
    return ConvexBody(np.vstack([eye, -eye]), label="cross")


def hexagon(inradius: float = 1.0) -> ConvexBody:
    circumradius = 2.0 * inradius / np.sqrt(3.0)
    angles = np.pi / 3.0 * np.arange(6)
    return ConvexBody(circumradius * np.column_stack([np.cos(angles), np.sin(angles)]), label="hexagon")


def simplex(dim: int = 2) -> ConvexBody:
    if dim == 2:
        angles = np.pi / 2.0 + 2.0 * np.pi / 3.0 * np.arange(3)
        return ConvexBody(np.column_stack([np.cos(angles), np.sin(angles)]), label="simplex")
    corners = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return ConvexBody(corners / np.sqrt(3.0), label="simplex")


def disc(vertex_count: int | None = None, dim: int = 2, radius: float = 1.0) -> ConvexBody:
    count = aniso_setting("disc_vertices", vertex_count)
    return ConvexBody(radius * sphere_directions(count, dim), label=f"disc:{count}")


def polygon_from_csv(path: str, dim: int = 2) -> ConvexBody:
    file_path = Path(path)
    if not file_path.exists():
        raise InputFileError(f"Vertex file not found: {path}")
    try:
        frame = pd.read_csv(file_path, header=None, comment="#", skipinitialspace=True)
        vertices = frame.to_numpy(dtype=float)
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFileError(f"Unreadable vertex file {path}: {e}")
    if vertices.shape[1] != dim:
        raise InputFileError(f"{path}: vertices have {vertices.shape[1]} coordinates, expected {dim}")
    if not np.all(np.isfinite(vertices)):
        raise InputFileError(f"{path}: vertex coordinates must be finite")
    return ConvexBody(vertices, label=f"polygon:{file_path.name}")


def parse_body(spec: str, dim: int = 2) -> ConvexBody:
    """
    Build a body from a catalog string such as "square" or "disc:64".
    """
    if not spec:
        raise CatalogParseError("Empty body specification")
    name, _, argument = spec.strip().partition(":")
    name = name.lower()

    if name == "square":
        return square(dim)
    if name == "cross":
        return cross(dim)
    if name == "hexagon":
        if dim != 2:
            raise CatalogParseError("hexagon is only available in 2-D")
        return hexagon()
    if name == "simplex":
        return simplex(dim)
    if name == "disc":
        if argument:
            try:
                count = int(argument)
            except ValueError:
                raise CatalogParseError(f"Invalid vertex count in {spec!r}")
            if count < dim + 1:
                raise CatalogParseError(f"disc needs at least {dim + 1} vertices")
            return disc(count, dim)
        return disc(dim=dim)
    if name == "polygon":
        if not argument:
            raise CatalogParseError("polygon needs a file path: polygon:<path>")
        return polygon_from_csv(argument, dim)

    raise CatalogParseError(f"Unknown body {name!r}; expected one of {', '.join(BODY_NAMES)}")
