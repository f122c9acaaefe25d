"""
Convex polytopes with support, gauge and polar duality.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from core.exceptions import (
    DegenerateGaugeError,
    DegeneratePolarError,
    InvalidBodyError,
    ZeroVolumeError,
)
from core.utils import aniso_setting, sphere_directions

logger = logging.getLogger(__name__)

INTERIOR_TOLERANCE = 1e-12


class ConvexBody:
    """
    Convex polytope in dimension 2 or 3 given by its vertices.

    The vertex list is reduced to the extreme points of its hull (in
    counter-clockwise order in 2-D). Facets are kept as outward unit normals
    `a_f` with support values `h_f`, so that the body is {x : a_f.x <= h_f}.
    """

    def __init__(self, vertices, label: str = ""):
        points = np.asarray(vertices, dtype=float)
        if points.size == 0:
            raise InvalidBodyError("Empty vertex list")
        if points.ndim != 2 or points.shape[1] not in (2, 3):
            raise InvalidBodyError(f"Vertices must be an (m, 2) or (m, 3) array, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise InvalidBodyError("Vertices must be finite")
        try:
            hull = ConvexHull(points)
        except (QhullError, ValueError) as e:
            raise ZeroVolumeError(f"Degenerate body: {e}")

        self.label = label
        self.vertices = points[hull.vertices]
        self._normals, self._offsets = _unique_facets(hull.equations)
        self._simplices = [points[s] for s in hull.simplices] if points.shape[1] == 3 else None
        if not self.volume > 0:
            raise ZeroVolumeError("Body has zero volume")

    def __repr__(self) -> str:
        return f"ConvexBody({self.label or 'polytope'}, dim={self.dim}, vertices={len(self.vertices)})"

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def normals(self) -> np.ndarray:
        return self._normals

    @property
    def offsets(self) -> np.ndarray:
        return self._offsets

    @property
    def contains_origin_interior(self) -> bool:
        return bool(np.all(self._offsets > INTERIOR_TOLERANCE))

    @cached_property
    def volume(self) -> float:
        if self.dim == 2:
            # shoelace on the counter-clockwise vertex cycle
            x, y = self.vertices[:, 0], self.vertices[:, 1]
            return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
        # divergence theorem: sum of facet area times signed plane distance, over n
        total = 0.0
        centroid = self.vertices.mean(axis=0)
        for triangle in self._simplices:
            a, b, c = triangle
            normal = np.cross(b - a, c - a)
            area = 0.5 * np.linalg.norm(normal)
            if area == 0.0:
                continue
            unit = normal / (2.0 * area)
            if np.dot(unit, a - centroid) < 0:
                unit = -unit
            total += area * np.dot(unit, a)
        return float(total / 3.0)

    @cached_property
    def barycenter(self) -> np.ndarray:
        if self.dim == 2:
            x, y = self.vertices[:, 0], self.vertices[:, 1]
            xn, yn = np.roll(x, -1), np.roll(y, -1)
            cross = x * yn - xn * y
            area = 0.5 * np.sum(cross)
            return np.array([np.sum((x + xn) * cross), np.sum((y + yn) * cross)]) / (6.0 * area)
        hull = ConvexHull(self.vertices)
        centroid = self.vertices.mean(axis=0)
        moments = np.zeros(3)
        for simplex in hull.simplices:
            tetra = np.vstack([self.vertices[simplex], centroid])
            vol = abs(np.linalg.det(tetra[:3] - centroid)) / 6.0
            moments += vol * tetra.mean(axis=0)
        return moments / self.volume

    def support(self, direction) -> np.ndarray:
        """
        h_L(direction) = max over vertices of <direction, vertex>; broadcasts over leading axes.
        """
        direction = np.asarray(direction, dtype=float)
        values = np.max(direction @ self.vertices.T, axis=-1)
        return values

    def gauge(self, point) -> np.ndarray:
        """
        min{lambda >= 0 : point in lambda * L}, as the max over facets of a_f.x / h_f.
        """
        if not self.contains_origin_interior:
            raise DegenerateGaugeError(f"Origin is not interior to {self.label or 'body'}")
        point = np.asarray(point, dtype=float)
        scaled = self._normals / self._offsets[:, None]
        return np.maximum(np.max(point @ scaled.T, axis=-1), 0.0)

    def gauge_gradient(self, point) -> np.ndarray:
        """Gradient of the gauge: the active facet normal over its support value."""
        if not self.contains_origin_interior:
            raise DegenerateGaugeError(f"Origin is not interior to {self.label or 'body'}")
        point = np.asarray(point, dtype=float)
        scaled = self._normals / self._offsets[:, None]
        active = np.argmax(point @ scaled.T, axis=-1)
        return scaled[active]

    def polar(self, directions: Optional[int] = None) -> "ConvexBody":
        """
        L° = {x : <x, y> <= 1 for y in L}.

        Exact in 2-D (each edge a_f, h_f maps to the vertex a_f / h_f);
        in 3-D the boundary points theta / h_L(theta) over a Fibonacci sample
        are hulled.
        """
        if not self.contains_origin_interior:
            raise DegeneratePolarError(f"Origin is not interior to {self.label or 'body'}")
        label = f"polar({self.label})" if self.label else "polar"
        if self.dim == 2:
            return ConvexBody(self._normals / self._offsets[:, None], label=label)
        count = aniso_setting("polar_directions_3d", directions)
        theta = sphere_directions(count, 3)
        points = theta / self.support(theta)[:, None]
        return ConvexBody(points, label=label)

    def dilate_translate(self, scale: float, shift=None) -> "ConvexBody":
        """
        scale * L + shift. A negative scale composes the point reflection with |scale|.
        """
        if scale == 0:
            raise InvalidBodyError("Scale must be non-zero")
        shift = np.zeros(self.dim) if shift is None else np.asarray(shift, dtype=float)
        return ConvexBody(scale * self.vertices + shift, label=self.label)

    def reflect(self) -> "ConvexBody":
        return self.dilate_translate(-1.0)

    def is_origin_symmetric(self, tolerance: float = 1e-9, directions: Optional[int] = None) -> bool:
        count = aniso_setting("support_directions", directions)
        theta = sphere_directions(count, self.dim)
        return bool(np.max(np.abs(self.support(theta) - self.support(-theta))) <= tolerance)

    def max_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    def same_as(self, other: "ConvexBody", tolerance: float = 1e-9) -> bool:
        if other is self:
            return True
        if other is None or other.dim != self.dim:
            return False
        theta = sphere_directions(aniso_setting("support_directions"), self.dim)
        return bool(np.max(np.abs(self.support(theta) - other.support(theta))) <= tolerance)


def _unique_facets(equations: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Qhull splits 3-D facets into coplanar triangles; merge equal planes."""
    rounded = np.round(equations, 12)
    _, index = np.unique(rounded, axis=0, return_index=True)
    equations = equations[np.sort(index)]
    return equations[:, :-1], -equations[:, -1]


def support_function(body: ConvexBody, direction) -> np.ndarray:
    return body.support(direction)


def gauge(body: ConvexBody, point) -> np.ndarray:
    return body.gauge(point)


def polar(body: ConvexBody) -> ConvexBody:
    return body.polar()


def volume(body: ConvexBody) -> float:
    return body.volume


def dilate_translate(body: ConvexBody, scale: float, shift=None) -> ConvexBody:
    return body.dilate_translate(scale, shift)


@dataclass(frozen=True)
class NormPair:
    """
    A positively 1-homogeneous convex H together with its dual H0.

    Built from a body L: H = h_L and H0 = h_{L°}, which is the gauge of L.
    """

    body: ConvexBody

    @property
    def H(self) -> Callable:
        return self.body.support

    @cached_property
    def _polar(self) -> ConvexBody:
        return self.body.polar()

    @property
    def H0(self) -> Callable:
        return self._polar.support

    def dual(self) -> "NormPair":
        return NormPair(self._polar)

    def equivalence_constants(self, directions: Optional[int] = None) -> Tuple[float, float]:
        """(c1, c2) with c1 |xi| <= H(xi) <= c2 |xi| over a direction sample."""
        theta = sphere_directions(aniso_setting("support_directions", directions), self.body.dim)
        values = self.H(theta)
        return float(np.min(values)), float(np.max(values))

    def homogeneity_defect(self, directions: Optional[int] = None) -> float:
        theta = sphere_directions(aniso_setting("support_directions", directions), self.body.dim)
        scales = np.array([0.0, 0.5, 2.0, 7.0])
        worst = 0.0
        for t in scales:
            worst = max(worst, float(np.max(np.abs(self.H(t * theta) - t * self.H(theta)))))
        return worst

    def bidual_deviation(self, directions: Optional[int] = None) -> float:
        """max |(H0)0 - H| over a direction sample."""
        theta = sphere_directions(aniso_setting("support_directions", directions), self.body.dim)
        return float(np.max(np.abs(self.dual().dual().H(theta) - self.H(theta))))
