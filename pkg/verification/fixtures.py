"""
Seeded random (u, Phi, K) triples for property checks.
"""

import numpy as np

from core.grids import UniformGrid
from geometry.catalog import parse_body
from gridcalc.catalog import random_bumps
from young.catalog import parse_young

YOUNG_CHOICES = (
    "quad",
    "pnorm:2,3",
    "pnorm:2,4",
    "radial:power,2,0.5:square",
    "radial:power,3:hexagon",
)
BODY_CHOICES = ("square", "disc:64", "cross", "hexagon")


def random_triple(seed: int, resolution: int = 96):
    rng = np.random.default_rng(seed)
    grid = UniformGrid.box(1.6, resolution, 2)
    u = random_bumps(grid, int(rng.integers(1, 5)), seed=seed)
    phi = parse_young(YOUNG_CHOICES[int(rng.integers(len(YOUNG_CHOICES)))], 2)
    K = parse_body(BODY_CHOICES[int(rng.integers(len(BODY_CHOICES)))], 2)
    return u, phi, K
