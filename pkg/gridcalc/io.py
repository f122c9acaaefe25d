"""
CSV grid format shared by grid functions and sampled Young functions:

    # box: x0 x1 y0 y1 [z0 z1]
    # res: nx ny [nz]
    v,v,v,...            one row per index of the leading axes, "inf" allowed
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from core.exceptions import InputFileError
from core.grids import UniformGrid
from core.utils import write_table

logger = logging.getLogger(__name__)


def read_grid_csv(path) -> Tuple[UniformGrid, np.ndarray]:
    file_path = Path(path)
    if not file_path.exists():
        raise InputFileError(f"Grid file not found: {path}")

    header = {}
    with file_path.open("r", encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            header[key.strip().lower()] = value.split()
    if "box" not in header or "res" not in header:
        raise InputFileError(f"{path}: missing '# box:' or '# res:' header line")
    try:
        bounds = [float(v) for v in header["box"]]
        shape = tuple(int(v) for v in header["res"])
    except ValueError:
        raise InputFileError(f"{path}: malformed header")
    if len(bounds) != 2 * len(shape):
        raise InputFileError(f"{path}: box has {len(bounds)} bounds for {len(shape)} axes")

    try:
        frame = pd.read_csv(file_path, header=None, comment="#", skipinitialspace=True)
        values = frame.to_numpy(dtype=float)
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFileError(f"Unreadable grid file {path}: {e}")
    if values.size != int(np.prod(shape)):
        raise InputFileError(f"{path}: {values.size} values for resolution {shape}")

    grid = UniformGrid(tuple(bounds[0::2]), tuple(bounds[1::2]), shape)
    logger.info(f"Read {shape} grid from {file_path.name}")
    return grid, values.reshape(shape)


def write_grid_csv(path, grid: UniformGrid, values: np.ndarray) -> Path:
    values = np.asarray(values, dtype=float)
    bounds = " ".join(f"{v:.17g}" for pair in zip(grid.lower, grid.upper) for v in pair)
    res = " ".join(str(n) for n in grid.shape)
    frame = pd.DataFrame(values.reshape(-1, grid.shape[-1]))
    return write_table(path, frame, [f"box: {bounds}", f"res: {res}"], header=False)


def read_young_csv(path, label: str = ""):
    from young.functions import SampledYoung

    grid, values = read_grid_csv(path)
    return SampledYoung(grid, values, label=label or Path(path).stem)
