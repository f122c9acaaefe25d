import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import numpy as np
import pandas as pd
from django.conf import settings

logger = logging.getLogger(__name__)


def aniso_setting(name: str, value: Any = None) -> Any:
    """
    Return `value` when given, otherwise the project default from settings.ANISO.
    """
    if value is not None:
        return value
    return settings.ANISO[name]


def fixed_tree_sum(values) -> float:
    """
    Sum with a fixed pairwise combination order.

    The input is zero-padded to a power of two and halved level by level, so
    the result depends only on the values and their order.
    """
    flat = np.asarray(values, dtype=float).ravel()
    if flat.size == 0:
        return 0.0
    size = 1 << (flat.size - 1).bit_length()
    buffer = np.zeros(size)
    buffer[: flat.size] = flat
    while buffer.size > 1:
        buffer = buffer[0::2] + buffer[1::2]
    return float(buffer[0])


def sphere_directions(count: int, dim: int) -> np.ndarray:
    """
    Unit directions: equally spaced angles in 2-D, a Fibonacci lattice in 3-D.
    """
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if dim == 3:
        index = np.arange(count) + 0.5
        z = 1.0 - 2.0 * index / count
        radius = np.sqrt(1.0 - z * z)
        golden = np.pi * (3.0 - math.sqrt(5.0))
        theta = golden * index
        return np.column_stack([radius * np.cos(theta), radius * np.sin(theta), z])
    raise ValueError(f"Unsupported dimension: {dim}")


def content_hash(*parts) -> str:
    """
    SHA-256 over strings, bytes and files (Path objects are read).
    """
    digest = hashlib.sha256()
    for part in parts:
        if part is None:
            digest.update(b"\x00")
        elif isinstance(part, Path):
            digest.update(part.read_bytes())
        elif isinstance(part, bytes):
            digest.update(part)
        else:
            digest.update(str(part).encode("utf-8"))
        digest.update(b"\x1f")
    return digest.hexdigest()


def json_safe(value: Any) -> Any:
    """
    Convert numpy scalars/arrays and non-finite floats into JSON-friendly values.
    """
    if isinstance(value, dict):
        return {str(key): json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, np.ndarray):
        return [json_safe(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    """
    Write a JSON document with sorted keys.

    Floats use Python's shortest round-trip representation.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(json_safe(payload), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_table(
    path: Path, frame: pd.DataFrame, header_lines: Optional[Iterable[str]] = None, header: bool = True
) -> Path:
    """
    Write a CSV table with 17 significant digits and optional '#' header lines.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        for line in header_lines or ():
            handle.write(f"# {line}\n")
        frame.to_csv(handle, index=False, header=header, float_format="%.17g")
    logger.info(f"Wrote {path}")
    return path
