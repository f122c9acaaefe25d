"""
Pydantic schema for one command-line run.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field
from pydantic import ValidationError as PydanticValidationError
from pydantic import validator

from core.exceptions import ConfigurationError, InputFileError
from core.utils import aniso_setting

COMMANDS = [
    "conjugate",
    "symmetrize-body",
    "symmetrize-fn",
    "symmetrize-u",
    "verify",
    "gen-prop51",
    "gen-prop52",
    "diagnose",
    "sandwich",
]


class RunConfig(BaseModel):
    """Inputs and overrides of a single pipeline run."""

    command: str
    u: Optional[str] = None
    phi: Optional[str] = None
    K: Optional[str] = None
    L: Optional[str] = None
    A: Optional[str] = None
    a: float = Field(default=1.0, gt=0)
    t: List[float] = [0.0, 1.0, 1.0]
    x0: Optional[List[float]] = None
    dim: int = Field(default=2, ge=2, le=3)
    res: Optional[int] = None
    young_res: Optional[int] = None
    box: Optional[float] = Field(default=None, gt=0)
    levels: Optional[int] = Field(default=None, ge=2)
    refinement_levels: Optional[int] = Field(default=None, ge=0)
    residual_tolerance: Optional[float] = Field(default=None, gt=0)
    output_dir: Optional[str] = None
    seed: int = 0
    then_verify: bool = False

    @validator("command")
    def validate_command(cls, v):
        if v not in COMMANDS:
            raise ValueError(f"Command must be one of: {COMMANDS}")
        return v

    @validator("res", "young_res")
    def validate_resolution(cls, v):
        minimum = aniso_setting("min_resolution")
        if v is not None and v < minimum:
            raise ValueError(f"Resolution must be at least {minimum} nodes per axis, got {v}")
        return v

    @validator("t")
    def validate_levels(cls, v):
        if len(v) != 3:
            raise ValueError("t needs three values t1,t2,t3")
        return v

    @property
    def resolution(self) -> int:
        return aniso_setting("default_resolution", self.res)

    @property
    def output_root(self) -> Path:
        return Path(aniso_setting("output_dir", self.output_dir))

    def input_files(self) -> List[Path]:
        """Files referenced by csv:/polygon: catalog strings, for the content hash."""
        paths = []
        for spec in (self.u, self.phi, self.K, self.L):
            if not spec:
                continue
            for piece in spec.split(":"):
                candidate = Path(piece)
                if candidate.suffix.lower() == ".csv" and candidate.is_file():
                    paths.append(candidate)
        return paths


def load_config(command: str, overrides: Dict[str, Any], path: Optional[str] = None) -> RunConfig:
    """
    Merge a JSON config file with command-line values; values that are not None win.
    """
    data: Dict[str, Any] = {}
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise InputFileError(f"Cannot read config {path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Config {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"Config {path} must hold a JSON object")
    data.update({key: value for key, value in overrides.items() if value is not None})
    data["command"] = command
    try:
        return RunConfig(**data)
    except PydanticValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigurationError(problems)
