"""
Pydantic schemas for verification reports.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, validator

SCHEMA_VERSION = 1

VERDICTS = ["inequality-holds", "equality-within-tol", "violation", "indeterminate"]


class LevelRecord(BaseModel):
    """Terms of the level-line chain at one level t."""

    t: float
    band: float
    band_tolerance: float
    s_t: Optional[float] = None
    phi_term: Optional[float] = None
    support_term: Optional[float] = None
    isoperimetric_u: Optional[float] = None
    isoperimetric_uK: Optional[float] = None
    support_term_uK: Optional[float] = None
    triple_term: Optional[float] = None
    dominance_holds: Optional[bool] = None
    equalities_hold: Optional[bool] = None
    note: str = ""


class RefinementPoint(BaseModel):
    """Both sides of the inequality on one grid of the refinement trace."""

    shape: List[int]
    spacing: float
    lhs: float
    rhs: float
    excess: float
    error_estimate: float


class DiagnosticLevel(BaseModel):
    """Residuals of the extremality conditions at one level t."""

    t: float
    s_t: Optional[float] = None
    a_t: Optional[float] = None
    x_t: Optional[List[float]] = None
    constancy_spread: Optional[float] = None
    interior_nodes: int = 0
    residual_a: Optional[float] = None
    residual_b: Optional[float] = None
    residual_c: Optional[float] = None
    residual_d: Optional[float] = None
    residual_e: Optional[float] = None
    quasi_convexity: Optional[float] = None
    uniqueness_spread: Optional[float] = None
    note: str = ""


class Report(BaseModel):
    """Verification record for one (u, Phi, K) triple."""

    schema_version: int = SCHEMA_VERSION
    command: str = "verify"
    u: str = ""
    phi: str = ""
    body: str = ""
    lhs: float
    rhs: float
    error_estimate: float = Field(default=0.0, ge=0)
    margin: float = 0.0
    verdict: str
    levels: List[LevelRecord] = []
    refinement: List[RefinementPoint] = []
    diagnostics: List[DiagnosticLevel] = []
    summary: Dict[str, Any] = {}
    warnings: List[str] = []
    config: Dict[str, Any] = {}
    content_hash: str = ""
    seed: Optional[int] = None

    @validator("verdict")
    def validate_verdict(cls, v):
        if v not in VERDICTS:
            raise ValueError(f"Verdict must be one of: {VERDICTS}")
        return v

    def level_frame(self):
        import pandas as pd

        return pd.DataFrame([record.model_dump() for record in self.levels])

    def diagnostics_frame(self):
        import pandas as pd

        rows = []
        for record in self.diagnostics:
            row = record.model_dump()
            x_t = row.pop("x_t") or []
            for axis, value in enumerate(x_t):
                row[f"x_t{axis}"] = value
            rows.append(row)
        return pd.DataFrame(rows)
