from enum import Enum
from itertools import product
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from app.families.metric_families import MetricFamily
from config.app_config import settings
from config.geometry_config import MAX_SUPPORTED_ORDER

Coordinate = Literal["t", "x", "y"]
COORDINATE_ORDER: Tuple[str, ...] = ("t", "x", "y")


class GridAxis(BaseModel):
    coordinate: Coordinate
    minimum: float
    maximum: float
    count: int = Field(ge=1)

    @model_validator(mode="after")
    def check_range(self) -> "GridAxis":
        if self.maximum < self.minimum:
            raise ValueError(f"grid for '{self.coordinate}' has max < min")
        return self

    def values(self) -> List[float]:
        return [float(v) for v in np.linspace(self.minimum, self.maximum, self.count)]


class GridSpec(BaseModel):
    """Cartesian grid; coordinates without an axis are pinned at 0."""
    axes: List[GridAxis] = Field(min_length=1)

    @field_validator("axes")
    @classmethod
    def unique_coordinates(cls, axes: List[GridAxis]) -> List[GridAxis]:
        names = [axis.coordinate for axis in axes]
        if len(set(names)) != len(names):
            raise ValueError(f"coordinate given more than once in grid: {names}")
        return axes

    def points(self) -> List[Tuple[float, float, float]]:
        by_name = {axis.coordinate: axis.values() for axis in self.axes}
        columns = [by_name.get(name, [0.0]) for name in COORDINATE_ORDER]
        return sorted(tuple(p) for p in product(*columns))


class RunConfig(BaseModel):
    command: Literal["verify", "classify", "invariants"]
    family: MetricFamily
    function: Optional[str] = None
    components: Dict[str, str] = Field(default_factory=dict)
    order: int = Field(default=2, ge=0, le=MAX_SUPPORTED_ORDER)
    grid: GridSpec
    tolerance: float = Field(default=settings.DEFAULT_TOLERANCE, gt=0)
    output_format: Literal["json", "csv"] = "json"
    workers: int = Field(default=settings.MAX_WORKERS, ge=1)


class VerdictStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    HYPOTHESIS_VIOLATED = "hypothesis-violated"
    VACUOUS_PASS = "vacuous-pass"
    UNDETERMINED = "undetermined"


class Verdict(BaseModel):
    property: str
    order: int
    status: VerdictStatus
    note: Optional[str] = None


class InvariantSummary(BaseModel):
    name: str
    values: List[Optional[float]]
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    median: Optional[float] = None
    relative_spread: Optional[float] = None
    constant: Optional[bool] = None


class ScaledEntrySeries(BaseModel):
    order: int
    slots: str
    values: List[Optional[float]]


class Exclusion(BaseModel):
    point: List[float]
    reason: str
    scope: str = "all"


class HomogeneityReport(BaseModel):
    family: str
    function: str
    order: int
    tolerance: float
    sample_count: int
    excluded_count: int
    epsilon: Optional[int] = None
    degenerate: bool = False
    not_locally_homogeneous: bool = False
    verdicts: List[Verdict]
    invariants: List[InvariantSummary] = Field(default_factory=list)
    diagnostics: List[InvariantSummary] = Field(default_factory=list)
    scaled_entries: List[ScaledEntrySeries] = Field(default_factory=list)
    psi_samples: List[Optional[float]] = Field(default_factory=list)
    exclusions: List[Exclusion] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_implications(self) -> "HomogeneityReport":
        status = {v.property: v.status for v in self.verdicts}
        for verdict in self.verdicts:
            if verdict.property.startswith("SCH_") and verdict.status is VerdictStatus.PASS:
                implied = f"CH_{verdict.order}(1,3)"
                if status.get(implied) not in (None, VerdictStatus.PASS):
                    raise ValueError(f"{verdict.property} passes but {implied} does not")
        return self

    def verdict(self, prop: str) -> Optional[Verdict]:
        return next((v for v in self.verdicts if v.property == prop), None)


class OrderCheck(BaseModel):
    order: int
    reference: Literal["oracle", "identities"]
    compared_points: int
    max_abs_deviation: float
    max_rel_deviation: float
    passed: bool
    note: Optional[str] = None


class IdentityCheck(BaseModel):
    name: str
    max_defect: float
    passed: bool


class VerificationReport(BaseModel):
    family: str
    function: str
    order: int
    checks: List[OrderCheck]
    identities: List[IdentityCheck] = Field(default_factory=list)
    exclusions: List[Exclusion] = Field(default_factory=list)
    passed: bool


class InvariantRow(BaseModel):
    point: List[float]
    excluded: bool = False
    reason: Optional[str] = None
    quantities: Dict[str, float] = Field(default_factory=dict)
    invariants: Dict[str, Optional[float]] = Field(default_factory=dict)
    diagnostics: Dict[str, Optional[float]] = Field(default_factory=dict)


class InvariantTable(BaseModel):
    family: str
    function: str
    rows: List[InvariantRow]
    exclusions: List[Exclusion] = Field(default_factory=list)


class ErrorDetail(BaseModel):
    code: str
    message: str
    field: Optional[str] = None


class ErrorResponse(BaseModel):
    error: ErrorDetail
