from dataclasses import dataclass
from config.app_config import settings


MAX_SUPPORTED_ORDER = 5


def validate_positive(value: float, name: str) -> float:
    """Reject nonpositive or non-numeric tolerances."""
    if not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {type(value)}")
    if value <= 0:
        raise ValueError(f"{name} must be positive (got {value})")
    return float(value)


@dataclass
class GeometryConfig:
    det_floor: float = float(getattr(settings, "DET_FLOOR", 1e-12))
    hypothesis_floor: float = float(getattr(settings, "HYPOTHESIS_FLOOR", 1e-8))
    spread_floor: float = float(getattr(settings, "SPREAD_FLOOR", 1e-12))
    tolerance: float = float(getattr(settings, "DEFAULT_TOLERANCE", 1e-6))
    iso_tolerance: float = float(getattr(settings, "ISO_TOLERANCE", 1e-9))
    find_iso_tolerance: float = float(getattr(settings, "FIND_ISO_TOLERANCE", 1e-8))
    oracle_rtol: float = float(getattr(settings, "ORACLE_RTOL", 1e-8))
    oracle_atol: float = float(getattr(settings, "ORACLE_ATOL", 1e-10))
    exclusion_limit: float = float(getattr(settings, "EXCLUSION_LIMIT", 0.5))
    max_workers: int = int(getattr(settings, "MAX_WORKERS", 4))

    def __post_init__(self):
        for name in (
            "det_floor", "hypothesis_floor", "spread_floor", "tolerance",
            "iso_tolerance", "find_iso_tolerance", "oracle_rtol", "oracle_atol",
        ):
            setattr(self, name, validate_positive(getattr(self, name), name))
        if not 0 < self.exclusion_limit <= 1:
            raise ValueError(f"exclusion_limit must lie in (0, 1] (got {self.exclusion_limit})")
        if self.max_workers < 1:
            raise ValueError(f"max_workers must be at least 1 (got {self.max_workers})")


geometry_config = GeometryConfig()
