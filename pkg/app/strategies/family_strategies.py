import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from app.exceptions.classification_exceptions import (
    FamilySpecError,
    HypothesisViolationError,
    NonCanonicalModelError,
    OracleUnavailableError,
)
from app.families.metric_families import (
    FamilySpec,
    MetricFamily,
    delta_derivatives,
    family_quantities,
    gf_oracle,
    gh_oracle,
    h_derivatives,
)
from app.interfaces.geometry_interfaces import IFamilyStrategy, IGeometryEngine
from app.models.model_spaces import adapted_basis_gf, adapted_basis_gh
from app.services import invariant_service
from app.services.geometry_service import MetricField, scalar_curvature
from app.utils.tensors import Frame, TensorAtPoint
from config.geometry_config import geometry_config

logger = logging.getLogger(__name__)


class FamilyStrategy(IFamilyStrategy):
    name = "base"
    # invariant whose nonconstancy rules out local homogeneity
    homogeneity_invariant: Optional[str] = None
    # lowest order at which SCH_k together with nonconstant homogeneity invariant is contradictory
    sch_contradiction_order: Optional[int] = None
    supports_normal_form = True
    report_notes: Tuple[str, ...] = ()

    def __init__(self, spec: FamilySpec, engine: IGeometryEngine):
        self.spec = spec
        self.engine = engine
        self._metric = spec.metric()

    def metric(self) -> MetricField:
        return self._metric

    def describe(self) -> str:
        return self.spec.describe()

    def quantities(self, p: Sequence[float]) -> Dict[str, float]:
        return family_quantities(self.spec, p)

    def diagnostics(self, p: Sequence[float]) -> Dict[str, float]:
        """Per-point values reported next to the invariants but not invariants themselves."""
        return {}

    def _collect(self, p: Sequence[float], evaluators) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for name, evaluator in evaluators:
            try:
                out[name] = float(evaluator(self.spec.function, p, self.engine))
            except HypothesisViolationError as e:
                logger.debug(f"{name} undefined at {tuple(p)}: {e.reason}")
                out[name] = math.nan
        return out


class GfStrategy(FamilyStrategy):
    """g_f = e^{2f(x)} dt^2 + 2 dx dy."""
    name = MetricFamily.F.value
    homogeneity_invariant = "Xi_f_normalized"

    def oracle(self, p: Sequence[float], k: int) -> TensorAtPoint:
        return gf_oracle(self.spec.function, p, k)

    def adapted_frame(self, p: Sequence[float], scale: float = 1.0) -> Frame:
        return adapted_basis_gf(self.spec.function, p, scale)

    def hypothesis_failure(self, p: Sequence[float]) -> Optional[str]:
        delta = delta_derivatives(self.spec.function, p, 0)[0]
        if abs(delta) < geometry_config.hypothesis_floor:
            return f"Delta = {delta:.3e} vanishes"
        return None

    def epsilon(self, p: Sequence[float]) -> int:
        return -int(np.sign(delta_derivatives(self.spec.function, p, 0)[0]))

    def local_invariants(self, p: Sequence[float]) -> Dict[str, float]:
        return self._collect(p, [
            ("Xi_f", invariant_service.invariant_Xi_f),
            ("Xi_f_normalized", invariant_service.invariant_Xi_f_normalized),
            ("ratio_f", invariant_service.invariant_ratio_f),
        ])


class GhStrategy(FamilyStrategy):
    """g_h = dt^2 - 2 h(t) dx^2 + 2 dx dy."""
    name = MetricFamily.H.value
    homogeneity_invariant = "Xi_h"
    sch_contradiction_order = 2
    report_notes = (
        "Xi_h is the intrinsic (h''')^2/(h'')^2; the cubic form (h''')^3/(h'')^2 found in some derivations "
        "is listed as Xi_h_printed in diagnostics and is not used for verdicts",
    )

    def oracle(self, p: Sequence[float], k: int) -> TensorAtPoint:
        return gh_oracle(self.spec.function, p, k)

    def adapted_frame(self, p: Sequence[float], scale: float = 1.0) -> Frame:
        return adapted_basis_gh(self.spec.function, p, scale)

    def hypothesis_failure(self, p: Sequence[float]) -> Optional[str]:
        h2 = h_derivatives(self.spec.function, p, 2)[2]
        if abs(h2) < geometry_config.hypothesis_floor:
            return f"h'' = {h2:.3e} vanishes"
        return None

    def epsilon(self, p: Sequence[float]) -> int:
        return int(np.sign(h_derivatives(self.spec.function, p, 2)[2]))

    def local_invariants(self, p: Sequence[float]) -> Dict[str, float]:
        out = self._collect(p, [("Xi_h", invariant_service.invariant_Xi_h)])
        try:
            xi = invariant_service.invariants_xi_TX(self.spec.function, p, self.engine)
            out.update({"xi_T": xi.xi_T, "xi_X": xi.xi_X})
        except HypothesisViolationError as e:
            logger.debug(f"xi invariants undefined at {tuple(p)}: {e.reason}")
            out.update({"xi_T": math.nan, "xi_X": math.nan})
        return out

    def diagnostics(self, p: Sequence[float]) -> Dict[str, float]:
        names = (
            "Xi_h_printed", "xi_T_printed", "xi_X_printed",
            "sch1_curvature_relative", "sch1_gradient_relative",
        )
        try:
            d = h_derivatives(self.spec.function, p, 3)
            xi = invariant_service.invariants_xi_TX(self.spec.function, p, self.engine)
            sch1 = invariant_service.sch1_identities_h(self.spec.function, p)
        except HypothesisViolationError as e:
            logger.debug(f"diagnostics undefined at {tuple(p)}: {e.reason}")
            return {name: math.nan for name in names}
        return {
            "Xi_h_printed": float(d[3] ** 3 / d[2] ** 2),
            "xi_T_printed": xi.xi_T_printed,
            "xi_X_printed": xi.xi_X_printed,
            "sch1_curvature_relative": sch1["curvature_relative"],
            "sch1_gradient_relative": sch1["gradient_relative"],
        }


class CustomMetricStrategy(FamilyStrategy):
    """Arbitrary metric components; no adapted basis or closed forms are known."""
    name = MetricFamily.CUSTOM.value
    supports_normal_form = False

    def oracle(self, p: Sequence[float], k: int) -> TensorAtPoint:
        raise OracleUnavailableError(self.name, k)

    def adapted_frame(self, p: Sequence[float], scale: float = 1.0) -> Frame:
        raise NonCanonicalModelError("no adapted basis is known for custom metrics")

    def hypothesis_failure(self, p: Sequence[float]) -> Optional[str]:
        return None

    def epsilon(self, p: Sequence[float]) -> int:
        return 0

    def local_invariants(self, p: Sequence[float]) -> Dict[str, float]:
        curvature = self.engine.riemann(self._metric, p)
        return {
            "scalar_curvature": scalar_curvature(self._metric, p, curvature),
            "curvature_max_abs": curvature.max_abs(),
        }


class FamilyStrategyFactory:
    def __init__(self, engine: IGeometryEngine):
        self.engine = engine
        self.strategies = {
            MetricFamily.F: GfStrategy,
            MetricFamily.H: GhStrategy,
            MetricFamily.CUSTOM: CustomMetricStrategy,
        }

    def create_strategy(self, spec: FamilySpec) -> FamilyStrategy:
        if spec.family not in self.strategies:
            raise FamilySpecError(f"unknown family '{spec.family}'")
        return self.strategies[spec.family](spec, self.engine)
