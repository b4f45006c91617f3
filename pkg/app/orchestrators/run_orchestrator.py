import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.classifiers.homogeneity_classifier import SampleSet
from app.exceptions.classification_exceptions import HypothesisViolationError, OracleUnavailableError
from app.exceptions.expression_exceptions import ExpressionDomainError
from app.exceptions.geometry_exceptions import GeometryError
from app.families.metric_families import FamilySpec
from app.interfaces.geometry_interfaces import IGeometryEngine, IHomogeneityClassifier, IRunOrchestrator
from app.observability.metrics import CHECK_FAILURES, POINTS_EVALUATED, POINTS_EXCLUDED
from app.observability.tracing import tracer
from app.schemas.schemas import (
    Exclusion,
    HomogeneityReport,
    IdentityCheck,
    InvariantRow,
    InvariantTable,
    OrderCheck,
    RunConfig,
    VerificationReport,
)
from app.services.geometry_service import (
    MetricField,
    curvature_symmetry_defects,
    curvature_unit_scale,
    metric_compatibility_defect,
    second_bianchi_defect,
)
from app.strategies.family_strategies import FamilyStrategy, FamilyStrategyFactory
from app.utils.expression_parser import parse
from app.utils.tensors import TensorAtPoint
from config.geometry_config import GeometryConfig, geometry_config

Point = Tuple[float, float, float]
IDENTITY_NAMES = (
    "antisymmetry_first_pair",
    "antisymmetry_second_pair",
    "pair_symmetry",
    "first_bianchi",
    "second_bianchi",
    "metric_compatibility",
)


def build_family_spec(config: RunConfig) -> FamilySpec:
    """Parse the function text or the component entries of a run config."""
    function = parse(config.function) if config.function else None
    components = MetricField.from_entries(config.components) if config.components else None
    return FamilySpec(config.family, function=function, components=components)


def sliced_symmetry_defect(tensor: TensorAtPoint) -> float:
    """Largest algebraic curvature-symmetry defect over all derivative slots of nabla^k R."""
    components = tensor.components.reshape((3, 3, 3, 3, -1))
    worst = 0.0
    for index in range(components.shape[-1]):
        defects = curvature_symmetry_defects(TensorAtPoint.covariant(components[..., index]))
        worst = max(worst, max(defects.values()))
    return worst


def compare_to_oracle(
    actual: np.ndarray,
    expected: np.ndarray,
    unit_scale: float,
    rtol: float,
    atol: float,
) -> Tuple[float, float, bool]:
    """
    (max abs deviation, max relative deviation on nonzero entries, passed).
    An entry passes within rtol of the closed form or within atol of it after
    scaling by the larger of the closed form and the metric data.
    """
    deviation = np.abs(actual - expected)
    zero_tol = atol * max(1.0, float(np.max(np.abs(expected))), unit_scale)
    nonzero = np.abs(expected) > zero_tol
    relative = deviation[nonzero] / np.abs(expected[nonzero])
    max_rel = float(relative.max()) if relative.size else 0.0
    passed = bool(np.all(deviation <= np.maximum(zero_tol, rtol * np.abs(expected))))
    return float(deviation.max()), max_rel, passed


@dataclass
class PointVerification:
    point: Point
    reason: Optional[str] = None
    # per order: (max abs deviation, max rel deviation, passed, reference)
    orders: List[Tuple[float, float, bool, str]] = field(default_factory=list)
    identities: Dict[str, float] = field(default_factory=dict)
    scale: float = 1.0


class RunOrchestrator(IRunOrchestrator):
    """
    Runs verify / classify / invariants over the grid of a RunConfig. Points
    are evaluated on a worker pool; results are consumed in sample order so
    reports do not depend on scheduling.
    """

    def __init__(
        self,
        engine: IGeometryEngine,
        strategy_factory: FamilyStrategyFactory,
        classifier: IHomogeneityClassifier,
        logger: logging.Logger,
        config: GeometryConfig = geometry_config,
    ):
        self.engine = engine
        self.strategy_factory = strategy_factory
        self.classifier = classifier
        self.logger = logger
        self.config = config

    def _strategy(self, config: RunConfig) -> FamilyStrategy:
        return self.strategy_factory.create_strategy(build_family_spec(config))

    def _map(self, config: RunConfig, fn, points: Sequence[Point]) -> list:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            return list(executor.map(fn, points))

    def _record_exclusions(self, command: str, exclusions: List[Exclusion], total: int) -> None:
        for exclusion in exclusions:
            POINTS_EXCLUDED.labels(command, "domain").inc()
            self.logger.warning(f"{command}: excluded {tuple(exclusion.point)}: {exclusion.reason}")
        if total and len(exclusions) == total:
            raise HypothesisViolationError(f"no admissible sample point among {total}")

    # verify

    def _verify_point(self, strategy: FamilyStrategy, r: int, p: Point) -> PointVerification:
        result = PointVerification(point=p)
        metric = strategy.metric()
        try:
            series = self.engine.nabla_riemann_series(metric, p, max(r, 1))
            compatibility = metric_compatibility_defect(metric, p)
        except (ExpressionDomainError, GeometryError) as e:
            result.reason = e.message
            return result

        result.scale = max(1.0, series[0].max_abs())
        result.identities = dict(curvature_symmetry_defects(series[0]))
        result.identities["second_bianchi"] = second_bianchi_defect(series[1])
        result.identities["metric_compatibility"] = compatibility

        rtol, atol = self.config.oracle_rtol, self.config.oracle_atol
        for k in range(r + 1):
            try:
                expected = strategy.oracle(p, k).components
                unit_scale = curvature_unit_scale(metric, p, k)
            except OracleUnavailableError:
                defect = sliced_symmetry_defect(series[k])
                result.orders.append((defect, 0.0, defect <= rtol * max(1.0, series[k].max_abs()), "identities"))
                continue
            except (ExpressionDomainError, GeometryError) as e:
                result.reason = e.message
                return result
            result.orders.append(
                compare_to_oracle(series[k].components, expected, unit_scale, rtol, atol) + ("oracle",)
            )
        return result

    def verify(self, config: RunConfig) -> VerificationReport:
        with tracer.start_as_current_span("verify") as span:
            strategy = self._strategy(config)
            samples = SampleSet.from_grid(config.grid)
            span.set_attribute("family", strategy.name)
            span.set_attribute("points", len(samples))
            self.logger.info(f"Verifying family {strategy.name} to order {config.order} on {len(samples)} points")

            results = self._map(config, lambda p: self._verify_point(strategy, config.order, p), samples.points)
            POINTS_EVALUATED.labels("verify", strategy.name).inc(len(results))
            exclusions = [Exclusion(point=list(v.point), reason=v.reason) for v in results if v.reason]
            self._record_exclusions("verify", exclusions, len(results))
            included = [v for v in results if v.reason is None]

            checks = []
            for k in range(config.order + 1):
                rows = [v.orders[k] for v in included]
                reference = rows[0][3]
                passed = all(row[2] for row in rows)
                note = None
                if reference == "identities":
                    note = f"no closed form at order {k}; checked curvature symmetries of every derivative slot"
                    self.logger.warning(f"verify: family {strategy.name} order {k} falls back to identities")
                if not passed:
                    CHECK_FAILURES.labels(f"order_{k}").inc()
                checks.append(OrderCheck(
                    order=k,
                    reference=reference,
                    compared_points=len(rows),
                    max_abs_deviation=max(row[0] for row in rows),
                    max_rel_deviation=max(row[1] for row in rows),
                    passed=passed,
                    note=note,
                ))

            identities = []
            for name in IDENTITY_NAMES:
                worst = max(v.identities[name] for v in included)
                scaled = max(v.identities[name] / v.scale for v in included)
                passed = scaled <= self.config.oracle_rtol
                if not passed:
                    CHECK_FAILURES.labels(name).inc()
                identities.append(IdentityCheck(name=name, max_defect=worst, passed=passed))

            report = VerificationReport(
                family=strategy.name,
                function=strategy.describe(),
                order=config.order,
                checks=checks,
                identities=identities,
                exclusions=exclusions,
                passed=all(c.passed for c in checks) and all(i.passed for i in identities),
            )
            span.set_attribute("passed", report.passed)
            self.logger.info(f"Verification {'passed' if report.passed else 'failed'} for family {strategy.name}")
            return report

    # classify

    def classify(self, config: RunConfig) -> HomogeneityReport:
        with tracer.start_as_current_span("classify") as span:
            strategy = self._strategy(config)
            samples = SampleSet.from_grid(config.grid)
            span.set_attribute("family", strategy.name)
            span.set_attribute("points", len(samples))
            self.logger.info(f"Classifying family {strategy.name} to order {config.order} on {len(samples)} points")
            report = self.classifier.classify(strategy, config.order, samples, config.tolerance,
                                              max_workers=config.workers)
            POINTS_EVALUATED.labels("classify", strategy.name).inc(len(samples))
            return report

    # invariants

    def _invariant_row(self, strategy: FamilyStrategy, p: Point) -> InvariantRow:
        try:
            quantities = strategy.quantities(p)
            invariants = strategy.local_invariants(p)
            diagnostics = strategy.diagnostics(p)
        except (ExpressionDomainError, GeometryError) as e:
            return InvariantRow(point=list(p), excluded=True, reason=e.message)
        reason = strategy.hypothesis_failure(p)
        if reason is None and strategy.supports_normal_form:
            quantities["epsilon"] = float(strategy.epsilon(p))
        return InvariantRow(
            point=list(p),
            reason=reason,
            quantities=quantities,
            invariants={name: (value if math.isfinite(value) else None) for name, value in sorted(invariants.items())},
            diagnostics={name: (value if math.isfinite(value) else None) for name, value in sorted(diagnostics.items())},
        )

    def invariants(self, config: RunConfig) -> InvariantTable:
        with tracer.start_as_current_span("invariants") as span:
            strategy = self._strategy(config)
            samples = SampleSet.from_grid(config.grid)
            span.set_attribute("family", strategy.name)
            rows = self._map(config, lambda p: self._invariant_row(strategy, p), samples.points)
            POINTS_EVALUATED.labels("invariants", strategy.name).inc(len(rows))
            exclusions = [Exclusion(point=row.point, reason=row.reason) for row in rows if row.excluded]
            self._record_exclusions("invariants", exclusions, len(rows))
            self.logger.info(f"Tabulated invariants of family {strategy.name} at {len(rows)} points")
            return InvariantTable(
                family=strategy.name,
                function=strategy.describe(),
                rows=rows,
                exclusions=exclusions,
            )
