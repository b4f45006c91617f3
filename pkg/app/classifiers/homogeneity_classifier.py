"""
Curvature-homogeneity evidence for a metric family over a finite sample.

Entries of nabla^k R are read on the adapted basis family (T, lam X, Y/lam)
where an entry with n X-slots scales as lam^n. The checks are:

  CH_0         sign of R(T,X,X,T) is constant
  CH_k(1,3)    the order-k profile (all (T,X,X,T;tail) entries, tail in
               {T,X}^k) normalized by one lam and one overall scale is nonzero
               and constant; cumulative in k
  SCH_k(1,3)   with psi = lam^2 |R(T,X,X,T)|, all entries scaled by
               psi^{(j+2)/2} for j <= k are constant, lam fixed by the
               lowest entry whose scaling depends on it
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.exceptions.classification_exceptions import EmptySampleSetError, HypothesisViolationError
from app.exceptions.expression_exceptions import ExpressionDomainError
from app.exceptions.geometry_exceptions import GeometryError
from app.families.metric_families import FamilySpec, MetricFamily
from app.interfaces.geometry_interfaces import IGeometryEngine, IHomogeneityClassifier
from app.observability.metrics import POINTS_EXCLUDED
from app.schemas.schemas import (
    Exclusion,
    GridSpec,
    HomogeneityReport,
    InvariantSummary,
    ScaledEntrySeries,
    Verdict,
    VerdictStatus,
)
from app.services.geometry_service import MetricField, default_engine
from app.strategies.family_strategies import FamilyStrategy, FamilyStrategyFactory
from app.utils.tensors import T, X, TensorAtPoint, add, curvature_pattern, pullback
from config.geometry_config import GeometryConfig, geometry_config

logger = logging.getLogger(__name__)

Point = Tuple[float, float, float]
Tail = Tuple[int, ...]
HEAD = (T, X, X, T)
SLOT_NAMES = {T: "T", X: "X"}


@dataclass(frozen=True)
class SampleSet:
    """Sample points in lexicographic order."""
    points: Tuple[Point, ...]

    def __post_init__(self):
        if not self.points:
            raise EmptySampleSetError()
        object.__setattr__(self, "points", tuple(sorted(tuple(float(c) for c in p) for p in self.points)))

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "SampleSet":
        return cls(tuple(tuple(p) for p in points))

    @classmethod
    def from_grid(cls, grid: GridSpec) -> "SampleSet":
        return cls(tuple(grid.points()))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points)


def relative_spread(values: Sequence[float], floor: float, zero: float = 0.0) -> float:
    """(max - min) / max(|median|, floor); 0 when every value is within ``zero`` of 0."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or np.max(np.abs(arr)) <= zero:
        return 0.0
    return float((arr.max() - arr.min()) / max(abs(float(np.median(arr))), floor))


def x_slots(tail: Tail) -> int:
    return 2 + sum(1 for slot in tail if slot == X)


def slot_label(tail: Tail) -> str:
    head = ",".join(SLOT_NAMES[s] for s in HEAD)
    if not tail:
        return head
    return head + ";" + ",".join(SLOT_NAMES[s] for s in tail)


def normalize_profile(profile: Dict[Tail, float], floor: float) -> Optional[Dict[Tail, float]]:
    """
    Scale a single-order profile by lam^{n_X} / psi_k so that the first
    nonzero entry and the first nonzero entry with a different n_X both have
    magnitude one. None when the profile vanishes.
    """
    magnitude = max((abs(v) for v in profile.values()), default=0.0)
    threshold = floor * max(1.0, magnitude)
    nonzero = [(tail, v) for tail, v in sorted(profile.items()) if abs(v) > threshold]
    if not nonzero:
        return None
    ref_tail, ref_value = nonzero[0]
    lam = 1.0
    other = next(((t, v) for t, v in nonzero if x_slots(t) != x_slots(ref_tail)), None)
    if other is not None:
        exponent = x_slots(ref_tail) - x_slots(other[0])
        lam = (abs(other[1]) / abs(ref_value)) ** (1.0 / exponent)
    psi_k = abs(ref_value) * lam ** x_slots(ref_tail)
    return {
        tail: (v * lam ** x_slots(tail) / psi_k if abs(v) > threshold else 0.0)
        for tail, v in profile.items()
    }


@dataclass
class PointEvaluation:
    point: Point
    reason: Optional[str] = None
    curvature_norm: Optional[float] = None
    profiles: List[Dict[Tail, float]] = field(default_factory=list)
    pattern_residual: float = 0.0
    invariants: Dict[str, float] = field(default_factory=dict)
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def included(self) -> bool:
        return self.reason is None


class HomogeneityClassifier(IHomogeneityClassifier):
    def __init__(self, engine: IGeometryEngine, config: GeometryConfig = geometry_config):
        self.engine = engine
        self.config = config

    def evaluate_point(self, strategy: FamilyStrategy, r: int, p: Point) -> PointEvaluation:
        evaluation = PointEvaluation(point=p)
        try:
            series = self.engine.nabla_riemann_series(strategy.metric(), p, r)
        except (ExpressionDomainError, GeometryError) as e:
            evaluation.reason = e.message
            return evaluation
        evaluation.curvature_norm = series[0].max_abs()
        if not strategy.supports_normal_form:
            evaluation.invariants = strategy.local_invariants(p)
            return evaluation
        evaluation.reason = strategy.hypothesis_failure(p)
        if evaluation.reason is not None:
            return evaluation
        frame = strategy.adapted_frame(p, 1.0)
        adapted = [pullback(tensor, frame) for tensor in series]
        residual = 0.0
        for k, tensor in enumerate(adapted):
            profile = {tail: float(tensor.components[HEAD + tail]) for tail in product((T, X), repeat=k)}
            evaluation.profiles.append(profile)
            rebuilt = TensorAtPoint.covariant(np.zeros(tensor.components.shape))
            for tail, value in profile.items():
                rebuilt = add(rebuilt, curvature_pattern(value, tail))
            residual = max(residual, float(np.max(np.abs(tensor.components - rebuilt.components))))
        evaluation.pattern_residual = residual
        evaluation.invariants = strategy.local_invariants(p)
        evaluation.diagnostics = strategy.diagnostics(p)
        return evaluation

    def classify(
        self, strategy: FamilyStrategy, r: int, samples: SampleSet, tol: float, max_workers: Optional[int] = None
    ) -> HomogeneityReport:
        with ThreadPoolExecutor(max_workers=max_workers or self.config.max_workers) as executor:
            evaluations = list(executor.map(lambda p: self.evaluate_point(strategy, r, p), samples.points))
        return self.assemble(strategy, r, evaluations, tol)

    def assemble(self, strategy: FamilyStrategy, r: int, evaluations: List[PointEvaluation], tol: float) -> HomogeneityReport:
        floor = self.config.hypothesis_floor
        exclusions = [Exclusion(point=list(e.point), reason=e.reason) for e in evaluations if not e.included]
        for exclusion in exclusions:
            POINTS_EXCLUDED.labels("classify", "hypothesis").inc()
            logger.warning(f"Excluded {tuple(exclusion.point)}: {exclusion.reason}")
        included = [e for e in evaluations if e.included]
        report_args = dict(
            family=strategy.name,
            function=strategy.describe(),
            order=r,
            tolerance=tol,
            sample_count=len(evaluations),
            excluded_count=len(exclusions),
        )
        properties = self._properties(r)

        evaluated = [e for e in evaluations if e.curvature_norm is not None]
        if evaluated and all(e.curvature_norm < floor for e in evaluated):
            return HomogeneityReport(
                **report_args,
                degenerate=True,
                verdicts=[Verdict(property=name, order=k, status=VerdictStatus.VACUOUS_PASS, note="zero curvature")
                          for name, k in properties],
                exclusions=exclusions,
                notes=["curvature vanishes at every sample point"],
            )
        if not included:
            raise HypothesisViolationError("hypothesis fails at every sample point")

        invariants = self._summaries(included, tol)
        if not strategy.supports_normal_form:
            return HomogeneityReport(
                **report_args,
                verdicts=[Verdict(property=name, order=k, status=VerdictStatus.UNDETERMINED,
                                  note="no adapted basis for custom metrics")
                          for name, k in properties],
                invariants=invariants,
                exclusions=exclusions,
                notes=["custom metric: only scalar curvature evidence is reported"],
            )

        if len(exclusions) > self.config.exclusion_limit * len(evaluations):
            return HomogeneityReport(
                **report_args,
                verdicts=[Verdict(property=name, order=k, status=VerdictStatus.HYPOTHESIS_VIOLATED,
                                  note=f"{len(exclusions)} of {len(evaluations)} points excluded")
                          for name, k in properties],
                invariants=invariants,
                exclusions=exclusions,
            )

        notes: List[str] = list(strategy.report_notes)
        residual = max(e.pattern_residual for e in included)
        if residual > tol * max(1.0, max(e.curvature_norm for e in included)):
            notes.append(f"curvature leaves the (T,X,X,T;tail) pattern (residual {residual:.3e})")

        signs = {int(np.sign(e.profiles[0][()])) for e in included}
        ch0 = len(signs) == 1
        epsilon = signs.pop() if ch0 else None

        ch_orders = [ch0] + [self._profile_constant(included, k, tol) for k in range(1, r + 1)]
        scaled, sch_orders = self._scaled_entries(included, r, tol)

        not_homogeneous = False
        homogeneity_summary = next((s for s in invariants if s.name == strategy.homogeneity_invariant), None)
        if homogeneity_summary is not None and homogeneity_summary.constant is False:
            not_homogeneous = True
            notes.append(f"{homogeneity_summary.name} is not constant: not locally homogeneous")

        verdicts = [Verdict(property="CH_0", order=0, status=VerdictStatus.PASS if ch0 else VerdictStatus.FAIL)]
        ch_status: List[bool] = [ch0]
        for k in range(1, r + 1):
            ch_status.append(ch_status[-1] and ch_orders[k])
        sch_status: List[bool] = [ch0]
        sch_notes: Dict[int, str] = {}
        for k in range(1, r + 1):
            passed = sch_status[-1] and sch_orders[k]
            if (
                passed
                and not_homogeneous
                and strategy.sch_contradiction_order is not None
                and k >= strategy.sch_contradiction_order
            ):
                passed = False
                sch_notes[k] = f"SCH_{k} would contradict non-CH_1"
            sch_status.append(passed)
        for k in range(1, r + 1):
            ch_note = None
            if sch_status[k] and not ch_status[k]:
                ch_status[k] = True
                ch_note = f"implied by SCH_{k}(1,3)"
            if strategy.name == MetricFamily.F.value and ch_status[k]:
                ch_note = ch_note or f"Delta^(j) checked for j <= {k} only"
            verdicts.append(Verdict(property=f"CH_{k}(1,3)", order=k,
                                    status=VerdictStatus.PASS if ch_status[k] else VerdictStatus.FAIL, note=ch_note))
        for k in range(1, r + 1):
            verdicts.append(Verdict(property=f"SCH_{k}(1,3)", order=k,
                                    status=VerdictStatus.PASS if sch_status[k] else VerdictStatus.FAIL,
                                    note=sch_notes.get(k)))

        logger.info(
            f"Classified family {strategy.name} over {len(evaluations)} points: "
            + ", ".join(f"{v.property}={v.status.value}" for v in verdicts)
        )
        return HomogeneityReport(
            **report_args,
            epsilon=epsilon,
            not_locally_homogeneous=not_homogeneous,
            verdicts=verdicts,
            invariants=invariants,
            diagnostics=self._summaries(included, tol, "diagnostics"),
            scaled_entries=scaled,
            psi_samples=[abs(e.profiles[0][()]) for e in included],
            exclusions=exclusions,
            notes=notes,
        )

    @staticmethod
    def _properties(r: int) -> List[Tuple[str, int]]:
        return (
            [("CH_0", 0)]
            + [(f"CH_{k}(1,3)", k) for k in range(1, r + 1)]
            + [(f"SCH_{k}(1,3)", k) for k in range(1, r + 1)]
        )

    def _summaries(
        self, included: List[PointEvaluation], tol: float, source: str = "invariants"
    ) -> List[InvariantSummary]:
        per_point = [getattr(e, source) for e in included]
        names = sorted({name for point_values in per_point for name in point_values})
        summaries = []
        for name in names:
            raw = [point_values.get(name, math.nan) for point_values in per_point]
            finite = [v for v in raw if math.isfinite(v)]
            values = [v if math.isfinite(v) else None for v in raw]
            if not finite:
                summaries.append(InvariantSummary(name=name, values=values))
                continue
            spread = relative_spread(finite, self.config.spread_floor, self.config.hypothesis_floor)
            summaries.append(InvariantSummary(
                name=name,
                values=values,
                minimum=min(finite),
                maximum=max(finite),
                median=float(np.median(finite)),
                relative_spread=spread,
                constant=spread <= tol and len(finite) == len(raw),
            ))
        return summaries

    def _profile_constant(self, included: List[PointEvaluation], k: int, tol: float) -> bool:
        normalized = [normalize_profile(e.profiles[k], self.config.hypothesis_floor) for e in included]
        if any(n is None for n in normalized):
            return False
        for tail in normalized[0]:
            values = [n[tail] for n in normalized]
            if max(values) - min(values) > tol:
                return False
        return True

    def _scaled_entries(
        self, included: List[PointEvaluation], r: int, tol: float
    ) -> Tuple[List[ScaledEntrySeries], List[bool]]:
        floor = self.config.hypothesis_floor
        determining: Optional[Tuple[int, Tail]] = None
        for k in range(1, r + 1):
            for tail in sorted(included[0].profiles[k]):
                if x_slots(tail) == k + 2:
                    continue
                if all(abs(e.profiles[k][tail]) > floor for e in included):
                    determining = (k, tail)
                    break
            if determining:
                break

        rows: List[Optional[Dict[Tuple[int, Tail], float]]] = []
        for e in included:
            e0 = abs(e.profiles[0][()])
            lam = 1.0
            if determining is not None:
                k, tail = determining
                value = abs(e.profiles[k][tail])
                lam = (e0 ** ((k + 2) / 2.0) / value) ** (1.0 / (x_slots(tail) - k - 2))
            psi = lam ** 2 * e0
            rows.append({
                (k, tail): value * lam ** x_slots(tail) / psi ** ((k + 2) / 2.0)
                for k in range(1, r + 1)
                for tail, value in e.profiles[k].items()
            })

        series: List[ScaledEntrySeries] = []
        constant_by_order = [True] * (r + 1)
        for k in range(1, r + 1):
            for tail in sorted(included[0].profiles[k]):
                values = [row[(k, tail)] for row in rows]
                if all(abs(v) <= floor for v in values):
                    continue
                series.append(ScaledEntrySeries(order=k, slots=slot_label(tail), values=values))
                if relative_spread(values, self.config.spread_floor) > tol:
                    constant_by_order[k] = False
        return series, constant_by_order


def classify(
    g: Union[FamilySpec, MetricField],
    r: int,
    samples: SampleSet,
    tol: Optional[float] = None,
    engine: Optional[IGeometryEngine] = None,
) -> HomogeneityReport:
    """Classify a family (or a bare metric, treated as custom) over ``samples``."""
    engine = engine or default_engine()
    spec = g if isinstance(g, FamilySpec) else FamilySpec(MetricFamily.CUSTOM, components=g)
    strategy = FamilyStrategyFactory(engine).create_strategy(spec)
    tol = tol if tol is not None else geometry_config.tolerance
    return HomogeneityClassifier(engine).classify(strategy, r, samples, tol)
