import math

import numpy as np
import pytest

from app.classifiers.homogeneity_classifier import (
    HomogeneityClassifier,
    SampleSet,
    classify,
    normalize_profile,
    relative_spread,
    slot_label,
)
from app.exceptions.classification_exceptions import EmptySampleSetError, HypothesisViolationError
from app.families.metric_families import FamilySpec, MetricFamily
from app.schemas.schemas import GridAxis, GridSpec, VerdictStatus
from app.services.geometry_service import GeometryEngine, MetricField
from app.strategies.family_strategies import FamilyStrategyFactory
from app.utils.expression_parser import parse
from app.utils.tensors import T, X

TOL = 1e-6


@pytest.fixture
def engine():
    return GeometryEngine()


def _run(engine, family, function, r, axis, lo, hi, count=9):
    spec = FamilySpec(family, parse(function))
    strategy = FamilyStrategyFactory(engine).create_strategy(spec)
    samples = SampleSet.from_grid(GridSpec(axes=[GridAxis(coordinate=axis, minimum=lo, maximum=hi, count=count)]))
    return HomogeneityClassifier(engine).classify(strategy, r, samples, TOL, max_workers=2)


def _status(report, prop):
    return report.verdict(prop).status


def test_sample_set_is_sorted_and_nonempty():
    samples = SampleSet.from_points([(1, 0, 0), (0, 2, 0), (0, 1, 0)])
    assert list(samples) == [(0.0, 1.0, 0.0), (0.0, 2.0, 0.0), (1.0, 0.0, 0.0)]
    assert len(samples) == 3
    with pytest.raises(EmptySampleSetError):
        SampleSet.from_points([])


def test_relative_spread():
    assert relative_spread([1.0, 1.0, 1.0], 1e-12) == 0.0
    assert relative_spread([1.0, 2.0, 3.0], 1e-12) == pytest.approx(1.0)
    assert relative_spread([1e-14, -1e-14], 1e-12, zero=1e-8) == 0.0


def test_slot_labels():
    assert slot_label(()) == "T,X,X,T"
    assert slot_label((T, X)) == "T,X,X,T;T,X"


def test_normalize_profile_fixes_scale_and_lambda():
    normalized = normalize_profile({(T, T): 2.0, (T, X): 0.0, (X, T): 0.0, (X, X): -8.0}, 1e-8)
    assert normalized[(T, T)] == pytest.approx(1.0)
    assert normalized[(X, X)] == pytest.approx(-1.0)
    assert normalized[(T, X)] == 0.0
    assert normalize_profile({(T,): 0.0, (X,): 1e-20}, 1e-8) is None


def test_exponential_f_is_curvature_homogeneous_but_not_homogeneous(engine):
    report = _run(engine, MetricFamily.F, "exp(x)", 3, "x", 0.0, 1.0)
    assert report.epsilon == -1
    assert _status(report, "CH_0") is VerdictStatus.PASS
    for k in (1, 2, 3):
        verdict = report.verdict(f"CH_{k}(1,3)")
        assert verdict.status is VerdictStatus.PASS
        assert verdict.note == f"Delta^(j) checked for j <= {k} only"
    assert _status(report, "SCH_1(1,3)") is VerdictStatus.FAIL
    assert report.not_locally_homogeneous
    summary = next(s for s in report.invariants if s.name == "Xi_f_normalized")
    assert summary.maximum == pytest.approx(1.125)
    assert summary.constant is False
    assert len(report.psi_samples) == 9


def test_cubic_h_is_sch1_but_not_sch2(engine):
    report = _run(engine, MetricFamily.H, "t^3", 2, "t", 1.0, 2.0)
    assert report.epsilon == 1
    assert [v.property for v in report.verdicts] == [
        "CH_0", "CH_1(1,3)", "CH_2(1,3)", "SCH_1(1,3)", "SCH_2(1,3)",
    ]
    assert _status(report, "CH_1(1,3)") is VerdictStatus.PASS
    assert _status(report, "CH_2(1,3)") is VerdictStatus.PASS
    assert _status(report, "SCH_1(1,3)") is VerdictStatus.PASS
    sch2 = report.verdict("SCH_2(1,3)")
    assert sch2.status is VerdictStatus.FAIL
    assert sch2.note == "SCH_2 would contradict non-CH_1"
    assert report.not_locally_homogeneous

    gradient = next(s for s in report.scaled_entries if s.order == 1 and s.slots == "T,X,X,T;T")
    np.testing.assert_allclose(gradient.values, 1.0, rtol=1e-9)
    second = next(s for s in report.scaled_entries if s.order == 2 and s.slots == "T,X,X,T;X,X")
    np.testing.assert_allclose(second.values, -0.5, rtol=1e-9)

    xi_T = next(s for s in report.invariants if s.name == "xi_T")
    assert xi_T.constant is True
    xi_h = next(s for s in report.invariants if s.name == "Xi_h")
    assert xi_h.minimum == pytest.approx(0.25)
    assert xi_h.maximum == pytest.approx(1.0)


def test_exponential_h_passes_everything(engine):
    report = _run(engine, MetricFamily.H, "exp(t)", 2, "t", 0.0, 1.0)
    assert all(v.status is VerdictStatus.PASS for v in report.verdicts)
    assert not report.not_locally_homogeneous
    xi_X = next(s for s in report.invariants if s.name == "xi_X")
    assert xi_X.median == pytest.approx(-1.0)
    assert xi_X.constant is True


def test_homogeneous_h_invariants_are_constant(engine):
    report = _run(engine, MetricFamily.H, "exp(t)", 2, "t", 0.0, 1.0)
    assert {s.name for s in report.invariants} == {"Xi_h", "xi_T", "xi_X"}
    for summary in report.invariants:
        assert summary.relative_spread < 1e-9, summary.name
        assert summary.constant is True


def test_printed_forms_are_diagnostics_not_invariants(engine):
    report = _run(engine, MetricFamily.H, "exp(t)", 2, "t", 0.0, 1.0)
    diagnostics = {s.name: s for s in report.diagnostics}
    assert set(diagnostics) == {
        "Xi_h_printed", "xi_T_printed", "xi_X_printed", "sch1_curvature_relative", "sch1_gradient_relative",
    }
    # h''''/(h'')^2 = e^{-t}
    assert diagnostics["xi_T_printed"].maximum == pytest.approx(1.0)
    assert diagnostics["xi_T_printed"].minimum == pytest.approx(math.exp(-1.0))
    assert diagnostics["sch1_curvature_relative"].maximum <= 1e-10
    assert diagnostics["sch1_gradient_relative"].maximum <= 1e-10
    assert any("(h''')^2/(h'')^2" in note for note in report.notes)


def test_f_reports_carry_no_diagnostics(engine):
    report = _run(engine, MetricFamily.F, "exp(x)", 1, "x", 0.0, 1.0, count=3)
    assert report.diagnostics == []
    assert not any("Xi_h" in note for note in report.notes)


def test_homogeneous_f_passes_scaled_checks(engine):
    m = (1 + 17 ** 0.5) / 2
    report = _run(engine, MetricFamily.F, f"{m!r} * log(x)", 2, "x", 0.5, 2.0)
    assert _status(report, "SCH_1(1,3)") is VerdictStatus.PASS
    assert _status(report, "SCH_2(1,3)") is VerdictStatus.PASS
    assert not report.not_locally_homogeneous
    assert report.verdict("CH_1(1,3)").note == "Delta^(j) checked for j <= 1 only"


def test_sign_change_fails_ch0(engine):
    samples = SampleSet.from_points([(-1.0, 0.0, 0.0), (0.0, 0.0, 0.0), (1.0, 0.0, 0.0)])
    strategy = FamilyStrategyFactory(engine).create_strategy(FamilySpec(MetricFamily.H, parse("t^3")))
    report = HomogeneityClassifier(engine).classify(strategy, 1, samples, TOL)
    assert report.excluded_count == 1
    assert report.exclusions[0].point == [0.0, 0.0, 0.0]
    assert report.epsilon is None
    assert all(v.status is VerdictStatus.FAIL for v in report.verdicts)


def test_mostly_excluded_sample_reports_violated_hypothesis(engine):
    samples = SampleSet.from_points([(0.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)])
    strategy = FamilyStrategyFactory(engine).create_strategy(FamilySpec(MetricFamily.H, parse("t^3")))
    report = HomogeneityClassifier(engine).classify(strategy, 1, samples, TOL)
    assert report.excluded_count == 2
    assert {v.status for v in report.verdicts} == {VerdictStatus.HYPOTHESIS_VIOLATED}


def test_flat_family_member_is_vacuous(engine):
    report = _run(engine, MetricFamily.F, "log(x)", 2, "x", 1.0, 2.0, count=4)
    assert report.degenerate
    assert {v.status for v in report.verdicts} == {VerdictStatus.VACUOUS_PASS}
    assert report.excluded_count == 4


def test_domain_errors_everywhere_raise(engine):
    with pytest.raises(HypothesisViolationError):
        _run(engine, MetricFamily.F, "log(x)", 1, "x", -2.0, -1.0, count=3)


def test_bare_metric_is_classified_as_custom(engine):
    g = MetricField.from_entries({"tt": "exp(2*x)", "xy": "1"})
    report = classify(g, 1, SampleSet.from_points([(0.0, 0.0, 0.0), (0.0, 0.5, 0.0)]), engine=engine)
    assert report.family == "custom"
    assert {v.status for v in report.verdicts} == {VerdictStatus.UNDETERMINED}
    assert {s.name for s in report.invariants} == {"curvature_max_abs", "scalar_curvature"}


def test_flat_custom_metric_is_degenerate(engine):
    g = MetricField.from_entries({"tt": "1", "xy": "1"})
    report = classify(g, 2, SampleSet.from_points([(0.0, 0.0, 0.0)]), engine=engine)
    assert report.degenerate


def test_module_level_classify_accepts_family_spec(engine):
    spec = FamilySpec(MetricFamily.H, parse("exp(t)"))
    report = classify(spec, 1, SampleSet.from_points([(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)]), tol=1e-6, engine=engine)
    assert report.family == "h"
    assert report.function == "exp(t)"
    assert _status(report, "SCH_1(1,3)") is VerdictStatus.PASS
