import math

import numpy as np
import pytest

from app.exceptions.classification_exceptions import (
    FamilySpecError,
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
from app.services.geometry_service import GeometryEngine, MetricField
from app.strategies.family_strategies import (
    CustomMetricStrategy,
    FamilyStrategyFactory,
    GfStrategy,
    GhStrategy,
)
from app.utils.expression_parser import parse
from app.utils.tensors import T, X


@pytest.fixture
def factory():
    return FamilyStrategyFactory(GeometryEngine())


def test_delta_derivatives_of_exponential():
    # f = e^x: Delta = e^x + e^{2x}, so Delta^(k)(0) = 1 + 2^k
    assert delta_derivatives(parse("exp(x)"), (0.0, 0.0, 0.0), 4) == pytest.approx([2.0, 3.0, 5.0, 9.0, 17.0])


def test_h_derivatives_of_cubic():
    assert h_derivatives(parse("t^3"), (2.0, 0.0, 0.0), 4) == pytest.approx([8.0, 12.0, 12.0, 6.0, 0.0])


@pytest.mark.parametrize("kwargs", [
    {"family": MetricFamily.F},
    {"family": MetricFamily.H, "function": parse("x")},
    {"family": MetricFamily.F, "function": parse("x + y")},
    {"family": MetricFamily.CUSTOM},
    {"family": MetricFamily.CUSTOM, "function": parse("x"),
     "components": MetricField.from_entries({"tt": "1", "xy": "1"})},
    {"family": MetricFamily.H, "function": parse("t"),
     "components": MetricField.from_entries({"tt": "1", "xy": "1"})},
])
def test_inconsistent_specs_are_rejected(kwargs):
    with pytest.raises(FamilySpecError):
        FamilySpec(**kwargs)


def test_spec_builds_family_metric():
    spec = FamilySpec(MetricFamily.H, parse("t^2"))
    assert spec.describe() == "t^2.0"
    assert spec.metric().fingerprint() == "tt=1.0;tx=0.0;ty=0.0;xx=-(2.0 * t^2.0);xy=1.0;yy=0.0"


def test_gf_oracle_first_derivative():
    f = parse("exp(x)")
    tensor = gf_oracle(f, (0.0, 0.0, 0.0), 1)
    # -e^{2f} Delta' at x = 0
    assert tensor[T, X, X, T, X] == pytest.approx(-3.0 * math.e ** 2)
    assert tensor[T, X, X, T, T] == 0.0


def test_gh_oracle_second_derivative():
    h = parse("t^3")
    tensor = gh_oracle(h, (1.0, 0.0, 0.0), 2)
    assert tensor[T, X, X, T, T, T] == pytest.approx(0.0)
    assert tensor[T, X, X, T, X, X] == pytest.approx(-18.0)
    assert tensor[X, T, X, T, X, X] == pytest.approx(18.0)


def test_gh_oracle_stops_at_second_order():
    with pytest.raises(OracleUnavailableError) as exc:
        gh_oracle(parse("t^3"), (1.0, 0.0, 0.0), 3)
    assert exc.value.order == 3


def test_family_quantities():
    f_values = family_quantities(FamilySpec(MetricFamily.F, parse("exp(x)")), (0.0, 0.0, 0.0))
    assert set(f_values) == {"f", "delta0", "delta1", "delta2"}
    assert f_values["delta1"] == pytest.approx(3.0)

    h_values = family_quantities(FamilySpec(MetricFamily.H, parse("t^3")), (1.0, 0.0, 0.0))
    assert list(h_values) == ["h0", "h1", "h2", "h3", "h4"]
    assert h_values["h2"] == pytest.approx(6.0)

    custom = FamilySpec(MetricFamily.CUSTOM, components=MetricField.from_entries({"tt": "1", "xy": "1"}))
    assert family_quantities(custom, (0.0, 0.0, 0.0)) == {}


def test_factory_dispatches_on_family(factory):
    assert isinstance(factory.create_strategy(FamilySpec(MetricFamily.F, parse("x^2"))), GfStrategy)
    assert isinstance(factory.create_strategy(FamilySpec(MetricFamily.H, parse("t^3"))), GhStrategy)
    custom = FamilySpec(MetricFamily.CUSTOM, components=MetricField.from_entries({"tt": "-1", "xy": "1"}))
    assert isinstance(factory.create_strategy(custom), CustomMetricStrategy)


def test_gf_strategy_hypothesis_and_sign(factory):
    strategy = factory.create_strategy(FamilySpec(MetricFamily.F, parse("exp(x)")))
    assert strategy.hypothesis_failure((0.0, 0.0, 0.0)) is None
    assert strategy.epsilon((0.0, 0.0, 0.0)) == -1

    flat = factory.create_strategy(FamilySpec(MetricFamily.F, parse("log(x)")))
    assert "Delta" in flat.hypothesis_failure((0.0, 2.0, 0.0))


def test_gh_strategy_hypothesis_and_sign(factory):
    strategy = factory.create_strategy(FamilySpec(MetricFamily.H, parse("t^3")))
    assert strategy.epsilon((1.0, 0.0, 0.0)) == 1
    assert strategy.epsilon((-1.0, 0.0, 0.0)) == -1
    assert "h''" in strategy.hypothesis_failure((0.0, 0.0, 0.0))


def test_gh_invariants_undefined_where_third_derivative_vanishes(factory):
    strategy = factory.create_strategy(FamilySpec(MetricFamily.H, parse("t^2")))
    invariants = strategy.local_invariants((1.0, 0.0, 0.0))
    assert invariants["Xi_h"] == pytest.approx(0.0, abs=1e-12)
    assert math.isnan(invariants["xi_X"])
    assert "xi_T_printed" not in invariants
    assert math.isnan(strategy.diagnostics((1.0, 0.0, 0.0))["xi_T_printed"])


def test_custom_strategy_has_no_normal_form(factory):
    spec = FamilySpec(MetricFamily.CUSTOM, components=MetricField.from_entries({"tt": "exp(2*x)", "xy": "1"}))
    strategy = factory.create_strategy(spec)
    assert strategy.hypothesis_failure((0.0, 0.0, 0.0)) is None
    with pytest.raises(NonCanonicalModelError):
        strategy.adapted_frame((0.0, 0.0, 0.0))
    with pytest.raises(OracleUnavailableError):
        strategy.oracle((0.0, 0.0, 0.0), 0)
    invariants = strategy.local_invariants((0.0, 0.0, 0.0))
    assert invariants["scalar_curvature"] == pytest.approx(0.0, abs=1e-9)
    # this is g_f with f = x, so |R(t,x,x,t)| = e^{2f} Delta = 1
    assert invariants["curvature_max_abs"] == pytest.approx(1.0)


def test_strategy_oracle_matches_family_oracle(factory):
    f = parse("x^2")
    strategy = factory.create_strategy(FamilySpec(MetricFamily.F, f))
    p = (0.0, 0.5, 0.0)
    np.testing.assert_allclose(strategy.oracle(p, 2).components, gf_oracle(f, p, 2).components)
