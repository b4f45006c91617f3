import math

import numpy as np
import pytest

from app.exceptions.classification_exceptions import NonCanonicalModelError
from app.families.metric_families import delta_derivatives, gf_metric, gh_metric
from app.models.model_spaces import (
    CANONICAL_PHI,
    ModelSpace,
    adapted_basis_gf,
    adapted_basis_gh,
    build_model,
    canonical_curvature_model,
    canonical_gradient_model,
    canonical_phi,
    is_canonical_curvature_model,
    is_canonical_gradient_model,
    require_canonical_curvature_model,
)
from app.utils.expression_parser import parse
from app.utils.tensors import T, X, Frame, curvature_pattern

CANONICAL_TOL = 1e-10


@pytest.mark.parametrize("f, x0, epsilon", [
    ("exp(x)", 0.0, -1.0),
    ("x^2", 1.0, -1.0),
    ("-x^2", 0.0, 1.0),
])
def test_gf_normalizes_to_curvature_model(f, x0, epsilon):
    expr = parse(f)
    p = (0.0, x0, 0.0)
    delta = delta_derivatives(expr, p, 0)[0]
    model = build_model(gf_metric(expr), p, 0, adapted_basis_gf(expr, p, abs(delta) ** -0.5))
    assert is_canonical_curvature_model(model, CANONICAL_TOL)
    assert require_canonical_curvature_model(model, CANONICAL_TOL) == pytest.approx(epsilon)
    assert model.allclose(canonical_curvature_model(epsilon), CANONICAL_TOL)


@pytest.mark.parametrize("h, t0, epsilon", [
    ("t^3", 1.0, 1.0),
    ("t^3", -2.0, -1.0),
    ("exp(t)", 0.5, 1.0),
])
def test_gh_normalizes_to_curvature_model(h, t0, epsilon):
    expr = parse(h)
    p = (t0, 0.3, -0.4)
    h2 = abs(6.0 * t0) if h == "t^3" else math.exp(t0)
    model = build_model(gh_metric(expr), p, 0, adapted_basis_gh(expr, p, h2 ** -0.5))
    assert is_canonical_curvature_model(model, CANONICAL_TOL)
    assert model.entry(0, (T, X, X, T)) == pytest.approx(epsilon)


def test_exponential_h_reaches_gradient_model():
    # h'' = h''' = e^t, so lam = e^{-t/2} normalizes both entries
    h = parse("exp(t)")
    p = (0.4, 0.0, 0.0)
    model = build_model(gh_metric(h), p, 1, adapted_basis_gh(h, p, math.exp(-0.2)))
    assert is_canonical_gradient_model(model, CANONICAL_TOL)
    assert model.allclose(canonical_gradient_model(1.0, 1.0), CANONICAL_TOL)


def test_gf_gradient_lies_along_x():
    f = parse("exp(x)")
    p = (0.0, 0.0, 0.0)
    model = build_model(gf_metric(f), p, 1, adapted_basis_gf(f, p, 2 ** -0.5))
    assert is_canonical_curvature_model(model.truncate(0), CANONICAL_TOL)
    assert not is_canonical_gradient_model(model, CANONICAL_TOL)
    # nabla R(T,X,X,T;X) = -lam^3 Delta'
    assert model.entry(1, (T, X, X, T, X)) == pytest.approx(-3.0 * 2 ** -1.5)


def test_coordinate_basis_is_not_canonical():
    f = parse("x")
    p = (0.0, 1.0, 0.0)
    model = build_model(gf_metric(f), p, 0, Frame.identity())
    assert not is_canonical_curvature_model(model)
    with pytest.raises(NonCanonicalModelError):
        require_canonical_curvature_model(model)


def test_flat_curvature_is_not_canonical():
    flat = ModelSpace(0, canonical_phi(), (curvature_pattern(0.0),))
    assert not is_canonical_curvature_model(flat)


def test_model_space_shape_checks():
    with pytest.raises(ValueError):
        ModelSpace(1, canonical_phi(), (curvature_pattern(1.0),))
    with pytest.raises(ValueError):
        ModelSpace(0, canonical_phi(), (curvature_pattern(1.0, (T,)),))
    with pytest.raises(ValueError):
        canonical_curvature_model(1.0).truncate(1)


def test_pullback_and_scale():
    model = canonical_gradient_model(-1.0, 1.0)
    assert model.scale() == 1.0
    same = model.pullback(Frame.identity())
    assert same.allclose(model, 0.0)
    np.testing.assert_array_equal(model.truncate(0).phi.components, CANONICAL_PHI)
    assert model.truncate(0).r == 0
