"""
The two built-in metric families on R^3 with coordinates (t, x, y):

  g_f = e^{2 f(x)} dt^2 + 2 dx dy          Delta = f'' + (f')^2
  g_h = dt^2 - 2 h(t) dx^2 + 2 dx dy

and their closed-form curvature derivatives.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence

import numpy as np

from app.exceptions.classification_exceptions import FamilySpecError, OracleUnavailableError
from app.services.geometry_service import MetricField
from app.utils.expression_parser import Binary, Expr, Number, Unary, eval_jet, to_text, variables
from app.utils.jets import Jet
from app.utils.tensors import T, X, TensorAtPoint, add, curvature_pattern

logger = logging.getLogger(__name__)

GH_ORACLE_MAX_ORDER = 2


class MetricFamily(str, Enum):
    F = "f"
    H = "h"
    CUSTOM = "custom"


FAMILY_VARIABLE = {MetricFamily.F: "x", MetricFamily.H: "t"}


@dataclass(frozen=True)
class FamilySpec:
    family: MetricFamily
    function: Optional[Expr] = None
    components: Optional[MetricField] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.family is MetricFamily.CUSTOM:
            if self.components is None:
                raise FamilySpecError("custom family requires metric components")
            if self.function is not None:
                raise FamilySpecError("custom family takes components, not a defining function")
            return
        if self.function is None:
            raise FamilySpecError(f"family '{self.family.value}' requires a defining function")
        if self.components is not None:
            raise FamilySpecError(f"family '{self.family.value}' is built from its function, not components")
        allowed = FAMILY_VARIABLE[self.family]
        extra = variables(self.function) - {allowed}
        if extra:
            raise FamilySpecError(
                f"function of family '{self.family.value}' may only use '{allowed}', found {sorted(extra)}"
            )

    def metric(self) -> MetricField:
        if self.family is MetricFamily.F:
            return gf_metric(self.function)
        if self.family is MetricFamily.H:
            return gh_metric(self.function)
        return self.components

    def describe(self) -> str:
        if self.function is not None:
            return to_text(self.function)
        return self.components.fingerprint()


def gf_metric(f: Expr) -> MetricField:
    return MetricField.from_entries({
        "tt": Unary("exp", Binary("*", Number(2.0), f)),
        "xy": Number(1.0),
    })


def gh_metric(h: Expr) -> MetricField:
    return MetricField.from_entries({
        "tt": Number(1.0),
        "xx": Unary("neg", Binary("*", Number(2.0), h)),
        "xy": Number(1.0),
    })


def delta_jet(f: Expr, p: Sequence[float], order: int) -> Jet:
    """Delta = f'' + (f')^2 as a jet of the given order."""
    f_jet = eval_jet(f, p, order + 2)
    f1 = f_jet.derivative(X)
    f2 = f1.derivative(X)
    return f2 + f1 * f1


def delta_derivatives(f: Expr, p: Sequence[float], order: int) -> np.ndarray:
    """[Delta, Delta', ..., Delta^(order)] at p."""
    jet = delta_jet(f, p, order)
    return np.array([jet.partial((0, k, 0)) for k in range(order + 1)])


def h_derivatives(h: Expr, p: Sequence[float], order: int) -> np.ndarray:
    """[h, h', ..., h^(order)] at p."""
    jet = eval_jet(h, p, order)
    return np.array([jet.partial((k, 0, 0)) for k in range(order + 1)])


def gf_oracle(f: Expr, p: Sequence[float], k: int) -> TensorAtPoint:
    """
    nabla^k R of g_f: the only nonzero entries are the images of
    (x,t,t,x; x..x) = -e^{2f} Delta^(k).
    """
    delta_k = delta_derivatives(f, p, k)[k]
    value = -math.exp(2.0 * eval_jet(f, p, 0).value) * delta_k
    return curvature_pattern(value, (X,) * k)


def gh_oracle(h: Expr, p: Sequence[float], k: int) -> TensorAtPoint:
    """
    nabla^k R of g_h for k <= 2:
      R(t,x,x,t) = h'',  nabla R(t,x,x,t;t) = h''',
      nabla^2 R(t,x,x,t;t,t) = h'''',  nabla^2 R(t,x,x,t;x,x) = -h' h'''.
    """
    if k > GH_ORACLE_MAX_ORDER:
        raise OracleUnavailableError(MetricFamily.H.value, k)
    d = h_derivatives(h, p, k + 2)
    if k == 0:
        return curvature_pattern(d[2])
    if k == 1:
        return curvature_pattern(d[3], (T,))
    return add(curvature_pattern(d[4], (T, T)), curvature_pattern(-d[1] * d[3], (X, X)))


def family_quantities(spec: FamilySpec, p: Sequence[float], order: int = 2) -> Dict[str, float]:
    """Named derivatives of the defining function used in reports."""
    if spec.family is MetricFamily.F:
        deltas = delta_derivatives(spec.function, p, order)
        out = {"f": eval_jet(spec.function, p, 0).value}
        out.update({f"delta{k}": float(v) for k, v in enumerate(deltas)})
        return out
    if spec.family is MetricFamily.H:
        d = h_derivatives(spec.function, p, max(order, 4))
        return {f"h{k}": float(v) for k, v in enumerate(d[:5])}
    return {}
