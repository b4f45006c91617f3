"""
Scalar invariants of the built-in families computed intrinsically: each value
is read off a model space built in an adapted basis, never from the closed
forms directly. The closed forms they should agree with are given alongside.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from app.exceptions.classification_exceptions import HypothesisViolationError
from app.families.metric_families import delta_derivatives, gf_metric, gh_metric, h_derivatives
from app.interfaces.geometry_interfaces import IGeometryEngine
from app.models.model_spaces import adapted_basis_gf, adapted_basis_gh, build_model
from app.utils.expression_parser import Expr
from app.utils.tensors import T, X
from config.geometry_config import geometry_config

logger = logging.getLogger(__name__)

CURVATURE_ENTRY = (T, X, X, T)


def _require_nonzero(value: float, label: str, p: Sequence[float], floor: Optional[float] = None) -> None:
    floor = floor if floor is not None else geometry_config.hypothesis_floor
    if abs(value) < floor:
        raise HypothesisViolationError(f"{label} = {value:.3e} vanishes", p)


def invariant_Xi_f(f: Expr, p: Sequence[float], engine: Optional[IGeometryEngine] = None) -> float:
    """
    Squared nabla R(T,X,X,T;X) on the unit adapted basis T = e^{-f} d_t,
    X = d_x, Y = d_y. Equals (Delta')^2.
    """
    delta = delta_derivatives(f, p, 0)[0]
    _require_nonzero(delta, "Delta", p)
    model = build_model(gf_metric(f), p, 1, adapted_basis_gf(f, p, 1.0), engine)
    return model.entry(1, CURVATURE_ENTRY + (X,)) ** 2


def invariant_Xi_f_normalized(f: Expr, p: Sequence[float], engine: Optional[IGeometryEngine] = None) -> float:
    """
    Squared nabla R(T,X,X,T;X) on the basis with |R(T,X,X,T)| = 1
    (lam = |Delta|^{-1/2}). Equals (Delta')^2 / |Delta|^3.
    """
    delta = delta_derivatives(f, p, 0)[0]
    _require_nonzero(delta, "Delta", p)
    lam = abs(delta) ** -0.5
    model = build_model(gf_metric(f), p, 1, adapted_basis_gf(f, p, lam), engine)
    return model.entry(1, CURVATURE_ENTRY + (X,)) ** 2


def invariant_ratio_f(f: Expr, p: Sequence[float], engine: Optional[IGeometryEngine] = None) -> float:
    """nabla R(T,X,X,T;X)^2 / R(T,X,X,T)^3, independent of lam. Equals (Delta')^2 / (-Delta)^3."""
    delta = delta_derivatives(f, p, 0)[0]
    _require_nonzero(delta, "Delta", p)
    model = build_model(gf_metric(f), p, 1, adapted_basis_gf(f, p, 1.0), engine)
    return model.entry(1, CURVATURE_ENTRY + (X,)) ** 2 / model.entry(0, CURVATURE_ENTRY) ** 3


def invariant_Xi_h(h: Expr, p: Sequence[float], engine: Optional[IGeometryEngine] = None) -> float:
    """
    Squared nabla R(T,X,X,T;T) on the basis with |R(T,X,X,T)| = 1
    (lam = |h''|^{-1/2}). Equals (h'''/h'')^2.
    """
    h2 = h_derivatives(h, p, 2)[2]
    _require_nonzero(h2, "h''", p)
    lam = abs(h2) ** -0.5
    model = build_model(gh_metric(h), p, 1, adapted_basis_gh(h, p, lam), engine)
    return model.entry(1, CURVATURE_ENTRY + (T,)) ** 2


@dataclass(frozen=True)
class XiInvariants:
    """
    Scaled second-derivative entries of g_h on the basis with
    lam^2 = (h''')^2 / |h''|^3, where R(T,X,X,T) = sgn(h'') psi and
    nabla R(T,X,X,T;T) = sgn(h''') psi^{3/2} with psi = (h'''/h'')^2.
    """
    xi_T: float
    xi_X: float
    xi_T_printed: float
    xi_X_printed: float
    psi: float
    lambda_sq: float
    sign_h2: int
    sign_h3: int


def invariants_xi_TX(h: Expr, p: Sequence[float], engine: Optional[IGeometryEngine] = None) -> XiInvariants:
    """
    xi_T = nabla^2 R(T,X,X,T;T,T) / psi^2 = h'''' |h''| / (h''')^2
    xi_X = nabla^2 R(T,X,X,T;X,X) / psi^2 = -h' h''' / (h'')^2
    The ``*_printed`` values are h''''/(h'')^2 and h' h'''/(h'')^2 from the
    closed forms usually quoted for this family.
    """
    d = h_derivatives(h, p, 4)
    _require_nonzero(d[2], "h''", p)
    _require_nonzero(d[3], "h'''", p)
    lambda_sq = d[3] ** 2 / abs(d[2]) ** 3
    model = build_model(gh_metric(h), p, 2, adapted_basis_gh(h, p, math.sqrt(lambda_sq)), engine)
    psi = abs(model.entry(0, CURVATURE_ENTRY))
    return XiInvariants(
        xi_T=model.entry(2, CURVATURE_ENTRY + (T, T)) / psi ** 2,
        xi_X=model.entry(2, CURVATURE_ENTRY + (X, X)) / psi ** 2,
        xi_T_printed=float(d[4] / d[2] ** 2),
        xi_X_printed=float(d[1] * d[3] / d[2] ** 2),
        psi=psi,
        lambda_sq=float(lambda_sq),
        sign_h2=int(np.sign(d[2])),
        sign_h3=int(np.sign(d[3])),
    )


def sch1_identities_h(h: Expr, p: Sequence[float]) -> Dict[str, float]:
    """
    Residuals of lam^2 h'' = sgn(h'') psi and lam^2 h''' = sgn(h''') psi^{3/2},
    absolute and relative to psi and psi^{3/2}.
    """
    d = h_derivatives(h, p, 3)
    _require_nonzero(d[2], "h''", p)
    _require_nonzero(d[3], "h'''", p)
    psi = (d[3] / d[2]) ** 2
    lambda_sq = d[3] ** 2 / abs(d[2]) ** 3
    curvature_residual = float(lambda_sq * d[2] - np.sign(d[2]) * psi)
    gradient_residual = float(lambda_sq * d[3] - np.sign(d[3]) * psi ** 1.5)
    return {
        "psi": float(psi),
        "lambda_sq": float(lambda_sq),
        "curvature_residual": curvature_residual,
        "gradient_residual": gradient_residual,
        "curvature_relative": abs(curvature_residual) / psi,
        "gradient_relative": abs(gradient_residual) / psi ** 1.5,
    }


def scaling_constants_f(f: Expr, p: Sequence[float], kmax: int) -> np.ndarray:
    """c_k = Delta^(k) / |Delta|^{(k+2)/2} for k = 0..kmax; constant in x iff g_f is SCH."""
    deltas = delta_derivatives(f, p, kmax)
    _require_nonzero(deltas[0], "Delta", p)
    return np.array([deltas[k] / abs(deltas[0]) ** ((k + 2) / 2.0) for k in range(kmax + 1)])
