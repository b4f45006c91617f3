"""
Isomorphism checks between model spaces in normal form.

A frame F is an isomorphism of a model when pulling phi and every A_k back by
F returns the same components. For the curvature model
(phi, A(T,X,X,T) = eps) the isomorphisms are

    FT = a1 T + a2 Y,  FX = a3 T + a4 X + a5 Y,  FY = a6 Y
    a1, a4 = +-1,  a6 = a4,  a2 = -a1 a3 / a4,  a5 = -a3^2 / (2 a4)

with a3 free. Adding A_1(T,X,X,T;T) = eps1 leaves only FT = T,
FX = b2 X, FY = b2 Y with b2 = +-1.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from app.exceptions.classification_exceptions import NonCanonicalModelError
from app.models.model_spaces import (
    ModelSpace,
    is_canonical_gradient_model,
    require_canonical_curvature_model,
)
from app.utils.tensors import T, X, Y, Frame, pullback
from config.geometry_config import geometry_config

logger = logging.getLogger(__name__)


@dataclass
class IsoCheckResult:
    accepted: bool
    parameters: Dict[str, float] = field(default_factory=dict)
    shape_ok: bool = False
    constraint_residuals: Dict[str, float] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.accepted


def preservation_violations(frame: Frame, model: ModelSpace, tol: float) -> List[str]:
    """Names of the model tensors that ``frame`` fails to preserve."""
    violations = []
    if not pullback(model.phi, frame).allclose(model.phi, tol):
        violations.append("phi")
    for k, tensor in enumerate(model.tensors):
        if not pullback(tensor, frame).allclose(tensor, tol * max(1.0, tensor.max_abs())):
            violations.append(f"A_{k}")
    return violations


def _shape_zeros(matrix: np.ndarray, cells, tol: float) -> bool:
    return all(abs(matrix[cell]) <= tol for cell in cells)


def curvature_model_isometry(a1: float, a3: float, a4: float) -> Frame:
    """Element of the curvature-model isotropy group from its free parameters."""
    a2 = -a1 * a3 / a4
    a5 = -a3 ** 2 / (2.0 * a4)
    return Frame.from_columns((a1, 0.0, a2), (a3, a4, a5), (0.0, 0.0, a4))


def gradient_model_isometry(b2: float) -> Frame:
    return Frame.from_columns((1.0, 0.0, 0.0), (0.0, b2, 0.0), (0.0, 0.0, b2))


def check_iso_curvature_model(frame: Frame, model: ModelSpace, tol: Optional[float] = None) -> IsoCheckResult:
    """Does ``frame`` preserve phi and A of a canonical curvature model?"""
    tol = tol if tol is not None else geometry_config.iso_tolerance
    model = model.truncate(0)
    require_canonical_curvature_model(model, tol)
    violations = preservation_violations(frame, model, tol)
    M = frame.matrix
    a1, a2, a3, a4, a5, a6 = M[T, 0], M[Y, 0], M[T, 1], M[X, 1], M[Y, 1], M[Y, 2]
    parameters = {"a1": a1, "a2": a2, "a3": a3, "a4": a4, "a5": a5, "a6": a6}
    shape_ok = _shape_zeros(M, [(X, 0), (T, 2), (X, 2)], tol)
    residuals = {
        "a1^2 - 1": a1 ** 2 - 1.0,
        "a4^2 - 1": a4 ** 2 - 1.0,
        "a4*a6 - 1": a4 * a6 - 1.0,
    }
    if abs(a4) > tol:
        residuals["a2 + a1*a3/a4"] = a2 + a1 * a3 / a4
        residuals["a5 + a3^2/(2*a4)"] = a5 + a3 ** 2 / (2.0 * a4)
    accepted = not violations
    if accepted and not shape_ok:
        logger.warning(f"Frame preserves the curvature model but breaks the triangular shape: {parameters}")
    return IsoCheckResult(
        accepted=accepted,
        parameters={k: float(v) for k, v in parameters.items()},
        shape_ok=shape_ok,
        constraint_residuals={k: float(v) for k, v in residuals.items()},
        violations=violations,
    )


def check_iso_gradient_model(frame: Frame, model: ModelSpace, tol: Optional[float] = None) -> IsoCheckResult:
    """Does ``frame`` preserve phi, A and A_1 of a canonical gradient model?"""
    tol = tol if tol is not None else geometry_config.iso_tolerance
    if model.r < 1 or not is_canonical_gradient_model(model.truncate(1), tol):
        raise NonCanonicalModelError("expected A_1 concentrated in (T,X,X,T;T)")
    model = model.truncate(1)
    violations = preservation_violations(frame, model, tol)
    M = frame.matrix
    b1, b2, b3, b4 = M[Y, 0], M[X, 1], M[Y, 1], M[Y, 2]
    parameters = {"b1": b1, "b2": b2, "b3": b3, "b4": b4}
    shape_ok = abs(M[T, 0] - 1.0) <= tol and _shape_zeros(M, [(X, 0), (T, 1), (T, 2), (X, 2)], tol)
    residuals = {
        "b2^2 - 1": b2 ** 2 - 1.0,
        "b1": b1,
        "b3": b3,
        "b4 - b2": b4 - b2,
    }
    return IsoCheckResult(
        accepted=not violations,
        parameters={k: float(v) for k, v in parameters.items()},
        shape_ok=shape_ok,
        constraint_residuals={k: float(v) for k, v in residuals.items()},
        violations=violations,
    )


def find_isomorphism(
    target: ModelSpace,
    source: ModelSpace,
    tol: Optional[float] = None,
) -> Optional[Frame]:
    """
    Frame F with ``source.pullback(F) == target`` for models in normal form,
    or None. Candidates are the diagonal elements of the curvature-model
    isotropy group; shears create (T,X,X,X;..)-type entries that normal forms
    never carry, so they cannot match.
    """
    tol = tol if tol is not None else geometry_config.find_iso_tolerance
    if target.r != source.r:
        raise NonCanonicalModelError(f"models of different order ({target.r} and {source.r})")
    eps_target = require_canonical_curvature_model(target, tol)
    eps_source = require_canonical_curvature_model(source, tol)
    atol = tol * max(target.scale(), source.scale())
    if abs(eps_target - eps_source) > atol:
        return None
    for a1 in (1.0, -1.0):
        for a4 in (1.0, -1.0):
            frame = curvature_model_isometry(a1, 0.0, a4)
            if source.pullback(frame).allclose(target, atol):
                return frame
    return None
