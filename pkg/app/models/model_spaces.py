"""
Model spaces (V, phi, A_0, ..., A_r) obtained by pulling the metric and the
curvature series at a point back to a chosen basis, and the adapted bases in
which the built-in families take their normal form.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.exceptions.classification_exceptions import NonCanonicalModelError
from app.interfaces.geometry_interfaces import IGeometryEngine
from app.services.geometry_service import MetricField, default_engine
from app.utils.expression_parser import Expr, evaluate
from app.utils.tensors import T, X, Frame, TensorAtPoint, curvature_pattern, pullback
from config.geometry_config import geometry_config

logger = logging.getLogger(__name__)

# phi(T,T) = phi(X,Y) = 1, all other pairings zero
CANONICAL_PHI = np.array([
    [1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0],
])


@dataclass(frozen=True, eq=False)
class ModelSpace:
    r: int
    phi: TensorAtPoint
    tensors: Tuple[TensorAtPoint, ...]

    def __post_init__(self):
        if len(self.tensors) != self.r + 1:
            raise ValueError(f"model of order {self.r} needs {self.r + 1} tensors, got {len(self.tensors)}")
        for k, tensor in enumerate(self.tensors):
            if tensor.rank != 4 + k or tensor.contravariant != 0:
                raise ValueError(f"A_{k} must be covariant of rank {4 + k}")

    def pullback(self, frame: Frame) -> "ModelSpace":
        return ModelSpace(
            self.r,
            pullback(self.phi, frame),
            tuple(pullback(tensor, frame) for tensor in self.tensors),
        )

    def truncate(self, r: int) -> "ModelSpace":
        if r > self.r:
            raise ValueError(f"cannot extend a model of order {self.r} to order {r}")
        return ModelSpace(r, self.phi, self.tensors[: r + 1])

    def entry(self, k: int, index: Sequence[int]) -> float:
        return float(self.tensors[k].components[tuple(index)])

    def scale(self) -> float:
        return max([1.0, self.phi.max_abs()] + [tensor.max_abs() for tensor in self.tensors])

    def allclose(self, other: "ModelSpace", atol: float) -> bool:
        if self.r != other.r:
            return False
        return self.phi.allclose(other.phi, atol) and all(
            a.allclose(b, atol) for a, b in zip(self.tensors, other.tensors)
        )


def canonical_phi() -> TensorAtPoint:
    return TensorAtPoint.metric(CANONICAL_PHI)


def canonical_curvature_model(epsilon: float) -> ModelSpace:
    """(V, phi, A) with A(T,X,X,T) = epsilon."""
    return ModelSpace(0, canonical_phi(), (curvature_pattern(epsilon),))


def canonical_gradient_model(epsilon0: float, epsilon1: float) -> ModelSpace:
    """Adds A_1(T,X,X,T;T) = epsilon1 to the curvature model."""
    return ModelSpace(1, canonical_phi(), (curvature_pattern(epsilon0), curvature_pattern(epsilon1, (T,))))


def is_canonical_curvature_model(model: ModelSpace, tol: Optional[float] = None) -> bool:
    tol = tol if tol is not None else geometry_config.iso_tolerance
    if not np.allclose(model.phi.components, CANONICAL_PHI, rtol=0.0, atol=tol):
        return False
    epsilon = model.entry(0, (T, X, X, T))
    if abs(epsilon) <= tol:
        return False
    return model.tensors[0].allclose(curvature_pattern(epsilon), tol * max(1.0, abs(epsilon)))


def is_canonical_gradient_model(model: ModelSpace, tol: Optional[float] = None) -> bool:
    tol = tol if tol is not None else geometry_config.iso_tolerance
    if model.r < 1 or not is_canonical_curvature_model(model.truncate(0), tol):
        return False
    epsilon1 = model.entry(1, (T, X, X, T, T))
    if abs(epsilon1) <= tol:
        return False
    return model.tensors[1].allclose(curvature_pattern(epsilon1, (T,)), tol * max(1.0, abs(epsilon1)))


def require_canonical_curvature_model(model: ModelSpace, tol: Optional[float] = None) -> float:
    """Return epsilon of a canonical model or raise."""
    if not is_canonical_curvature_model(model.truncate(0), tol):
        raise NonCanonicalModelError("expected phi(T,T) = phi(X,Y) = 1 and curvature concentrated in (T,X,X,T)")
    return model.entry(0, (T, X, X, T))


def adapted_basis_gf(f: Expr, p: Sequence[float], lam: float = 1.0) -> Frame:
    """T = e^{-f} d_t, X = lam d_x, Y = d_y / lam."""
    weight = math.exp(-evaluate(f, p))
    return Frame.from_columns((weight, 0.0, 0.0), (0.0, lam, 0.0), (0.0, 0.0, 1.0 / lam))


def adapted_basis_gh(h: Expr, p: Sequence[float], lam: float = 1.0) -> Frame:
    """T = d_t, X = lam (d_x + h d_y), Y = d_y / lam."""
    h_value = evaluate(h, p)
    return Frame.from_columns((1.0, 0.0, 0.0), (0.0, lam, lam * h_value), (0.0, 0.0, 1.0 / lam))


def build_model(
    g: MetricField,
    p: Sequence[float],
    r: int,
    frame: Frame,
    engine: Optional[IGeometryEngine] = None,
) -> ModelSpace:
    engine = engine or default_engine()
    series = engine.nabla_riemann_series(g, p, r)
    return ModelSpace(
        r,
        pullback(g.at(p), frame),
        tuple(pullback(tensor, frame) for tensor in series),
    )
