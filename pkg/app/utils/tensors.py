"""
Tensors at a single point of a 3-dimensional vector space.

Components are stored contravariant slots first, then covariant slots.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.exceptions.geometry_exceptions import SingularFrameError, SingularMetricError, SlotError
from config.geometry_config import geometry_config

logger = logging.getLogger(__name__)

DIM = 3

# adapted-basis slot names
T, X, Y = 0, 1, 2


@dataclass(frozen=True, eq=False)
class TensorAtPoint:
    components: np.ndarray
    contravariant: int = 0
    is_metric: bool = False

    def __post_init__(self):
        components = np.array(self.components, dtype=float)
        if components.shape != (DIM,) * components.ndim:
            raise SlotError(f"components of shape {components.shape} are not a {DIM}-dimensional tensor")
        if not 0 <= self.contravariant <= components.ndim:
            raise SlotError(f"{self.contravariant} contravariant slots on a rank {components.ndim} tensor")
        if self.is_metric:
            _check_metric(components)
        components.setflags(write=False)
        object.__setattr__(self, "components", components)

    @classmethod
    def metric(cls, matrix: np.ndarray) -> "TensorAtPoint":
        return cls(np.asarray(matrix, dtype=float), 0, is_metric=True)

    @classmethod
    def covariant(cls, components: np.ndarray) -> "TensorAtPoint":
        return cls(np.asarray(components, dtype=float), 0)

    @property
    def rank(self) -> int:
        return self.components.ndim

    @property
    def covariant_rank(self) -> int:
        return self.rank - self.contravariant

    def __getitem__(self, index):
        return self.components[index]

    def allclose(self, other: "TensorAtPoint", atol: float, rtol: float = 0.0) -> bool:
        return (
            self.contravariant == other.contravariant
            and self.components.shape == other.components.shape
            and np.allclose(self.components, other.components, rtol=rtol, atol=atol)
        )

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0


def _check_metric(matrix: np.ndarray) -> None:
    if matrix.shape != (DIM, DIM):
        raise SingularMetricError(f"expected a {DIM}x{DIM} matrix, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-14 * max(1.0, np.max(np.abs(matrix)))):
        raise SingularMetricError("matrix is not symmetric")
    det = linalg.det(matrix)
    if abs(det) <= geometry_config.det_floor:
        raise SingularMetricError(f"determinant {det:.3e} is below the floor")


@dataclass(frozen=True, eq=False)
class Frame:
    """Change of basis; column a holds the old-basis components of new vector e_a."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.shape != (DIM, DIM):
            raise SlotError(f"frame must be {DIM}x{DIM}, got shape {matrix.shape}")
        det = linalg.det(matrix)
        if abs(det) <= geometry_config.det_floor:
            raise SingularFrameError(det)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls) -> "Frame":
        return cls(np.eye(DIM))

    @classmethod
    def from_columns(cls, *columns: Sequence[float]) -> "Frame":
        return cls(np.column_stack(columns))

    def inverse(self) -> "Frame":
        return Frame(linalg.inv(self.matrix))

    def compose(self, other: "Frame") -> "Frame":
        """Frame whose vectors are ``other``'s vectors expressed through ``self``."""
        return Frame(self.matrix @ other.matrix)


def pullback(tensor: TensorAtPoint, frame: Frame) -> TensorAtPoint:
    """Components of ``tensor`` in the basis given by ``frame``."""
    components = tensor.components
    inverse_t = linalg.inv(frame.matrix).T
    for slot in range(tensor.rank):
        transform = inverse_t if slot < tensor.contravariant else frame.matrix
        components = np.moveaxis(np.tensordot(components, transform, axes=([slot], [0])), -1, slot)
    return TensorAtPoint(components, tensor.contravariant, tensor.is_metric)


def raise_last_index(tensor: TensorAtPoint, metric: TensorAtPoint) -> TensorAtPoint:
    """(0,k) -> (1,k-1); the raised index becomes the first slot."""
    if tensor.contravariant != 0 or tensor.rank < 1:
        raise SlotError("raise_last_index expects a purely covariant tensor of rank >= 1")
    inverse = linalg.inv(metric.components)
    raised = np.tensordot(inverse, tensor.components, axes=([1], [tensor.rank - 1]))
    return TensorAtPoint(raised, 1)


def lower_last_index(tensor: TensorAtPoint, metric: TensorAtPoint) -> TensorAtPoint:
    """(1,k-1) -> (0,k); the lowered index becomes the last slot."""
    if tensor.contravariant != 1:
        raise SlotError("lower_last_index expects exactly one contravariant slot")
    lowered = np.tensordot(tensor.components, metric.components, axes=([0], [0]))
    return TensorAtPoint(lowered, 0)


def contract(
    tensor: TensorAtPoint,
    slot_a: int,
    slot_b: int,
    metric: Optional[TensorAtPoint] = None,
) -> TensorAtPoint:
    """Trace over two slots; slots of the same variance need ``metric``."""
    if slot_a == slot_b or not (0 <= slot_a < tensor.rank and 0 <= slot_b < tensor.rank):
        raise SlotError(f"cannot contract slots {slot_a} and {slot_b} of a rank {tensor.rank} tensor")
    slot_a, slot_b = sorted((slot_a, slot_b))
    upper_a = slot_a < tensor.contravariant
    upper_b = slot_b < tensor.contravariant
    components = tensor.components
    if upper_a == upper_b:
        if metric is None:
            raise SlotError("contracting two slots of the same variance requires a metric")
        pairing = metric.components if upper_a else linalg.inv(metric.components)
        components = np.tensordot(components, pairing, axes=([slot_a, slot_b], [0, 1]))
    else:
        components = np.trace(components, axis1=slot_a, axis2=slot_b)
    contravariant = tensor.contravariant - int(upper_a) - int(upper_b)
    return TensorAtPoint(components, contravariant)


def signature(metric: TensorAtPoint) -> Tuple[int, int]:
    """(positive, negative) eigenvalue counts."""
    eigenvalues = linalg.eigvalsh(metric.components)
    return int(np.sum(eigenvalues > 0)), int(np.sum(eigenvalues < 0))


CURVATURE_IMAGES: Tuple[Tuple[Tuple[int, int, int, int], int], ...] = (
    ((T, X, X, T), 1),
    ((X, T, T, X), 1),
    ((T, X, T, X), -1),
    ((X, T, X, T), -1),
)


def curvature_pattern(value: float, tail: Sequence[int] = ()) -> TensorAtPoint:
    """
    Covariant tensor of rank 4 + len(tail) whose only nonzero components are
    the curvature-symmetry images of the (T,X,X,T;tail) entry.
    """
    components = np.zeros((DIM,) * (4 + len(tail)))
    for head, sign in CURVATURE_IMAGES:
        components[head + tuple(tail)] = sign * value
    return TensorAtPoint(components, 0)


def add(a: TensorAtPoint, b: TensorAtPoint) -> TensorAtPoint:
    if a.contravariant != b.contravariant or a.rank != b.rank:
        raise SlotError("cannot add tensors of different type")
    return TensorAtPoint(a.components + b.components, a.contravariant)
