"""
Truncated multivariate Taylor jets in the three coordinates (t, x, y).

A jet of order n stores the raw partial derivatives
``table[a, b, c] = d^(a+b+c) u / dt^a dx^b dy^c`` at a base point for
``a + b + c <= n`` in a dense ``(n+1, n+1, n+1)`` array; entries outside the
simplex are zero. Products are formed on Taylor coefficients
(``table / (a! b! c!)``) and converted back.

The ``table_*`` helpers operate on arrays whose last three axes are a jet
table and whose leading axes are tensor indices. The geometry engine uses
them to push whole Christoffel and curvature arrays through the product rule
in one pass.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import factorial

from app.exceptions.geometry_exceptions import (
    JetDivisionError,
    JetDomainError,
    JetError,
    JetOrderError,
    SingularMetricError,
)

logger = logging.getLogger(__name__)

DIM = 3
JET_AXES = "UVW"
MultiIndex = Tuple[int, int, int]


@lru_cache(maxsize=None)
def multi_indices(order: int) -> Tuple[MultiIndex, ...]:
    """All multi-indices of total degree <= order, graded then lexicographic."""
    indices = [
        (a, b, c)
        for a in range(order + 1)
        for b in range(order + 1 - a)
        for c in range(order + 1 - a - b)
    ]
    return tuple(sorted(indices, key=lambda alpha: (sum(alpha), alpha)))


@lru_cache(maxsize=None)
def simplex_mask(order: int) -> np.ndarray:
    grid = np.indices((order + 1,) * DIM).sum(axis=0)
    mask = (grid <= order).astype(float)
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=None)
def factorial_weights(order: int) -> np.ndarray:
    """``a! b! c!`` for every cell of the jet cube."""
    f = factorial(np.arange(order + 1), exact=False)
    weights = f[:, None, None] * f[None, :, None] * f[None, None, :]
    weights.setflags(write=False)
    return weights


def table_order(table: np.ndarray) -> int:
    return table.shape[-1] - 1


def to_taylor(table: np.ndarray) -> np.ndarray:
    return table / factorial_weights(table_order(table))


def from_taylor(coeffs: np.ndarray) -> np.ndarray:
    order = table_order(coeffs)
    return coeffs * factorial_weights(order) * simplex_mask(order)


def _taylor_product(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    size = order + 1
    lead = np.broadcast_shapes(a.shape[:-DIM], b.shape[:-DIM])
    out = np.zeros(lead + (size,) * DIM)
    for i, j, k in multi_indices(order):
        coeff = a[..., i, j, k]
        if not np.any(coeff):
            continue
        out[..., i:, j:, k:] += coeff[..., None, None, None] * b[..., : size - i, : size - j, : size - k]
    return out * simplex_mask(order)


def _taylor_einsum(subscripts: str, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    size = order + 1
    inputs, output = subscripts.replace(" ", "").split("->")
    left, right = inputs.split(",")
    spec = f"{left},{right}{JET_AXES}->{output}{JET_AXES}"
    out = None
    for i, j, k in multi_indices(order):
        coeff = a[..., i, j, k]
        if not np.any(coeff):
            continue
        term = np.einsum(spec, coeff, b[..., : size - i, : size - j, : size - k])
        if out is None:
            out = np.zeros(term.shape[:-DIM] + (size,) * DIM)
        out[..., i:, j:, k:] += term
    if out is None:
        out = np.zeros_like(np.einsum(spec, a[..., 0, 0, 0], b))
    return out * simplex_mask(order)


def _common_order(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    order = min(table_order(a), table_order(b))
    return table_truncate(a, order), table_truncate(b, order), order


def table_truncate(table: np.ndarray, order: int) -> np.ndarray:
    current = table_order(table)
    if order > current:
        raise JetOrderError(order, current)
    if order == current:
        return table
    size = order + 1
    return table[..., :size, :size, :size] * simplex_mask(order)


def table_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two derivative tables (leading axes broadcast)."""
    a, b, order = _common_order(a, b)
    return from_taylor(_taylor_product(to_taylor(a), to_taylor(b), order))


def table_einsum(subscripts: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Einstein summation over leading tensor axes with the Leibniz rule applied
    along the trailing jet axes. ``subscripts`` names leading axes only and
    must not use the letters reserved for jet axes (U, V, W).
    """
    if any(letter in subscripts for letter in JET_AXES):
        raise JetError(f"Subscripts '{subscripts}' use reserved jet axes {JET_AXES}")
    a, b, order = _common_order(a, b)
    return from_taylor(_taylor_einsum(subscripts, to_taylor(a), to_taylor(b), order))


def table_derivative(table: np.ndarray, axis: int) -> np.ndarray:
    """Derivative along coordinate ``axis``; the order drops by one."""
    order = table_order(table)
    if order < 1:
        raise JetOrderError(1, order)
    window = [slice(0, order)] * DIM
    window[axis] = slice(1, order + 1)
    return table[(Ellipsis, *window)].copy()


def table_inverse(matrix: np.ndarray, det_floor: float = 1e-12) -> np.ndarray:
    """
    Inverse of a square matrix of jets (shape ``(m, m) + cube``) through the
    terminating Neumann series of ``G = G0 + D`` with nilpotent ``D``.
    """
    order = table_order(matrix)
    base = matrix[..., 0, 0, 0]
    det = np.linalg.det(base)
    if abs(det) <= det_floor:
        raise SingularMetricError(f"determinant {det:.3e} at the base point")
    base_inverse = np.linalg.inv(base)
    nilpotent = matrix.copy()
    nilpotent[..., 0, 0, 0] = 0.0
    step = -table_einsum("ab,bc->ac", _constant_table(base_inverse, order), nilpotent)
    term = _constant_table(base_inverse, order)
    total = term.copy()
    for _ in range(order):
        term = table_einsum("ab,bc->ac", step, term)
        total = total + term
    return total


def _constant_table(values: np.ndarray, order: int) -> np.ndarray:
    table = np.zeros(np.shape(values) + (order + 1,) * DIM)
    table[..., 0, 0, 0] = values
    return table


@dataclass(frozen=True)
class UnivariateFunction:
    """A scalar function known through its derivatives at a point."""
    name: str
    derivatives: Callable[[float, int], np.ndarray]
    domain_error: Callable[[float, int], Optional[str]]


def _exp_derivatives(x0: float, n: int) -> np.ndarray:
    return np.full(n + 1, math.exp(x0))


def _log_derivatives(x0: float, n: int) -> np.ndarray:
    out = np.empty(n + 1)
    out[0] = math.log(x0)
    for j in range(1, n + 1):
        out[j] = (-1) ** (j - 1) * math.factorial(j - 1) / x0 ** j
    return out


def _sin_derivatives(x0: float, n: int) -> np.ndarray:
    cycle = (math.sin(x0), math.cos(x0), -math.sin(x0), -math.cos(x0))
    return np.array([cycle[j % 4] for j in range(n + 1)])


def _cos_derivatives(x0: float, n: int) -> np.ndarray:
    cycle = (math.cos(x0), -math.sin(x0), -math.cos(x0), math.sin(x0))
    return np.array([cycle[j % 4] for j in range(n + 1)])


def _sqrt_derivatives(x0: float, n: int) -> np.ndarray:
    out = np.empty(n + 1)
    coeff = 1.0
    for j in range(n + 1):
        out[j] = coeff * x0 ** (0.5 - j) if x0 > 0 else 0.0
        coeff *= 0.5 - j
    return out


def _abs_derivatives(x0: float, n: int) -> np.ndarray:
    out = np.zeros(n + 1)
    out[0] = abs(x0)
    if n >= 1:
        out[1] = math.copysign(1.0, x0)
    return out


def _reciprocal_derivatives(x0: float, n: int) -> np.ndarray:
    return np.array([(-1) ** j * math.factorial(j) / x0 ** (j + 1) for j in range(n + 1)])


def _positive_only(label: str) -> Callable[[float, int], Optional[str]]:
    def check(x0: float, n: int) -> Optional[str]:
        if x0 <= 0:
            return f"{label} of nonpositive value {x0:g}"
        return None
    return check


def _sqrt_domain(x0: float, n: int) -> Optional[str]:
    if x0 < 0:
        return f"sqrt of negative value {x0:g}"
    if x0 == 0 and n >= 1:
        return "sqrt is not differentiable at 0"
    return None


def _abs_domain(x0: float, n: int) -> Optional[str]:
    if x0 == 0 and n >= 1:
        return "abs is not differentiable at 0"
    return None


def _nonzero_only(x0: float, n: int) -> Optional[str]:
    return "division by zero" if x0 == 0 else None


def _anywhere(x0: float, n: int) -> Optional[str]:
    return None


UNIVARIATE_FUNCTIONS: Dict[str, UnivariateFunction] = {
    "exp": UnivariateFunction("exp", _exp_derivatives, _anywhere),
    "log": UnivariateFunction("log", _log_derivatives, _positive_only("log")),
    "sin": UnivariateFunction("sin", _sin_derivatives, _anywhere),
    "cos": UnivariateFunction("cos", _cos_derivatives, _anywhere),
    "sqrt": UnivariateFunction("sqrt", _sqrt_derivatives, _sqrt_domain),
    "abs": UnivariateFunction("abs", _abs_derivatives, _abs_domain),
    "reciprocal": UnivariateFunction("reciprocal", _reciprocal_derivatives, _nonzero_only),
}


Scalar = Union[int, float]


@dataclass(frozen=True, eq=False)
class Jet:
    """Order-n jet of a scalar function at a point of R^3 (raw partials)."""
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != DIM or len(set(table.shape)) != 1:
            raise JetError(f"Jet table must be a cube of rank {DIM}, got shape {table.shape}")
        table = table * simplex_mask(table.shape[0] - 1)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def constant(cls, value: float, order: int) -> "Jet":
        return cls(_constant_table(float(value), order))

    @classmethod
    def variable(cls, axis: int, value: float, order: int) -> "Jet":
        table = _constant_table(float(value), order)
        if order >= 1:
            unit = [0, 0, 0]
            unit[axis] = 1
            table[tuple(unit)] = 1.0
        return cls(table)

    @property
    def order(self) -> int:
        return table_order(self.table)

    @property
    def value(self) -> float:
        return float(self.table[0, 0, 0])

    def partial(self, alpha: MultiIndex) -> float:
        if sum(alpha) > self.order:
            raise JetOrderError(sum(alpha), self.order)
        return float(self.table[tuple(alpha)])

    def derivative(self, axis: int) -> "Jet":
        return Jet(table_derivative(self.table, axis))

    def truncate(self, order: int) -> "Jet":
        return Jet(table_truncate(self.table, order))

    def _coerce(self, other: Union["Jet", Scalar]) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), self.order)

    def __add__(self, other):
        return jet_add(self, self._coerce(other))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.table)

    def __sub__(self, other):
        return jet_add(self, -self._coerce(other))

    def __rsub__(self, other):
        return jet_add(self._coerce(other), -self)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.table * float(other))
        return jet_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return jet_div(self, self._coerce(other))

    def __rtruediv__(self, other):
        return jet_div(self._coerce(other), self)

    def __pow__(self, exponent: Scalar):
        return jet_power(self, exponent)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, value={self.value:.6g})"


def jet_add(a: Jet, b: Jet) -> Jet:
    left, right, _ = _common_order(a.table, b.table)
    return Jet(left + right)


def jet_mul(a: Jet, b: Jet) -> Jet:
    return Jet(table_product(a.table, b.table))


def jet_compose_univariate(g: UnivariateFunction, a: Jet) -> Jet:
    """g(a) via the Taylor expansion of g about a's value (Faa di Bruno by powers)."""
    order = a.order
    reason = g.domain_error(a.value, order)
    if reason:
        raise JetDomainError(g.name, reason)
    derivs = g.derivatives(a.value, order)
    shift = to_taylor(a.table).copy()
    shift[0, 0, 0] = 0.0
    result = np.zeros_like(shift)
    result[0, 0, 0] = derivs[0]
    power = _constant_table(1.0, order)
    for j in range(1, order + 1):
        power = _taylor_product(power, shift, order)
        result += derivs[j] / math.factorial(j) * power
    return Jet(from_taylor(result))


def jet_div(a: Jet, b: Jet) -> Jet:
    if b.value == 0.0:
        raise JetDivisionError()
    return jet_mul(a, jet_compose_univariate(UNIVARIATE_FUNCTIONS["reciprocal"], b))


def jet_power(a: Jet, exponent: Scalar) -> Jet:
    """Integer powers by repeated squaring; real powers as exp(b log a) with a > 0."""
    exponent = float(exponent)
    if exponent.is_integer():
        n = int(exponent)
        if n < 0:
            return jet_div(Jet.constant(1.0, a.order), jet_power(a, -n))
        result = Jet.constant(1.0, a.order)
        base = a
        while n:
            if n & 1:
                result = jet_mul(result, base)
            n >>= 1
            if n:
                base = jet_mul(base, base)
        return result
    if a.value <= 0:
        raise JetDomainError("pow", f"non-integer power of nonpositive value {a.value:g}")
    log_a = jet_compose_univariate(UNIVARIATE_FUNCTIONS["log"], a)
    return jet_compose_univariate(UNIVARIATE_FUNCTIONS["exp"], log_a * exponent)


def partial(j: Jet, alpha: MultiIndex) -> float:
    return j.partial(alpha)
