"""
Levi-Civita connection, curvature and iterated covariant derivatives of a
metric given by expressions in (t, x, y), computed on derivative tables.

Conventions:
  Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
  R(d_i, d_j) d_k = (d_i Gamma^l_jk - d_j Gamma^l_ik
                     + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik) d_l
  R_ijkl = g(R(d_i, d_j) d_k, d_l)
  (nabla T)_{i1..ir;m} = d_m T_{i1..ir} - sum_s Gamma^p_{m i_s} T_{..p..}
Differentiation slots of nabla^k R are appended after the four curvature slots.
"""
import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from app.exceptions.geometry_exceptions import MetricFieldError, SlotError
from app.interfaces.geometry_interfaces import IGeometryEngine
from app.observability.metrics import EVALUATION_LATENCY
from app.services.caching_service import CachingService
from app.utils.expression_parser import COORDINATES, Expr, Number, eval_jet, parse, to_text
from app.utils.jets import (
    DIM,
    Jet,
    table_derivative,
    table_einsum,
    table_inverse,
    table_order,
    table_truncate,
)
from app.utils.tensors import TensorAtPoint, contract, raise_last_index
from config.app_config import settings
from config.geometry_config import geometry_config

logger = logging.getLogger(__name__)

Point = Tuple[float, float, float]

# index letters for generated einsum subscripts; y and z are reserved
_INDEX_LETTERS = "abcdefghijklmnopqrstuvwx"


@dataclass(frozen=True)
class MetricField:
    """Symmetric 3x3 matrix of expressions in the coordinates t, x, y."""
    components: Tuple[Tuple[Expr, ...], ...]

    def __post_init__(self):
        if len(self.components) != DIM or any(len(row) != DIM for row in self.components):
            raise MetricFieldError(f"expected {DIM}x{DIM} components")
        for i in range(DIM):
            for j in range(i + 1, DIM):
                if self.components[i][j] != self.components[j][i]:
                    raise MetricFieldError(
                        f"component {COORDINATES[i]}{COORDINATES[j]} differs from {COORDINATES[j]}{COORDINATES[i]}"
                    )

    @classmethod
    def from_entries(cls, entries: Mapping[str, Union[str, Expr]]) -> "MetricField":
        """
        Build from entries keyed by coordinate pairs ("tt", "xy", ...). The
        transpose is filled in; missing entries are zero.
        """
        grid: List[List[Expr]] = [[Number(0.0)] * DIM for _ in range(DIM)]
        seen: Dict[Tuple[int, int], Expr] = {}
        for key, value in entries.items():
            if len(key) != 2 or any(c not in COORDINATES for c in key):
                raise MetricFieldError(f"unknown component '{key}'")
            i, j = sorted((COORDINATES.index(key[0]), COORDINATES.index(key[1])))
            expr = parse(value) if isinstance(value, str) else value
            if (i, j) in seen and seen[(i, j)] != expr:
                raise MetricFieldError(f"conflicting entries for component '{key}'")
            seen[(i, j)] = expr
            grid[i][j] = grid[j][i] = expr
        return cls(tuple(tuple(row) for row in grid))

    def fingerprint(self) -> str:
        return ";".join(
            f"{COORDINATES[i]}{COORDINATES[j]}={to_text(self.components[i][j])}"
            for i in range(DIM)
            for j in range(i, DIM)
        )

    def table(self, point: Sequence[float], order: int) -> np.ndarray:
        """Derivative tables of all components, shape (3, 3) + jet cube."""
        out = np.zeros((DIM, DIM) + (order + 1,) * DIM)
        for i in range(DIM):
            for j in range(i, DIM):
                entry = eval_jet(self.components[i][j], point, order).table
                out[i, j] = entry
                out[j, i] = entry
        return out

    def at(self, point: Sequence[float]) -> TensorAtPoint:
        return TensorAtPoint.metric(self.table(point, 0)[..., 0, 0, 0])


@dataclass(frozen=True, eq=False)
class ConnectionJet:
    """Christoffel symbols Gamma^k_ij as derivative tables indexed [k, i, j]."""
    symbols: np.ndarray

    @property
    def order(self) -> int:
        return table_order(self.symbols)

    def jet(self, k: int, i: int, j: int) -> Jet:
        return Jet(self.symbols[k, i, j])

    def at_point(self) -> np.ndarray:
        return self.symbols[..., 0, 0, 0].copy()


def christoffel_from_table(metric_table: np.ndarray) -> np.ndarray:
    """Christoffel tables of order n from metric tables of order n + 1."""
    order = table_order(metric_table) - 1
    dg = np.stack([table_derivative(metric_table, axis) for axis in range(DIM)], axis=0)
    lowered = 0.5 * (
        np.einsum("ijl...->lij...", dg)
        + np.einsum("jil...->lij...", dg)
        - dg
    )
    inverse = table_inverse(table_truncate(metric_table, order), geometry_config.det_floor)
    return table_einsum("kl,lij->kij", inverse, lowered)


def riemann_from_tables(metric_table: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """(0,4) curvature tables of order n from Christoffel tables of order n + 1."""
    order = table_order(gamma) - 1
    d_gamma = np.stack([table_derivative(gamma, axis) for axis in range(DIM)], axis=0)
    products = table_truncate(table_einsum("lim,mjk->lijk", gamma, gamma), order)
    operator = (
        np.einsum("iljk...->ijkl...", d_gamma)
        - np.einsum("jlik...->ijkl...", d_gamma)
        + np.einsum("lijk...->ijkl...", products)
        - np.einsum("ljik...->ijkl...", products)
    )
    return table_einsum("ijkm,lm->ijkl", operator, table_truncate(metric_table, order))


def covariant_derivative_table(field: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """nabla of a covariant tensor field; new slot last, order drops by one."""
    rank = field.ndim - DIM
    order = table_order(field)
    gamma = table_truncate(gamma, order - 1)
    result = np.stack([table_derivative(field, axis) for axis in range(DIM)], axis=rank)
    index = _INDEX_LETTERS[:rank]
    for slot in range(rank):
        replaced = index[:slot] + "z" + index[slot + 1:]
        result = result - table_einsum(f"zy{index[slot]},{replaced}->{index}y", gamma, field)
    return result


def christoffel(g: MetricField, p: Sequence[float], order: int = 0) -> ConnectionJet:
    return ConnectionJet(christoffel_from_table(g.table(p, order + 1)))


def riemann(g: MetricField, p: Sequence[float]) -> TensorAtPoint:
    return nabla_riemann_series(g, p, 0)[0]


def nabla_riemann_series(g: MetricField, p: Sequence[float], r: int) -> List[TensorAtPoint]:
    """[R, nabla R, ..., nabla^r R] at p as covariant tensors."""
    metric_table = g.table(p, r + 2)
    gamma = christoffel_from_table(metric_table)
    tables = [riemann_from_tables(metric_table, gamma)]
    for _ in range(r):
        tables.append(covariant_derivative_table(tables[-1], gamma))
    return [TensorAtPoint.covariant(t[..., 0, 0, 0]) for t in tables]


def nabla_k_riemann(g: MetricField, p: Sequence[float], k: int) -> TensorAtPoint:
    return nabla_riemann_series(g, p, k)[k]


def curvature_unit_scale(g: MetricField, p: Sequence[float], k: int) -> float:
    """
    Size of the metric data nabla^k R is assembled from: the largest partial
    derivative of g up to order k + 2 times the largest entry of g^-1.
    Rounding in nabla^k R is proportional to it.
    """
    table = g.table(p, k + 2)
    inverse = linalg.inv(table[..., 0, 0, 0])
    return max(1.0, float(np.max(np.abs(table)))) * max(1.0, float(np.max(np.abs(inverse))))


def metric_compatibility_defect(g: MetricField, p: Sequence[float]) -> float:
    """max |nabla g| at p; zero for the Levi-Civita connection."""
    metric_table = g.table(p, 1)
    gamma = christoffel_from_table(g.table(p, 2))
    nabla_g = covariant_derivative_table(metric_table, gamma)
    return float(np.max(np.abs(nabla_g[..., 0, 0, 0])))


def curvature_symmetry_defects(curvature: TensorAtPoint) -> Dict[str, float]:
    if curvature.rank != 4:
        raise SlotError(f"expected a rank 4 curvature tensor, got rank {curvature.rank}")
    R = curvature.components
    return {
        "antisymmetry_first_pair": float(np.max(np.abs(R + np.einsum("ijkl->jikl", R)))),
        "antisymmetry_second_pair": float(np.max(np.abs(R + np.einsum("ijkl->ijlk", R)))),
        "pair_symmetry": float(np.max(np.abs(R - np.einsum("ijkl->klij", R)))),
        "first_bianchi": float(np.max(np.abs(
            R + np.einsum("jkil->ijkl", R) + np.einsum("kijl->ijkl", R)
        ))),
    }


def second_bianchi_defect(nabla_curvature: TensorAtPoint) -> float:
    """Cyclic sum over the first pair and the differentiation slot of nabla R."""
    N = nabla_curvature.components
    cyclic = N + np.einsum("jmkli->ijklm", N) + np.einsum("miklj->ijklm", N)
    return float(np.max(np.abs(cyclic)))


def ricci(g: MetricField, p: Sequence[float], curvature: Optional[TensorAtPoint] = None) -> TensorAtPoint:
    curvature = curvature if curvature is not None else riemann(g, p)
    raised = raise_last_index(curvature, g.at(p))
    return contract(raised, 0, 1)


def scalar_curvature(g: MetricField, p: Sequence[float], curvature: Optional[TensorAtPoint] = None) -> float:
    metric = g.at(p)
    return float(contract(ricci(g, p, curvature), 0, 1, metric).components)


class GeometryEngine(IGeometryEngine):
    """Curvature evaluation with an in-memory cache of curvature series."""

    def __init__(self, caching_service: Optional[CachingService] = None):
        self.caching_service = caching_service or CachingService()

    def christoffel(self, g: MetricField, p: Sequence[float], order: int = 0) -> ConnectionJet:
        return christoffel(g, p, order)

    def riemann(self, g: MetricField, p: Sequence[float]) -> TensorAtPoint:
        return self.nabla_riemann_series(g, p, 0)[0]

    def nabla_k_riemann(self, g: MetricField, p: Sequence[float], k: int) -> TensorAtPoint:
        return self.nabla_riemann_series(g, p, k)[k]

    def nabla_riemann_series(self, g: MetricField, p: Sequence[float], r: int) -> List[TensorAtPoint]:
        key = g.fingerprint()
        cached = self.caching_service.get_cached_curvature_series(key, p, r)
        if cached is not None:
            return cached
        start = time.perf_counter()
        series = nabla_riemann_series(g, p, r)
        EVALUATION_LATENCY.labels("nabla_riemann_series").observe(time.perf_counter() - start)
        logger.debug(f"Computed curvature series to order {r} at {tuple(p)}")
        self.caching_service.set_cached_curvature_series(key, p, r, series)
        return series


_default_engine: Optional[GeometryEngine] = None


def default_engine() -> GeometryEngine:
    global _default_engine
    if _default_engine is None:
        _default_engine = GeometryEngine(CachingService(max_entries=settings.CACHE_SIZE))
    return _default_engine
