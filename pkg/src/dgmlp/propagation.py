"""Multi-step feature propagation and its closed-form infinite-step limit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, ValidationError
from .graph import Graph, NormalizedAdjacency


def as_feature_matrix(x) -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"feature matrix must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("feature matrix contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class PropagatedStack:
    """The sequence [X^(0), ..., X^(K)] of propagated feature matrices."""

    steps: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValidationError("propagated stack must contain at least X^(0)")
        shape = self.steps[0].shape
        if any(s.shape != shape for s in self.steps):
            raise DimensionError("all stack steps must share one shape")

    @property
    def max_step(self) -> int:
        return len(self.steps) - 1

    @property
    def num_nodes(self) -> int:
        return self.steps[0].shape[0]

    @property
    def num_features(self) -> int:
        return self.steps[0].shape[1]


def spmm(adj: NormalizedAdjacency, x: np.ndarray) -> np.ndarray:
    """One propagation step: row i of the result is sum_j A_hat[i,j] * x[j].

    The CSR kernel accumulates each row over its stored entries in index
    order, so results are deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != adj.num_nodes:
        raise DimensionError(
            f"adjacency is {adj.num_nodes}x{adj.num_nodes} but features have shape {x.shape}"
        )
    return adj.matrix @ x


def propagate(adj: NormalizedAdjacency, x0, k: int) -> PropagatedStack:
    """Iteratively compute [X, A_hat X, ..., A_hat^k X]."""
    if k < 0:
        raise ParameterError(f"propagation depth must be >= 0, got {k}")
    cur = as_feature_matrix(x0)
    if cur.shape[0] != adj.num_nodes:
        raise DimensionError(
            f"adjacency is {adj.num_nodes}x{adj.num_nodes} but features have shape {cur.shape}"
        )
    steps = [cur]
    for _ in range(k):
        cur = spmm(adj, cur)
        steps.append(cur)
    return PropagatedStack(tuple(steps))


def stationary_features(graph: Graph, x0, r: float = 0.5) -> np.ndarray:
    """The infinite-propagation limit of A_hat^k X.

    Row i equals dtil_i^r / (2M + N) * sum_j dtil_j^(1-r) x_j, evaluated
    as a rank-1 product so A_hat^inf is never materialized. The global
    expression is used even on disconnected graphs, where the true limit
    is per-component; smoothing levels are defined against exactly this
    reference, so the approximation is intentional.
    """
    if not 0.0 <= r <= 1.0:
        raise ParameterError(f"normalization exponent r must lie in [0, 1], got {r}")
    x0 = as_feature_matrix(x0)
    if x0.shape[0] != graph.num_nodes:
        raise DimensionError(
            f"graph has {graph.num_nodes} nodes but features have shape {x0.shape}"
        )
    dtil = (graph.degrees + 1).astype(np.float64)
    total = 2.0 * graph.num_edges + graph.num_nodes
    weighted_sum = dtil ** (1.0 - r) @ x0  # (d,)
    return np.outer(dtil ** r, weighted_sum) / total
