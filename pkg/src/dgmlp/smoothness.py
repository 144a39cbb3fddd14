"""Node and graph smoothing levels, softmax step weights, feature combination.

The per-node smoothing level after k propagation steps is

    nsl_v(k) = cos(x_v^k, x_v^0) * (1 - cos(x_v^k, x_v^inf)),

large values meaning the node still resembles its raw feature and is far
from the degree-determined stationary state. The graph-level value is the
mean over nodes. Step weights are a per-node softmax of nsl over steps
0..K, sharpened or flattened by a temperature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .graph import NormalizedAdjacency
from .propagation import PropagatedStack, as_feature_matrix, spmm


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors; 0.0 when either norm is 0."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"vector lengths differ: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def _row_cosines(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-row cosine similarity of two equal-shape matrices (zero norm -> 0)."""
    num = np.einsum("ij,ij->i", a, b)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    out = np.zeros(a.shape[0])
    mask = (na > 0.0) & (nb > 0.0)
    out[mask] = num[mask] / (na[mask] * nb[mask])
    return out


@dataclass
class SmoothnessProfile:
    """Per-node, per-step smoothing levels plus optional step weights.

    nsl values live in [0, 1] for nonnegative feature data (cosines are
    then nonnegative); with signed features the product of two cosines
    can range over [-2, 2]. Nothing is clamped.
    """

    nsl: np.ndarray                    # (N, K+1)
    gsl: np.ndarray                    # (K+1,), per-step mean of nsl
    weights: np.ndarray | None = None  # (N, K+1), rows sum to 1
    temperature: float | None = None

    @property
    def max_step(self) -> int:
        return self.nsl.shape[1] - 1


def matrix_nsl(x: np.ndarray, x0: np.ndarray, stationary: np.ndarray) -> np.ndarray:
    """Smoothing level of an arbitrary feature matrix against x0 and x_inf."""
    if x.shape != x0.shape or x.shape != stationary.shape:
        raise DimensionError(
            f"shape mismatch: {x.shape} vs {x0.shape} vs {stationary.shape}"
        )
    alpha = _row_cosines(x, x0)
    beta = _row_cosines(x, stationary)
    return alpha * (1.0 - beta)


def compute_nsl(stack: PropagatedStack, stationary) -> SmoothnessProfile:
    """Per-node smoothing level for every step of a propagated stack."""
    stationary = as_feature_matrix(stationary)
    x0 = stack.steps[0]
    if stationary.shape != x0.shape:
        raise DimensionError(
            f"stationary shape {stationary.shape} does not match stack shape {x0.shape}"
        )
    nsl = np.empty((stack.num_nodes, stack.max_step + 1))
    for k, xk in enumerate(stack.steps):
        nsl[:, k] = matrix_nsl(xk, x0, stationary)
    return SmoothnessProfile(nsl=nsl, gsl=nsl.mean(axis=0))


def propagation_weights(profile: SmoothnessProfile, temperature: float = 1.0) -> np.ndarray:
    """Per-node softmax over steps of nsl / temperature (max-subtracted)."""
    if temperature <= 0.0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    z = profile.nsl / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def combine(stack: PropagatedStack, weights: np.ndarray) -> np.ndarray:
    """Per-node convex combination m_v = sum_l w_v(l) x_v^l of the stack."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (stack.num_nodes, stack.max_step + 1):
        raise DimensionError(
            f"weights shape {weights.shape} does not match "
            f"({stack.num_nodes}, {stack.max_step + 1})"
        )
    out = np.zeros_like(stack.steps[0])
    for l, xl in enumerate(stack.steps):
        out += weights[:, l:l + 1] * xl
    return out


def smoothness_profile(stack: PropagatedStack, stationary, temperature: float = 1.0) -> SmoothnessProfile:
    """Convenience: nsl + gsl + softmax weights in one complete profile."""
    profile = compute_nsl(stack, stationary)
    profile.weights = propagation_weights(profile, temperature)
    profile.temperature = float(temperature)
    return profile


# ---------------------------------------------------------------------------
# Streaming variants for large propagation depths. These recompute the
# power chain step by step instead of retaining the whole stack, producing
# bitwise-identical values with O(N*d) working memory.
# ---------------------------------------------------------------------------

def nsl_streaming(adj: NormalizedAdjacency, x0, stationary, k: int) -> SmoothnessProfile:
    """compute_nsl(propagate(adj, x0, k), stationary) without keeping the stack."""
    if k < 0:
        raise ParameterError(f"propagation depth must be >= 0, got {k}")
    x0 = as_feature_matrix(x0)
    stationary = as_feature_matrix(stationary)
    if stationary.shape != x0.shape:
        raise DimensionError(
            f"stationary shape {stationary.shape} does not match features {x0.shape}"
        )
    nsl = np.empty((x0.shape[0], k + 1))
    cur = x0
    nsl[:, 0] = matrix_nsl(cur, x0, stationary)
    for step in range(1, k + 1):
        cur = spmm(adj, cur)
        nsl[:, step] = matrix_nsl(cur, x0, stationary)
    return SmoothnessProfile(nsl=nsl, gsl=nsl.mean(axis=0))


def combine_streaming(adj: NormalizedAdjacency, x0, weights: np.ndarray) -> np.ndarray:
    """combine(propagate(adj, x0, K), weights) without keeping the stack."""
    x0 = as_feature_matrix(x0)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] != x0.shape[0]:
        raise DimensionError(
            f"weights shape {weights.shape} does not match features {x0.shape}"
        )
    out = weights[:, 0:1] * x0
    cur = x0
    for l in range(1, weights.shape[1]):
        cur = spmm(adj, cur)
        out += weights[:, l:l + 1] * cur
    return out


# ---------------------------------------------------------------------------
# CSV export consumed by the profile subcommand.
# ---------------------------------------------------------------------------

def write_node_profile_csv(profile: SmoothnessProfile, path) -> None:
    """One row per (node, step): node_id, step, nsl, weight."""
    if profile.weights is None:
        raise ParameterError("profile has no weights; compute them before exporting")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "step", "nsl", "weight"])
        for v in range(profile.nsl.shape[0]):
            for k in range(profile.nsl.shape[1]):
                writer.writerow(
                    [v, k, repr(float(profile.nsl[v, k])), repr(float(profile.weights[v, k]))]
                )


def write_gsl_csv(profile: SmoothnessProfile, path) -> None:
    """Per-step graph smoothing level summary: step, gsl."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "gsl"])
        for k, g in enumerate(profile.gsl):
            writer.writerow([k, repr(float(g))])
