"""Shared fixtures and independent dense oracles used across the suite."""

import os
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from dgmlp import Graph, build_graph, load_dataset

FIXTURES = Path(__file__).parent / "fixtures"
DATA_ROOT = Path(os.environ.get("DGMLP_DATA",
                                Path(__file__).resolve().parents[1] / "data"))


@pytest.fixture
def tiny_dir() -> Path:
    return FIXTURES / "tiny"


@lru_cache(maxsize=None)
def citation_dataset(name: str):
    """Load a real citation dataset, or skip with fetch instructions."""
    path = DATA_ROOT / name
    if not (path / "features.csv").is_file():
        pytest.skip(
            f"{name} dataset not found at {path}; run "
            "scripts/prepare_citation_data.py on a networked machine "
            "(see README) and re-run"
        )
    return load_dataset(path)


def random_graph(n: int, num_pairs: int, seed: int) -> Graph:
    """Random simple graph from num_pairs sampled (possibly repeated) pairs."""
    rng = np.random.default_rng(seed)
    pairs = rng.integers(0, n, size=(num_pairs, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return build_graph(pairs, n)


def dense_normalized(graph: Graph, r: float) -> np.ndarray:
    """Dense oracle for the normalized adjacency, built with dense matrix ops."""
    n = graph.num_nodes
    a = np.zeros((n, n))
    for u, v in graph.undirected_edges():
        a[u, v] = a[v, u] = 1.0
    a_tilde = a + np.eye(n)
    dtil = a_tilde.sum(axis=1)
    return np.diag(dtil ** (r - 1.0)) @ a_tilde @ np.diag(dtil ** (-r))
