"""End-to-end pipeline orchestration behind the CLI subcommands.

The training pipeline is: row-normalize features -> normalized adjacency
-> multi-step propagation -> per-node smoothing levels -> softmax step
weights -> combined features -> residual MLP (or the propagate-then-
logistic-regression baseline). Propagation stacks larger than a memory
budget switch to streaming recomputation that yields bitwise-identical
results.
"""

from __future__ import annotations

import itertools
import resource
import time
import tracemalloc
from collections import OrderedDict
from dataclasses import asdict, dataclass, replace

import numpy as np

from .data import Dataset, Splits, drop_edges, erdos_renyi, load_dataset, \
    mask_features, subsample_labels
from .errors import ConfigurationError
from .graph import Graph, normalize
from .nn import Metrics, ResidualMlp, TrainConfig, sgc_baseline, train
from .propagation import PropagatedStack, propagate, spmm, stationary_features
from .smoothness import SmoothnessProfile, combine, combine_streaming, \
    matrix_nsl, nsl_streaming, propagation_weights, smoothness_profile


@dataclass
class RunConfig:
    """Everything a run needs; echoed verbatim into result files."""

    dataset: str | None = None
    dp: int = 2                      # propagation depth K
    dt: int = 1                      # transformation depth (1 = logistic head)
    hidden: int = 64
    temperature: float = 1.0
    r: float = 0.5
    lr: float = 0.1
    epochs: int = 200
    weight_decay: float = 5e-6
    dropout: float = 0.1
    seed: int = 0
    use_bias: bool = False
    baseline: str | None = None      # "sgc" trains on the dp-step features
    out: str | None = None
    feature_norm: str = "l1"         # none | l1 | l2
    stack_budget_mb: int = 2048
    # profile
    caps: list[int] | None = None
    # sweep
    dp_grid: list[int] | None = None
    dt_grid: list[int] | None = None
    keep_edges_grid: list[float] | None = None
    labels_per_class_grid: list[int] | None = None
    mask_features_grid: list[float] | None = None
    num_seeds: int = 1
    # scale
    sizes: list[int] | None = None
    edge_prob: float = 1e-4
    dim: int = 64
    classes: int = 10
    train_nodes: int = 1000
    val_nodes: int = 500
    test_nodes: int = 1000

    def __post_init__(self):
        if self.dp < 0:
            raise ConfigurationError(f"dp must be >= 0, got {self.dp}")
        if self.dt < 1:
            raise ConfigurationError(f"dt must be >= 1, got {self.dt}")
        if self.temperature <= 0.0:
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature}")
        if self.feature_norm not in ("none", "l1", "l2"):
            raise ConfigurationError(f"unknown feature_norm: {self.feature_norm!r}")
        if self.baseline not in (None, "sgc"):
            raise ConfigurationError(f"unknown baseline: {self.baseline!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.lr, epochs=self.epochs,
            weight_decay=self.weight_decay, dropout_rate=self.dropout,
            seed=self.seed if seed is None else seed,
        )


def row_normalize(features: np.ndarray, mode: str) -> np.ndarray:
    """Scale each row to unit L1/L2 norm; zero rows stay zero."""
    if mode == "none":
        return features
    if mode == "l1":
        norms = np.abs(features).sum(axis=1)
    elif mode == "l2":
        norms = np.linalg.norm(features, axis=1)
    else:
        raise ConfigurationError(f"unknown feature_norm: {mode!r}")
    out = features.astype(np.float64, copy=True)
    nz = norms > 0.0
    out[nz] /= norms[nz, None]
    return out


def _stack_fits(num_nodes: int, dim: int, dp: int, budget_mb: int) -> bool:
    return (dp + 1) * num_nodes * dim * 8 <= budget_mb * (1 << 20)


def prepare_combined(graph: Graph, features: np.ndarray, *, dp: int, r: float,
                     temperature: float, stack_budget_mb: int = 2048):
    """Propagate, profile smoothness, and combine; returns (combined, profile)."""
    adj = normalize(graph, r)
    stationary = stationary_features(graph, features, r)
    if _stack_fits(graph.num_nodes, features.shape[1], dp, stack_budget_mb):
        stack = propagate(adj, features, dp)
        profile = smoothness_profile(stack, stationary, temperature)
        combined = combine(stack, profile.weights)
    else:
        profile = nsl_streaming(adj, features, stationary, dp)
        profile.weights = propagation_weights(profile, temperature)
        profile.temperature = float(temperature)
        combined = combine_streaming(adj, features, profile.weights)
    return combined, profile


def _propagated_step(graph: Graph, features: np.ndarray, *, k: int, r: float,
                     stack_budget_mb: int = 2048) -> np.ndarray:
    """A_hat^k X without necessarily retaining the stack."""
    adj = normalize(graph, r)
    if _stack_fits(graph.num_nodes, features.shape[1], k, stack_budget_mb):
        return propagate(adj, features, k).steps[k]
    cur = features
    for _ in range(k):
        cur = spmm(adj, cur)
    return cur


def _train_on(features: np.ndarray, labels: np.ndarray, splits: Splits,
              cfg: RunConfig, *, num_layers: int, seed: int) -> Metrics:
    num_classes = int(labels.max()) + 1
    model = ResidualMlp.create(
        features.shape[1], num_classes, num_layers=num_layers,
        hidden_dim=cfg.hidden, use_bias=cfg.use_bias,
        dropout_rate=cfg.dropout, seed=seed,
    )
    _, metrics = train(model, features, labels, splits, cfg.train_config(seed))
    return metrics


def run_train(dataset: Dataset, cfg: RunConfig):
    """Full pipeline on a loaded dataset; returns (result dict, model, metrics)."""
    t0 = time.perf_counter()
    feats = row_normalize(dataset.features, cfg.feature_norm)
    if cfg.baseline == "sgc":
        kth = _propagated_step(dataset.graph, feats, k=cfg.dp, r=cfg.r,
                               stack_budget_mb=cfg.stack_budget_mb)
        t1 = time.perf_counter()
        metrics = sgc_baseline(PropagatedStack((kth,)), 0, dataset.labels,
                               dataset.splits, cfg.train_config())
        model = None
    else:
        combined, _ = prepare_combined(
            dataset.graph, feats, dp=cfg.dp, r=cfg.r,
            temperature=cfg.temperature, stack_budget_mb=cfg.stack_budget_mb,
        )
        t1 = time.perf_counter()
        num_classes = dataset.num_classes
        model = ResidualMlp.create(
            combined.shape[1], num_classes, num_layers=cfg.dt,
            hidden_dim=cfg.hidden, use_bias=cfg.use_bias,
            dropout_rate=cfg.dropout, seed=cfg.seed,
        )
        model, metrics = train(model, combined, dataset.labels,
                               dataset.splits, cfg.train_config())
    t2 = time.perf_counter()
    result = {
        "command": "train",
        "config": cfg.to_dict(),
        "preprocess_seconds": t1 - t0,
        "train_seconds": t2 - t1,
        "metrics": metrics.to_dict(),
        "test_accuracy": metrics.test_accuracy,
        "best_epoch": metrics.best_epoch,
    }
    return result, model, metrics


def _default_caps(dp: int) -> list[int]:
    if dp <= 24:
        return list(range(dp + 1))
    caps = sorted({int(round(c)) for c in np.linspace(0, dp, 25)})
    return caps


def run_profile(dataset: Dataset, cfg: RunConfig) -> dict:
    """Smoothness curves: raw per-step GSL, combined GSL per depth cap,
    and per-step mean NSL of three degree terciles."""
    feats = row_normalize(dataset.features, cfg.feature_norm)
    adj = normalize(dataset.graph, cfg.r)
    stationary = stationary_features(dataset.graph, feats, cfg.r)
    profile = nsl_streaming(adj, feats, stationary, cfg.dp)
    profile.weights = propagation_weights(profile, cfg.temperature)
    profile.temperature = cfg.temperature

    caps = cfg.caps if cfg.caps else _default_caps(cfg.dp)
    for cap in caps:
        if not 0 <= cap <= cfg.dp:
            raise ConfigurationError(f"cap {cap} outside [0, {cfg.dp}]")
    combined_gsl = []
    for cap in caps:
        truncated = SmoothnessProfile(
            nsl=profile.nsl[:, :cap + 1],
            gsl=profile.gsl[:cap + 1],
        )
        w = propagation_weights(truncated, cfg.temperature)
        m = combine_streaming(adj, feats, w)
        combined_gsl.append(float(matrix_nsl(m, feats, stationary).mean()))

    order = np.argsort(dataset.graph.degrees, kind="stable")
    groups = np.array_split(order, 3)  # low, mid, high degree terciles
    tercile_nsl = np.stack([profile.nsl[g].mean(axis=0) for g in groups])

    return {
        "command": "profile",
        "config": cfg.to_dict(),
        "steps": list(range(cfg.dp + 1)),
        "gsl_raw": [float(g) for g in profile.gsl],
        "caps": list(caps),
        "gsl_combined": combined_gsl,
        "tercile_low": [float(x) for x in tercile_nsl[0]],
        "tercile_mid": [float(x) for x in tercile_nsl[1]],
        "tercile_high": [float(x) for x in tercile_nsl[2]],
        "profile": profile,
    }


_SWEEP_AXES = (
    ("dp", "dp_grid"),
    ("dt", "dt_grid"),
    ("keep_edges", "keep_edges_grid"),
    ("labels_per_class", "labels_per_class_grid"),
    ("mask_features", "mask_features_grid"),
)


def run_sweep(dataset: Dataset, cfg: RunConfig) -> list[dict]:
    """Grid sweep; one output row per cell with mean/std over num_seeds runs."""
    axes = [(name, list(getattr(cfg, attr)))
            for name, attr in _SWEEP_AXES if getattr(cfg, attr)]
    if not axes:
        raise ConfigurationError("empty sweep grid: provide at least one *_grid")
    if cfg.num_seeds < 1:
        raise ConfigurationError(f"num_seeds must be >= 1, got {cfg.num_seeds}")

    base_feats = row_normalize(dataset.features, cfg.feature_norm)
    cache: OrderedDict = OrderedDict()  # prepared features, keyed per structure

    def prepared(dp, keep, mask, seed):
        structural = keep < 1.0 or mask > 0.0
        key = (cfg.baseline, dp, keep, mask, seed if structural else None)
        if key in cache:
            cache.move_to_end(key)
            return cache[key]
        graph = dataset.graph if keep >= 1.0 else drop_edges(dataset.graph, keep, seed)
        feats = base_feats
        if mask > 0.0:
            masked = mask_features(replace(dataset, features=base_feats), mask, seed)
            feats = masked.features
        if cfg.baseline == "sgc":
            out = _propagated_step(graph, feats, k=dp, r=cfg.r,
                                   stack_budget_mb=cfg.stack_budget_mb)
        else:
            out, _ = prepare_combined(graph, feats, dp=dp, r=cfg.r,
                                      temperature=cfg.temperature,
                                      stack_budget_mb=cfg.stack_budget_mb)
        cache[key] = out
        if len(cache) > 4:
            cache.popitem(last=False)
        return out

    rows = []
    for cell in itertools.product(*(vals for _, vals in axes)):
        point = dict(zip((name for name, _ in axes), cell))
        dp = point.get("dp", cfg.dp)
        dt = point.get("dt", cfg.dt)
        keep = point.get("keep_edges", 1.0)
        mask = point.get("mask_features", 0.0)
        per_class = point.get("labels_per_class")
        accs = []
        for s in range(cfg.num_seeds):
            seed = cfg.seed + s
            feats = prepared(dp, keep, mask, seed)
            ds = dataset
            if per_class is not None:
                ds = subsample_labels(dataset, per_class, seed)
            num_layers = 1 if cfg.baseline == "sgc" else dt
            metrics = _train_on(feats, ds.labels, ds.splits, cfg,
                                num_layers=num_layers, seed=seed)
            accs.append(metrics.test_accuracy)
        accs = np.asarray(accs)
        row = {
            "dp": dp, "dt": dt, "keep_edges": keep,
            "labels_per_class": per_class if per_class is not None else "",
            "mask_features": mask,
            "num_seeds": cfg.num_seeds,
            "test_acc_mean": float(accs.mean()),
            "test_acc_std": float(accs.std()),
        }
        rows.append(row)
    return rows


def synthetic_node_data(n: int, cfg: RunConfig, seed: int):
    """Features, labels, and splits for benchmark graphs without data."""
    rng = np.random.default_rng(seed)
    features = rng.random((n, cfg.dim))
    labels = rng.integers(0, cfg.classes, size=n).astype(np.int64)
    n_train = min(cfg.train_nodes, max(1, n // 4))
    n_val = min(cfg.val_nodes, max(1, n // 4))
    n_test = min(cfg.test_nodes, max(1, n // 4))
    perm = rng.permutation(n)
    splits = Splits(
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train:n_train + n_val]),
        test=np.sort(perm[n_train + n_val:n_train + n_val + n_test]),
    )
    return features, labels, splits


def run_scale(cfg: RunConfig) -> list[dict]:
    """Generate G(n, p) graphs over a size range and time the full pipeline."""
    if not cfg.sizes:
        raise ConfigurationError("scale benchmark needs at least one graph size")
    rows = []
    for n in cfg.sizes:
        tracemalloc.start()
        t0 = time.perf_counter()
        graph = erdos_renyi(n, cfg.edge_prob, cfg.seed)
        features, labels, splits = synthetic_node_data(n, cfg, cfg.seed + 1)
        combined, _ = prepare_combined(
            graph, features, dp=cfg.dp, r=cfg.r,
            temperature=cfg.temperature, stack_budget_mb=cfg.stack_budget_mb,
        )
        t1 = time.perf_counter()
        metrics = _train_on(combined, labels, splits, cfg,
                            num_layers=cfg.dt, seed=cfg.seed)
        t2 = time.perf_counter()
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        rows.append({
            "num_nodes": n,
            "num_edges": graph.num_edges,
            "preprocess_seconds": t1 - t0,
            "train_seconds": t2 - t1,
            "peak_traced_mb": peak / (1 << 20),
            "max_rss_mb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0,
            "final_train_accuracy": metrics.train_accuracy[-1],
            "test_accuracy": metrics.test_accuracy,
            "seed": cfg.seed,
        })
    return rows


def load_run_dataset(cfg: RunConfig) -> Dataset:
    if not cfg.dataset:
        raise ConfigurationError("--dataset is required for this command")
    return load_dataset(cfg.dataset)
