import csv

import numpy as np
import pytest

from dgmlp import DimensionError, ParameterError, SmoothnessProfile, build_graph, \
    combine, combine_streaming, compute_nsl, cosine_similarity, matrix_nsl, \
    normalize, nsl_streaming, propagate, propagation_weights, smoothness_profile, \
    stationary_features
from dgmlp.propagation import PropagatedStack
from dgmlp.smoothness import write_gsl_csv, write_node_profile_csv

from conftest import random_graph


class TestCosine:
    def test_identical(self):
        assert cosine_similarity([1, 0], [1, 0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_zero_norm_rule(self):
        assert cosine_similarity([0, 0], [3, 4]) == 0.0
        assert cosine_similarity([3, 4], [0, 0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            cosine_similarity([1, 2], [1, 2, 3])

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_symmetry_and_scale_invariance(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal(6), rng.standard_normal(6)
        lam = float(rng.uniform(0.1, 10.0))
        assert cosine_similarity(a, b) == pytest.approx(cosine_similarity(b, a), abs=1e-15)
        assert cosine_similarity(lam * a, b) == pytest.approx(cosine_similarity(a, b), abs=1e-12)


class TestComputeNsl:
    def test_unsmoothed_orthogonal(self):
        # x^k = x^0 and stationary orthogonal to it -> nsl = 1 * (1 - 0) = 1
        x0 = np.array([[1.0, 0.0], [0.0, 2.0]])
        stat = np.array([[0.0, 1.0], [3.0, 0.0]])
        profile = compute_nsl(PropagatedStack((x0, x0.copy())), stat)
        assert np.allclose(profile.nsl[:, 1], 1.0)

    def test_fully_smoothed(self):
        # x^k = x^inf -> beta = 1 -> nsl = 0
        x0 = np.array([[1.0, 0.0], [0.0, 1.0]])
        stat = np.array([[0.5, 0.5], [0.5, 0.5]])
        profile = compute_nsl(PropagatedStack((x0, stat.copy())), stat)
        assert np.allclose(profile.nsl[:, 1], 0.0)

    def test_two_node_hand_example(self):
        # one step reaches stationarity on the single-edge graph
        g = build_graph([(0, 1)], 2)
        stack = propagate(normalize(g, 0.5), np.eye(2), 1)
        stat = stationary_features(g, np.eye(2), 0.5)
        profile = compute_nsl(stack, stat)
        assert np.allclose(profile.nsl[:, 1], 0.0, atol=1e-15)
        # at k = 0, alpha = 1 so nsl = 1 - cos(x0, xinf) = 1 - sqrt(2)/2
        assert profile.nsl[0, 0] == pytest.approx(1 - np.sqrt(2) / 2, abs=1e-15)

    def test_gsl_is_exact_mean(self):
        g = random_graph(20, 50, 0)
        x = np.random.default_rng(1).random((20, 4))
        stack = propagate(normalize(g, 0.5), x, 4)
        profile = compute_nsl(stack, stationary_features(g, x, 0.5))
        assert np.array_equal(profile.gsl, profile.nsl.mean(axis=0))

    def test_step0_identity(self):
        # alpha = 1 at k = 0, so nsl[:, 0] = 1 - cos(x0, xinf) exactly
        g = random_graph(15, 40, 2)
        x = np.random.default_rng(3).random((15, 4))
        stack = propagate(normalize(g, 0.5), x, 2)
        stat = stationary_features(g, x, 0.5)
        profile = compute_nsl(stack, stat)
        expected = np.array([1 - cosine_similarity(x[v], stat[v]) for v in range(15)])
        assert np.abs(profile.nsl[:, 0] - expected).max() < 1e-12

    def test_shape_mismatch(self):
        stack = PropagatedStack((np.zeros((3, 2)),))
        with pytest.raises(DimensionError):
            compute_nsl(stack, np.zeros((4, 2)))


class TestPropagationWeights:
    def _profile(self, nsl):
        nsl = np.asarray(nsl, dtype=np.float64)
        return SmoothnessProfile(nsl=nsl, gsl=nsl.mean(axis=0))

    def test_constant_rows_uniform(self):
        w = propagation_weights(self._profile([[0.4, 0.4, 0.4]]), 1.0)
        assert np.allclose(w, 1 / 3)
        w = propagation_weights(self._profile([[0.2, 0.2]]), 0.05)
        assert np.allclose(w, 0.5)

    def test_softmax_frozen_value(self):
        w = propagation_weights(self._profile([[1.0, 0.0]]), 1.0)
        e = np.e
        assert w[0, 0] == pytest.approx(e / (e + 1), abs=1e-12)   # 0.73106
        assert w[0, 1] == pytest.approx(1 / (e + 1), abs=1e-12)   # 0.26894

    def test_hard_temperature_one_hot(self):
        w = propagation_weights(self._profile([[0.9, 0.1, 0.1]]), 0.001)
        assert abs(w[0, 0] - 1.0) < 1e-6
        assert w[0, 1] < 1e-6 and w[0, 2] < 1e-6

    def test_bad_temperature(self):
        for t in (0.0, -1.0):
            with pytest.raises(ParameterError):
                propagation_weights(self._profile([[1.0, 0.0]]), t)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_rows_sum_to_one(self, seed):
        nsl = np.random.default_rng(seed).random((50, 9))
        w = propagation_weights(self._profile(nsl), 0.7)
        assert np.abs(w.sum(axis=1) - 1.0).max() < 1e-12
        assert (w >= 0.0).all()

    def test_high_temperature_approaches_uniform(self):
        nsl = np.random.default_rng(2).random((10, 5))
        w = propagation_weights(self._profile(nsl), 1e8)
        assert np.abs(w - 0.2).max() < 1e-6

    def test_argmax_invariant_under_scaling(self):
        nsl = np.random.default_rng(3).random((20, 6))
        w1 = propagation_weights(self._profile(nsl), 0.01)
        w2 = propagation_weights(self._profile(3.7 * nsl), 0.01)
        assert np.array_equal(w1.argmax(axis=1), w2.argmax(axis=1))


class TestCombine:
    def _stack(self, seed, n=12, d=3, k=4):
        g = random_graph(n, 3 * n, seed)
        x = np.random.default_rng(seed + 10).random((n, d))
        return propagate(normalize(g, 0.5), x, k)

    def test_one_hot_selects_step(self):
        stack = self._stack(0)
        for j in range(stack.max_step + 1):
            w = np.zeros((stack.num_nodes, stack.max_step + 1))
            w[:, j] = 1.0
            assert np.array_equal(combine(stack, w), stack.steps[j])

    def test_k0_passthrough(self):
        x = np.random.default_rng(1).random((5, 3))
        stack = PropagatedStack((x,))
        assert np.array_equal(combine(stack, np.ones((5, 1))), x)

    def test_uniform_average(self):
        stack = self._stack(2, k=1)
        w = np.full((stack.num_nodes, 2), 0.5)
        expected = (stack.steps[0] + stack.steps[1]) / 2
        assert np.abs(combine(stack, w) - expected).max() < 1e-15

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_convex_envelope(self, seed):
        stack = self._stack(seed)
        nsl = np.random.default_rng(seed).random((stack.num_nodes, stack.max_step + 1))
        w = propagation_weights(SmoothnessProfile(nsl=nsl, gsl=nsl.mean(0)), 0.5)
        out = combine(stack, w)
        cube = np.stack(stack.steps)  # (K+1, N, d)
        assert (out >= cube.min(axis=0) - 1e-12).all()
        assert (out <= cube.max(axis=0) + 1e-12).all()

    def test_shape_mismatch(self):
        stack = self._stack(3)
        with pytest.raises(DimensionError):
            combine(stack, np.ones((stack.num_nodes, stack.max_step + 3)))


class TestStreamingEquivalence:
    def test_nsl_streaming_matches_stack(self):
        g = random_graph(25, 70, 5)
        x = np.random.default_rng(6).random((25, 4))
        adj = normalize(g, 0.5)
        stat = stationary_features(g, x, 0.5)
        stacked = compute_nsl(propagate(adj, x, 6), stat)
        streamed = nsl_streaming(adj, x, stat, 6)
        assert np.array_equal(stacked.nsl, streamed.nsl)
        assert np.array_equal(stacked.gsl, streamed.gsl)

    def test_combine_streaming_matches_stack(self):
        g = random_graph(25, 70, 7)
        x = np.random.default_rng(8).random((25, 4))
        adj = normalize(g, 0.5)
        stack = propagate(adj, x, 6)
        stat = stationary_features(g, x, 0.5)
        profile = smoothness_profile(stack, stat, 0.5)
        assert np.array_equal(
            combine(stack, profile.weights),
            combine_streaming(adj, x, profile.weights),
        )


class TestMatrixNsl:
    def test_matches_per_step_nsl(self):
        g = random_graph(18, 44, 9)
        x = np.random.default_rng(10).random((18, 5))
        adj = normalize(g, 0.5)
        stack = propagate(adj, x, 3)
        stat = stationary_features(g, x, 0.5)
        profile = compute_nsl(stack, stat)
        for k, xk in enumerate(stack.steps):
            assert np.array_equal(matrix_nsl(xk, x, stat), profile.nsl[:, k])


class TestCsvExport:
    def test_round_trip(self, tmp_path):
        g = random_graph(6, 12, 0)
        x = np.random.default_rng(0).random((6, 3))
        stack = propagate(normalize(g, 0.5), x, 2)
        profile = smoothness_profile(stack, stationary_features(g, x, 0.5), 1.0)

        node_csv = tmp_path / "profile.csv"
        gsl_csv = tmp_path / "gsl.csv"
        write_node_profile_csv(profile, node_csv)
        write_gsl_csv(profile, gsl_csv)

        with open(node_csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 6 * 3
        for row in rows:
            v, k = int(row["node_id"]), int(row["step"])
            assert float(row["nsl"]) == profile.nsl[v, k]
            assert float(row["weight"]) == profile.weights[v, k]

        with open(gsl_csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["gsl"]) for r in rows] == list(profile.gsl)

    def test_export_requires_weights(self, tmp_path):
        profile = SmoothnessProfile(nsl=np.zeros((2, 2)), gsl=np.zeros(2))
        with pytest.raises(ParameterError):
            write_node_profile_csv(profile, tmp_path / "x.csv")
