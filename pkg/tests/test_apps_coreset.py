import numpy as np
import pytest

from fedwad.apps.coreset import (
    ClientPool,
    Coreset,
    coreset_fit,
    coreset_fit_federated,
    knn1_classify,
    label_coreset,
)
from fedwad.errors import ConfigError, DimensionMismatchError, KTooLargeError
from fedwad.measures import new_discrete, new_labeled
from fedwad.ot_core import cost_matrix, solve_exact
from fedwad.protocol import BoxInit, FedConfig, FixedT


def data_objective(points, data):
    cs = new_discrete(points)
    plan = solve_exact(cs.weights, data.weights, cost_matrix(cs, data, 2))
    return plan.objective


def four_modes(centers, per_mode, noise, seed):
    rng = np.random.default_rng(seed)
    return [c + noise * rng.standard_normal((per_mode, 2)) for c in centers]


class TestCoresetFit:
    def test_k_equals_n_is_a_fixed_point(self):
        rng = np.random.default_rng(0)
        data = new_discrete(rng.standard_normal((12, 2)))
        cs = coreset_fit(data, 12, steps=5, seed=3)
        assert cs.objective_trace[0] <= 1e-12
        assert cs.objective_trace[-1] <= 1e-12
        assert np.allclose(np.sort(cs.points, axis=0),
                           np.sort(data.points, axis=0))

    def test_k1_finds_the_mean(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((40, 3)) + np.array([2.0, -1.0, 0.5])
        data = new_discrete(pts)
        cs = coreset_fit(data, 1, steps=50, seed=0)
        assert np.linalg.norm(cs.points[0] - pts.mean(axis=0)) <= 1e-3

    def test_mode_recovery_10x10(self):
        centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
        for seed in range(5):
            clouds = four_modes(centers, 60, 0.3, seed)
            data = new_discrete(np.vstack(clouds))
            cs = coreset_fit(data, 4, steps=300, seed=seed)
            for c in centers:
                assert np.linalg.norm(cs.points - c, axis=1).min() <= 1.0

    def test_objective_trace_non_increasing(self):
        rng = np.random.default_rng(2)
        data = new_discrete(rng.standard_normal((25, 2)) * 2.0)
        cs = coreset_fit(data, 5, steps=60, seed=1)
        trace = cs.objective_trace
        assert len(trace) >= 2
        for prev, cur in zip(trace, trace[1:]):
            assert cur <= prev + 1e-12

    def test_k_too_large(self):
        rng = np.random.default_rng(3)
        data = new_discrete(rng.standard_normal((5, 2)))
        with pytest.raises(KTooLargeError):
            coreset_fit(data, 6)

    def test_bad_k(self):
        rng = np.random.default_rng(4)
        data = new_discrete(rng.standard_normal((5, 2)))
        with pytest.raises(ConfigError):
            coreset_fit(data, 0)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        data = new_discrete(rng.standard_normal((20, 2)))
        a = coreset_fit(data, 4, steps=30, seed=9)
        b = coreset_fit(data, 4, steps=30, seed=9)
        assert np.array_equal(a.points, b.points)
        assert a.objective_trace == b.objective_trace


class TestClientPool:
    def test_needs_a_client(self):
        with pytest.raises(ConfigError):
            ClientPool(clients=())

    def test_subsample_caps_measure_size(self):
        rng = np.random.default_rng(6)
        data = new_discrete(rng.standard_normal((50, 2)))
        pool = ClientPool(clients=(data,), subsample_size=8)
        m = pool.measure(0, np.random.default_rng(0))
        assert m.n == 8
        # without an rng the full dataset comes back
        assert pool.measure(0).n == 50

    def test_dataset_requires_labels(self):
        rng = np.random.default_rng(7)
        data = new_discrete(rng.standard_normal((10, 2)))
        pool = ClientPool(clients=(data,))
        with pytest.raises(ConfigError):
            pool.dataset(0)


class TestCoresetFitFederated:
    def test_one_client_matches_centralized(self):
        # with a single client the smoothed objective has the same
        # stationary points as the true one (the interpolant is a t-point
        # between the coreset and the data), so both fits should land on
        # minimizers of comparable quality
        rng = np.random.default_rng(42)
        pts = rng.standard_normal((30, 2)) * 1.5 + 3.0
        data = new_discrete(pts)
        cent = coreset_fit(data, 3, steps=80, seed=1)
        fed_cfg = FedConfig(rounds=10, interp_mode="exact", support_size=3,
                            t_policy=FixedT(0.5), xi0_policy=BoxInit(seed=0))
        pool = ClientPool(clients=(data,))
        fed = coreset_fit_federated(pool, 3, rounds=80, learning_rate=1.0,
                                    fed=fed_cfg, seed=1)
        oc = data_objective(cent.points, data)
        of = data_objective(fed.points, data)
        assert abs(of - oc) / oc <= 0.10

    def test_single_mode_clients_recover_all_modes(self):
        # one disjoint mode per client: the pooled-mixture gradient must
        # still park a coreset point at each mode
        centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0], [6.0, 6.0]])
        clouds = four_modes(centers, 80, 0.3, seed=0)
        pool = ClientPool(clients=tuple(new_discrete(c) for c in clouds))
        fed_cfg = FedConfig(rounds=25, interp_mode="approx", support_size=10,
                            t_policy=FixedT(0.9), xi0_policy=BoxInit(seed=0))
        cs = coreset_fit_federated(pool, 4, rounds=40, learning_rate=1.0,
                                   fed=fed_cfg, seed=0)
        for c in centers:
            assert np.linalg.norm(cs.points - c, axis=1).min() <= 1.0

    def test_bad_clients_per_round(self):
        rng = np.random.default_rng(8)
        pool = ClientPool(clients=(new_discrete(rng.standard_normal((6, 2))),))
        with pytest.raises(ConfigError):
            coreset_fit_federated(pool, 2, clients_per_round=0, rounds=2)
        with pytest.raises(ConfigError):
            coreset_fit_federated(pool, 2, clients_per_round=5, rounds=2)

    def test_bad_rounds(self):
        rng = np.random.default_rng(9)
        pool = ClientPool(clients=(new_discrete(rng.standard_normal((6, 2))),))
        with pytest.raises(ConfigError):
            coreset_fit_federated(pool, 2, rounds=0)

    def test_mixed_dimensions_rejected(self):
        rng = np.random.default_rng(10)
        pool = ClientPool(clients=(new_discrete(rng.standard_normal((6, 2))),
                                   new_discrete(rng.standard_normal((6, 3)))))
        with pytest.raises(DimensionMismatchError):
            coreset_fit_federated(pool, 2, rounds=2)

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        pool = ClientPool(clients=(new_discrete(rng.standard_normal((15, 2))),
                                   new_discrete(rng.standard_normal((15, 2)) + 3)))
        fed_cfg = FedConfig(rounds=4, interp_mode="approx", support_size=4,
                            t_policy=FixedT(0.5), xi0_policy=BoxInit(seed=0))
        a = coreset_fit_federated(pool, 3, rounds=5, fed=fed_cfg, seed=2)
        b = coreset_fit_federated(pool, 3, rounds=5, fed=fed_cfg, seed=2)
        assert np.array_equal(a.points, b.points)


class TestLabelCoreset:
    def test_exact_match_takes_that_label(self):
        feats = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 0.0]])
        ds = new_labeled(feats, np.array([3, 1, 4]))
        cs = Coreset(points=np.array([[5.0, 5.0]]))
        labeled = label_coreset(cs, ds)
        assert labeled.labels.tolist() == [1]

    def test_tie_goes_to_lowest_index(self):
        feats = np.full((10, 2), 100.0)
        feats[5] = [1.0, 0.0]
        feats[9] = [-1.0, 0.0]
        labels = np.zeros(10, dtype=np.int64)
        labels[5] = 2
        labels[9] = 7
        ds = new_labeled(feats, labels)
        cs = Coreset(points=np.array([[0.0, 0.0]]))
        assert label_coreset(cs, ds).labels.tolist() == [2]

    def test_blob_labels_all_correct(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal((50, 2)) * 0.4
        b = rng.standard_normal((50, 2)) * 0.4 + np.array([8.0, 8.0])
        ds = new_labeled(np.vstack([a, b]),
                         np.repeat([0, 1], 50))
        cs = coreset_fit(new_discrete(ds.features), 4, steps=60, seed=0)
        labeled = label_coreset(cs, ds)
        for pt, lab in zip(labeled.points, labeled.labels):
            expect = 0 if np.linalg.norm(pt) < np.linalg.norm(pt - 8.0) else 1
            assert lab == expect

    def test_dimension_mismatch(self):
        ds = new_labeled(np.zeros((3, 3)), np.array([0, 1, 2]))
        cs = Coreset(points=np.zeros((2, 2)))
        with pytest.raises(DimensionMismatchError):
            label_coreset(cs, ds)


class TestKnn1Classify:
    def labeled_coreset(self, pts, labels):
        return Coreset(points=np.asarray(pts, dtype=np.float64),
                       labels=np.asarray(labels))

    def test_query_on_a_point_returns_its_label(self):
        cs = self.labeled_coreset([[0.0, 0.0], [4.0, 4.0]], [7, 9])
        assert knn1_classify([cs], np.array([4.0, 4.0])) == 9

    def test_tie_goes_to_first_in_pool_order(self):
        a = self.labeled_coreset([[1.0, 0.0]], [5])
        b = self.labeled_coreset([[-1.0, 0.0]], [6])
        assert knn1_classify([a, b], np.array([0.0, 0.0])) == 5
        assert knn1_classify([b, a], np.array([0.0, 0.0])) == 6

    def test_two_client_blob_accuracy(self):
        rng = np.random.default_rng(13)
        mean1 = np.array([8.0, 8.0])
        pooled = []
        for client_seed in (0, 1):
            crng = np.random.default_rng(client_seed)
            f0 = crng.standard_normal((60, 2)) * 0.5
            f1 = crng.standard_normal((60, 2)) * 0.5 + mean1
            ds = new_labeled(np.vstack([f0, f1]), np.repeat([0, 1], 60))
            cs = coreset_fit(new_discrete(ds.features), 4, steps=60,
                             seed=client_seed)
            pooled.append(label_coreset(cs, ds))
        queries = np.vstack([rng.standard_normal((100, 2)) * 0.5,
                             rng.standard_normal((100, 2)) * 0.5 + mean1])
        truth = np.repeat([0, 1], 100)
        pred = knn1_classify(pooled, queries)
        assert (pred == truth).mean() >= 0.95

    def test_empty_pool_rejected(self):
        with pytest.raises(ConfigError):
            knn1_classify([], np.array([0.0, 0.0]))

    def test_unlabeled_coreset_rejected(self):
        cs = Coreset(points=np.zeros((2, 2)))
        with pytest.raises(ConfigError):
            knn1_classify([cs], np.array([0.0, 0.0]))

    def test_query_dimension_checked(self):
        cs = self.labeled_coreset([[0.0, 0.0]], [1])
        with pytest.raises(DimensionMismatchError):
            knn1_classify([cs], np.array([0.0, 0.0, 0.0]))
