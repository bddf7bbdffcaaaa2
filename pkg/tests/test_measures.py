import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedwad.errors import (
    NegativeWeightError,
    NonFiniteValueError,
    NonPsdCovarianceError,
    ShapeMismatchError,
    ZeroTotalMassError,
)
from fedwad.measures import (
    class_statistics,
    load_labeled_csv,
    load_measure,
    load_measure_csv,
    make_synthetic_labeled,
    measure_to_csv_text,
    new_discrete,
    new_gaussian,
    new_labeled,
    sample_gaussian,
    save_labeled_csv,
    save_measure,
    save_measure_csv,
)


class TestNewDiscrete:
    def test_uniform_default(self):
        m = new_discrete(np.array([[0.0], [1.0]]))
        assert np.array_equal(m.weights, [0.5, 0.5])

    def test_normalization_forced(self):
        m = new_discrete(np.array([[0.0], [1.0]]), [2.0, 2.0])
        assert np.array_equal(m.weights, [0.5, 0.5])

    def test_negative_weight_rejected(self):
        with pytest.raises(NegativeWeightError):
            new_discrete(np.array([[0.0], [1.0]]), [1.0, -1.0])

    def test_zero_total_mass_rejected(self):
        with pytest.raises(ZeroTotalMassError):
            new_discrete(np.array([[0.0], [1.0]]), [0.0, 0.0])

    def test_nan_coordinates_rejected(self):
        with pytest.raises(NonFiniteValueError):
            new_discrete(np.array([[np.nan], [1.0]]))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            new_discrete(np.zeros((3, 2)), [0.5, 0.5])

    @given(st.integers(1, 30), st.integers(1, 6), st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_simplex_invariant_fuzz(self, n, d, seed):
        rng = np.random.default_rng(seed)
        m = new_discrete(rng.standard_normal((n, d)), rng.random(n) + 1e-3)
        assert (m.weights >= 0).all()
        assert abs(m.weights.sum() - 1.0) <= 1e-9


class TestGaussian:
    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(NonPsdCovarianceError):
            new_gaussian([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])

    def test_negative_diagonal_rejected(self):
        with pytest.raises(NonPsdCovarianceError):
            new_gaussian([0.0], [[-1.0]])

    def test_sampling_deterministic(self):
        g = new_gaussian([0.0, 0.0], np.eye(2))
        a = sample_gaussian(g, 200, seed=9)
        b = sample_gaussian(g, 200, seed=9)
        assert np.array_equal(a.points, b.points)
        c = sample_gaussian(g, 200, seed=10)
        assert not np.array_equal(a.points, c.points)

    def test_zero_covariance_degenerate(self):
        g = new_gaussian([3.0, -1.0], np.zeros((2, 2)))
        m = sample_gaussian(g, 5, seed=0)
        assert np.allclose(m.points, [3.0, -1.0])

    def test_law_of_large_numbers(self):
        g = new_gaussian([2.0, -3.0], np.eye(2))
        m = sample_gaussian(g, 10000, seed=4)
        emp = m.points.mean(axis=0)
        assert np.abs(emp - g.mean).max() < 0.05

    def test_uniform_weights(self):
        g = new_gaussian([0.0], np.eye(1))
        m = sample_gaussian(g, 7, seed=0)
        assert np.allclose(m.weights, 1 / 7)


class TestLabeled:
    def test_zero_noise_class_stats(self):
        ds = make_synthetic_labeled([[0.0, 0.0], [5.0, 5.0]], 20, 0.0, seed=1)
        assert np.allclose(ds.class_stats[0][0], [0.0, 0.0])
        assert np.allclose(ds.class_stats[1][0], [5.0, 5.0])

    def test_label_histogram(self):
        ds = make_synthetic_labeled([[0.0]] * 4, 50, 1.0, seed=2)
        assert [int((ds.labels == c).sum()) for c in range(4)] == [50] * 4

    def test_deterministic(self):
        a = make_synthetic_labeled([[0.0], [4.0]], 30, 0.5, seed=3)
        b = make_synthetic_labeled([[0.0], [4.0]], 30, 0.5, seed=3)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_class_stats_match_recomputation(self):
        ds = make_synthetic_labeled([[0.0, 1.0], [2.0, 3.0]], 40, 0.7, seed=5)
        recomputed = class_statistics(ds.features, ds.labels)
        for label, (mean, cov) in recomputed.items():
            assert np.allclose(ds.class_stats[label][0], mean, atol=1e-9)
            assert np.allclose(ds.class_stats[label][1], cov, atol=1e-9)

    def test_every_label_needs_a_sample(self):
        with pytest.raises(ShapeMismatchError):
            new_labeled(np.zeros((0, 2)), np.zeros(0, dtype=int))


class TestCsvFormat:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(0)
        m = new_discrete(rng.standard_normal((13, 3)), rng.random(13) + 0.1)
        buf = io.StringIO(measure_to_csv_text(m))
        back = load_measure_csv(buf)
        assert np.array_equal(m.points, back.points)
        assert np.array_equal(m.weights, back.weights)

    def test_header_required(self):
        with pytest.raises(ShapeMismatchError):
            load_measure_csv(io.StringIO("1.0,2.0\n3.0,4.0\n"))

    def test_weight_column_optional(self):
        m = load_measure_csv(io.StringIO("x0,x1\n0.0,0.0\n1.0,1.0\n"))
        assert np.allclose(m.weights, [0.5, 0.5])

    def test_labeled_round_trip(self, tmp_path):
        ds = make_synthetic_labeled([[0.0, 0.0], [3.0, 3.0]], 10, 0.2, seed=7)
        path = tmp_path / "ds.csv"
        save_labeled_csv(ds, path)
        back = load_labeled_csv(path)
        assert np.array_equal(ds.features, back.features)
        assert np.array_equal(ds.labels, back.labels)

    def test_labeled_requires_label_column(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("x0,x1\n0.0,0.0\n")
        with pytest.raises(ShapeMismatchError):
            load_labeled_csv(path)


class TestBinaryFormat:
    def test_fwm_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        m = new_discrete(rng.standard_normal((9, 4)), rng.random(9) + 0.1)
        path = tmp_path / "m.fwm"
        save_measure(m, path)
        back = load_measure(path)
        assert np.array_equal(m.points, back.points)
        assert np.array_equal(m.weights, back.weights)

    def test_fwm_matches_wire_payload(self, tmp_path):
        # the on-disk binary format IS the network measure blob
        from fedwad.netproto import encode_measure

        m = new_discrete(np.array([[1.0, 2.0], [3.0, 4.0]]))
        path = tmp_path / "m.fwm"
        save_measure(m, path)
        assert path.read_bytes() == encode_measure(m)

    def test_extension_dispatch(self, tmp_path):
        m = new_discrete(np.array([[0.5, 0.25]]))
        for name in ("m.csv", "m.fwm"):
            p = tmp_path / name
            save_measure(m, p)
            back = load_measure(p)
            assert np.array_equal(back.points, m.points)


class TestImmutability:
    def test_discrete_arrays_readonly(self):
        m = new_discrete(np.array([[0.0], [1.0]]))
        with pytest.raises(ValueError):
            m.points[0, 0] = 9.0
        with pytest.raises(ValueError):
            m.weights[0] = 9.0

    def test_gaussian_arrays_readonly(self):
        g = new_gaussian([0.0], [[1.0]])
        with pytest.raises(ValueError):
            g.mean[0] = 1.0
