import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedwad.errors import CovarianceMismatchError, InvalidTError
from fedwad.geodesics import (
    gaussian_interp,
    gaussian_w2,
    interp_approx,
    interp_exact,
)
from fedwad.measures import new_discrete, new_gaussian, sample_gaussian
from fedwad.ot_core import wasserstein
from helpers import atoms_equal, random_measure


def unit_atom(*coords):
    return new_discrete(np.array([coords], dtype=np.float64))


class TestInterpExact:
    def test_endpoint_t0(self):
        rng = np.random.default_rng(0)
        mu = random_measure(rng, 5, 2)
        nu = random_measure(rng, 4, 2)
        assert atoms_equal(interp_exact(mu, nu, 0.0), mu, tol=1e-9)

    def test_endpoint_t1(self):
        rng = np.random.default_rng(1)
        mu = random_measure(rng, 5, 2)
        nu = random_measure(rng, 4, 2)
        assert atoms_equal(interp_exact(mu, nu, 1.0), nu, tol=1e-9)

    def test_two_unit_atoms_midpoint(self):
        xi = interp_exact(unit_atom(0.0), unit_atom(1.0), 0.5)
        assert xi.n == 1
        assert xi.points[0, 0] == 0.5
        assert xi.weights[0] == 1.0

    def test_geodesic_identity_and_constant_speed(self):
        rng = np.random.default_rng(2)
        mu = random_measure(rng, 5, 2)
        nu = random_measure(rng, 5, 2)
        w = wasserstein(mu, nu, 2)
        for t in (0.2, 0.5, 0.8):
            xi = interp_exact(mu, nu, t)
            left = wasserstein(mu, xi, 2)
            right = wasserstein(xi, nu, 2)
            assert abs(left + right - w) <= 1e-7
            assert abs(left - t * w) <= 1e-7

    def test_support_bound(self):
        rng = np.random.default_rng(3)
        mu = random_measure(rng, 7, 2)
        nu = random_measure(rng, 6, 2)
        xi = interp_exact(mu, nu, 0.4)
        assert xi.n <= 7 + 6 - 1

    def test_invalid_t(self):
        mu = unit_atom(0.0)
        for bad in (-0.1, 1.1, float("nan")):
            with pytest.raises(InvalidTError):
                interp_exact(mu, mu, bad)

    @given(st.integers(2, 10), st.integers(0, 10**6),
           st.floats(0.05, 0.95))
    @settings(max_examples=30, deadline=None)
    def test_geodesic_identity_fuzz(self, n, seed, t):
        rng = np.random.default_rng(seed)
        mu = random_measure(rng, n, 2)
        nu = random_measure(rng, n, 2)
        xi = interp_exact(mu, nu, t)
        w = wasserstein(mu, nu, 2)
        assert abs(wasserstein(mu, xi, 2) + wasserstein(xi, nu, 2) - w) <= 1e-7


class TestInterpApprox:
    def test_equals_exact_for_uniform_equal_sizes(self):
        rng = np.random.default_rng(4)
        for n in (2, 5, 11):
            mu = random_measure(rng, n, 2, uniform=True)
            nu = random_measure(rng, n, 2, uniform=True)
            for t in (0.1, 0.5, 0.9):
                assert atoms_equal(interp_approx(mu, nu, t),
                                   interp_exact(mu, nu, t), tol=1e-9)

    def test_keeps_smaller_support(self):
        rng = np.random.default_rng(5)
        mu = random_measure(rng, 3, 2)
        nu = random_measure(rng, 10, 2)
        assert interp_approx(mu, nu, 0.5).n == 3
        assert interp_approx(nu, mu, 0.5).n == 3

    def test_t0_is_anchor(self):
        rng = np.random.default_rng(6)
        mu = random_measure(rng, 4, 2)
        nu = random_measure(rng, 9, 2)
        xi = interp_approx(mu, nu, 0.0)
        assert np.allclose(xi.points, mu.points)
        assert np.allclose(xi.weights, mu.weights)

    def test_anchor_weights_carried(self):
        rng = np.random.default_rng(7)
        mu = random_measure(rng, 4, 2)
        nu = random_measure(rng, 9, 2)
        xi = interp_approx(mu, nu, 0.3)
        assert np.allclose(sorted(xi.weights), sorted(mu.weights))

    @given(st.integers(2, 20), st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_uniform_equivalence_fuzz(self, n, seed):
        rng = np.random.default_rng(seed)
        mu = random_measure(rng, n, 3, uniform=True)
        nu = random_measure(rng, n, 3, uniform=True)
        t = float(rng.integers(1, 10)) / 10.0
        assert atoms_equal(interp_approx(mu, nu, t),
                           interp_exact(mu, nu, t), tol=1e-9)


class TestGaussianBackend:
    def test_midpoint_mean(self):
        g1 = new_gaussian([0.0, 0.0], np.eye(2))
        g2 = new_gaussian([2.0, 0.0], np.eye(2))
        mid = gaussian_interp(g1, g2, 0.5)
        assert np.allclose(mid.mean, [1.0, 0.0])
        assert np.array_equal(mid.covariance, g1.covariance)

    def test_t0_returns_first(self):
        g1 = new_gaussian([1.0], [[2.0]])
        g2 = new_gaussian([5.0], [[2.0]])
        assert np.allclose(gaussian_interp(g1, g2, 0.0).mean, g1.mean)

    def test_midpoint_iteration_halves_gap(self):
        target = new_gaussian([4.0, 4.0], np.eye(2))
        g = new_gaussian([0.0, 0.0], np.eye(2))
        gap = np.linalg.norm(g.mean - target.mean)
        for _ in range(6):
            g = gaussian_interp(g, target, 0.5)
            gap_next = np.linalg.norm(g.mean - target.mean)
            assert abs(gap_next - gap / 2) <= 1e-12
            gap = gap_next

    def test_covariance_mismatch(self):
        g1 = new_gaussian([0.0], [[1.0]])
        g2 = new_gaussian([1.0], [[2.0]])
        with pytest.raises(CovarianceMismatchError):
            gaussian_interp(g1, g2, 0.5)
        with pytest.raises(CovarianceMismatchError):
            gaussian_w2(g1, g2)

    def test_w2_is_mean_distance(self):
        g1 = new_gaussian([0.0, 0.0], 2.0 * np.eye(2))
        g2 = new_gaussian([3.0, 4.0], 2.0 * np.eye(2))
        assert gaussian_w2(g1, g2) == 5.0
        assert gaussian_w2(g1, g1) == 0.0

    @pytest.mark.slow
    def test_empirical_w2_near_analytic(self):
        g1 = new_gaussian([0.0, 0.0], np.eye(2))
        g2 = new_gaussian([4.0, 0.0], np.eye(2))
        mu = sample_gaussian(g1, 5000, seed=12)
        nu = sample_gaussian(g2, 5000, seed=13)
        assert abs(wasserstein(mu, nu, 2) - 4.0) < 0.15
