import numpy as np
import pytest

from lnamor.lib.errors import DimensionMismatch, IntegrationError
from lnamor.lib.linalg import solve_lyapunov
from lnamor.lib.simulate import (
    TrajectoryBundle,
    integrate,
    propagate_moments,
    trajectory_header,
    trajectory_rows,
)
from lnamor.lib.simulate.moments import pack_upper, unpack_upper


class TestIntegrate:
    def test_exponential_decay(self):
        grid = np.linspace(0.0, 2.0, 11)
        states = integrate(lambda t, y: -y, np.array([1.0]), grid)
        np.testing.assert_allclose(states[:, 0], np.exp(-grid), rtol=1e-7)

    def test_stiff_fallback(self):
        """A stiff problem exceeding the explicit budget still integrates"""
        grid = np.linspace(0.0, 1.0, 5)
        states = integrate(
            lambda t, y: np.array([-1e5 * (y[0] - np.cos(t))]),
            np.array([0.0]),
            grid,
            max_evaluations=500,
        )
        np.testing.assert_allclose(states[1:, 0], np.cos(grid[1:]), atol=1e-4)

    def test_grid_must_increase(self):
        with pytest.raises(IntegrationError):
            integrate(lambda t, y: -y, np.ones(1), np.array([0.0, 1.0, 0.5]))


class TestPropagateMoments:
    def test_scalar_ornstein_uhlenbeck(self):
        """m = e^-t and P = (1 - e^-2t) / 2 for A = -1, B = 1"""
        grid = np.linspace(0.0, 3.0, 31)
        bundle = propagate_moments(-np.eye(1), np.eye(1), np.ones(1), np.zeros((1, 1)), grid)
        np.testing.assert_allclose(bundle.mean[:, 0], np.exp(-grid), rtol=1e-7)
        np.testing.assert_allclose(
            bundle.covariance[:, 0, 0], (1 - np.exp(-2 * grid)) / 2, atol=1e-9
        )

    def test_stationary_covariance_is_fixed(self, toy_model, toy_steady_state):
        """Starting from the Lyapunov solution the covariance stays put"""
        A = toy_model.drift(toy_steady_state)
        B = toy_model.diffusion(toy_steady_state)
        P = solve_lyapunov(A, B @ B.T)
        bundle = propagate_moments(A, B, np.zeros(4), P, np.linspace(0.0, 5.0, 6))
        for covariance in bundle.covariance:
            np.testing.assert_allclose(covariance, P, atol=1e-7 * np.linalg.norm(P))

    def test_time_varying_drift(self):
        """A(t) = -(1 + t) gives m = exp(-t - t^2/2)"""
        grid = np.linspace(0.0, 2.0, 21)
        bundle = propagate_moments(
            lambda t: np.array([[-(1.0 + t)]]),
            np.zeros((1, 1)),
            np.ones(1),
            np.zeros((1, 1)),
            grid,
        )
        np.testing.assert_allclose(bundle.mean[:, 0], np.exp(-grid - grid**2 / 2), rtol=1e-7)

    def test_initial_covariance_shape(self):
        with pytest.raises(DimensionMismatch):
            propagate_moments(-np.eye(2), np.eye(2), np.zeros(2), np.eye(3), [0.0, 1.0])


class TestTrajectoryBundle:
    def test_rejects_indefinite_covariance(self):
        with pytest.raises(IntegrationError):
            TrajectoryBundle(
                time_grid=np.array([0.0]),
                mean=np.zeros((1, 2)),
                covariance=np.array([np.diag([1.0, -1.0])]),
            )

    def test_output_projection(self):
        bundle = TrajectoryBundle(
            time_grid=np.array([0.0]),
            mean=np.array([[1.0, 2.0]]),
            covariance=np.array([np.diag([1.0, 4.0])]),
        )
        out = bundle.output(np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(out.mean, [[3.0]])
        np.testing.assert_allclose(out.covariance, [[[5.0]]])

    def test_packing(self):
        P = np.array([[1.0, 2.0], [2.0, 3.0]])
        np.testing.assert_array_equal(pack_upper(P), [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(unpack_upper(pack_upper(P), 2), P)

    def test_csv_layout(self):
        """Rows follow t, means, then the upper covariance triangle row by row"""
        assert trajectory_header(2) == ["t", "mean_1", "mean_2", "cov_11", "cov_12", "cov_22"]
        bundle = TrajectoryBundle(
            time_grid=np.array([0.5]),
            mean=np.array([[1.0, 2.0]]),
            covariance=np.array([[[3.0, 0.5], [0.5, 4.0]]]),
        )
        assert trajectory_rows(bundle) == [[0.5, 1.0, 2.0, 3.0, 0.5, 4.0]]
