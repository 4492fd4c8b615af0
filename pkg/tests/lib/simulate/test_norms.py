import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from lnamor.lib.errors import NonzeroFeedthrough, NotStable
from lnamor.lib.realization import Realization
from lnamor.lib.simulate import (
    dc_gain,
    difference,
    frequency_response,
    h2_norm,
    hinf_norm,
)
from lnamor.lib.simulate.norms import frequency_grid, h2_norm_quadrature


def first_order():
    return Realization([[-1.0]], [[1.0]], [[1.0]], [[0.0]])


def resonant(zeta=0.1):
    """1 / (s^2 + 2 zeta s + 1)."""
    return Realization([[0.0, 1.0], [-1.0, -2 * zeta]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])


def gain(r, omega):
    return float(np.linalg.norm(frequency_response(r, [omega])[0], 2))


def refined_peak(r):
    """Grid peak refined by a bounded scalar search around the best grid point."""
    omegas = frequency_grid()
    gains = np.linalg.norm(frequency_response(r, omegas), ord=2, axis=(1, 2))
    i = int(np.argmax(gains))
    lo, hi = omegas[max(i - 1, 0)], omegas[min(i + 1, omegas.size - 1)]
    best = minimize_scalar(
        lambda w: -gain(r, w), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
    )
    return max(float(gains[i]), -best.fun, gain(r, 0.0))


class TestHinfNorm:
    def test_first_order(self):
        """||1/(s+1)|| = 1"""
        assert hinf_norm(first_order()) == pytest.approx(1.0, rel=1e-6)

    def test_resonant_peak(self):
        """Second-order peak 1/(2 zeta sqrt(1 - zeta^2)) = 5.0252 for zeta = 0.1"""
        assert hinf_norm(resonant()) == pytest.approx(5.0252, abs=5e-4)

    def test_within_tolerance_of_exact_peak(self):
        """The result brackets the exact peak from above within tol relative"""
        tol = 1e-6
        value = hinf_norm(first_order(), tol=tol)
        assert 1.0 <= value <= 1.0 + tol
        zeta = 0.1
        exact = 1 / (2 * zeta * np.sqrt(1 - zeta**2))
        value = hinf_norm(resonant(zeta), tol=tol)
        assert exact * (1 - 1e-12) <= value <= exact * (1 + tol)

    def test_random_systems_against_grid(self, stable_system):
        """The norm never undercuts the grid and agrees with the refined peak"""
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            r = stable_system(rng, n, m=int(rng.integers(1, 3)), p=int(rng.integers(1, 3)))
            value = hinf_norm(r)
            peak = refined_peak(r)
            assert value >= peak * (1 - 1e-12)
            assert value <= peak * (1 + 1e-4)

    def test_unstable(self):
        with pytest.raises(NotStable):
            hinf_norm(Realization([[1.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_zero_input(self):
        """Without inputs the norm is that of D"""
        r = Realization([[-1.0]], [[0.0]], [[1.0]], [[2.0]])
        assert hinf_norm(r) == 2.0


class TestH2Norm:
    def test_first_order(self):
        """||1/(s+1)||_2 = 1/sqrt(2)"""
        assert h2_norm(first_order()) == pytest.approx(1 / np.sqrt(2), rel=1e-12)

    def test_quadrature_agrees(self, stable_system):
        rng = np.random.default_rng(19)
        for _ in range(10):
            r = stable_system(rng, int(rng.integers(1, 6)), m=2, p=2)
            assert h2_norm_quadrature(r) == pytest.approx(h2_norm(r), rel=1e-3)

    def test_feedthrough(self):
        with pytest.raises(NonzeroFeedthrough):
            h2_norm(Realization([[-1.0]], [[1.0]], [[1.0]], [[1.0]]))


class TestResponses:
    def test_dc_gain(self):
        assert dc_gain(first_order())[0, 0] == pytest.approx(1.0)

    def test_difference_of_equal_systems(self):
        """G - G has zero response at every frequency"""
        r = resonant()
        response = frequency_response(difference(r, r), [0.0, 0.5, 1.0, 10.0])
        np.testing.assert_allclose(response, 0.0, atol=1e-12)
