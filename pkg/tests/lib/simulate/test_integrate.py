import logging

import numpy as np
import pytest

from lnamor.lib import constants as c
from lnamor.lib.errors import EvalError, IntegrationError
from lnamor.lib.simulate.integrate import integrate

INTEGRATE_LOGGER = "lnamor.lib.simulate.integrate"


def decay(t, y):
    return -y


def switched(caplog) -> bool:
    return any("switching to Radau" in r.getMessage() for r in caplog.records)


class TestIntegrate:
    def test_exponential_decay(self, caplog):
        """The explicit pass samples exp(-t) on the grid"""
        caplog.set_level(logging.INFO, logger=INTEGRATE_LOGGER)
        grid = np.linspace(0.0, 3.0, 31)
        states = integrate(decay, [1.0, 2.0], grid)
        np.testing.assert_allclose(states[:, 0], np.exp(-grid), rtol=1e-7)
        np.testing.assert_allclose(states[:, 1], 2 * np.exp(-grid), rtol=1e-7)
        assert not switched(caplog)

    def test_collapsed_step_switches_to_radau(self, caplog, monkeypatch):
        """A step shorter than the collapse threshold hands over to Radau"""
        monkeypatch.setattr(c, "MIN_STEP_FRACTION", 1.0)
        caplog.set_level(logging.INFO, logger=INTEGRATE_LOGGER)
        grid = np.linspace(0.0, 3.0, 31)
        states = integrate(decay, [1.0], grid)
        assert switched(caplog)
        np.testing.assert_allclose(states[:, 0], np.exp(-grid), rtol=1e-6)

    def test_stiff_problem_exhausts_budget(self, caplog):
        """A fast mode far below the horizon's scale is finished by Radau"""
        caplog.set_level(logging.INFO, logger=INTEGRATE_LOGGER)

        def rhs(t, y):
            return np.array([-1e6 * (y[0] - np.cos(t))])

        grid = np.linspace(0.0, 10.0, 11)
        states = integrate(rhs, [1.0], grid, max_evaluations=2_000)
        assert switched(caplog)
        np.testing.assert_allclose(states[:, 0], np.cos(grid), atol=1e-5)

    def test_single_point_grid(self):
        np.testing.assert_array_equal(integrate(decay, [1.0], [0.0]), [[1.0]])

    @pytest.mark.parametrize("grid", [[1.0, 0.0], [0.0, 0.0], []])
    def test_invalid_grid(self, grid):
        with pytest.raises(IntegrationError):
            integrate(decay, [1.0], grid)

    def test_failed_evaluation(self):
        def rhs(t, y):
            raise EvalError("negative reaction rate")

        with pytest.raises(IntegrationError, match="right-hand side failed"):
            integrate(rhs, [1.0], [0.0, 1.0])
