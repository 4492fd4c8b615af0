"""Shared ODE integration with an automatic stiff fallback."""

import logging
from typing import Callable

import numpy as np
from scipy.integrate import RK45, solve_ivp

from lnamor.lib import constants as c
from lnamor.lib.errors import EvalError, IntegrationError
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


class _StiffSwitch(Exception):
    """Raised inside the explicit pass to hand the problem to Radau."""


def _counted(rhs: Callable[[float, Vector], Vector], budget: int):
    calls = 0

    def wrapped(t: float, y: Vector) -> Vector:
        nonlocal calls
        calls += 1
        if calls > budget:
            raise _StiffSwitch(f"more than {budget} evaluations")
        return rhs(t, y)

    return wrapped


def _explicit(
    rhs: Callable[[float, Vector], Vector],
    y0: Vector,
    grid: Vector,
    rtol: float,
    atol: float,
    min_step: float,
) -> Matrix:
    """Step RK45 across the grid, sampling each step's dense output."""
    solver = RK45(rhs, grid[0], y0, grid[-1], rtol=rtol, atol=atol)
    states = np.empty((grid.size, y0.size))
    states[0] = y0
    filled = 1
    while filled < grid.size:
        message = solver.step()
        if solver.status == "failed":
            raise _StiffSwitch(message or "explicit step failed")
        stop = int(np.searchsorted(grid, solver.t, side="right"))
        if stop > filled:
            states[filled:stop] = solver.dense_output()(grid[filled:stop]).T
            filled = stop
        if solver.status == "finished":
            break
        if solver.step_size < min_step:
            raise _StiffSwitch(f"step {solver.step_size:.3e} below {min_step:.3e}")
    return states


def integrate(
    rhs: Callable[[float, Vector], Vector],
    y0: Vector,
    time_grid: Vector,
    rtol: float = c.RTOL,
    atol: float = c.ATOL,
    max_evaluations: int = c.STIFF_EVALUATION_BUDGET,
) -> Matrix:
    """Integrate y' = rhs(t, y) and sample the solution on time_grid.

    The explicit Runge-Kutta 4(5) pair is tried first. The problem is
    treated as stiff and re-solved with the implicit Radau method when an
    accepted step falls below MIN_STEP_FRACTION of the horizon, when the
    explicit solver fails, or once it spends more than ``max_evaluations``
    right-hand-side calls.

    Returns:
        Array (len(time_grid), len(y0)) with row i the state at time_grid[i]

    Raises:
        IntegrationError: If the implicit integrator fails or the right-hand
            side cannot be evaluated
    """
    grid = np.asarray(time_grid, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise IntegrationError("time grid must be strictly increasing")
    if grid.size == 1:
        return y0[None, :].copy()

    min_step = c.MIN_STEP_FRACTION * (grid[-1] - grid[0])
    try:
        try:
            states = _explicit(
                _counted(rhs, max_evaluations), y0, grid, rtol, atol, min_step
            )
        except _StiffSwitch as reason:
            logger.info(f"Explicit integration stopped ({reason}), switching to Radau")
            solution = solve_ivp(
                rhs,
                (grid[0], grid[-1]),
                y0,
                method="Radau",
                t_eval=grid,
                rtol=rtol,
                atol=atol,
            )
            if not solution.success:
                raise IntegrationError(f"integration failed: {solution.message}")
            states = solution.y.T
    except EvalError as e:
        raise IntegrationError(f"right-hand side failed: {e}") from e

    if not np.all(np.isfinite(states)):
        raise IntegrationError("integration produced non-finite values")
    return states
