"""Output error metrics between a full LNA model and a reduced one.

Both models are integrated from the same macroscopic state x0 with the
covariance of their fluctuations propagated alongside, and the outputs are
compared through mean(y) = C x and cov(y) = C P C^T.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.balance import ReductionResult
from lnamor.lib.errors import (
    ConfigError,
    DimensionMismatch,
    FastRootNotFound,
    NoConvergence,
    SingularFastBlock,
    SingularJacobian,
)
from lnamor.lib.linalg import solve_lyapunov
from lnamor.lib.logging import log_calls
from lnamor.lib.network import LnaModel, damped_newton
from lnamor.lib.simulate.integrate import integrate
from lnamor.lib.simulate.moments import TrajectoryBundle, pack_upper, unpack_upper
from lnamor.lib.timescale import AveragedModel
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ErrorReport:
    """Time-domain output errors of a reduced model.

    Attributes:
        l1: Integral of ||E y(t) - E y_r(t)|| over the horizon
        l2: Square root of the integral of its square
        linf: Supremum over the grid
        time_grid: Sample times (T,)
        mean_error: E y - E y_r per time (T, p)
        cov_error: cov(y) - cov(y_r) per time (T, p, p)
    """

    l1: float
    l2: float
    linf: float
    time_grid: Vector
    mean_error: Matrix
    cov_error: np.ndarray

    @property
    def cov_error_trace(self) -> Vector:
        """Trace of the covariance error at each time."""
        return np.trace(self.cov_error, axis1=1, axis2=2)

    @property
    def cov_error_norm(self) -> Vector:
        """Frobenius norm of the covariance error at each time."""
        return np.linalg.norm(self.cov_error, ord="fro", axis=(1, 2))

    @classmethod
    def from_errors(
        cls, time_grid: Vector, mean_error: Matrix, cov_error: np.ndarray
    ) -> "ErrorReport":
        magnitude = np.linalg.norm(mean_error, axis=1)
        return cls(
            l1=float(np.trapezoid(magnitude, time_grid)),
            l2=float(np.sqrt(np.trapezoid(magnitude**2, time_grid))),
            linf=float(np.max(magnitude)),
            time_grid=time_grid,
            mean_error=mean_error,
            cov_error=cov_error,
        )


@dataclass(frozen=True)
class _Dynamics:
    """Nonlinear mean dynamics with state-dependent fluctuation matrices.

    ``matrices`` returns the fluctuation drift and diffusion; ``output``
    returns the output mean and the fluctuation output map.
    """

    field: Callable[[Vector], Vector]
    matrices: Callable[[Vector], tuple[Matrix, Matrix]]
    output: Callable[[Vector], tuple[Vector, Matrix]]
    state0: Vector
    P0: Matrix


def _output_moments(dynamics: _Dynamics, time_grid: Vector) -> tuple[Matrix, np.ndarray]:
    """Integrate [state, upper(P)] and return output mean and covariance per time."""
    n = dynamics.state0.shape[0]

    def rhs(t: float, y: Vector) -> Vector:
        state = y[:n]
        A, B = dynamics.matrices(state)
        P = unpack_upper(y[n:], n)
        dP = A @ P + P @ A.T + B @ B.T
        return np.concatenate([dynamics.field(state), pack_upper(dP)])

    y0 = np.concatenate([dynamics.state0, pack_upper(dynamics.P0)])
    states = integrate(rhs, y0, time_grid)
    means, covariances = [], []
    for y in states:
        mean, C = dynamics.output(y[:n])
        means.append(mean)
        covariances.append(C @ unpack_upper(y[n:], n) @ C.T)
    return np.array(means), np.array(covariances)


def _full_dynamics(model: LnaModel, x0: Vector, P0: Matrix) -> _Dynamics:
    C = model.output_matrix
    return _Dynamics(
        field=model.field,
        matrices=lambda x: (model.drift(x), model.diffusion(x, clamp=True)),
        output=lambda x: (C @ x, C),
        state0=x0,
        P0=P0,
    )


class _LiftedReduction:
    """Nonlinear lift of a projection-based reduction.

    The reduced state zeta maps to x = x_ss + W zeta + W_r phi(zeta), where
    phi = 0 for truncation and V_r g(x) = 0 defines phi for singular
    perturbation (warm-started from the previous solve).
    The lifted state may leave the nonnegative orthant, so the diffusion is
    evaluated with negative rates clamped to zero.
    """

    def __init__(self, model: LnaModel, result: ReductionResult):
        if result.operating_point is None:
            raise ConfigError("reduction result carries no operating point")
        self.model = model
        self.x_ss = np.asarray(result.operating_point, dtype=float)
        self.V, self.W, self.V_r, self.W_r = result.physical_projections()
        self.perturb = result.is_perturbation and self.V_r.shape[0] > 0
        self._phi = np.zeros(self.V_r.shape[0])

    def _fast(self, zeta: Vector) -> Vector:
        if not self.perturb:
            return self._phi
        base = self.x_ss + self.W @ zeta

        def residual(phi: Vector) -> Vector:
            return self.V_r @ self.model.field(base + self.W_r @ phi)

        def jacobian(phi: Vector) -> Matrix:
            return self.V_r @ self.model.drift(base + self.W_r @ phi) @ self.W_r

        try:
            self._phi = damped_newton(
                residual, jacobian, self._phi, tolerance=c.FAST_ROOT_TOLERANCE
            )
        except (NoConvergence, SingularJacobian) as e:
            raise FastRootNotFound(f"no discarded-state root for zeta={zeta}: {e}") from e
        return self._phi

    def state(self, zeta: Vector) -> Vector:
        return self.x_ss + self.W @ zeta + self.W_r @ self._fast(zeta)

    def field(self, zeta: Vector) -> Vector:
        return self.V @ self.model.field(self.state(zeta))

    def _blocks(self, zeta: Vector) -> tuple[Matrix, Matrix, Matrix]:
        """Reduced drift, diffusion and output map at zeta."""
        x = self.state(zeta)
        J, B = self.model.drift(x), self.model.diffusion(x, clamp=True)
        A11, B1, C1 = self.V @ J @ self.W, self.V @ B, self.model.output_matrix @ self.W
        if not self.perturb:
            return A11, B1, C1
        A22 = self.V_r @ J @ self.W_r
        try:
            solved = np.linalg.solve(A22, np.hstack([self.V_r @ J @ self.W, self.V_r @ B]))
        except np.linalg.LinAlgError as e:
            raise SingularFastBlock(f"discarded block is singular at zeta={zeta}") from e
        k = A11.shape[0]
        X21, XB2 = solved[:, :k], solved[:, k:]
        A12 = self.V @ J @ self.W_r
        C_r = C1 - self.model.output_matrix @ self.W_r @ X21
        return A11 - A12 @ X21, B1 - A12 @ XB2, C_r

    def matrices(self, zeta: Vector) -> tuple[Matrix, Matrix]:
        A_r, B_r, _ = self._blocks(zeta)
        return A_r, B_r

    def output(self, zeta: Vector) -> tuple[Vector, Matrix]:
        _, _, C_r = self._blocks(zeta)
        return self.model.output_matrix @ self.state(zeta), C_r


def _reduction_dynamics(
    model: LnaModel, result: ReductionResult, x0: Vector, P0: Matrix
) -> _Dynamics:
    lift = _LiftedReduction(model, result)
    return _Dynamics(
        field=lift.field,
        matrices=lift.matrices,
        output=lift.output,
        state0=lift.V @ (x0 - lift.x_ss),
        P0=lift.V @ P0 @ lift.V.T,
    )


def _averaged_dynamics(
    model: LnaModel, averaged: AveragedModel, x0: Vector, P0: Matrix
) -> _Dynamics:
    slow = averaged.slow
    return _Dynamics(
        field=averaged.slow_field,
        matrices=averaged.matrices,
        # fast species enter the mean output at their quasi-steady value
        output=lambda z: (model.output_matrix @ averaged.state(z), averaged.output_matrix(z)),
        state0=x0[slow],
        P0=P0[np.ix_(slow, slow)],
    )


@log_calls
def compare_models(
    model: LnaModel,
    x0: Vector,
    reduced: ReductionResult | AveragedModel,
    horizon: float,
    n_points: int = 501,
    P0: Matrix | None = None,
) -> ErrorReport:
    """Output mean and covariance errors of a reduced model started at x0.

    Args:
        model: Full model
        x0: Initial macroscopic state of the full model
        reduced: Projection-based reduction (with its operating point) or an
            averaged time-scale model
        horizon: End time of the comparison
        n_points: Number of grid points on [0, horizon]
        P0: Initial fluctuation covariance (defaults to the stationary
            covariance of the linearisation at x0)

    Raises:
        DimensionMismatch: If x0 or P0 do not match the model
        IntegrationError: If either integration fails
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.n_species,):
        raise DimensionMismatch(f"x0 must have {model.n_species} entries, got {x0.shape}")
    if not horizon > 0 or n_points < 2:
        raise ConfigError(f"need horizon > 0 and at least 2 points, got {horizon}, {n_points}")
    if P0 is None:
        B = model.diffusion(x0)
        P0 = solve_lyapunov(model.drift(x0), B @ B.T)
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (model.n_species, model.n_species):
        raise DimensionMismatch(f"P0 must be {model.n_species}x{model.n_species}")

    if isinstance(reduced, AveragedModel):
        dynamics = _averaged_dynamics(model, reduced, x0, P0)
    else:
        dynamics = _reduction_dynamics(model, reduced, x0, P0)

    time_grid = np.linspace(0.0, horizon, n_points)
    mean_full, cov_full = _output_moments(_full_dynamics(model, x0, P0), time_grid)
    mean_red, cov_red = _output_moments(dynamics, time_grid)
    if mean_full.shape != mean_red.shape:
        raise DimensionMismatch(
            f"output dimensions differ: {mean_full.shape[1]} vs {mean_red.shape[1]}"
        )

    report = ErrorReport.from_errors(time_grid, mean_full - mean_red, cov_full - cov_red)
    logger.info(
        f"Output errors L1={report.l1:.4e} L2={report.l2:.4e} Linf={report.linf:.4e}"
    )
    return report


def full_model_moments(
    model: LnaModel, x0: Vector, time_grid: Vector, P0: Matrix | None = None
) -> TrajectoryBundle:
    """Output mean C x(t) and covariance C P(t) C^T of the full model.

    P0 defaults to zero (a deterministic initial state).
    """
    x0 = np.asarray(x0, dtype=float)
    P0 = np.zeros((x0.shape[0], x0.shape[0])) if P0 is None else np.asarray(P0, dtype=float)
    time_grid = np.asarray(time_grid, dtype=float)
    mean, covariance = _output_moments(_full_dynamics(model, x0, P0), time_grid)
    return TrajectoryBundle(time_grid=time_grid, mean=mean, covariance=covariance)
