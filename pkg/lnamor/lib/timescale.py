"""Time-scale separation of the linear noise approximation.

Species are split into slow (x1) and fast (x2) sets with
x1' = g1(x),  eps x2' = g2(x). Averaging replaces x2 by the root z_hat(x1)
of g2 and the fluctuations by the Schur-complement model

    A_r = A11 - A12 A22^-1 A21,    B_r = B1 - A12 A22^-1 B2.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.errors import (
    ConfigError,
    FastRootNotFound,
    NoConvergence,
    SingularFastJacobian,
    SingularJacobian,
)
from lnamor.lib.linalg import norm2, singular_values, spectral_abscissa
from lnamor.lib.logging import log_calls
from lnamor.lib.network import LnaModel, damped_newton
from lnamor.lib.simulate.integrate import integrate
from lnamor.lib.simulate.moments import pack_upper, unpack_upper
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionedLna:
    """An LNA model with a slow/fast species split.

    Attributes:
        base: Full model
        slow: Indices of the slow species
        fast: Indices of the fast species
        epsilon: Time-scale ratio (> 0)
    """

    base: LnaModel
    slow: tuple[int, ...]
    fast: tuple[int, ...]
    epsilon: float

    def __post_init__(self):
        n = self.base.n_species
        if set(self.slow) & set(self.fast):
            raise ConfigError("slow and fast species overlap")
        if sorted(self.slow + self.fast) != list(range(n)):
            raise ConfigError(f"slow and fast species must cover all {n} species")
        if not self.slow or not self.fast:
            raise ConfigError("both the slow and the fast set must be non-empty")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")

    def with_epsilon(self, epsilon: float) -> "PartitionedLna":
        return PartitionedLna(self.base, self.slow, self.fast, epsilon)

    @property
    def order(self) -> list[int]:
        """Species order with the slow block first."""
        return list(self.slow) + list(self.fast)


def reduce_blocks(
    A: Matrix, B: Matrix, slow: tuple[int, ...], fast: tuple[int, ...]
) -> tuple[Matrix, Matrix]:
    """Schur-complement drift and diffusion of the slow block.

    Raises:
        SingularFastJacobian: If A22 is singular
    """
    slow, fast = list(slow), list(fast)
    A11 = A[np.ix_(slow, slow)]
    A12 = A[np.ix_(slow, fast)]
    A21 = A[np.ix_(fast, slow)]
    A22 = A[np.ix_(fast, fast)]
    sv = singular_values(A22)
    if sv[-1] <= c.SINGULAR_THRESHOLD * max(norm2(A), c.ABSOLUTE_FLOOR):
        raise SingularFastJacobian(
            f"fast Jacobian is singular (smallest singular value {sv[-1]:.3e})"
        )
    solved = np.linalg.solve(A22, np.hstack([A21, B[fast, :]]))
    return (
        A11 - A12 @ solved[:, : len(slow)],
        B[slow, :] - A12 @ solved[:, len(slow) :],
    )


def partitioned_drift(p: PartitionedLna, x: Vector, epsilon: float | None = None) -> Matrix:
    """Linear drift [[A11, A12/sqrt(eps)], [A21/sqrt(eps), A22/eps]] in (slow, fast) order."""
    eps = p.epsilon if epsilon is None else epsilon
    A = p.base.drift(x)[np.ix_(p.order, p.order)]
    n1 = len(p.slow)
    scale = np.ones(A.shape[0])
    scale[n1:] = 1 / np.sqrt(eps)
    return scale[:, None] * A * scale[None, :]


class AveragedModel:
    """Slow model obtained by eliminating the fast species.

    The fast root is found by damped Newton warm-started from the previous
    solve; instances are therefore not shared between threads.
    """

    def __init__(self, partition: PartitionedLna, fast_guess: Vector | None = None):
        self.partition = partition
        self.slow = list(partition.slow)
        self.fast = list(partition.fast)
        self._last_root = None if fast_guess is None else np.asarray(fast_guess, dtype=float)

    @property
    def model(self) -> LnaModel:
        return self.partition.base

    def _assemble(self, z: Vector, y: Vector) -> Vector:
        x = np.empty(self.model.n_species)
        x[self.slow] = z
        x[self.fast] = y
        return x

    def fast_root(self, z: Vector) -> Vector:
        """z_hat(z) with g2(z, z_hat) = 0.

        Raises:
            FastRootNotFound: If Newton fails from the warm start
        """
        z = np.asarray(z, dtype=float)
        guess = self._last_root if self._last_root is not None else np.ones(len(self.fast))

        def residual(y: Vector) -> Vector:
            return self.model.field(self._assemble(z, y))[self.fast]

        def jacobian(y: Vector) -> Matrix:
            return self.model.drift(self._assemble(z, y))[np.ix_(self.fast, self.fast)]

        try:
            root = damped_newton(residual, jacobian, guess, tolerance=c.FAST_ROOT_TOLERANCE)
        except (NoConvergence, SingularJacobian) as e:
            raise FastRootNotFound(f"no fast root near {guess} for z={z}: {e}") from e
        self._last_root = root
        return root

    def state(self, z: Vector) -> Vector:
        """Full macroscopic state (z, z_hat(z)) in species order."""
        return self._assemble(z, self.fast_root(z))

    def slow_field(self, z: Vector) -> Vector:
        return self.model.field(self.state(z))[self.slow]

    def matrices(self, z: Vector) -> tuple[Matrix, Matrix]:
        """(A_r, B_r) at (z, z_hat(z))."""
        x = self.state(z)
        return reduce_blocks(self.model.drift(x), self.model.diffusion(x), self.slow, self.fast)

    def evaluate(self, z: Vector) -> tuple[Vector, Matrix, Matrix]:
        """Slow field, A_r and B_r from a single fast-root solve."""
        x = self.state(z)
        A_r, B_r = reduce_blocks(
            self.model.drift(x), self.model.diffusion(x), self.slow, self.fast
        )
        return self.model.field(x)[self.slow], A_r, B_r

    def drift(self, z: Vector) -> Matrix:
        return self.matrices(z)[0]

    def diffusion(self, z: Vector) -> Matrix:
        return self.matrices(z)[1]

    def output_matrix(self, z: Vector) -> Matrix:
        """C_slow - C_fast A22^-1 A21 (fast fluctuations slaved to the slow ones)."""
        A = self.model.drift(self.state(z))
        C = self.model.output_matrix
        A22 = A[np.ix_(self.fast, self.fast)]
        A21 = A[np.ix_(self.fast, self.slow)]
        return C[:, self.slow] - C[:, self.fast] @ np.linalg.solve(A22, A21)


@log_calls
def average(p: PartitionedLna, fast_guess: Vector | None = None) -> AveragedModel:
    """Averaged reduced model of a partitioned LNA.

    ``fast_guess`` seeds the first fast-root solve.
    """
    return AveragedModel(p, fast_guess)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    mean_err: float
    ms_err: float


@dataclass(frozen=True)
class SweepResult:
    """Errors per epsilon with least-squares log-log slopes."""

    rows: tuple[SweepRow, ...]
    mean_slope: float
    ms_slope: float


def sweep_grid(horizon: float, epsilon: float, n_points: int) -> Vector:
    """Uniform grid refined near t = 0 to resolve the initial fast layer."""
    layer = np.geomspace(min(epsilon * 1e-2, horizon * 1e-3), horizon, n_points)
    return np.unique(np.concatenate([[0.0], np.linspace(0.0, horizon, n_points), layer]))


def _sweep_point(
    template: PartitionedLna, epsilon: float, horizon: float, x0: Vector, n_grid: int
) -> SweepRow:
    p = template.with_epsilon(epsilon)
    averaged = AveragedModel(p, fast_guess=np.asarray(x0)[list(p.fast)])
    model = p.base
    n = model.n_species
    n1 = len(p.slow)
    order = p.order
    joint = n + n1
    root = np.sqrt(epsilon)

    def rhs(t: float, y: Vector) -> Vector:
        x, z = y[:n], y[n : n + n1]
        Pi = unpack_upper(y[n + n1 :], joint)
        g = model.field(x)
        dx = g.copy()
        dx[list(p.fast)] /= epsilon

        slow_field, A_r, B_r = averaged.evaluate(z)
        B = model.diffusion(x)[order, :]
        B[n1:] /= root
        M = np.zeros((joint, joint))
        M[:n, :n] = partitioned_drift(p, x)
        M[n:, n:] = A_r
        N = np.vstack([B, B_r])
        dPi = M @ Pi + Pi @ M.T + N @ N.T
        return np.concatenate([dx, slow_field, pack_upper(dPi)])

    grid = sweep_grid(horizon, epsilon, n_grid)
    y0 = np.concatenate([x0, np.asarray(x0)[list(p.slow)], np.zeros(joint * (joint + 1) // 2)])
    states = integrate(rhs, y0, grid)
    _check_fast_stability(model, list(p.fast), grid, states[:, :n])

    mean_err = float(np.max(np.linalg.norm(states[:, n : n + n1] - states[:, list(p.slow)], axis=1)))
    Pi = unpack_upper(states[:, n + n1 :], joint)
    slow_idx = np.arange(n1)
    xi_idx = n + slow_idx
    ms = (
        Pi[:, slow_idx, slow_idx]
        - 2 * Pi[:, slow_idx, xi_idx]
        + Pi[:, xi_idx, xi_idx]
    ).sum(axis=1)
    row = SweepRow(epsilon=float(epsilon), mean_err=mean_err, ms_err=float(np.max(ms)))
    logger.info(f"eps={epsilon:.3e}: mean_err={row.mean_err:.4e} ms_err={row.ms_err:.4e}")
    return row


def _check_fast_stability(
    model: LnaModel, fast: list[int], grid: Vector, trajectory: Matrix
) -> None:
    """Warn where A22 stops being Hurwitz along the full trajectory."""
    violations = [
        t
        for t, x in zip(grid, trajectory)
        if spectral_abscissa(model.drift(x)[np.ix_(fast, fast)]) >= 0
    ]
    if violations:
        logger.warning(
            f"fast Jacobian is not Hurwitz at {len(violations)} grid points "
            f"(first at t={violations[0]:.4g})"
        )


def _slope(epsilons: list[float], errors: list[float]) -> float:
    if len(errors) < 2 or min(errors) <= 0:
        return float("nan")
    return float(np.polyfit(np.log(epsilons), np.log(errors), 1)[0])


@log_calls
def epsilon_sweep(
    p: PartitionedLna,
    epsilons: list[float],
    horizon: float,
    x0: Vector,
    n_grid: int = 200,
    workers: int = 1,
) -> SweepResult:
    """Mean and mean-square averaging errors as epsilon decreases.

    For each epsilon the full partitioned model, the averaged model and the
    covariance of the stacked fluctuations [eta; xi] driven by one Wiener
    process are integrated together, so sup_t E||xi - eta_1||^2 is exact up
    to integration tolerance.

    Raises:
        ConfigError: If the epsilons are not positive and strictly descending
        IntegrationError: If an integration fails
    """
    eps = [float(e) for e in epsilons]
    if not eps or any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise ConfigError(f"epsilons must be positive and strictly descending, got {eps}")
    if not horizon > 0:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    x0 = np.asarray(x0, dtype=float)

    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        rows = list(pool.map(lambda e: _sweep_point(p, e, horizon, x0, n_grid), eps))

    return SweepResult(
        rows=tuple(rows),
        mean_slope=_slope(eps, [r.mean_err for r in rows]),
        ms_slope=_slope(eps, [r.ms_err for r in rows]),
    )
