"""Mean and covariance propagation of linear SDEs.

For d eta = A(t) eta dt + B(t) dW the mean obeys m' = A m and the
covariance obeys P' = A P + P A^T + B B^T.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.errors import DimensionMismatch, IntegrationError
from lnamor.lib.linalg import as_matrix, symmetrize
from lnamor.lib.logging import log_calls
from lnamor.lib.simulate.integrate import integrate
from lnamor.lib.types import Matrix, Vector

type MatrixFunction = Callable[[float], Matrix]


def pack_upper(P: Matrix) -> Vector:
    """Upper triangle of a symmetric matrix, row by row."""
    return P[np.triu_indices(P.shape[0])]


def unpack_upper(packed: np.ndarray, n: int) -> np.ndarray:
    """Inverse of pack_upper; accepts a trailing axis of packed triangles."""
    packed = np.asarray(packed)
    rows, cols = np.triu_indices(n)
    out = np.zeros(packed.shape[:-1] + (n, n))
    out[..., rows, cols] = packed
    out[..., cols, rows] = packed
    return out


@dataclass(frozen=True)
class TrajectoryBundle:
    """Mean and covariance sampled on a time grid.

    Attributes:
        time_grid: Increasing times (T,)
        mean: Mean vectors (T, n)
        covariance: Symmetric PSD matrices (T, n, n)
    """

    time_grid: Vector
    mean: Matrix
    covariance: np.ndarray

    def __post_init__(self):
        for t, P in zip(self.time_grid, self.covariance):
            floor = -c.PSD_FLOOR * max(np.trace(P), c.ABSOLUTE_FLOOR)
            if P.size and np.linalg.eigvalsh(P)[0] < floor:
                raise IntegrationError(f"covariance lost positive semidefiniteness at t={t:.4g}")

    def output(self, C: Matrix) -> "TrajectoryBundle":
        """Moments of y = C eta."""
        return TrajectoryBundle(
            time_grid=self.time_grid,
            mean=self.mean @ C.T,
            covariance=np.einsum("ia,tab,jb->tij", C, self.covariance, C),
        )


def as_matrix_function(value) -> MatrixFunction:
    if callable(value):
        return value
    matrix = as_matrix(value)
    return lambda t: matrix


@log_calls
def propagate_moments(
    A: MatrixFunction | Matrix,
    B: MatrixFunction | Matrix,
    m0: Vector,
    P0: Matrix,
    time_grid: Vector,
) -> TrajectoryBundle:
    """Integrate the mean and covariance ODEs on a grid.

    Args:
        A: Drift, constant or a function of time
        B: Diffusion, constant or a function of time
        m0: Initial mean
        P0: Initial covariance (symmetric PSD)
        time_grid: Increasing sample times; integration starts at time_grid[0]

    Raises:
        IntegrationError: If integration fails or the covariance leaves the PSD cone
    """
    drift, diffusion = as_matrix_function(A), as_matrix_function(B)
    m0 = np.asarray(m0, dtype=float)
    P0 = symmetrize(as_matrix(P0, "P0"))
    n = m0.shape[0]
    if P0.shape != (n, n):
        raise DimensionMismatch(f"P0 must be {(n, n)}, got {P0.shape}")

    def rhs(t: float, y: Vector) -> Vector:
        a, b = drift(t), diffusion(t)
        P = unpack_upper(y[n:], n)
        dP = a @ P + P @ a.T + b @ b.T
        return np.concatenate([a @ y[:n], pack_upper(dP)])

    states = integrate(rhs, np.concatenate([m0, pack_upper(P0)]), time_grid)
    return TrajectoryBundle(
        time_grid=np.asarray(time_grid, dtype=float),
        mean=states[:, :n],
        covariance=unpack_upper(states[:, n:], n),
    )


def trajectory_header(n: int) -> list[str]:
    rows, cols = np.triu_indices(n)
    return (
        ["t"]
        + [f"mean_{i + 1}" for i in range(n)]
        + [f"cov_{i + 1}{j + 1}" for i, j in zip(rows, cols)]
    )


def trajectory_rows(bundle: TrajectoryBundle) -> list[list[float]]:
    """Rows t, mean_1..mean_p, cov_11, cov_12, ... (upper triangle, row-major)."""
    return [
        [float(t), *map(float, m), *map(float, pack_upper(P))]
        for t, m, P in zip(bundle.time_grid, bundle.mean, bundle.covariance)
    ]
