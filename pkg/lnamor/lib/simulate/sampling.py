"""Euler-Maruyama sample paths of the linear noise SDE."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from lnamor.lib.errors import ConfigError
from lnamor.lib.logging import log_calls
from lnamor.lib.simulate.moments import MatrixFunction, as_matrix_function
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)

BATCH_SIZE = 1024


@dataclass(frozen=True)
class SampleStatistics:
    """Empirical moments over sample paths.

    Attributes:
        time_grid: Step times 0, h, 2h, ... (T,)
        mean: Sample means (T, n)
        covariance: Unbiased sample covariances (T, n, n)
        n_paths: Number of paths
    """

    time_grid: Vector
    mean: Matrix
    covariance: np.ndarray
    n_paths: int


def _simulate_batch(
    paths: range,
    seed: int,
    drifts: list[Matrix],
    diffusions: list[Matrix],
    eta0: Vector,
    step: float,
) -> tuple[Matrix, np.ndarray]:
    """Sums of eta and eta eta^T over one batch of paths at every step."""
    n_steps = len(drifts)
    noise_dim = diffusions[0].shape[1]
    # one generator per path so results do not depend on batching
    noise = np.stack(
        [
            np.random.default_rng([seed, path]).standard_normal((n_steps, noise_dim))
            for path in paths
        ]
    )
    eta = np.tile(eta0, (len(paths), 1))
    first = np.zeros((n_steps + 1, eta0.shape[0]))
    second = np.zeros((n_steps + 1, eta0.shape[0], eta0.shape[0]))
    first[0] = eta.sum(axis=0)
    second[0] = eta.T @ eta
    root = np.sqrt(step)
    for k in range(n_steps):
        eta = eta + step * eta @ drifts[k].T + root * noise[:, k, :] @ diffusions[k].T
        first[k + 1] = eta.sum(axis=0)
        second[k + 1] = eta.T @ eta
    return first, second


@log_calls
def euler_maruyama(
    A: MatrixFunction | Matrix,
    B: MatrixFunction | Matrix,
    eta0: Vector,
    horizon: float,
    step: float,
    n_paths: int,
    seed: int,
    workers: int = 1,
) -> SampleStatistics:
    """Simulate eta_{k+1} = eta_k + h A eta_k + sqrt(h) B zeta_k.

    Path i draws its increments from a generator seeded with (seed, i), so
    statistics are bit-identical for a fixed seed regardless of ``workers``.

    Raises:
        ConfigError: If step, horizon or n_paths is not positive
    """
    if step <= 0 or horizon <= 0:
        raise ConfigError(f"step and horizon must be positive, got {step}, {horizon}")
    if n_paths < 1:
        raise ConfigError(f"n_paths must be at least 1, got {n_paths}")

    drift, diffusion = as_matrix_function(A), as_matrix_function(B)
    eta0 = np.asarray(eta0, dtype=float)
    n_steps = max(int(round(horizon / step)), 1)
    times = step * np.arange(n_steps + 1)
    drifts = [drift(t) for t in times[:-1]]
    diffusions = [diffusion(t) for t in times[:-1]]

    batches = [
        range(start, min(start + BATCH_SIZE, n_paths)) for start in range(0, n_paths, BATCH_SIZE)
    ]

    def run(paths: range) -> tuple[Matrix, np.ndarray]:
        return _simulate_batch(paths, seed, drifts, diffusions, eta0, step)

    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        results = list(pool.map(run, batches))

    first = sum(r[0] for r in results)
    second = sum(r[1] for r in results)
    mean = first / n_paths
    covariance = (second - n_paths * np.einsum("ti,tj->tij", mean, mean)) / max(n_paths - 1, 1)
    logger.info(f"Simulated {n_paths} paths over {n_steps} steps")
    return SampleStatistics(times, mean, covariance, n_paths)
