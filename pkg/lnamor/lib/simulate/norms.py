"""System norms and frequency responses of LTI realisations."""

import logging

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.errors import NonzeroFeedthrough
from lnamor.lib.linalg import assert_stable, block_diagonal, norm2, solve_lyapunov
from lnamor.lib.logging import log_calls
from lnamor.lib.realization import Realization
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


def frequency_grid() -> Vector:
    """Log-spaced frequencies used for norm cross-checks."""
    return np.geomspace(c.GRID_MIN_FREQUENCY, c.GRID_MAX_FREQUENCY, c.GRID_POINTS)


def frequency_response(r: Realization, omegas: Vector) -> np.ndarray:
    """G(j w) for every w, stacked as (len(omegas), p, m)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    resolvent = 1j * omegas[:, None, None] * np.eye(r.n)[None] - r.A[None]
    rhs = np.broadcast_to(r.B.astype(complex), (omegas.shape[0],) + r.B.shape)
    return r.C[None] @ np.linalg.solve(resolvent, rhs) + r.D[None]


def _max_gain(r: Realization, omegas: Vector) -> float:
    if np.asarray(omegas).size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(frequency_response(r, omegas), ord=2, axis=(1, 2))))


def dc_gain(r: Realization) -> Matrix:
    """G(0) = D - C A^-1 B."""
    return r.D - r.C @ np.linalg.solve(r.A, r.B)


def difference(r1: Realization, r2: Realization) -> Realization:
    """Realisation of G1 - G2."""
    return Realization(
        A=block_diagonal(r1.A, r2.A),
        B=np.vstack([r1.B, r2.B]),
        C=np.hstack([r1.C, -r2.C]),
        D=r1.D - r2.D,
    )


def _hamiltonian(r: Realization, gamma: float) -> Matrix:
    A, B, C, D = r.A, r.B, r.C, r.D
    R = D.T @ D - gamma**2 * np.eye(D.shape[1])
    S = D @ D.T - gamma**2 * np.eye(D.shape[0])
    F = A - B @ np.linalg.solve(R, D.T @ C)
    return np.block(
        [
            [F, -gamma * B @ np.linalg.solve(R, B.T)],
            [gamma * C.T @ np.linalg.solve(S, C), -F.T],
        ]
    )


def _least_damped_frequency(A: Matrix) -> float:
    poles = np.linalg.eigvals(A)
    if np.any(poles.imag != 0):
        damping = np.abs(poles.imag / poles.real / np.abs(poles))
        return float(np.abs(poles[np.argmax(damping)]))
    return float(np.min(np.abs(poles)))


def _has_crossing(r: Realization, gamma: float) -> tuple[bool, Vector]:
    """Whether sigma_max(G(j w)) = gamma for some w, with the crossing frequencies."""
    H = _hamiltonian(r, gamma)
    eigs = np.linalg.eigvals(H)
    on_axis = eigs[np.abs(eigs.real) <= c.IMAGINARY_AXIS_TOLERANCE * max(norm2(H), 1.0)]
    return on_axis.size > 0, np.unique(np.abs(on_axis.imag))


@log_calls
def hinf_norm(r: Realization, tol: float = c.HINF_TOLERANCE) -> float:
    """H-infinity norm by level-set iteration on the Hamiltonian.

    At each level gamma the imaginary-axis eigenvalues of the Hamiltonian
    give the frequencies where sigma_max(G(j w)) = gamma; the gain at their
    midpoints raises the lower bound until a level without crossings is
    found. The bracket [lower, upper] is then bisected until it is narrower
    than ``tol * lower`` and the upper end is returned, so the result lies
    within ``tol`` relative of the peak and never below the peak gain on the
    log-spaced frequency grid.

    Raises:
        NotStable: If A is not Hurwitz
    """
    assert_stable(r.A)
    d_norm = norm2(r.D)
    if not np.any(r.B) or not np.any(r.C):
        return d_norm

    grid_peak = _max_gain(r, frequency_grid())
    lower = max(
        grid_peak,
        _max_gain(r, np.array([0.0, _least_damped_frequency(r.A)])),
        d_norm,
    )
    if lower <= c.ABSOLUTE_FLOOR:
        return lower
    upper = None
    for _ in range(c.HINF_MAX_ITERATIONS):
        gamma = (1 + 2 * tol) * lower
        crossed, crossings = _has_crossing(r, gamma)
        if not crossed:
            upper = gamma
            break
        frequencies = np.concatenate([crossings, (crossings[1:] + crossings[:-1]) / 2])
        candidate = _max_gain(r, frequencies)
        if candidate <= lower:
            # gamma is attained somewhere, so it is a valid lower bound
            lower = gamma
            continue
        lower = candidate
    if upper is None:
        logger.warning(f"H-infinity iteration hit {c.HINF_MAX_ITERATIONS} levels")
        return max((1 + 2 * tol) * lower, grid_peak)

    # a crossing at mid certifies the peak is at least mid
    for _ in range(c.HINF_MAX_ITERATIONS):
        if upper - lower <= 0.5 * tol * lower:
            break
        mid = 0.5 * (lower + upper)
        crossed, _ = _has_crossing(r, mid)
        if crossed:
            lower = mid
        else:
            upper = mid
    return max(upper, grid_peak)


def h2_norm_quadrature(r: Realization) -> float:
    """H2 norm by trapezoid quadrature of ||G(j w)||_F^2 on the log grid.

    The integral is taken in u = ln w with first-order tail corrections
    below and above the grid.
    """
    omegas = frequency_grid()
    response = frequency_response(r, omegas)
    f = np.sum(np.abs(response) ** 2, axis=(1, 2))
    body = np.trapezoid(f * omegas, np.log(omegas))
    tails = f[0] * omegas[0] + f[-1] * omegas[-1]
    return float(np.sqrt((body + tails) / np.pi))


@log_calls
def h2_norm(r: Realization) -> float:
    """H2 norm sqrt(trace(C P C^T)) with P the controllability Gramian.

    Raises:
        NotStable: If A is not Hurwitz
        NonzeroFeedthrough: If D != 0
    """
    if np.any(r.D):
        raise NonzeroFeedthrough("H2 norm is unbounded for a system with D != 0")
    P = solve_lyapunov(r.A, r.B @ r.B.T)
    value = float(np.sqrt(max(np.trace(r.C @ P @ r.C.T), 0.0)))
    quadrature = h2_norm_quadrature(r)
    if abs(quadrature - value) > c.H2_QUADRATURE_TOLERANCE * max(value, c.ABSOLUTE_FLOOR):
        logger.warning(
            f"H2 quadrature {quadrature:.6e} disagrees with state-space value {value:.6e}"
        )
    return value
