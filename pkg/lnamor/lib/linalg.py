"""Dense linear-algebra kernels and matrix-equation solvers.

All functions are pure: they never modify their inputs and return fresh
arrays. numpy's ``LinAlgError`` is converted into lnamor errors here so no
other module has to know about it.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from lnamor.lib import constants as c
from lnamor.lib.errors import (
    DimensionMismatch,
    NoConvergence,
    NonFiniteEntries,
    NotPositiveDefinite,
    NotStable,
)
from lnamor.lib.types import ComplexVector, Matrix, Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a square matrix.

    Attributes:
        values: Eigenvalues sorted by descending real part, then descending
            imaginary part
        vectors: Eigenvectors as columns, in the order of ``values``
    """

    values: ComplexVector
    vectors: np.ndarray


def as_matrix(value, name: str = "matrix") -> Matrix:
    """Return value as a finite 2-D float array.

    Scalars become 1x1 matrices. Raises NonFiniteEntries for NaN/Inf and
    DimensionMismatch for arrays that are not two-dimensional.
    """
    array = np.array(value, dtype=float)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    if array.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteEntries(f"{name} has non-finite entries")
    return array


def norm2(a: Matrix) -> float:
    """Spectral norm, zero for empty matrices."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def symmetrize(a: Matrix) -> Matrix:
    return (a + a.T) / 2


def spectral_abscissa(a: Matrix) -> float:
    """Largest real part of the spectrum of a."""
    if a.size == 0:
        return -np.inf
    try:
        return float(np.max(np.linalg.eigvals(a).real))
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"eigenvalue iteration failed: {e}") from e


def max_eigenvalue_symmetric(a: Matrix) -> float:
    """Largest eigenvalue of the symmetric part of a."""
    return float(np.linalg.eigvalsh(symmetrize(a))[-1])


def is_stable(a: Matrix) -> bool:
    """True when every eigenvalue has real part below -1e-12*||a||."""
    return spectral_abscissa(a) < -c.STABILITY_MARGIN * norm2(a)


def assert_stable(a: Matrix, name: str = "A") -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    abscissa = spectral_abscissa(a)
    if not abscissa < -c.STABILITY_MARGIN * norm2(a):
        raise NotStable(f"{name} is not Hurwitz (spectral abscissa {abscissa:.3e})")


def solve_lyapunov(a: Matrix, m: Matrix) -> Matrix:
    """Solve A P + P A^T + M = 0 for symmetric P.

    Args:
        a: Hurwitz matrix (n x n)
        m: Symmetric matrix (n x n)

    Returns:
        Symmetric solution P

    Raises:
        NotStable: If A has an eigenvalue with real part >= -1e-12*||A||
        DimensionMismatch: If shapes do not conform
    """
    a = as_matrix(a, "A")
    m = as_matrix(m, "M")
    if a.shape[0] != a.shape[1] or m.shape != a.shape:
        raise DimensionMismatch(f"A {a.shape} and M {m.shape} must be square and equal")
    assert_stable(a)
    m = symmetrize(m)

    p = symmetrize(scipy.linalg.solve_continuous_lyapunov(a, -m))
    if _lyapunov_residual(a, p, m) > c.LYAPUNOV_RESIDUAL * _lyapunov_scale(a, p, m):
        logger.info("Bartels-Stewart residual too large, refining with Kronecker solve")
        p = _solve_lyapunov_kronecker(a, m)
    return p


def _lyapunov_residual(a: Matrix, p: Matrix, m: Matrix) -> float:
    return norm2(a @ p + p @ a.T + m)


def _lyapunov_scale(a: Matrix, p: Matrix, m: Matrix) -> float:
    return max(2 * norm2(a) * norm2(p) + norm2(m), c.ABSOLUTE_FLOOR)


def _solve_lyapunov_kronecker(a: Matrix, m: Matrix) -> Matrix:
    n = a.shape[0]
    identity = np.eye(n)
    operator = np.kron(identity, a) + np.kron(a, identity)
    vec = scipy.linalg.solve(operator, -m.reshape(-1, order="F"))
    return symmetrize(vec.reshape(n, n, order="F"))


def eig(a: Matrix) -> SpectralDecomposition:
    """Eigen-decomposition with a deterministic ordering.

    Values are sorted by descending real part, ties by descending imaginary
    part.
    """
    a = as_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got shape {a.shape}")
    try:
        values, vectors = np.linalg.eig(a)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"eigenvalue iteration failed: {e}") from e
    order = np.lexsort((-values.imag, -values.real))
    return SpectralDecomposition(
        values=values[order].astype(complex), vectors=vectors[:, order].astype(complex)
    )


def svd(a: Matrix) -> tuple[Matrix, Matrix, Matrix]:
    """Thin singular value decomposition A = U S V^T.

    The first largest-magnitude entry of each column of U is made positive;
    the matching column of V flips with it.
    """
    a = as_matrix(a, "A")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"SVD failed to converge: {e}") from e
    v = vh.T.copy()
    for j in range(u.shape[1]):
        pivot = np.argmax(np.abs(u[:, j]))
        if u[pivot, j] < 0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    return u, np.diag(s), v


def singular_values(a: Matrix) -> Vector:
    if a.size == 0:
        return np.zeros(0)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"SVD failed to converge: {e}") from e


def cholesky_factor(p: Matrix) -> Matrix:
    """Lower-triangular L with P = L L^T.

    Raises:
        NotPositiveDefinite: If P is not symmetric or not positive definite
    """
    p = as_matrix(p, "P")
    if p.shape[0] != p.shape[1]:
        raise DimensionMismatch(f"P must be square, got shape {p.shape}")
    if norm2(p - p.T) > c.SYMMETRY_TOLERANCE * max(norm2(p), c.ABSOLUTE_FLOOR):
        raise NotPositiveDefinite("P is not symmetric")
    try:
        return np.linalg.cholesky(symmetrize(p))
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"P is not positive definite: {e}") from e


def block_diagonal(*blocks: Matrix) -> Matrix:
    if not blocks:
        return np.zeros((0, 0))
    return scipy.linalg.block_diag(*blocks)
