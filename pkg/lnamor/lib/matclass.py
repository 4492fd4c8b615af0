"""Matrix classes: Metzler, companion, H/H+, diagonal dominance.

Also builds diagonal Lyapunov certificates for drifts whose negation is an
H+ matrix, and the diagonal Gramian seed derived from them.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from lnamor.lib import constants as c
from lnamor.lib.errors import (
    CertificateUnavailable,
    LnamorError,
    NotHPlus,
    SingularCompanion,
)
from lnamor.lib.linalg import (
    as_matrix,
    eig,
    max_eigenvalue_symmetric,
    norm2,
    singular_values,
    symmetrize,
)
from lnamor.lib.logging import log_calls
from lnamor.lib.types import ComplexVector, Matrix, Vector

logger = logging.getLogger(__name__)


class DiagonalCertificate(NamedTuple):
    """X = diag(v / w) with A X + X A^T negative definite."""

    X: Matrix
    v: Vector
    w: Vector


@dataclass(frozen=True)
class MatrixClassReport:
    """Class membership flags of a square matrix.

    Attributes:
        is_metzler: Off-diagonal entries are nonnegative
        is_sign_metzler: diag(signature) A diag(signature) is Metzler
        signature: The +/-1 vector realising is_sign_metzler, if any
        is_h: M(A) has spectrum in the closed right half-plane
        is_h_plus: is_h and every diagonal entry is positive
        is_dd_row: Strictly row diagonally dominant
        is_scaled_dd: v = M(A)^-1 1 is entrywise positive (row side)
        is_scaled_dd_col: w = M(A)^-T 1 is entrywise positive (column side)
        companion_spectrum: Eigenvalues of M(A)
        certificate: Diagonal X with A X + X A^T < 0, when -A is H+
        notes: Numerical failures met while classifying
    """

    is_metzler: bool
    is_sign_metzler: bool
    signature: tuple[int, ...] | None
    is_h: bool
    is_h_plus: bool
    is_dd_row: bool
    is_scaled_dd: bool
    is_scaled_dd_col: bool
    companion_spectrum: ComplexVector
    certificate: Matrix | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def is_diagonally_stable(self) -> bool:
        return self.certificate is not None


def companion(A: Matrix) -> Matrix:
    """M(A): |a_ii| on the diagonal, -|a_ij| off it."""
    A = as_matrix(A, "A")
    M = -np.abs(A)
    np.fill_diagonal(M, np.abs(np.diag(A)))
    return M


def is_metzler(A: Matrix) -> bool:
    off_diagonal = A - np.diag(np.diag(A))
    return bool(np.all(off_diagonal >= 0))


def sign_signature(A: Matrix) -> tuple[int, ...] | None:
    """Signs s with diag(s) A diag(s) Metzler, or None when none exist.

    Species are coloured by breadth-first search over the interaction graph;
    a negative entry forces opposite signs, a positive one equal signs.
    """
    n = A.shape[0]
    signs = [0] * n
    for root in range(n):
        if signs[root]:
            continue
        signs[root] = 1
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j in range(n):
                if j == i or (A[i, j] == 0 and A[j, i] == 0):
                    continue
                if A[i, j] * A[j, i] < 0:
                    return None
                wanted = signs[i] if (A[i, j] + A[j, i]) > 0 else -signs[i]
                if signs[j] == 0:
                    signs[j] = wanted
                    queue.append(j)
                elif signs[j] != wanted:
                    return None
    return tuple(signs)


def _strictly_positive(x: Vector) -> bool:
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    return bool(np.all(x > c.POSITIVITY_THRESHOLD * scale))


def _companion_is_singular(M: Matrix) -> bool:
    sv = singular_values(M)
    return sv.size == 0 or sv[-1] <= c.SINGULAR_THRESHOLD * max(sv[0], c.ABSOLUTE_FLOOR)


def _scaling_vectors(M: Matrix) -> tuple[Vector, Vector]:
    ones = np.ones(M.shape[0])
    v = scipy.linalg.solve(M, ones)
    w = scipy.linalg.solve(M.T, ones)
    return v, w


@log_calls
def classify(A: Matrix) -> MatrixClassReport:
    """Compute the class flags of A.

    Numerical failures do not raise: the affected flags are reported false and
    the failure is recorded in ``notes``.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    notes: list[str] = []
    M = companion(A)
    diagonal = np.diag(A)
    off_magnitude = np.sum(np.abs(A), axis=1) - np.abs(diagonal)

    try:
        spectrum = eig(M).values
        is_h = bool(np.min(spectrum.real) >= -c.H_EIGEN_TOLERANCE * norm2(A))
    except LnamorError as e:
        spectrum = np.zeros(0, dtype=complex)
        is_h = False
        notes.append(f"companion spectrum unavailable: {e}")

    is_scaled_dd = is_scaled_dd_col = False
    if n and not _companion_is_singular(M):
        v, w = _scaling_vectors(M)
        is_scaled_dd = _strictly_positive(v)
        is_scaled_dd_col = _strictly_positive(w)
    else:
        notes.append("companion matrix is singular")

    signature = sign_signature(A)
    certificate = None
    if is_h and np.all(diagonal < 0):
        try:
            certificate = diagonal_certificate(A).X
        except LnamorError as e:
            notes.append(f"diagonal certificate unavailable: {e}")

    return MatrixClassReport(
        is_metzler=is_metzler(A),
        is_sign_metzler=signature is not None,
        signature=signature,
        is_h=is_h,
        is_h_plus=is_h and bool(np.all(diagonal > 0)),
        is_dd_row=bool(np.all(np.abs(diagonal) > off_magnitude)),
        is_scaled_dd=is_scaled_dd,
        is_scaled_dd_col=is_scaled_dd_col,
        companion_spectrum=spectrum,
        certificate=certificate,
        notes=notes,
    )


def diagonal_certificate(A: Matrix) -> DiagonalCertificate:
    """Diagonal Lyapunov certificate for a drift A with -A in H+.

    v = M(A)^-1 1 and w = M(A)^-T 1 satisfy M(A) v >> 0 and w^T M(A) >> 0;
    with X = diag(v_i / w_i), diag(w) (A X + X A^T) diag(w) has a companion
    with positive row sums, so -(A X + X A^T) is H+.

    Raises:
        NotHPlus: If a diagonal entry of A is not negative or v, w are not positive
        SingularCompanion: If M(A) is singular
    """
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise NotHPlus(f"A must be square, got shape {A.shape}")
    if not np.all(np.diag(A) < 0):
        raise NotHPlus("-A has a non-positive diagonal entry")

    M = companion(A)
    if _companion_is_singular(M):
        raise SingularCompanion("companion matrix M(A) is singular")
    v, w = _scaling_vectors(M)
    if not (_strictly_positive(v) and _strictly_positive(w)):
        raise NotHPlus("M(A)^-1 1 is not positive, -A is not an H+ matrix")

    X = np.diag(v / w)
    lam = max_eigenvalue_symmetric(A @ X + X @ A.T)
    if not lam < 0:
        raise NotHPlus(f"A X + X A^T is not negative definite (max eigenvalue {lam:.3e})")
    return DiagonalCertificate(X=X, v=v, w=w)


@log_calls
def base_gramian_seed(A: Matrix, B: Matrix) -> Matrix:
    """Diagonal P_base with A P_base + P_base A^T + B B^T <= 0.

    P_base = X ||B B^T||_2 / sigma_min(-(A X + X A^T)) for the diagonal
    certificate X of A. Pass (A^T, C^T) for the observability analogue.

    Raises:
        CertificateUnavailable: If A has no certificate or B B^T vanishes
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    try:
        X = diagonal_certificate(A).X
    except (NotHPlus, SingularCompanion) as e:
        raise CertificateUnavailable(f"no diagonal certificate for A: {e}") from e

    M = B @ B.T
    m_norm = norm2(M)
    if m_norm <= c.ABSOLUTE_FLOOR:
        raise CertificateUnavailable("B B^T vanishes, no positive definite seed exists")
    N = -symmetrize(A @ X + X @ A.T)
    P_base = X * (m_norm / float(np.linalg.eigvalsh(N)[0]))

    residual = max_eigenvalue_symmetric(A @ P_base + P_base @ A.T + M)
    scale = 2 * norm2(A) * norm2(P_base) + m_norm
    if residual > c.H_EIGEN_TOLERANCE * scale:
        raise CertificateUnavailable(
            f"seed violates the Lyapunov inequality (max eigenvalue {residual:.3e})"
        )
    logger.debug(f"Base Gramian seed with trace {np.trace(P_base):.4e}")
    return P_base
