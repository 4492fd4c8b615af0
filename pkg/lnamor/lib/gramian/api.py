"""Classical and generalised (structured) Gramians.

Generalised Gramians satisfy the Lyapunov inequalities

    A P + P A^T + B B^T <= -delta I,    A^T Q + Q A + C^T C <= -delta I

and are restricted to a block-diagonal sparsity pattern. They are computed
by trace minimisation with ``BarrierSolver``; Q is obtained by applying the
P programme to (A^T, C^T).
"""

import logging
from dataclasses import dataclass

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.errors import (
    CertificateUnavailable,
    ConfigError,
    Infeasible,
    NotPositiveDefinite,
    PatternMismatch,
)
from lnamor.lib.gramian.pattern import SparsityPattern
from lnamor.lib.gramian.sdp import BarrierSolver, LinearMatrixInequality
from lnamor.lib.linalg import (
    assert_stable,
    cholesky_factor,
    max_eigenvalue_symmetric,
    norm2,
    solve_lyapunov,
    symmetrize,
)
from lnamor.lib.logging import log_calls
from lnamor.lib.matclass import base_gramian_seed
from lnamor.lib.realization import Realization
from lnamor.lib.types import Matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GramianPair:
    """Controllability and observability Gramians of a realisation.

    Attributes:
        P: Controllability Gramian
        Q: Observability Gramian
        pattern: Sparsity pattern both conform to
        provenance: equation, sdp or hmatrix_seeded_sdp
        slack: Margin delta of the Lyapunov inequalities
    """

    P: Matrix
    Q: Matrix
    pattern: SparsityPattern
    provenance: str
    slack: float = 0.0

    def __post_init__(self):
        if self.provenance not in c.PROVENANCES:
            raise ConfigError(
                f"unknown Gramian provenance {self.provenance!r}; "
                f"expected one of {sorted(c.PROVENANCES)}"
            )

    def verify(self, r: Realization) -> None:
        """Re-check every invariant against the realisation.

        Raises:
            PatternMismatch: If P or Q has entries outside the pattern
            NotPositiveDefinite: If P or Q is not symmetric positive definite
                or violates its Lyapunov inequality
        """
        tolerance = (
            c.LYAPUNOV_RESIDUAL if self.provenance == c.EQUATION else c.SDP_EIGEN_FLOOR
        )
        for name, G, A, M in (
            ("P", self.P, r.A, r.B @ r.B.T),
            ("Q", self.Q, r.A.T, r.C.T @ r.C),
        ):
            if not self.pattern.conforms(G):
                raise PatternMismatch(f"{name} does not conform to the sparsity pattern")
            cholesky_factor(G)
            lam = max_eigenvalue_symmetric(A @ G + G @ A.T + M + self.slack * np.eye(r.n))
            scale = 2 * norm2(A) * norm2(G) + norm2(M)
            if lam > tolerance * max(scale, c.ABSOLUTE_FLOOR):
                raise NotPositiveDefinite(
                    f"{name} violates its Lyapunov inequality (max eigenvalue {lam:.3e})"
                )


@log_calls
def classical_gramians(r: Realization) -> GramianPair:
    """Exact solutions of A P + P A^T + B B^T = 0 and A^T Q + Q A + C^T C = 0.

    Raises:
        NotStable: If A is not Hurwitz
    """
    P = solve_lyapunov(r.A, r.B @ r.B.T)
    Q = solve_lyapunov(r.A.T, r.C.T @ r.C)
    gramians = GramianPair(P, Q, SparsityPattern.full(r.n), c.EQUATION, 0.0)
    gramians.verify(r)
    return gramians


def _minimal_trace_gramian(A: Matrix, M: Matrix, pattern: SparsityPattern) -> Matrix:
    """min trace P over the pattern s.t. A P + P A^T + M <= -delta I, P >= mu I."""
    n = A.shape[0]
    scale = norm2(M)
    if scale <= c.ABSOLUTE_FLOOR:
        raise Infeasible("B B^T vanishes, no positive definite Gramian is forced")
    M_hat = M / scale
    delta = c.SDP_SLACK

    basis = pattern.basis
    d = pattern.dimension
    lyapunov = np.einsum("ab,ibc->iac", A, basis)
    lyapunov = lyapunov + lyapunov.transpose(0, 2, 1)
    traces = np.einsum("iaa->i", basis)
    identity = np.eye(n)

    alpha = 1 / (2 * max(abs(max_eigenvalue_symmetric(A)), c.SINGULAR_THRESHOLD * norm2(A)))
    mu = c.SDP_EIGEN_FLOOR * alpha
    p0 = pattern.project(alpha * identity)
    s0 = max_eigenvalue_symmetric(alpha * (A + A.T) + M_hat) + 1.0
    cap = c.SDP_TRACE_CAP * n * alpha

    # phase I: find P with A P + P A^T + M <= s I for s < -2 delta
    phase_one = BarrierSolver(
        objective=np.append(np.zeros(d), 1.0),
        constraints=[
            LinearMatrixInequality(
                -M_hat,
                np.concatenate([-lyapunov, identity[None]], axis=0),
                "lyapunov",
            ),
            LinearMatrixInequality(
                -mu * identity,
                np.concatenate([basis, np.zeros((1, n, n))], axis=0),
                "floor",
            ),
            LinearMatrixInequality(
                np.array([[cap]]),
                np.append(-traces, 0.0).reshape(-1, 1, 1),
                "trace_cap",
            ),
        ],
        phase="feasibility",
    )
    point, _ = phase_one.solve(
        np.append(p0, s0), stop_when=lambda z: z[-1] < -2 * delta
    )
    if point[-1] >= -2 * delta:
        raise Infeasible(
            f"no structured point with margin {delta:.1e} "
            f"(best Lyapunov eigenvalue {point[-1]:.3e})"
        )

    # phase II: minimize the trace on the strictly feasible set
    phase_two = BarrierSolver(
        objective=traces,
        constraints=[
            LinearMatrixInequality(-M_hat - delta * identity, -lyapunov, "lyapunov"),
            LinearMatrixInequality(-mu * identity, basis, "floor"),
        ],
        phase="trace",
    )
    p, _ = phase_two.solve(point[:-1])
    return scale * symmetrize(pattern.assemble(p))


@log_calls
def structured_gramians(r: Realization, pattern: SparsityPattern) -> GramianPair:
    """Minimal-trace generalised Gramians conforming to a sparsity pattern.

    Raises:
        NotStable: If A is not Hurwitz
        PatternMismatch: If the pattern does not cover the state dimension
        Infeasible: If no strictly feasible structured point is found
        NoConvergence: If the barrier method does not converge
    """
    if pattern.n != r.n:
        raise PatternMismatch(f"pattern covers {pattern.n} states, realisation has {r.n}")
    assert_stable(r.A)
    M_p = r.B @ r.B.T
    M_q = r.C.T @ r.C
    P = _minimal_trace_gramian(r.A, M_p, pattern)
    Q = _minimal_trace_gramian(r.A.T, M_q, pattern)
    slack = c.SDP_SLACK * min(norm2(M_p), norm2(M_q))
    gramians = GramianPair(P, Q, pattern, c.SDP, slack)
    gramians.verify(r)
    logger.info(f"Structured Gramians: trace P={np.trace(P):.4e}, trace Q={np.trace(Q):.4e}")
    return gramians


def _seeded_gramian(A: Matrix, B: Matrix, pattern: SparsityPattern) -> Matrix:
    """min trace P s.t. A P + P A^T + B B^T < 0 starting from the diagonal seed."""
    n = A.shape[0]
    M = B @ B.T
    scale = norm2(M)
    P_base = base_gramian_seed(A, B) / scale
    M_hat = M / scale

    basis = pattern.basis
    lyapunov = np.einsum("ab,ibc->iac", A, basis)
    lyapunov = lyapunov + lyapunov.transpose(0, 2, 1)
    identity = np.eye(n)
    mu = c.SDP_EIGEN_FLOOR * np.trace(P_base) / n

    solver = BarrierSolver(
        objective=np.einsum("iaa->i", basis),
        constraints=[
            LinearMatrixInequality(-M_hat, -lyapunov, "lyapunov"),
            LinearMatrixInequality(-mu * identity, basis, "floor"),
        ],
        phase="seeded_trace",
    )
    # the seed sits on the boundary of A P + P A^T + M <= 0; inflate it inward
    p, _ = solver.solve(pattern.project((1 + c.SEED_INFLATION) * P_base))
    return scale * symmetrize(pattern.assemble(p))


@log_calls
def seeded_structured_gramians(r: Realization, pattern: SparsityPattern) -> GramianPair:
    """Structured Gramians from the programme seeded with the H-matrix certificate.

    Raises:
        CertificateUnavailable: If -A is not H+ or B, C vanish
        NoConvergence: If the barrier method does not converge
    """
    if pattern.n != r.n:
        raise PatternMismatch(f"pattern covers {pattern.n} states, realisation has {r.n}")
    assert_stable(r.A)
    P = _seeded_gramian(r.A, r.B, pattern)
    Q = _seeded_gramian(r.A.T, r.C.T, pattern)
    gramians = GramianPair(P, Q, pattern, c.HMATRIX_SEEDED_SDP, 0.0)
    try:
        gramians.verify(r)
    except NotPositiveDefinite as e:
        raise CertificateUnavailable(f"seeded Gramians failed verification: {e}") from e
    return gramians
