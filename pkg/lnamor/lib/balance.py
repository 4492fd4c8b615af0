"""Balancing transformations and balanced reduction.

A balancing transformation T maps a Gramian pair to T P T^T = T^-T Q T^-1 =
Sigma. Reduction keeps a subset of balanced states and either truncates the
rest (infinite-frequency match) or eliminates them by singular perturbation
(zero-frequency match). Structured variants restrict T to diag(I_k, T_2, ...)
so that the first k states keep their physical meaning.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.errors import (
    ConfigError,
    DiagonalStabilityLost,
    HankelTie,
    NotPositiveDefinite,
    PatternMismatch,
    SingularFastBlock,
)
from lnamor.lib.gramian import GramianPair
from lnamor.lib.linalg import (
    assert_stable,
    block_diagonal,
    cholesky_factor,
    max_eigenvalue_symmetric,
    norm2,
    singular_values,
    svd,
    symmetrize,
)
from lnamor.lib.logging import log_calls
from lnamor.lib.realization import Realization
from lnamor.lib.simulate.norms import dc_gain
from lnamor.lib.types import Matrix, Vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockLayout:
    """Preserved-state count followed by the sizes of the reduced blocks."""

    preserved: int
    groups: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.preserved + sum(self.groups)

    @property
    def group_offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in self.preserved + np.cumsum((0,) + self.groups[:-1]))

    def group_slices(self) -> list[slice]:
        return [slice(o, o + s) for o, s in zip(self.group_offsets, self.groups)]


@dataclass(frozen=True)
class BalancedForm:
    """A balancing transformation and its generalised Hankel values.

    Attributes:
        T: Transformation (n x n)
        T_inv: Its inverse
        sigma: Diagonal of Sigma; descending inside each block, not across blocks
        layout: Block layout the transformation respects
    """

    T: Matrix
    T_inv: Matrix
    sigma: Vector
    layout: BlockLayout

    @property
    def Sigma(self) -> Matrix:
        return np.diag(self.sigma)

    def residuals(self, P: Matrix, Q: Matrix) -> tuple[float, float]:
        """Relative errors of T P T^T and T^-T Q T^-1 against Sigma."""
        scale = max(norm2(self.Sigma), c.ABSOLUTE_FLOOR)
        p_error = norm2(self.T @ P @ self.T.T - self.Sigma) / scale
        q_error = norm2(self.T_inv.T @ Q @ self.T_inv - self.Sigma) / scale
        return p_error, q_error

    def inverse_residual(self) -> float:
        """||T T^-1 - I||, the error of the projection identities V W = I."""
        return norm2(self.T @ self.T_inv - np.eye(self.T.shape[0]))


def _report_accuracy(form: BalancedForm, P: Matrix, Q: Matrix) -> None:
    """Warn when the balanced pair or the inverse drift past their tolerances."""
    p_error, q_error = form.residuals(P, Q)
    inverse_error = form.inverse_residual()
    if (
        max(p_error, q_error) > c.BALANCE_TOLERANCE
        or inverse_error > c.PROJECTION_TOLERANCE
    ):
        logger.warning(
            "Balancing residuals exceed tolerance",
            extra={
                "diagnostics": {
                    "p_residual": f"{p_error:.2e}",
                    "q_residual": f"{q_error:.2e}",
                    "inverse_residual": f"{inverse_error:.2e}",
                }
            },
        )


class Projections(NamedTuple):
    """Rows of T (V, V_r) and columns of T^-1 (W, W_r) for kept and discarded states."""

    V: Matrix
    W: Matrix
    V_r: Matrix
    W_r: Matrix


@dataclass(frozen=True)
class ReductionResult:
    """A reduced model with the data needed to lift it back.

    Attributes:
        reduced: Reduced realisation
        projections: Projection quadruple in the (permuted) model coordinates
        hankel_tail: Twice the sum of discarded Hankel values (None for the
            controllability-only variant)
        method: Reduction method tag
        gramian_provenance: How the Gramians were obtained
        sigma: Hankel values (or variances) of every state, preserved block first
        kept: Indices of the kept balanced states
        layout: Block layout of the reduction
        operating_point: Steady state the realisation was linearised at
        permutation: Species order applied before reduction (new i = old order[i])
        species: Species names in the permuted order
    """

    reduced: Realization
    projections: Projections
    hankel_tail: float | None
    method: str
    gramian_provenance: str
    sigma: Vector
    kept: tuple[int, ...]
    layout: BlockLayout
    operating_point: Vector | None = None
    permutation: tuple[int, ...] | None = None
    species: tuple[str, ...] = field(default=())

    @property
    def is_perturbation(self) -> bool:
        return self.method in c.PERTURBATION_METHODS

    def permutation_matrix(self) -> Matrix:
        n = self.projections.V.shape[1]
        order = self.permutation if self.permutation is not None else tuple(range(n))
        Pm = np.zeros((n, n))
        Pm[np.arange(n), list(order)] = 1.0
        return Pm

    def physical_projections(self) -> Projections:
        """Projections acting on species in their original order."""
        Pm = self.permutation_matrix()
        V, W, V_r, W_r = self.projections
        return Projections(V @ Pm, Pm.T @ W, V_r @ Pm, Pm.T @ W_r)

    def with_context(
        self,
        operating_point: Vector | None,
        permutation: tuple[int, ...] | None,
        species: tuple[str, ...] = (),
    ) -> "ReductionResult":
        return ReductionResult(
            reduced=self.reduced,
            projections=self.projections,
            hankel_tail=self.hankel_tail,
            method=self.method,
            gramian_provenance=self.gramian_provenance,
            sigma=self.sigma,
            kept=self.kept,
            layout=self.layout,
            operating_point=operating_point,
            permutation=permutation,
            species=species,
        )


def transform(r: Realization, T: Matrix, T_inv: Matrix) -> Realization:
    """Realisation in coordinates x' = T x."""
    return Realization(T @ r.A @ T_inv, T @ r.B, r.C @ T_inv, r.D, blocks=r.blocks)


def balance(P: Matrix, Q: Matrix) -> BalancedForm:
    """Balancing transformation of a Gramian pair.

    With P = L L^T and L^T Q L = U S U^T, T = Sigma^1/2 U^T L^-1 where
    Sigma = S^1/2. A warning is logged when the balanced pair or T T^-1
    misses its tolerance.

    Raises:
        NotPositiveDefinite: If P or Q is not symmetric positive definite
    """
    form = _balance_pair(P, Q)
    _report_accuracy(form, P, Q)
    return form


def _balance_pair(P: Matrix, Q: Matrix) -> BalancedForm:
    L = cholesky_factor(P)
    cholesky_factor(Q)
    U, S, _ = svd(symmetrize(L.T @ Q @ L))
    sigma = np.sqrt(np.diag(S))
    root = np.sqrt(sigma)
    L_inv = np.linalg.solve(L, np.eye(L.shape[0]))
    T = (root[:, None] * U.T) @ L_inv
    T_inv = L @ (U / root[None, :])
    return BalancedForm(T, T_inv, sigma, BlockLayout(0, (P.shape[0],)))


@log_calls
def balance_structured(g: GramianPair, k: int) -> BalancedForm:
    """Block-diagonal balancing T = diag(D_1, T_2, ...) of a structured pair.

    A diagonal preserved block is rescaled by D_1 = (q/p)^1/4 to
    Sigma_1 = (p q)^1/2; every lumped block is balanced on its own. Sigma is
    not sorted across blocks.

    Raises:
        PatternMismatch: If the pattern's first block does not have size k
        NotPositiveDefinite: If a block of P or Q is not positive definite
    """
    pattern = g.pattern
    sizes = list(pattern.sizes)
    n = pattern.n
    if not 0 <= k <= n:
        raise PatternMismatch(f"preserved count {k} outside [0, {n}]")

    transforms, inverses, sigmas = [], [], []
    groups = sizes
    if k > 0:
        if sizes[0] != k:
            raise PatternMismatch(f"first pattern block has size {sizes[0]}, expected {k}")
        P1, Q1 = g.P[:k, :k], g.Q[:k, :k]
        if pattern.blocks[0].kind == c.DIAGONAL:
            p, q = np.diag(P1), np.diag(Q1)
            if np.any(p <= 0) or np.any(q <= 0):
                raise NotPositiveDefinite("preserved block of P or Q is not positive")
            scaling = (q / p) ** 0.25
            transforms.append(np.diag(scaling))
            inverses.append(np.diag(1 / scaling))
            sigmas.append(np.sqrt(p * q))
        else:
            form = _balance_pair(P1, Q1)
            transforms.append(form.T)
            inverses.append(form.T_inv)
            sigmas.append(form.sigma)
        groups = sizes[1:]

    offset = k
    for size in groups:
        block = slice(offset, offset + size)
        form = _balance_pair(g.P[block, block], g.Q[block, block])
        transforms.append(form.T)
        inverses.append(form.T_inv)
        sigmas.append(form.sigma)
        offset += size

    form = BalancedForm(
        T=block_diagonal(*transforms),
        T_inv=block_diagonal(*inverses),
        sigma=np.concatenate(sigmas),
        layout=BlockLayout(k, tuple(groups)),
    )
    _report_accuracy(form, g.P, g.Q)
    return form


def _check_gap(sigma: Vector, keep: int, label: str) -> None:
    if 0 < keep < sigma.shape[0]:
        if not sigma[keep - 1] >= (1 + c.HANKEL_GAP) * sigma[keep]:
            raise HankelTie(
                f"{label}: kept value {sigma[keep - 1]:.6e} is not separated from "
                f"discarded value {sigma[keep]:.6e}"
            )


def _reduce_balanced(
    rb: Realization, kept: list[int], discarded: list[int], perturb: bool
) -> Realization:
    """Truncate or singularly perturb a realisation already in balanced coordinates."""
    A, B, C, D = rb.A, rb.B, rb.C, rb.D
    A11 = A[np.ix_(kept, kept)]
    B1, C1 = B[kept, :], C[:, kept]
    if not discarded or not perturb:
        return Realization(A11, B1, C1, D.copy())

    A12 = A[np.ix_(kept, discarded)]
    A21 = A[np.ix_(discarded, kept)]
    A22 = A[np.ix_(discarded, discarded)]
    B2, C2 = B[discarded, :], C[:, discarded]
    sv = singular_values(A22)
    if sv[-1] <= c.SINGULAR_THRESHOLD * norm2(A):
        raise SingularFastBlock(
            f"discarded block is singular (smallest singular value {sv[-1]:.3e})"
        )
    # A22^-1 applied to [A21, B2]
    solved = np.linalg.solve(A22, np.hstack([A21, B2]))
    X21, XB2 = solved[:, : len(kept)], solved[:, len(kept) :]
    return Realization(
        A11 - A12 @ X21,
        B1 - A12 @ XB2,
        C1 - C2 @ X21,
        D - C2 @ XB2,
    )


def _check_dc_match(r: Realization, reduced: Realization) -> None:
    full = dc_gain(r)
    mismatch = norm2(dc_gain(reduced) - full)
    if mismatch > c.DC_MATCH_TOLERANCE * (1 + norm2(full)):
        raise SingularFastBlock(
            f"reduced model does not match the zero-frequency gain (error {mismatch:.3e})"
        )


def _reduce_with(
    r: Realization,
    T: Matrix,
    T_inv: Matrix,
    kept: list[int],
    method: str,
) -> tuple[Realization, Projections]:
    discarded = sorted(set(range(r.n)) - set(kept))
    rb = transform(r, T, T_inv)
    reduced = _reduce_balanced(rb, kept, discarded, method in c.PERTURBATION_METHODS)
    assert_stable(reduced.A, "reduced drift")
    if method in c.PERTURBATION_METHODS and discarded:
        _check_dc_match(r, reduced)
    projections = Projections(
        V=T[kept, :], W=T_inv[:, kept], V_r=T[discarded, :], W_r=T_inv[:, discarded]
    )
    return reduced, projections


def _unstructured(
    r: Realization, bf: BalancedForm, keep: int, method: str, provenance: str
) -> ReductionResult:
    if not 1 <= keep <= r.n:
        raise ConfigError(f"keep must lie in [1, {r.n}], got {keep}")
    _check_gap(bf.sigma, keep, "balanced realisation")
    kept = list(range(keep))
    reduced, projections = _reduce_with(r, bf.T, bf.T_inv, kept, method)
    return ReductionResult(
        reduced=reduced,
        projections=projections,
        hankel_tail=2 * float(np.sum(bf.sigma[keep:])),
        method=method,
        gramian_provenance=provenance,
        sigma=bf.sigma,
        kept=tuple(kept),
        layout=bf.layout,
    )


@log_calls
def truncate(
    r: Realization, bf: BalancedForm, keep: int, provenance: str = c.EQUATION
) -> ReductionResult:
    """Balanced truncation to the first ``keep`` balanced states.

    Raises:
        HankelTie: If sigma_keep / sigma_keep+1 < 1 + 1e-8
        NotStable: If the reduced drift is not Hurwitz
    """
    return _unstructured(r, bf, keep, c.BT, provenance)


@log_calls
def singular_perturb(
    r: Realization, bf: BalancedForm, keep: int, provenance: str = c.EQUATION
) -> ReductionResult:
    """Balanced singular perturbation; matches G at zero frequency.

    Raises:
        HankelTie: If the kept and discarded values are not separated
        SingularFastBlock: If the discarded block of the balanced drift is singular
    """
    return _unstructured(r, bf, keep, c.BSP, provenance)


def _keep_counts(keep: int | Sequence[int], layout: BlockLayout) -> list[int]:
    counts = [keep] if isinstance(keep, (int, np.integer)) else list(keep)
    if len(counts) != len(layout.groups):
        raise ConfigError(
            f"{len(counts)} keep counts given for {len(layout.groups)} reduced blocks"
        )
    for count, size in zip(counts, layout.groups):
        if not 0 <= count <= size:
            raise ConfigError(f"keep count {count} outside [0, {size}]")
    if layout.preserved + sum(counts) == 0:
        raise ConfigError("reduction would keep no state")
    return [int(count) for count in counts]


def _structured_reduction(
    r: Realization,
    g: GramianPair,
    T: Matrix,
    T_inv: Matrix,
    sigma: Vector,
    layout: BlockLayout,
    keep: int | Sequence[int],
    method: str,
    with_bound: bool,
) -> ReductionResult:
    counts = _keep_counts(keep, layout)
    k = layout.preserved
    kept = list(range(k))
    tail = 0.0
    for index, (block, count) in enumerate(zip(layout.group_slices(), counts)):
        values = sigma[block]
        _check_gap(values, count, f"reduced block {index + 1}")
        kept.extend(range(block.start, block.start + count))
        tail += float(np.sum(values[count:]))

    reduced, projections = _reduce_with(r, T, T_inv, kept, method)

    certified = g.provenance != c.EQUATION and (
        k == 0 or g.pattern.blocks[0].kind == c.DIAGONAL
    )
    if certified:
        _check_diagonal_stability(reduced.A, g.P, sigma, k, kept)

    logger.info(
        f"Reduced {r.n} -> {reduced.n} states ({method}), "
        f"kept {kept}, tail {2 * tail:.4e}"
    )
    return ReductionResult(
        reduced=reduced,
        projections=projections,
        hankel_tail=2 * tail if with_bound else None,
        method=method,
        gramian_provenance=g.provenance,
        sigma=sigma,
        kept=tuple(kept),
        layout=layout,
    )


def _check_diagonal_stability(
    F_r: Matrix, P: Matrix, sigma: Vector, k: int, kept: list[int]
) -> None:
    """Eigen-check F_r S + S F_r^T < 0 for S = diag(P_11, sigma_kept)."""
    certificate = np.concatenate([np.diag(P)[:k], sigma[kept[k:]]])
    lam = max_eigenvalue_symmetric(F_r * certificate[None, :] + certificate[:, None] * F_r.T)
    if not lam < 0:
        raise DiagonalStabilityLost(
            f"reduced drift fails its diagonal certificate (max eigenvalue {lam:.3e})"
        )


def _fold_preserved(bf: BalancedForm) -> tuple[Matrix, Matrix]:
    """Replace the preserved block of T by the identity."""
    k = bf.layout.preserved
    T, T_inv = bf.T.copy(), bf.T_inv.copy()
    T[:k, :k] = np.eye(k)
    T_inv[:k, :k] = np.eye(k)
    return T, T_inv


@log_calls
def reduce_structured(
    r: Realization,
    g: GramianPair,
    k: int,
    keep: int | Sequence[int],
    method: str = c.STRUCTURED_BSP,
) -> ReductionResult:
    """Structure-preserving balanced reduction.

    The first k states are preserved in physical coordinates; each reduced
    block keeps its ``keep`` leading balanced states. The bound is twice the
    sum of the discarded Hankel values of the reduced blocks.

    Args:
        r: Realisation whose first k states are preserved
        g: Gramians conforming to a structured pattern
        k: Number of preserved states
        keep: Kept count per reduced block (an int for a single block)
        method: structured_bt or structured_bsp

    Raises:
        HankelTie: If a cut inside a reduced block falls on a tie
        SingularFastBlock: If the discarded drift block is singular
        DiagonalStabilityLost: If the reduced drift fails its diagonal certificate
    """
    if method not in (c.STRUCTURED_BT, c.STRUCTURED_BSP):
        raise ConfigError(f"unknown structured method {method!r}")
    bf = balance_structured(g, k)
    T, T_inv = _fold_preserved(bf)
    return _structured_reduction(r, g, T, T_inv, bf.sigma, bf.layout, keep, method, True)


@log_calls
def h2_reduce_structured(
    r: Realization, g: GramianPair, k: int, keep: int | Sequence[int]
) -> ReductionResult:
    """Structured reduction balancing the controllability Gramian only.

    Each reduced block is diagonalised by the eigenvectors of its block of P
    (largest variance first); Q is ignored and no error bound is recorded.
    """
    pattern = g.pattern
    sizes = list(pattern.sizes)
    if k > 0 and sizes[0] != k:
        raise PatternMismatch(f"first pattern block has size {sizes[0]}, expected {k}")
    groups = sizes[1:] if k > 0 else sizes
    layout = BlockLayout(k, tuple(groups))

    transforms = [np.eye(k)] if k > 0 else []
    variances = [np.diag(g.P)[:k]] if k > 0 else []
    for block in layout.group_slices():
        values, vectors = np.linalg.eigh(symmetrize(g.P[block, block]))
        order = np.argsort(values)[::-1]
        values, vectors = values[order], vectors[:, order]
        for j in range(vectors.shape[1]):
            if vectors[np.argmax(np.abs(vectors[:, j])), j] < 0:
                vectors[:, j] = -vectors[:, j]
        transforms.append(vectors.T)
        variances.append(values)

    T = block_diagonal(*transforms)
    return _structured_reduction(
        r, g, T, T.T.copy(), np.concatenate(variances), layout, keep, c.STRUCTURED_H2, False
    )
