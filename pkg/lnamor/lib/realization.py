"""State-space realisations (A, B, C, D) with block-partition metadata."""

from dataclasses import dataclass, field

import numpy as np

from lnamor.lib.errors import DimensionMismatch
from lnamor.lib.linalg import as_matrix
from lnamor.lib.types import Matrix


@dataclass(frozen=True)
class Realization:
    """A linear time-invariant system x' = A x + B u, y = C x + D u.

    Attributes:
        A: Drift matrix (n x n)
        B: Input matrix (n x m)
        C: Output matrix (p x n)
        D: Feedthrough matrix (p x m)
        blocks: Sizes of the state blocks (preserved block first); empty when
            the state is not partitioned
    """

    A: Matrix
    B: Matrix
    C: Matrix
    D: Matrix
    blocks: tuple[int, ...] = field(default=())

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        b = as_matrix(self.B, "B")
        c = as_matrix(self.C, "C")
        d = as_matrix(self.D, "D")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {a.shape}")
        if b.shape[0] != n or c.shape[1] != n:
            raise DimensionMismatch(
                f"B {b.shape} and C {c.shape} do not conform with A {a.shape}"
            )
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionMismatch(f"D must be {(c.shape[0], b.shape[1])}, got {d.shape}")
        if self.blocks and sum(self.blocks) != n:
            raise DimensionMismatch(f"blocks {self.blocks} do not sum to {n}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "D", d)
        object.__setattr__(self, "blocks", tuple(int(s) for s in self.blocks))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    def transfer(self, s: complex) -> np.ndarray:
        """Evaluate G(s) = C (sI - A)^{-1} B + D."""
        resolvent = np.linalg.solve(s * np.eye(self.n) - self.A, self.B.astype(complex))
        return self.C @ resolvent + self.D

    def permuted(self, order: tuple[int, ...] | list[int]) -> "Realization":
        """Reorder states so that new state i is old state order[i]."""
        idx = np.asarray(order, dtype=int)
        return Realization(
            A=self.A[np.ix_(idx, idx)],
            B=self.B[idx, :],
            C=self.C[:, idx],
            D=self.D,
            blocks=self.blocks,
        )

    def with_blocks(self, blocks: tuple[int, ...]) -> "Realization":
        return Realization(self.A, self.B, self.C, self.D, blocks=tuple(blocks))
