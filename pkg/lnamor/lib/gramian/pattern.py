"""Block-diagonal sparsity patterns for generalised Gramians."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from lnamor.lib import constants as c
from lnamor.lib.errors import DimensionMismatch, PatternMismatch
from lnamor.lib.types import Matrix, Vector


@dataclass(frozen=True)
class Block:
    """A diagonal block of the pattern; ``kind`` is diagonal or full."""

    size: int
    kind: str

    def __post_init__(self):
        if self.size < 1:
            raise PatternMismatch(f"block size must be positive, got {self.size}")
        if self.kind not in c.BLOCK_KINDS:
            raise PatternMismatch(f"unknown block kind {self.kind!r}")


@dataclass(frozen=True)
class SparsityPattern:
    """Ordered blocks covering the state dimension.

    A symmetric matrix conforms when every entry outside the blocks, and every
    off-diagonal entry of a diagonal block, is exactly zero. The free entries
    (one per diagonal position, one per upper-triangular position of a full
    block) form the structured parameter vector.
    """

    blocks: tuple[Block, ...]

    @classmethod
    def full(cls, n: int) -> "SparsityPattern":
        return cls((Block(n, c.FULL),))

    @classmethod
    def diagonal(cls, n: int) -> "SparsityPattern":
        return cls((Block(n, c.DIAGONAL),))

    @classmethod
    def structured(
        cls, k: int, group_sizes: list[int] | tuple[int, ...], preserved_kind: str = c.DIAGONAL
    ) -> "SparsityPattern":
        """Preserved block of size k followed by one full block per lumped group."""
        blocks = [Block(k, preserved_kind)] if k > 0 else []
        blocks.extend(Block(size, c.FULL) for size in group_sizes)
        return cls(tuple(blocks))

    @property
    def n(self) -> int:
        return sum(block.size for block in self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(block.size for block in self.blocks)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.cumsum((0,) + self.sizes[:-1]))

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """(row, column) of every free entry, row <= column."""
        pairs = []
        for offset, block in zip(self.offsets, self.blocks):
            if block.kind == c.DIAGONAL:
                pairs.extend((offset + a, offset + a) for a in range(block.size))
            else:
                pairs.extend(
                    (offset + a, offset + b)
                    for a in range(block.size)
                    for b in range(a, block.size)
                )
        return tuple(pairs)

    @property
    def dimension(self) -> int:
        return len(self.pairs)

    @cached_property
    def basis(self) -> np.ndarray:
        """Symmetric basis matrices E_i stacked as (dimension, n, n)."""
        n = self.n
        basis = np.zeros((self.dimension, n, n))
        for index, (i, j) in enumerate(self.pairs):
            basis[index, i, j] = 1.0
            basis[index, j, i] = 1.0
        return basis

    def assemble(self, p: Vector) -> Matrix:
        """Symmetric matrix with free entries p."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dimension,):
            raise DimensionMismatch(f"expected {self.dimension} parameters, got {p.shape}")
        return np.tensordot(p, self.basis, axes=1)

    def project(self, P: Matrix) -> Vector:
        """Free entries of P (entries outside the pattern are ignored)."""
        rows, cols = zip(*self.pairs)
        return np.asarray(P, dtype=float)[list(rows), list(cols)]

    def mask(self) -> np.ndarray:
        mask = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.pairs:
            mask[i, j] = mask[j, i] = True
        return mask

    def conforms(self, P: Matrix) -> bool:
        P = np.asarray(P)
        return P.shape == (self.n, self.n) and not np.any(P[~self.mask()])

    def block_slices(self) -> list[slice]:
        return [slice(o, o + s) for o, s in zip(self.offsets, self.sizes)]

    def describe(self) -> list[dict]:
        return [{"size": block.size, "kind": block.kind} for block in self.blocks]
