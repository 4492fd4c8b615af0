from lnamor.lib.gramian.api import (
    GramianPair,
    classical_gramians,
    seeded_structured_gramians,
    structured_gramians,
)
from lnamor.lib.gramian.pattern import Block, SparsityPattern
from lnamor.lib.gramian.sdp import (
    BarrierDiagnostics,
    BarrierSolver,
    LinearMatrixInequality,
)
