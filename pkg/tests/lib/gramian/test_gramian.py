import numpy as np
import pytest

from lnamor.lib import constants as c
from lnamor.lib.errors import ConfigError, Infeasible, NoConvergence, PatternMismatch
from lnamor.lib.gramian import (
    BarrierSolver,
    GramianPair,
    LinearMatrixInequality,
    SparsityPattern,
    classical_gramians,
    seeded_structured_gramians,
    structured_gramians,
)
from lnamor.lib.network import linearize
from lnamor.lib.realization import Realization


@pytest.fixture
def toy_realization(toy_model, toy_steady_state):
    """Toy LNA with S1, S3 preserved and S2, S4 lumped."""
    return linearize(toy_model, toy_steady_state).permuted([0, 2, 1, 3])


def min_eig(S):
    return np.linalg.eigvalsh((S + S.T) / 2)[0]


class TestBarrierSolver:
    def test_scalar_programme(self):
        """minimize p subject to p > 1"""
        solver = BarrierSolver(
            objective=np.array([1.0]),
            constraints=[LinearMatrixInequality(np.array([[-1.0]]), np.array([[[1.0]]]))],
        )
        p, diagnostics = solver.solve(np.array([5.0]))
        assert p[0] == pytest.approx(1.0, abs=1e-6)
        assert diagnostics.outer_iterations > 0

    def test_infeasible_start(self):
        solver = BarrierSolver(
            objective=np.array([1.0]),
            constraints=[LinearMatrixInequality(np.array([[-1.0]]), np.array([[[1.0]]]))],
        )
        with pytest.raises(NoConvergence):
            solver.solve(np.array([0.0]))

    def test_stop_when(self):
        """The solve should return as soon as the predicate holds"""
        solver = BarrierSolver(
            objective=np.array([1.0]),
            constraints=[LinearMatrixInequality(np.array([[-1.0]]), np.array([[[1.0]]]))],
        )
        p, diagnostics = solver.solve(np.array([5.0]), stop_when=lambda z: z[0] < 3)
        assert p[0] < 3
        assert diagnostics.stopped_early


class TestClassicalGramians:
    def test_toy(self, toy_realization):
        g = classical_gramians(toy_realization)
        assert g.provenance == c.EQUATION
        A, B = toy_realization.A, toy_realization.B
        residual = A @ g.P + g.P @ A.T + B @ B.T
        assert np.linalg.norm(residual, 2) <= 1e-9 * np.linalg.norm(g.P, 2)

    def test_unknown_provenance(self, toy_realization):
        g = classical_gramians(toy_realization)
        with pytest.raises(ConfigError):
            GramianPair(g.P, g.Q, g.pattern, "guess")


class TestStructuredGramians:
    def test_toy_conforms(self, toy_realization):
        """Structured Gramians should follow the pattern and pass verification"""
        pattern = SparsityPattern.structured(2, [2])
        g = structured_gramians(toy_realization, pattern)
        assert g.provenance == c.SDP
        assert pattern.conforms(g.P)
        assert pattern.conforms(g.Q)
        assert g.slack > 0
        g.verify(toy_realization)

    def test_dominates_classical(self, toy_realization):
        """Generalised Gramians bound the classical ones from above"""
        g = structured_gramians(toy_realization, SparsityPattern.structured(2, [2]))
        exact = classical_gramians(toy_realization)
        assert min_eig(g.P - exact.P) >= -1e-8 * np.linalg.norm(g.P, 2)
        assert min_eig(g.Q - exact.Q) >= -1e-8 * np.linalg.norm(g.Q, 2)

    def test_full_pattern_approaches_classical(self, stable_system):
        """Without sparsity the minimal trace is the classical Gramian trace"""
        rng = np.random.default_rng(3)
        r = stable_system(rng, 3)
        g = structured_gramians(r, SparsityPattern.full(3))
        exact = classical_gramians(r)
        assert np.trace(g.P) == pytest.approx(np.trace(exact.P), rel=1e-4)
        assert np.trace(g.Q) == pytest.approx(np.trace(exact.Q), rel=1e-4)

    def test_not_diagonally_stable(self):
        """A Hurwitz drift with a positive diagonal entry has no diagonal Gramian"""
        A = np.array([[1.0, -2.0], [3.0, -4.0]])
        r = Realization(A, np.eye(2), np.eye(2), np.zeros((2, 2)))
        with pytest.raises(Infeasible):
            structured_gramians(r, SparsityPattern.diagonal(2))

    def test_pattern_size_mismatch(self, toy_realization):
        with pytest.raises(PatternMismatch):
            structured_gramians(toy_realization, SparsityPattern.full(3))


class TestSeededGramians:
    def test_toy(self, toy_realization):
        """The seeded programme should also produce conforming Gramians"""
        pattern = SparsityPattern.structured(2, [2])
        g = seeded_structured_gramians(toy_realization, pattern)
        assert g.provenance == c.HMATRIX_SEEDED_SDP
        assert pattern.conforms(g.P)
        assert min_eig(g.P) > 0
        assert min_eig(g.Q) > 0
