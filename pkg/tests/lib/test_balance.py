import logging

import numpy as np
import pytest

from lnamor.lib import constants as c
from lnamor.lib.balance import (
    balance,
    h2_reduce_structured,
    reduce_structured,
    singular_perturb,
    truncate,
)
from lnamor.lib.errors import ConfigError, HankelTie
from lnamor.lib.gramian import SparsityPattern, classical_gramians, structured_gramians
from lnamor.lib.linalg import solve_lyapunov
from lnamor.lib.realization import Realization
from lnamor.lib.simulate.norms import dc_gain, difference, hinf_norm


def random_layout(rng, n, min_preserved=0):
    """Preserved count, group sizes and keep counts for an n-state system."""
    k = int(rng.integers(min_preserved, min(4, n - 1) + 1))
    remaining = n - k
    n_groups = int(rng.integers(1, min(3, remaining) + 1))
    cuts = sorted(rng.choice(np.arange(1, remaining), n_groups - 1, replace=False))
    sizes = [int(s) for s in np.diff([0, *cuts, remaining])]
    keep = [int(rng.integers(0, size + 1)) for size in sizes]
    if k + sum(keep) == 0:
        keep[0] = 1
    return k, sizes, keep


def max_eig(S):
    return np.linalg.eigvalsh((S + S.T) / 2)[-1]


def psd_factor(S):
    """F with F F^T = S for a symmetric positive semidefinite S."""
    values, vectors = np.linalg.eigh((S + S.T) / 2)
    return vectors * np.sqrt(np.clip(values, 0.0, None))[None, :]


class TestBalance:
    def test_balances_classical_pair(self, stable_system):
        """T P T^T and T^-T Q T^-1 should both equal Sigma"""
        rng = np.random.default_rng(5)
        r = stable_system(rng, 5, m=2, p=2)
        g = classical_gramians(r)
        bf = balance(g.P, g.Q)
        p_error, q_error = bf.residuals(g.P, g.Q)
        assert p_error < c.BALANCE_TOLERANCE
        assert q_error < c.BALANCE_TOLERANCE
        assert np.all(np.diff(bf.sigma) <= 0)
        assert bf.inverse_residual() <= c.PROJECTION_TOLERANCE
        np.testing.assert_allclose(bf.T @ bf.T_inv, np.eye(5), atol=c.PROJECTION_TOLERANCE)

    def test_residuals_past_tolerance_warn(self, stable_system, caplog, monkeypatch):
        """Residuals above the balancing tolerance are reported at WARNING"""
        monkeypatch.setattr(c, "BALANCE_TOLERANCE", -1.0)
        caplog.set_level(logging.WARNING, logger="lnamor.lib.balance")
        r = stable_system(np.random.default_rng(5), 5, m=2, p=2)
        g = classical_gramians(r)
        balance(g.P, g.Q)
        warnings = [
            rec
            for rec in caplog.records
            if rec.name == "lnamor.lib.balance" and rec.levelno == logging.WARNING
        ]
        assert len(warnings) == 1
        assert "p_residual" in warnings[0].diagnostics


class TestUnstructuredReduction:
    def test_truncation_bound(self, stable_system):
        """Balanced truncation should respect twice the Hankel tail"""
        rng = np.random.default_rng(9)
        r = stable_system(rng, 6, m=2, p=2)
        g = classical_gramians(r)
        result = truncate(r, balance(g.P, g.Q), 3)
        assert result.method == c.BT
        assert result.reduced.n == 3
        error = hinf_norm(difference(r, result.reduced), tol=1e-9)
        assert error <= result.hankel_tail * (1 + 1e-6) + 1e-9

    def test_perturbation_matches_dc_gain(self, stable_system):
        """Singular perturbation should match the zero-frequency gain"""
        rng = np.random.default_rng(10)
        r = stable_system(rng, 6, m=2, p=2)
        g = classical_gramians(r)
        result = singular_perturb(r, balance(g.P, g.Q), 2)
        np.testing.assert_allclose(dc_gain(result.reduced), dc_gain(r), atol=1e-8)

    def test_tie_raises(self):
        """Equal Hankel values cannot be split"""
        r = Realization(-np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)))
        g = classical_gramians(r)
        with pytest.raises(HankelTie):
            truncate(r, balance(g.P, g.Q), 1)

    def test_keep_out_of_range(self, stable_system):
        rng = np.random.default_rng(12)
        r = stable_system(rng, 3)
        g = classical_gramians(r)
        with pytest.raises(ConfigError):
            truncate(r, balance(g.P, g.Q), 0)


class TestStructuredReduction:
    def test_error_bound_suite(self, structured_system):
        """Structured BT and BSP errors should stay below twice the discarded tail"""
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(2, 11))
            r = structured_system(rng, n)
            k, sizes, keep = random_layout(rng, n)
            g = structured_gramians(r, SparsityPattern.structured(k, sizes))
            for method in (c.STRUCTURED_BT, c.STRUCTURED_BSP):
                result = reduce_structured(r, g, k, keep, method)
                error = hinf_norm(difference(r, result.reduced), tol=1e-9)
                assert error <= result.hankel_tail * (1 + 1e-6) + 1e-9

    def test_extended_realisation_oracle(self, structured_system):
        """Generalised Gramians are exact Gramians of an input/output-extended system"""
        rng = np.random.default_rng(77)
        for _ in range(20):
            n = int(rng.integers(3, 8))
            r = structured_system(rng, n)
            k, sizes, keep = random_layout(rng, n)
            g = structured_gramians(r, SparsityPattern.structured(k, sizes))
            A = r.A
            B_e = np.hstack([r.B, psd_factor(-(A @ g.P + g.P @ A.T + r.B @ r.B.T))])
            C_e = np.vstack([r.C, psd_factor(-(A.T @ g.Q + g.Q @ A + r.C.T @ r.C)).T])
            np.testing.assert_allclose(
                solve_lyapunov(A, B_e @ B_e.T), g.P, atol=1e-8 * np.linalg.norm(g.P, 2)
            )
            np.testing.assert_allclose(
                solve_lyapunov(A.T, C_e.T @ C_e), g.Q, atol=1e-8 * np.linalg.norm(g.Q, 2)
            )

            result = reduce_structured(r, g, k, keep, c.STRUCTURED_BT)
            V, W, _, _ = result.projections
            extended = Realization(A, B_e, C_e, np.zeros((C_e.shape[0], B_e.shape[1])))
            extended_reduced = Realization(
                V @ A @ W, V @ B_e, C_e @ W, np.zeros((C_e.shape[0], B_e.shape[1]))
            )
            extended_error = hinf_norm(difference(extended, extended_reduced), tol=1e-9)
            error = hinf_norm(difference(r, result.reduced), tol=1e-9)
            assert extended_error <= result.hankel_tail * (1 + 1e-6) + 1e-9
            assert error <= extended_error * (1 + 1e-6) + 1e-9

    def test_diagonal_certificate_suite(self, structured_system):
        """Reduced drifts keep the diagonal certificate diag(P_11, Sigma_kept)"""
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            r = structured_system(rng, n)
            k, sizes, keep = random_layout(rng, n, min_preserved=1)
            g = structured_gramians(r, SparsityPattern.structured(k, sizes))
            for method in (c.STRUCTURED_BT, c.STRUCTURED_BSP):
                result = reduce_structured(r, g, k, keep, method)
                kept = list(result.kept)
                S = np.diag(np.concatenate([np.diag(g.P)[:k], result.sigma[kept[k:]]]))
                F = result.reduced.A
                assert max_eig(F @ S + S @ F.T) < 0

    def test_preserved_states_keep_coordinates(self, structured_system):
        """The preserved block of the projections should be the identity"""
        rng = np.random.default_rng(4)
        r = structured_system(rng, 5)
        g = structured_gramians(r, SparsityPattern.structured(2, [3]))
        result = reduce_structured(r, g, 2, [1])
        V, W, V_r, W_r = result.projections
        np.testing.assert_allclose(V[:2, :2], np.eye(2))
        np.testing.assert_allclose(W[:2, :2], np.eye(2))
        np.testing.assert_allclose(V @ W, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(V_r @ W_r, np.eye(2), atol=1e-10)
        fast = np.linalg.solve(V_r @ r.A @ W_r, V_r @ r.A @ W)
        np.testing.assert_allclose(
            result.reduced.C, r.C @ W - r.C @ W_r @ fast, atol=1e-10
        )

    def test_perturbation_matches_dc_gain(self, structured_system):
        rng = np.random.default_rng(8)
        r = structured_system(rng, 6)
        g = structured_gramians(r, SparsityPattern.structured(1, [3, 2]))
        result = reduce_structured(r, g, 1, [1, 1], c.STRUCTURED_BSP)
        np.testing.assert_allclose(dc_gain(result.reduced), dc_gain(r), atol=1e-8)

    def test_classical_tie_raises(self):
        """A tie inside a lumped block should raise HankelTie"""
        r = Realization(-np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)))
        with pytest.raises(HankelTie):
            reduce_structured(r, classical_gramians(r), 0, [1])

    @pytest.mark.parametrize("keep", [[3], [1, 1], [-1]])
    def test_invalid_keep(self, structured_system, keep):
        rng = np.random.default_rng(6)
        r = structured_system(rng, 4)
        g = structured_gramians(r, SparsityPattern.structured(2, [2]))
        with pytest.raises(ConfigError):
            reduce_structured(r, g, 2, keep)

    def test_unknown_method(self, structured_system):
        rng = np.random.default_rng(6)
        r = structured_system(rng, 3)
        g = structured_gramians(r, SparsityPattern.structured(1, [2]))
        with pytest.raises(ConfigError):
            reduce_structured(r, g, 1, [1], c.TIMESCALE)


class TestH2Reduction:
    def test_variances_and_tags(self, structured_system):
        """Kept states carry the largest variances of each block, without a bound"""
        rng = np.random.default_rng(15)
        r = structured_system(rng, 5)
        g = structured_gramians(r, SparsityPattern.structured(1, [4]))
        result = h2_reduce_structured(r, g, 1, [2])
        assert result.method == c.STRUCTURED_H2
        assert result.hankel_tail is None
        assert result.reduced.n == 3
        block = result.sigma[1:]
        np.testing.assert_allclose(block, np.sort(np.linalg.eigvalsh(g.P[1:, 1:]))[::-1])
        np.testing.assert_allclose(dc_gain(result.reduced), dc_gain(r), atol=1e-8)


class TestReductionContext:
    def test_physical_projections(self, structured_system):
        """Physical projections should act on species in their original order"""
        rng = np.random.default_rng(21)
        r = structured_system(rng, 4)
        order = (2, 0, 3, 1)
        permuted = r.permuted(order)
        g = structured_gramians(permuted, SparsityPattern.structured(2, [2]))
        result = reduce_structured(permuted, g, 2, [1]).with_context(
            operating_point=np.ones(4), permutation=order, species=("C", "A", "D", "B")
        )
        x = rng.normal(size=4)
        V_phys = result.physical_projections().V
        np.testing.assert_allclose(V_phys @ x, result.projections.V @ x[list(order)])
        assert result.species == ("C", "A", "D", "B")
