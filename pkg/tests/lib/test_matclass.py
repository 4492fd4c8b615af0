import numpy as np
import pytest

from lnamor.lib.errors import CertificateUnavailable, NotHPlus
from lnamor.lib.matclass import (
    base_gramian_seed,
    classify,
    companion,
    diagonal_certificate,
    sign_signature,
)


def max_eig(S):
    return np.linalg.eigvalsh((S + S.T) / 2)[-1]


class TestClassify:
    def test_h_matrix_without_dominance(self):
        """[[1, -3], [0, 1]] is an H matrix that is only dominant after scaling"""
        report = classify(np.array([[1.0, -3.0], [0.0, 1.0]]))
        assert report.is_h
        assert report.is_h_plus
        assert not report.is_dd_row
        assert report.is_scaled_dd
        assert report.is_scaled_dd_col
        assert report.certificate is None

    def test_companion(self):
        """M(A) keeps the diagonal magnitude and negates off-diagonal magnitudes"""
        np.testing.assert_array_equal(
            companion(np.array([[-1.0, 2.0], [-3.0, 4.0]])),
            [[1.0, -2.0], [-3.0, 4.0]],
        )

    def test_metzler_drift(self):
        A = np.array([[-2.0, 1.0], [0.5, -1.0]])
        report = classify(A)
        assert report.is_metzler
        assert report.signature == (1, 1)
        assert report.is_dd_row

    def test_toy_drift(self, toy_model, toy_steady_state):
        """The toy drift is sign-Metzler but not Metzler, with a certificate"""
        report = classify(toy_model.drift(toy_steady_state))
        assert not report.is_metzler
        assert report.is_sign_metzler
        assert report.signature == (1, -1, 1, -1)
        assert report.certificate is not None

    def test_not_h(self):
        """A companion with a negative eigenvalue is not H"""
        report = classify(np.array([[-1.0, 2.0], [2.0, -1.0]]))
        assert not report.is_h
        assert report.certificate is None

    def test_singular_companion_is_noted(self):
        """A singular companion should be noted instead of raising"""
        report = classify(np.array([[-1.0, 1.0], [1.0, -1.0]]))
        assert not report.is_scaled_dd
        assert any("singular" in note for note in report.notes)

    def test_sign_signature_conflict(self):
        """An odd cycle of negative interactions admits no signature"""
        A = -np.ones((3, 3))
        assert sign_signature(A) is None


class TestDiagonalCertificate:
    def test_random_h_plus_suite(self, dominant_drift):
        """Every drift with -A in H+ should get a negative definite A X + X A^T"""
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 11))
            left = np.diag(rng.uniform(0.2, 5.0, size=n))
            right = np.diag(rng.uniform(0.2, 5.0, size=n))
            A = left @ dominant_drift(rng, n) @ right
            X, v, w = diagonal_certificate(A)
            assert np.all(np.diag(X) > 0)
            np.testing.assert_allclose(np.diag(X), v / w)
            assert max_eig(A @ X + X @ A.T) < 0
            assert classify(-(A @ X + X @ A.T)).is_h_plus

    def test_positive_diagonal_raises(self):
        with pytest.raises(NotHPlus):
            diagonal_certificate(np.array([[1.0, -3.0], [0.0, 1.0]]))

    def test_not_h_plus_raises(self):
        """Dominant off-diagonal coupling defeats the certificate"""
        with pytest.raises(NotHPlus):
            diagonal_certificate(np.array([[-1.0, 3.0], [2.0, -1.0]]))

    def test_scaled_example(self):
        """-[[1, -3], [0, 1]] is certified though it is not row dominant"""
        A = -np.array([[1.0, -3.0], [0.0, 1.0]])
        X = diagonal_certificate(A).X
        assert max_eig(A @ X + X @ A.T) < 0


class TestBaseGramianSeed:
    def test_seed_satisfies_inequality(self, toy_model, toy_steady_state):
        """The diagonal seed should satisfy A P + P A^T + B B^T <= 0"""
        A = toy_model.drift(toy_steady_state)
        B = toy_model.diffusion(toy_steady_state)
        P = base_gramian_seed(A, B)
        np.testing.assert_array_equal(P, np.diag(np.diag(P)))
        assert np.all(np.diag(P) > 0)
        M = B @ B.T
        scale = 2 * np.linalg.norm(A, 2) * np.linalg.norm(P, 2) + np.linalg.norm(M, 2)
        assert max_eig(A @ P + P @ A.T + M) <= 1e-10 * scale

    def test_zero_input_raises(self):
        with pytest.raises(CertificateUnavailable):
            base_gramian_seed(-np.eye(2), np.zeros((2, 1)))

    def test_no_certificate_raises(self):
        with pytest.raises(CertificateUnavailable):
            base_gramian_seed(np.array([[1.0, -2.0], [3.0, -4.0]]), np.eye(2))
