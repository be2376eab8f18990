import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neonplus.errors import DomainError
from neonplus.neon import nag_step
from neonplus.oracle import ShiftedModel
from neonplus.problems import SpectrumSpec, make_quadratic, random_orthogonal
from neonplus.spectral import (AugmentedOperator, augmented_matrix, dense_min_eig,
                               eigen_gap_check, lemma1_eig_formula, min_hessian_eig,
                               power_min_eig, random_lemma1_hessian)


class TestDenseMinEig:
    def test_diagonal(self):
        lam, v = dense_min_eig(np.diag([-1.0, 2.0, 5.0]))
        assert lam == -1.0
        np.testing.assert_allclose(np.abs(v), [1.0, 0.0, 0.0])

    def test_similarity_invariance(self):
        q = random_orthogonal(12, 3)
        lam = np.random.default_rng(3).uniform(-2, 2, 12)
        assert dense_min_eig(q.T @ np.diag(lam) @ q)[0] == pytest.approx(lam.min(), abs=1e-10)

    def test_asymmetric_rejected(self):
        with pytest.raises(DomainError):
            dense_min_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_power_iteration_agrees(self):
        rng = np.random.default_rng(5)
        for _ in range(3):
            M = rng.standard_normal((50, 50))
            H = 0.5 * (M + M.T)
            shift = np.linalg.norm(H, 2)
            lam, _ = power_min_eig(lambda v: H @ v, 50, shift, tol=1e-9, max_iter=500_000)
            assert lam == pytest.approx(dense_min_eig(H)[0], abs=1e-6)

    def test_from_hessian_vector_products(self):
        p = make_quadratic(SpectrumSpec([-0.3, 0.2, 1.0], rotation_seed=2))
        assert min_hessian_eig(p, np.zeros(3)) == pytest.approx(-0.3, abs=1e-12)


class TestAugmented:
    def test_scalar_transcription(self):
        lam, eta, zeta = 0.7, 0.1, 0.9
        A = augmented_matrix(np.array([[lam]]), eta, zeta)
        m = 1 - eta * lam
        np.testing.assert_allclose(A, [[(1 + zeta) * m, -zeta * m], [1.0, 0.0]])
        assert np.linalg.det(A) == pytest.approx(zeta * m)

    def test_reproduces_nag_recurrence(self):
        p = make_quadratic(SpectrumSpec([-0.2, 0.1, 0.5, 1.0], rotation_seed=4))
        H = p.meta["H"]
        eta, zeta = 0.1, 0.8
        model = ShiftedModel(p, np.zeros(4))
        op = AugmentedOperator.from_matrix(H, eta, zeta)
        A = augmented_matrix(H, eta, zeta)
        rng = np.random.default_rng(0)
        u_prev = rng.standard_normal(4)
        # after one step y_tau = (I - eta H) u_{tau-1}, which the matrix form assumes
        y, u = nag_step(u_prev, u_prev, model, eta, zeta)
        for _ in range(20):
            y, u_next = nag_step(y, u, model, eta, zeta)
            stacked = A @ np.concatenate([u, u_prev])
            np.testing.assert_allclose(stacked[:4], u_next, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(op.apply(u, u_prev)[0], u_next, rtol=1e-12, atol=1e-12)
            u_prev, u = u, u_next

    @pytest.mark.parametrize("eta, zeta", [(0.0, 0.5), (0.1, 1.0), (0.1, 0.0)])
    def test_domain(self, eta, zeta):
        with pytest.raises(DomainError):
            augmented_matrix(np.eye(2), eta, zeta)


class TestClosedForm:
    def test_zero_eigenvalue(self):
        for zeta in (0.1, 0.5, 0.99):
            assert lemma1_eig_formula(0.0, 0.1, zeta) == pytest.approx(1.0)

    def test_zero_step(self):
        for lam in (-1.0, 0.3, 2.0):
            assert lemma1_eig_formula(lam, 0.0, 0.7) == pytest.approx(1.0)

    def test_reference_value(self):
        gamma, eta, zeta = 0.1, 0.1, 0.9
        value = lemma1_eig_formula(-gamma, eta, zeta)
        assert value == pytest.approx(1.06739, abs=1e-5)
        A = augmented_matrix(np.array([[-gamma]]), eta, zeta)
        assert np.max(np.abs(np.linalg.eigvals(A))) == pytest.approx(value, rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(lam=st.floats(-1.0, 1.0), eg=st.floats(1e-4, 0.5))
    def test_matches_scalar_eigensolve(self, lam, eg):
        eta = 1.0
        zeta = 1 - np.sqrt(eg)
        A = augmented_matrix(np.array([[lam]]), eta, zeta)
        top = np.max(np.abs(np.linalg.eigvals(A)))
        assert lemma1_eig_formula(lam, eta, zeta) == pytest.approx(top, rel=1e-9, abs=1e-12)

    def test_complex_branch(self):
        value, real = lemma1_eig_formula(0.5, 0.1, 0.9, return_branch=True)
        assert not real
        assert value == pytest.approx(np.sqrt(0.9 * 0.95))


class TestEigenGap:
    def test_scalar(self):
        gamma, eta = 0.1, 0.1
        rep = eigen_gap_check(np.array([[-gamma]]), eta, gamma)
        zeta = rep.zeta
        b = (1 + zeta) * (1 + eta * gamma)
        second = 0.5 * (b - np.sqrt(b * b - 4 * zeta * (1 + eta * gamma)))
        assert rep.k == 1 and rep.passed
        assert rep.gap_topk == pytest.approx(lemma1_eig_formula(-gamma, eta, zeta) - second)

    def test_random_d8(self):
        rng = np.random.default_rng(0)
        gamma, eta = 0.01, 1.0
        H = random_lemma1_hessian(8, 3, gamma, 1.0, rng)
        rep = eigen_gap_check(H, eta, gamma)
        assert rep.k == 3 and rep.passed
        assert rep.max_formula_deviation <= 1e-8
        assert rep.max_eigvec_deviation <= 1e-6
        assert rep.gap_topk >= 0.05

    def test_positive_semidefinite_flagged(self):
        rep = eigen_gap_check(np.diag([0.0, 0.5, 1.0]), 0.5, 0.01)
        assert rep.k == 0 and not rep.passed
        assert rep.gap_topk is None and rep.notes

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_convex_block_contracts(self, seed):
        rng = np.random.default_rng(seed)
        q = random_orthogonal(6, seed)
        H = q.T @ np.diag(rng.uniform(0, 1, 6)) @ q
        mu = np.linalg.eigvals(augmented_matrix(H, 1.0, 1 - np.sqrt(0.01)))
        assert np.max(np.abs(mu)) <= 1 + 1e-12
