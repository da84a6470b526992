import numpy as np
import pytest

from dsmimo import (
    ChannelSpec,
    UserLink,
    fold_spec,
    fold_transmit,
    is_folded,
    make_g_correlation,
    validate,
)
from dsmimo._linalg import hermitian_sqrt
from dsmimo.errors import NotDiagonalizableTogetherError

from conftest import random_psd


class TestGCorrelation:
    def test_unit_diagonal(self):
        G = make_g_correlation(np.pi / 2, 0.25, 3)
        assert np.max(np.abs(np.diag(G) - 1.0)) < 1e-14

    def test_zero_spacing_gives_all_ones(self):
        G = make_g_correlation(1.3, 0.0, 4)
        assert np.array_equal(G, np.ones((4, 4), dtype=complex))
        assert np.linalg.matrix_rank(G) == 1

    def test_hermitian_psd(self):
        G = make_g_correlation(np.pi / 4, 0.25, 3)
        assert np.array_equal(G, G.conj().T)
        assert np.linalg.eigvalsh(G).min() >= -1e-12

    @pytest.mark.parametrize("phi", [0.1, np.pi / 4, np.pi / 2, np.pi, 2 * np.pi])
    @pytest.mark.parametrize("d", [0.0, 0.25, 0.5, 3.0, 50.0])
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 11])
    def test_grid_properties(self, phi, d, n):
        G = make_g_correlation(phi, d, n)
        assert G.shape == (n, n)
        assert np.array_equal(G, G.conj().T)
        assert np.linalg.eigvalsh(G).min() >= -1e-12
        assert np.max(np.abs(np.diag(G) - 1.0)) < 1e-13

    def test_single_element(self):
        assert np.array_equal(make_g_correlation(0.7, 0.25, 1),
                              np.ones((1, 1), dtype=complex))

    def test_zero_size_rejected(self):
        with pytest.raises(ValueError, match="invalid dimension"):
            make_g_correlation(0.7, 0.25, 0)


class TestHermitianSqrt:
    def test_round_trip(self, rng):
        for n in (1, 2, 4, 7):
            A = random_psd(rng, n, scale=2.0)
            rt = hermitian_sqrt(A)
            assert np.max(np.abs(rt @ rt - A)) < 1e-10

    def test_near_singular(self, rng):
        w = np.array([0.0, 1e-14, 1.0])
        V = np.linalg.qr(rng.standard_normal((3, 3))
                         + 1j * rng.standard_normal((3, 3)))[0]
        A = (V * w) @ V.conj().T
        rt = hermitian_sqrt(A)
        assert np.max(np.abs(rt @ rt - A)) < 1e-10


class TestUserLink:
    def test_dense_s_reduced_to_eigenvalues(self, rng):
        s = np.array([0.3, 1.0, 2.5])
        V = np.linalg.qr(rng.standard_normal((3, 3))
                         + 1j * rng.standard_normal((3, 3)))[0]
        S = (V * s) @ V.conj().T
        u = UserLink(R=np.eye(2), S=S, T=np.eye(2), Q=np.eye(2))
        assert np.allclose(u.s, np.sort(s), atol=1e-12)

    def test_eigenvalue_vector_accepted(self):
        u = UserLink(R=np.eye(2), S=np.array([2.0, 0.5]), T=np.eye(2),
                     Q=np.eye(2))
        assert np.array_equal(u.s, [0.5, 2.0])
        assert u.Ns == 2

    def test_arrays_immutable(self):
        u = UserLink(R=np.eye(2), S=np.ones(2), T=np.eye(2), Q=np.eye(2))
        with pytest.raises(ValueError):
            u.R[0, 0] = 5.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="equal shape"):
            UserLink(R=np.eye(2), S=np.ones(1), T=np.eye(2), Q=np.eye(3))

    def test_spec_requires_common_receiver_dim(self):
        u1 = UserLink(R=np.eye(2), S=np.ones(1), T=np.eye(1), Q=np.eye(1))
        u2 = UserLink(R=np.eye(3), S=np.ones(1), T=np.eye(1), Q=np.eye(1))
        with pytest.raises(ValueError, match="receive dimension"):
            ChannelSpec([u1, u2], rho=1.0)

    def test_rho_positive(self):
        u = UserLink(R=np.eye(2), S=np.ones(1), T=np.eye(1), Q=np.eye(1))
        with pytest.raises(ValueError, match="rho"):
            ChannelSpec([u], rho=0.0)


class TestValidate:
    def _spec(self, **overrides):
        base = dict(R=np.eye(2), S=np.ones(2), T=np.eye(2), Q=np.eye(2),
                    P=1.0)
        base.update(overrides)
        return ChannelSpec([UserLink(**base)], rho=1.0)

    def test_identity_all_pass(self):
        report = validate(self._spec())
        assert report.ok
        assert not report.violations

    def test_budget_violation_flagged(self):
        report = validate(self._spec(Q=2.0 * np.eye(2), P=1.0))
        assert not report.ok
        assert any("budget" in v for v in report.violations)

    def test_psd_violation_flagged(self):
        report = validate(self._spec(R=np.diag([1.0, -1e-6])))
        assert not report.ok
        assert any("eigenvalue" in v for v in report.violations)

    def test_hermitian_violation_flagged(self):
        R = np.eye(2, dtype=complex)
        R[0, 1] = 1e-6
        report = validate(self._spec(R=R))
        assert not report.ok
        assert any("Hermitian" in v for v in report.violations)

    def test_report_printable(self):
        text = str(validate(self._spec()))
        assert "all checks passed" in text


class TestFoldTransmit:
    def test_identity_pair(self):
        t_eff, U = fold_transmit(np.eye(3), np.eye(3))
        assert np.allclose(t_eff, 1.0)
        assert np.max(np.abs(U @ U.conj().T - np.eye(3))) < 1e-12

    def test_diagonal_products(self):
        t_eff, U = fold_transmit(np.diag([2.0, 0.5]), np.diag([1.0, 3.0]))
        assert sorted(t_eff) == pytest.approx([1.5, 2.0], abs=1e-12)

    def _round_trip(self, T, Q):
        t_eff, U = fold_transmit(T, Q)
        lhs = (U * t_eff) @ U.conj().T
        Ts = hermitian_sqrt(T)
        assert np.max(np.abs(lhs - Ts @ Q @ Ts)) < 1e-10

    def test_degenerate_eigenspace(self):
        # T has a repeated eigenvalue; Q is diagonal only in a rotated
        # basis of that eigenspace, yet the pair still commutes.
        c, s = np.cos(0.6), np.sin(0.6)
        V = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=complex)
        T = np.diag([1.0, 1.0, 2.0]).astype(complex)
        Q = (V * np.array([3.0, 5.0, 0.7])) @ V.conj().T
        self._round_trip(T, Q)

    def test_random_commuting_pairs(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 6))
            V = np.linalg.qr(rng.standard_normal((n, n))
                             + 1j * rng.standard_normal((n, n)))[0]
            t = np.abs(rng.standard_normal(n))
            q = np.abs(rng.standard_normal(n))
            T = (V * t) @ V.conj().T
            Q = (V * q) @ V.conj().T
            self._round_trip(T, Q)

    def test_non_commuting_rejected(self):
        T = np.diag([1.0, 2.0])
        Q = np.array([[1.0, 0.5], [0.5, 1.0]])
        with pytest.raises(NotDiagonalizableTogetherError):
            fold_transmit(T, Q)

    def test_fold_spec_is_folded(self, rng):
        n = 3
        V = np.linalg.qr(rng.standard_normal((n, n))
                         + 1j * rng.standard_normal((n, n)))[0]
        T = (V * np.array([0.5, 1.0, 2.0])) @ V.conj().T
        Q = (V * np.array([1.0, 0.2, 0.8])) @ V.conj().T
        u = UserLink(R=np.eye(2), S=np.ones(2), T=T, Q=Q, P=1.0)
        spec = ChannelSpec([u], rho=1.0)
        assert not is_folded(spec)
        folded, bases = fold_spec(spec)
        assert is_folded(folded)
        assert len(bases) == 1
        # effective transmit spectrum is preserved
        assert np.allclose(np.sort(folded.users[0].tq_eigs),
                           np.sort(spec.users[0].tq_eigs), atol=1e-10)
