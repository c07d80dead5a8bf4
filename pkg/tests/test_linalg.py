import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cdesign import (
    DesignMeasure,
    InvalidDesignError,
    InvalidInputError,
    NotEstimableError,
    Tolerances,
    alt_ginverse,
    in_colspace,
    info_matrix,
    pinv,
    psi,
)
from cdesign.linalg import numerical_rank, span_residual

from conftest import poly_design

entries = st.floats(-1, 1, allow_nan=False)


def random_psd(rng, k, rank):
    F = rng.standard_normal((rank, k))
    return F.T @ F


class TestTolerances:
    def test_defaults(self):
        t = Tolerances()
        assert (t.rank_tol, t.span_tol, t.merge_tol) == (1e-10, 1e-8, 1e-6)

    @pytest.mark.parametrize("kw", [{"rank_tol": 0}, {"rank_tol": 1.0}, {"span_tol": -1}, {"merge_tol": 0}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(InvalidInputError):
            Tolerances(**kw)


class TestPinv:
    def test_identity(self):
        np.testing.assert_allclose(pinv(np.eye(3)), np.eye(3))

    def test_rank_one_projector(self):
        P = np.array([[1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_allclose(pinv(P), P)

    def test_psd_residual(self, rng):
        A = random_psd(rng, 4, 4)
        assert np.linalg.norm(A @ pinv(A) @ A - A) < 1e-10

    def test_matches_numpy(self, rng):
        A = rng.standard_normal((5, 3))
        np.testing.assert_allclose(pinv(A), np.linalg.pinv(A), atol=1e-12)

    def test_cutoff_drops_tiny_singular_values(self):
        A = np.diag([1.0, 1e-12])
        np.testing.assert_allclose(pinv(A), np.diag([1.0, 0.0]))
        assert numerical_rank(A) == 1

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_nonfinite_rejected(self, bad):
        with pytest.raises(InvalidInputError):
            pinv(np.array([[1.0, bad], [0.0, 1.0]]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
    def test_penrose_identities(self, k, rank, seed):
        A = random_psd(np.random.default_rng(seed), k, min(rank, k))
        Ap = pinv(A)
        nA, nAp = np.linalg.norm(A), np.linalg.norm(Ap)
        assert np.linalg.norm(A @ Ap @ A - A) <= 1e-10 * max(nA, 1e-300)
        assert np.linalg.norm(Ap @ A @ Ap - Ap) <= 1e-10 * max(nAp, 1e-300)


class TestAltGinverse:
    def test_zero_perturbation_is_pinv(self, rng):
        A = random_psd(rng, 4, 2)
        Z = np.zeros((4, 4))
        np.testing.assert_allclose(alt_ginverse(A, Z, Z), pinv(A))

    def test_full_rank_gives_inverse(self, rng):
        A = random_psd(rng, 3, 3)
        G = alt_ginverse(A, rng.uniform(-1, 1, (3, 3)), rng.uniform(-1, 1, (3, 3)))
        np.testing.assert_allclose(G, np.linalg.inv(A), rtol=1e-8, atol=1e-10)

    def test_singular_diag(self):
        A = np.diag([1.0, 0.0])
        ones = np.ones((2, 2))
        G = alt_ginverse(A, ones, ones)
        np.testing.assert_allclose(A @ G @ A, A, atol=1e-14)
        # not Moore-Penrose: the null-space blocks are filled in
        assert not np.allclose(G, pinv(A))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            alt_ginverse(np.eye(3), np.ones((2, 2)), np.zeros((3, 3)))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 6), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_generalized_inverse_property(self, k, rank, seed):
        rng = np.random.default_rng(seed)
        A = random_psd(rng, k, min(rank, k))
        G = alt_ginverse(A, rng.uniform(-1, 1, (k, k)), rng.uniform(-1, 1, (k, k)))
        assert np.linalg.norm(A @ G @ A - A) <= 1e-9 * np.linalg.norm(A)


class TestInfoMatrix:
    def test_single_point(self):
        d = DesignMeasure([[1.0, 1.0]], [1.0])
        np.testing.assert_allclose(info_matrix(d), [[1, 1], [1, 1]])

    def test_line_design_identity(self):
        d = DesignMeasure([[1.0, -1.0], [1.0, 1.0]], [0.5, 0.5])
        np.testing.assert_allclose(info_matrix(d), np.eye(2))

    def test_weight_sum_enforced(self):
        with pytest.raises(InvalidDesignError):
            info_matrix(DesignMeasure([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.6]))

    def test_negative_weight_rejected(self):
        with pytest.raises(InvalidDesignError):
            info_matrix(DesignMeasure([[1.0, 0.0], [0.0, 1.0]], [1.5, -0.5]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_psd(self, n, k, seed):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(n))
        M = info_matrix(DesignMeasure(rng.uniform(-1, 1, (n, k)), p / p.sum()))
        np.testing.assert_allclose(M, M.T)
        assert np.linalg.eigvalsh(M).min() >= -1e-12


class TestPsi:
    def test_k3_footnote_design(self):
        assert psi(poly_design(3, [-1, 1], [0.5, 0.5]), [0, 1, 0]) == pytest.approx(1.0, rel=1e-12)

    def test_table_k6_e2(self):
        # the published three-decimal design; rounding costs a little
        u = [-1, -0.809, -0.309, 0.309, 0.809, 1]
        p = np.array([1 / 50, 0.061, 0.419, 0.419, 0.061, 1 / 50])
        assert psi(poly_design(6, u, p / p.sum()), np.eye(6)[1]) == pytest.approx(25.0, rel=2e-3)

    def test_table_k6_e2_exact_support(self):
        u = np.cos(np.pi * np.arange(5, -1, -1) / 5)
        p = np.array([1 / 50, 0.5 - 1 / 50 - 0.418885438, 0.418885438])
        p = np.concatenate((p, p[::-1]))
        assert psi(poly_design(6, u, p / p.sum()), np.eye(6)[1]) == pytest.approx(25.0, rel=1e-8)

    @pytest.mark.parametrize("alpha", [0.1, 2.0, -3.0])
    def test_homogeneity(self, rng, alpha):
        d = DesignMeasure(rng.uniform(-1, 1, (4, 3)), np.full(4, 0.25))
        c = rng.standard_normal(3)
        assert psi(d, alpha * c) == pytest.approx(alpha**2 * psi(d, c), rel=1e-10)

    def test_not_estimable(self):
        d = DesignMeasure([[1.0, 0.0, 0.0]], [1.0])
        with pytest.raises(NotEstimableError) as err:
            psi(d, [0.0, 1.0, 0.0])
        assert err.value.residual == pytest.approx(1.0)

    def test_ginverse_invariance(self, rng):
        # rank-2 design in R^4 and c inside its column space
        X = rng.standard_normal((2, 4))
        d = DesignMeasure(X, [0.3, 0.7])
        c = X.T @ rng.standard_normal(2)
        M = info_matrix(d)
        base = psi(d, c)
        for _ in range(100):
            G = alt_ginverse(M, rng.uniform(-1, 1, (4, 4)), rng.uniform(-1, 1, (4, 4)))
            assert abs(psi(d, c, ginverse=G) - base) <= 1e-8 * base


class TestInColspace:
    def test_identity(self, rng):
        assert in_colspace(rng.standard_normal(3), np.eye(3))

    def test_orthogonal_complement(self):
        assert not in_colspace([0.0, 1.0], np.diag([1.0, 0.0]))

    def test_rank_one(self):
        x = np.array([1.0, 2.0])
        assert in_colspace(3 * x, np.outer(x, x))

    def test_span_residual(self):
        rows = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert span_residual([1.0, 2.0, 0.0], rows) == pytest.approx(0.0, abs=1e-15)
        assert span_residual([0.0, 0.0, 2.0], rows) == pytest.approx(1.0)


class TestSpanInclusions:
    """Column space of the weighted information matrix versus the span of the points."""

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 6), st.integers(2, 7), st.integers(0, 2**32 - 1))
    def test_columns_in_span(self, ell, k, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((ell, k))
        q = rng.dirichlet(np.ones(ell))
        q[rng.random(ell) < 0.3] = 0.0
        if q.sum() == 0:
            q[0] = 1.0
        q /= q.sum()
        M = info_matrix(DesignMeasure(X, q))
        P = X.T @ np.linalg.pinv(X.T)
        for col in M.T:
            if np.linalg.norm(col) > 0:
                assert in_colspace(col, P)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 6), st.integers(2, 7), st.integers(0, 2**32 - 1))
    def test_points_in_colspace(self, ell, k, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((ell, k))
        q = rng.dirichlet(np.ones(ell)) + 1e-3
        M = info_matrix(DesignMeasure(X, q / q.sum()))
        for x in X:
            assert in_colspace(x, M)
