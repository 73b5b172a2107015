import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from specfp.sparse import (
    DIAGONAL_SIMILARITY,
    GENERAL_SIMILARITY,
    PERMUTATION,
    POSITIVE_SCALE,
    DimensionError,
    SparseSymMatrix,
    SymmetryError,
    Transform,
    TransformError,
    apply_transform,
    frobenius_norm,
    spectral_norm_est,
    symmetrize,
)


def random_sym(n, seed=0, density=0.3):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    return 0.5 * (a + a.T)


class TestConstruction:
    def test_from_dense_roundtrip(self):
        a = random_sym(12, 1)
        m = SparseSymMatrix.from_dense(a)
        np.testing.assert_allclose(m.to_dense(), a)

    def test_from_triplets_sums_duplicates(self):
        m = SparseSymMatrix.from_triplets(3, [0, 0, 1], [1, 1, 2], [2.0, 3.0, 1.0])
        assert m.to_dense()[0, 1] == 5.0

    def test_nonsquare_rejected(self):
        with pytest.raises(DimensionError):
            SparseSymMatrix.from_dense(np.ones((3, 4)))
        with pytest.raises(DimensionError):
            SparseSymMatrix.from_scipy(sp.csr_matrix(np.ones((2, 5))))

    def test_identity_and_diagonal(self):
        np.testing.assert_allclose(SparseSymMatrix.identity(4).to_dense(), np.eye(4))
        d = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(SparseSymMatrix.diagonal(d).diag(), d)

    def test_csr_invariants(self):
        m = SparseSymMatrix.from_dense(random_sym(20, 2))
        assert m.row_ptr[0] == 0 and m.row_ptr[-1] == m.nnz
        for i in range(m.n):
            cols = m.col_idx[m.row_ptr[i]:m.row_ptr[i + 1]]
            assert np.all(np.diff(cols) > 0)


class TestOps:
    def test_matvec_matches_dense(self):
        a = random_sym(30, 3)
        m = SparseSymMatrix.from_dense(a)
        x = np.random.default_rng(0).standard_normal(30)
        np.testing.assert_allclose(m.matvec(x), a @ x, rtol=1e-13)

    def test_matmat_matches_dense(self):
        a = random_sym(15, 4)
        m = SparseSymMatrix.from_dense(a)
        x = np.random.default_rng(1).standard_normal((15, 4))
        np.testing.assert_allclose(m.matmat(x), a @ x, rtol=1e-13)

    def test_matvec_dimension_error(self):
        m = SparseSymMatrix.identity(5)
        with pytest.raises(DimensionError):
            m.matvec(np.ones(6))

    def test_symmetry_validation(self):
        m = SparseSymMatrix.from_dense(random_sym(10, 5))
        m.validate_symmetry()
        bad = SparseSymMatrix.from_dense(np.array([[1.0, 2.0], [0.5, 1.0]]))
        assert not bad.is_symmetric()
        with pytest.raises(SymmetryError):
            bad.validate_symmetry()

    def test_symmetrize_half_sum(self):
        a = np.random.default_rng(6).standard_normal((8, 8))
        m = symmetrize(SparseSymMatrix.from_dense(a), "half_sum")
        np.testing.assert_allclose(m.to_dense(), 0.5 * (a + a.T), atol=1e-14)

    def test_symmetrize_gram(self):
        a = np.random.default_rng(7).standard_normal((6, 6))
        m = symmetrize(SparseSymMatrix.from_dense(a), "gram")
        np.testing.assert_allclose(m.to_dense(), a.T @ a, atol=1e-12)

    def test_frobenius_norm(self):
        a = random_sym(9, 8)
        assert frobenius_norm(SparseSymMatrix.from_dense(a)) == pytest.approx(
            np.linalg.norm(a)
        )

    def test_spectral_norm_small(self):
        a = random_sym(40, 9)
        est = spectral_norm_est(SparseSymMatrix.from_dense(a))
        assert est == pytest.approx(np.linalg.norm(a, 2), rel=1e-10)

    def test_spectral_norm_power_path(self):
        # n > 512 exercises power iteration
        rng = np.random.default_rng(10)
        d = rng.uniform(0.1, 5.0, 600)
        m = SparseSymMatrix.diagonal(d)
        assert spectral_norm_est(m) == pytest.approx(d.max(), rel=5e-3)


class TestTransforms:
    def test_permutation_entries(self):
        a = random_sym(10, 11)
        p = np.random.default_rng(0).permutation(10)
        out = apply_transform(SparseSymMatrix.from_dense(a), Transform(PERMUTATION, p))
        np.testing.assert_allclose(out.to_dense(), a[np.ix_(p, p)])

    def test_similarity_preserves_spectrum(self):
        a = random_sym(12, 12)
        m = SparseSymMatrix.from_dense(a)
        lam = np.sort(np.linalg.eigvalsh(a))
        d = np.random.default_rng(1).uniform(0.5, 2.0, 12)
        out = apply_transform(m, Transform(DIAGONAL_SIMILARITY, d))
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(out.to_dense()).real), lam, atol=1e-10)
        s = np.eye(12) + 0.1 * np.random.default_rng(2).standard_normal((12, 12))
        out = apply_transform(m, Transform(GENERAL_SIMILARITY, s))
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(out.to_dense()).real), lam, atol=1e-8)

    def test_positive_scale(self):
        m = SparseSymMatrix.from_dense(random_sym(6, 13))
        out = apply_transform(m, Transform(POSITIVE_SCALE, 2.5))
        np.testing.assert_allclose(out.to_dense(), 2.5 * m.to_dense())

    def test_invalid_payloads(self):
        with pytest.raises(TransformError):
            Transform(PERMUTATION, [0, 0, 1])
        with pytest.raises(TransformError):
            Transform(DIAGONAL_SIMILARITY, [1.0, -1.0])
        with pytest.raises(TransformError):
            Transform(POSITIVE_SCALE, 0.0)
        with pytest.raises(TransformError):
            Transform(GENERAL_SIMILARITY, np.zeros((3, 3)))
        with pytest.raises(TransformError):
            Transform("Unknown", None)

    def test_dimension_mismatch(self):
        m = SparseSymMatrix.identity(4)
        with pytest.raises(DimensionError):
            apply_transform(m, Transform(PERMUTATION, [1, 0, 2]))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=20), st.integers(min_value=0, max_value=10**6))
def test_symmetric_roundtrip_property(n, seed):
    a = random_sym(n, seed)
    m = SparseSymMatrix.from_dense(a)
    assert m.is_symmetric()
    np.testing.assert_allclose(m.to_dense(), a)
