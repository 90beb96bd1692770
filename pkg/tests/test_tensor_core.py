import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bcirc_oracle, rel_err, t_product_oracle, transpose_oracle
from tqdeim.errors import ConjugateSymmetryError, DimensionError
from tqdeim.tensor_core import (
    bcirc,
    count_multiply_adds,
    facewise_multiply,
    fft3,
    fold,
    frobenius_norm,
    ifft3,
    sample_rows,
    sampling_tensor,
    set_num_threads,
    slice_map,
    t_identity,
    t_product,
    t_spectral_norm,
    t_transpose,
    unfold,
)

dims = st.integers(1, 6)


def tube(*vals):
    return np.array(vals, dtype=float).reshape(1, 1, -1)


class TestUnfoldFold:
    def test_scalar_slices(self):
        np.testing.assert_array_equal(unfold(tube(1, 2)), [[1], [2]])

    def test_stacking(self):
        A = np.zeros((2, 1, 2))
        A[:, 0, 0] = [1, 2]
        A[:, 0, 1] = [3, 4]
        np.testing.assert_array_equal(unfold(A).ravel(), [1, 2, 3, 4])

    def test_fold_example(self):
        A = fold(np.array([[1.0], [2.0]]), 1, 2)
        assert A.shape == (1, 1, 2)
        np.testing.assert_array_equal(A[0, 0], [1, 2])

    def test_round_trips(self, rng):
        A = rng.standard_normal((3, 2, 4))
        np.testing.assert_array_equal(fold(unfold(A), 3, 4), A)
        M = rng.standard_normal((6, 2))
        np.testing.assert_array_equal(unfold(fold(M, 3, 2)), M)

    def test_bad_row_count(self):
        with pytest.raises(DimensionError):
            fold(np.ones((5, 1)), 1, 2)


class TestBcirc:
    def test_two_slices(self):
        np.testing.assert_array_equal(bcirc(tube(1, 2)), [[1, 2], [2, 1]])

    def test_q1(self, rng):
        A = rng.standard_normal((3, 2, 1))
        np.testing.assert_array_equal(bcirc(A), A[:, :, 0])

    def test_cyclic_shift(self, rng):
        A = rng.standard_normal((2, 2, 3))
        B = bcirc(A)
        for j in range(1, 3):
            prev = B[:, (j - 1) * 2:j * 2]
            np.testing.assert_array_equal(B[:, j * 2:(j + 1) * 2], np.roll(prev, 2, axis=0))
        np.testing.assert_array_equal(B, bcirc_oracle(A))


class TestFFT:
    def test_q1_identity(self, rng):
        A = rng.standard_normal((3, 2, 1))
        np.testing.assert_array_equal(fft3(A), A.astype(complex))

    def test_two_point(self):
        np.testing.assert_allclose(fft3(tube(3.0, 5.0)).ravel(), [8, -2])

    def test_round_trip(self, rng):
        A = rng.standard_normal((4, 3, 5))
        assert rel_err(ifft3(fft3(A)), A) < 1e-12

    def test_rejects_asymmetric(self):
        Ahat = np.zeros((1, 1, 3), dtype=complex)
        Ahat[0, 0, 1] = 1.0
        with pytest.raises(ConjugateSymmetryError):
            ifft3(Ahat)


class TestFacewise:
    def test_identity(self, rng):
        Ahat = fft3(rng.standard_normal((2, 3, 4)))
        Ihat = fft3(t_identity(3, 4))
        np.testing.assert_allclose(facewise_multiply(Ahat, Ihat), Ahat, atol=1e-14)

    def test_slices(self, rng):
        Ahat = fft3(rng.standard_normal((2, 3, 2)))
        Bhat = fft3(rng.standard_normal((3, 2, 2)))
        C = facewise_multiply(Ahat, Bhat)
        for k in range(2):
            np.testing.assert_allclose(C[:, :, k], Ahat[:, :, k] @ Bhat[:, :, k])

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            facewise_multiply(np.ones((2, 3, 2)), np.ones((2, 3, 2)))


class TestTProduct:
    def test_worked_example(self):
        C = t_product(tube(1, 2), tube(3, 4))
        np.testing.assert_allclose(C.ravel(), [11, 10])

    def test_identity(self, rng):
        A = rng.standard_normal((3, 2, 4))
        np.testing.assert_allclose(t_product(A, t_identity(2, 4)), A, atol=1e-14)
        np.testing.assert_allclose(t_product(t_identity(3, 4), A), A, atol=1e-14)

    def test_q1_matrix_product(self, rng):
        A = rng.standard_normal((3, 2, 1))
        B = rng.standard_normal((2, 4, 1))
        np.testing.assert_allclose(t_product(A, B)[:, :, 0], A[:, :, 0] @ B[:, :, 0], atol=1e-14)

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            t_product(np.ones((2, 3, 2)), np.ones((2, 3, 2)))


class TestTranspose:
    def test_tube(self):
        np.testing.assert_array_equal(t_transpose(tube(1, 2, 3)).ravel(), [1, 3, 2])

    def test_involution(self, rng):
        A = rng.standard_normal((3, 4, 5))
        np.testing.assert_array_equal(t_transpose(t_transpose(A)), A)
        np.testing.assert_array_equal(t_transpose(A), transpose_oracle(A))

    def test_product_reversal(self, rng):
        A = rng.standard_normal((3, 2, 4))
        B = rng.standard_normal((2, 5, 4))
        lhs = t_transpose(t_product(A, B))
        rhs = t_product(t_transpose(B), t_transpose(A))
        assert rel_err(lhs, rhs) < 1e-10


class TestIdentityAndNorms:
    def test_identity_layout(self):
        np.testing.assert_array_equal(t_identity(2, 1)[:, :, 0], np.eye(2))
        assert t_spectral_norm(t_identity(3, 5)) == pytest.approx(1.0, abs=1e-15)

    def test_frobenius(self, rng):
        assert frobenius_norm(np.zeros((2, 2, 2))) == 0.0
        assert frobenius_norm(tube(3, 4)) == pytest.approx(5.0)
        A = rng.standard_normal((3, 2, 4))
        assert frobenius_norm(A) == pytest.approx(np.linalg.norm(unfold(A)))

    def test_spectral_equals_bcirc(self, rng):
        A = rng.standard_normal((3, 2, 3))
        assert t_spectral_norm(A) == pytest.approx(np.linalg.norm(bcirc_oracle(A), 2), rel=1e-12)

    def test_spectral_q1(self, rng):
        A = rng.standard_normal((4, 3, 1))
        assert t_spectral_norm(A) == pytest.approx(np.linalg.norm(A[:, :, 0], 2), rel=1e-13)


class TestSampling:
    def test_all_rows(self, rng):
        A = rng.standard_normal((4, 2, 3))
        np.testing.assert_array_equal(sample_rows(A, np.arange(4)), A)

    def test_single_index(self, rng):
        A = rng.standard_normal((3, 1, 2))
        np.testing.assert_array_equal(sample_rows(A, [1]), A[1:2])

    def test_permutation_tensor(self, rng):
        A = rng.standard_normal((6, 3, 4))
        p = np.array([4, 0, 2])
        P = sampling_tensor(p, 6, 4)
        for k, sl in enumerate(np.moveaxis(fft3(P), 2, 0)):
            np.testing.assert_allclose(sl, np.eye(6)[:, p], atol=1e-15)
        via_product = t_product(t_transpose(P), A)
        assert rel_err(via_product, sample_rows(A, p)) < 1e-10

    @pytest.mark.parametrize("p", [[0, 0], [5], [-1]])
    def test_bad_indices(self, p):
        with pytest.raises(DimensionError):
            sample_rows(np.ones((3, 1, 2)), p)


class TestInvariants:
    def test_round_trips_100(self, rng):
        for _ in range(100):
            m, l, q = rng.integers(1, 9, size=3)
            A = rng.standard_normal((m, l, q))
            np.testing.assert_array_equal(fold(unfold(A), m, q), A)
            assert rel_err(ifft3(fft3(A)), A) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(m=dims, l=dims, r=dims, s=dims, q=dims, seed=st.integers(0, 2**32 - 1))
    def test_oracle_and_associativity(self, m, l, r, s, q, seed):
        g = np.random.default_rng(seed)
        A = g.standard_normal((m, l, q))
        B = g.standard_normal((l, r, q))
        C = g.standard_normal((r, s, q))
        assert rel_err(t_product(A, B), t_product_oracle(A, B)) < 1e-10
        lhs = t_product(t_product(A, B), C)
        rhs = t_product(A, t_product(B, C))
        assert rel_err(lhs, rhs) < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(m=dims, l=dims, r=dims, q=dims, seed=st.integers(0, 2**32 - 1))
    def test_submultiplicative(self, m, l, r, q, seed):
        g = np.random.default_rng(seed)
        A = g.standard_normal((m, l, q))
        B = g.standard_normal((l, r, q))
        assert t_spectral_norm(t_product(A, B)) <= t_spectral_norm(A) * t_spectral_norm(B) + 1e-12

    def test_triple_product_fourier(self, rng):
        A = rng.standard_normal((3, 4, 5))
        B = rng.standard_normal((4, 2, 5))
        C = rng.standard_normal((2, 3, 5))
        lhs = fft3(t_product(t_product(A, B), C))
        rhs = facewise_multiply(facewise_multiply(fft3(A), fft3(B)), fft3(C))
        assert rel_err(lhs, rhs) < 1e-10

    def test_parseval(self, rng):
        A = rng.standard_normal((4, 3, 7))
        lhs = frobenius_norm(A) ** 2
        rhs = np.linalg.norm(fft3(A)) ** 2 / 7
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_q1_degeneracy(self, rng):
        A = rng.standard_normal((4, 3, 1))
        B = rng.standard_normal((3, 2, 1))
        np.testing.assert_allclose(t_product(A, B)[:, :, 0], A[:, :, 0] @ B[:, :, 0], atol=1e-12)
        np.testing.assert_array_equal(t_transpose(A)[:, :, 0], A[:, :, 0].T)
        np.testing.assert_array_equal(bcirc(A), A[:, :, 0])


def test_flop_counter(rng):
    A = rng.standard_normal((5, 3, 6))
    B = rng.standard_normal((3, 2, 6))
    with count_multiply_adds() as ops:
        t_product(A, B)
    # only q//2 + 1 slices are multiplied
    assert ops[0] == 5 * 3 * 2 * 4


def test_slice_map_threads_deterministic(rng):
    mats = [rng.standard_normal((6, 6)) for _ in range(7)]
    serial = slice_map(np.linalg.svd, mats)
    set_num_threads(4)
    try:
        threaded = slice_map(np.linalg.svd, mats)
    finally:
        set_num_threads(1)
    for a, b in zip(serial, threaded):
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
