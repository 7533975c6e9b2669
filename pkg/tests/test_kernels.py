import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from xnv.errors import ConfigError, DataError
from xnv.kernels import KernelSpec, eigendecompose_psd, eval_kernel, gram_matrix

GAUSS = KernelSpec("gaussian", bandwidth=1.0)
LINEAR = KernelSpec("linear")
POLY2 = KernelSpec("polynomial", degree=2, offset=0.0)
ALL_SPECS = [GAUSS, KernelSpec("gaussian", bandwidth=0.3), LINEAR,
             KernelSpec("polynomial", degree=3, offset=1.0), POLY2]


class TestKernelSpec:
    def test_invalid_bandwidth(self):
        with pytest.raises(ConfigError):
            KernelSpec("gaussian", bandwidth=0.0)

    def test_invalid_degree(self):
        with pytest.raises(ConfigError):
            KernelSpec("polynomial", degree=0)

    def test_aliases(self):
        assert KernelSpec("rbf").family == "gaussian"
        assert KernelSpec("poly").family == "polynomial"

    def test_unknown_family(self):
        with pytest.raises(ConfigError):
            KernelSpec("laplace")


class TestEvalKernel:
    def test_gaussian_zero_distance(self):
        assert eval_kernel(GAUSS, [0.3, -2.0], [0.3, -2.0]) == 1.0

    def test_linear_orthogonal(self):
        assert eval_kernel(LINEAR, [1, 0], [0, 1]) == 0.0

    def test_gaussian_hand_value(self):
        # exp(-||(1,1)||^2 / 2) = exp(-1)
        assert eval_kernel(GAUSS, [0, 0], [1, 1]) == pytest.approx(math.exp(-1), rel=1e-15)
        assert eval_kernel(GAUSS, [0, 0], [1, 1]) == pytest.approx(0.36788, abs=1e-5)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            eval_kernel(GAUSS, [1, 2], [1, 2, 3])

    @given(arrays(float, 4, elements=st.floats(-5, 5)),
           arrays(float, 4, elements=st.floats(-5, 5)))
    def test_exact_symmetry(self, x, y):
        for spec in ALL_SPECS:
            assert eval_kernel(spec, x, y) == eval_kernel(spec, y, x)

    @given(arrays(float, 3, elements=st.floats(-10, 10)),
           arrays(float, 3, elements=st.floats(-10, 10)))
    def test_gaussian_range(self, x, y):
        k = eval_kernel(KernelSpec(bandwidth=10.0), x, y)
        assert 0 < k <= 1


class TestGramMatrix:
    def test_linear_identity(self):
        np.testing.assert_array_equal(gram_matrix(LINEAR, np.eye(2)), np.eye(2))

    def test_gaussian_unit_diagonal(self):
        X = np.random.default_rng(0).normal(size=(30, 4)) * 10
        np.testing.assert_array_equal(np.diag(gram_matrix(GAUSS, X)), np.ones(30))

    def test_polynomial_hand_values(self):
        K = gram_matrix(POLY2, np.array([[1.0, 1.0], [2.0, 0.0]]))
        np.testing.assert_allclose(K, [[4, 4], [4, 16]], rtol=0, atol=1e-12)

    @pytest.mark.parametrize("spec", ALL_SPECS)
    def test_entries_match_pairwise(self, spec):
        rng = np.random.default_rng(1)
        X, Y = rng.normal(size=(6, 3)), rng.normal(size=(4, 3))
        K = gram_matrix(spec, X, Y)
        loop = np.array([[eval_kernel(spec, x, y) for y in Y] for x in X])
        np.testing.assert_allclose(K, loop, rtol=1e-12, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            gram_matrix(GAUSS, np.ones((2, 3)), np.ones((2, 2)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 25))
    def test_psd_and_symmetric(self, seed, n):
        X = np.random.default_rng(seed).normal(size=(n, 3))
        for spec in ALL_SPECS:
            K = gram_matrix(spec, X)
            np.testing.assert_array_equal(K, K.T)
            scale = max(1.0, np.abs(K).max())
            assert np.linalg.eigvalsh(K).min() >= -1e-10 * scale


class TestEigendecomposePsd:
    def test_identity(self):
        eig = eigendecompose_psd(np.eye(3))
        np.testing.assert_allclose(eig.eigenvalues, [1, 1, 1])
        assert eig.rank == 3

    def test_rank_one(self):
        v = np.array([1.0, 1.0])
        eig = eigendecompose_psd(np.outer(v, v), rank_tol=1e-8)
        assert eig.rank == 1
        np.testing.assert_allclose(eig.eigenvalues, [2.0])

    def test_random_psd_round_trip(self):
        R = np.random.default_rng(3).normal(size=(5, 5))
        K = R @ R.T
        eig = eigendecompose_psd(K)
        assert eig.rank == 5
        err = np.linalg.norm(eig.reconstruct() - K) / np.linalg.norm(K)
        assert err < 1e-8

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 12))
    def test_invariants(self, seed, n):
        R = np.random.default_rng(seed).normal(size=(n, n))
        eig = eigendecompose_psd(R @ R.T)
        d, V = eig.eigenvalues, eig.eigenvectors
        assert np.all(np.diff(d) <= 0)
        assert np.all(d > 1e-10 * d[0])
        np.testing.assert_allclose(V.T @ V, np.eye(eig.rank), atol=1e-8)

    def test_truncation_is_relative(self):
        K = np.diag([1e6, 1e-6, 0.0])
        assert eigendecompose_psd(K, rank_tol=1e-10).rank == 1
        assert eigendecompose_psd(K * 1e-9, rank_tol=1e-10).rank == 1

    def test_negative_noise_clamped(self):
        K = np.diag([1.0, -1e-14])
        eig = eigendecompose_psd(K, rank_tol=0.0)
        assert eig.rank == 1

    def test_non_symmetric(self):
        with pytest.raises(DataError):
            eigendecompose_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_non_finite(self):
        with pytest.raises(DataError):
            eigendecompose_psd(np.array([[1.0, np.nan], [np.nan, 1.0]]))
