import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xnv.bounds import (GramBlocks, assemble_gram, coregularization_reduction,
                        multiview_excess_risk_bound, rademacher_bound_sq,
                        split_gram_blocks)
from xnv.errors import ConfigError, DataError


def _blocks(seed, n=9, ell=4):
    rng = np.random.default_rng(seed)
    R1, R2 = rng.normal(size=(n, n)), rng.normal(size=(n, 3))
    return split_gram_blocks(R1 @ R1.T, R2 @ R2.T, ell)


def _naive(b, a1, a2, a_co):
    u, ell = b.C.shape
    Minv = np.linalg.inv(np.eye(u) / a_co + b.A / a1 + b.D / a2)
    red = sum((b.C[:, i] - b.F[:, i]) @ Minv @ (b.C[:, i] - b.F[:, i]) for i in range(ell))
    return (np.trace(b.B) / a1 + np.trace(b.E) / a2 - red) / ell ** 2


class TestRademacher:
    def test_hand_value(self):
        b = GramBlocks(A=[[1.0]], B=[[1.0]], C=[[1.0]], D=[[1.0]], E=[[1.0]], F=[[0.0]])
        assert rademacher_bound_sq(b, 1, 1, 1) == pytest.approx(2 - 1 / 3, rel=1e-14)

    def test_identical_views(self):
        b = _blocks(0)
        same = GramBlocks(b.A, b.B, b.C, b.A, b.B, b.C)
        expect = (np.trace(b.B) / 2.0 + np.trace(b.B) / 3.0) / 16
        assert rademacher_bound_sq(same, 2.0, 3.0, 0.5) == expect

    def test_matches_naive(self):
        b = _blocks(1)
        assert rademacher_bound_sq(b, 0.5, 2.0, 3.0) == pytest.approx(_naive(b, 0.5, 2.0, 3.0), abs=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_in_a_co(self, seed):
        b = _blocks(seed)
        vals = [rademacher_bound_sq(b, 1.0, 1.0, a) for a in (0.1, 1.0, 10.0)]
        assert vals[0] >= vals[1] >= vals[2]

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_reduction_nonnegative(self, seed):
        assert coregularization_reduction(_blocks(seed), 1.0, 2.0, 5.0) >= 0

    def test_no_labeled(self):
        with pytest.raises(DataError):
            rademacher_bound_sq(_blocks(2, ell=0), 1, 1, 1)

    def test_no_unlabeled(self):
        b = _blocks(3, n=4, ell=4)
        assert rademacher_bound_sq(b, 1, 2, 1) == (np.trace(b.B) + np.trace(b.E) / 2) / 16

    def test_bad_coefficients(self):
        with pytest.raises(ConfigError):
            rademacher_bound_sq(_blocks(0), 1, 1, 0)


class TestSplit:
    def test_round_trip(self):
        rng = np.random.default_rng(4)
        R1, R2 = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
        K1, K2 = R1 @ R1.T, R2 @ R2.T
        A1, A2 = assemble_gram(split_gram_blocks(K1, K2, 2))
        np.testing.assert_array_equal(A1, K1)
        np.testing.assert_array_equal(A2, K2)

    def test_ordering(self):
        K = np.diag([1.0, 2.0, 3.0])
        b = split_gram_blocks(K, K, 1, ordering=[2, 0, 1])
        np.testing.assert_array_equal(b.B, [[2.0]])

    def test_bad_ordering(self):
        with pytest.raises(DataError):
            split_gram_blocks(np.eye(3), np.eye(3), 1, ordering=[0, 0, 1])

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            split_gram_blocks(np.eye(3), np.eye(4), 1)

    def test_non_symmetric_block(self):
        with pytest.raises(DataError):
            GramBlocks(A=[[1.0, 2.0], [0.0, 1.0]], B=[[1.0]], C=[[0.0], [0.0]],
                       D=np.eye(2), E=[[1.0]], F=[[0.0], [0.0]])


class TestMultiview:
    def test_zero(self):
        assert multiview_excess_risk_bound(0.0, [0.0, 0.0], 5) == 0.0

    def test_arithmetic(self):
        assert multiview_excess_risk_bound(0.1, [1.0, 1.0], 10) == pytest.approx(0.7)

    def test_worst_case(self):
        assert multiview_excess_risk_bound(0.2, np.ones(7), 20) == pytest.approx(1.0 + 7 / 20)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            multiview_excess_risk_bound(-1.0, [0.5], 1)
