import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmdsvr.kernels import (
    GramMatrix,
    KernelSpec,
    avg_pairwise_distance,
    cross_kernel,
    eval_kernel,
    gram,
)

RBF = KernelSpec("rbf", width=1.0, bias_augment=False)
LIN = KernelSpec("linear", bias_augment=False)


class TestEvalKernel:
    def test_rbf_identity_is_exactly_one(self):
        x = np.array([0.3, -1.2, 4.0])
        assert eval_kernel(RBF, x, x) == 1.0

    def test_linear_dot_product(self):
        assert eval_kernel(LIN, np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0

    def test_rbf_closed_form(self):
        v = eval_kernel(RBF, np.array([0.0, 0.0]), np.array([2.0, 0.0]))
        assert v == pytest.approx(math.exp(-2.0), rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            eval_kernel(LIN, np.zeros(2), np.zeros(3))

    def test_bias_augment_adds_exactly_one(self, rng):
        plain = KernelSpec("rbf", width=0.7, bias_augment=False)
        aug = KernelSpec("rbf", width=0.7, bias_augment=True)
        for _ in range(20):
            x, z = rng.normal(size=3), rng.normal(size=3)
            assert eval_kernel(aug, x, z) == eval_kernel(plain, x, z) + 1.0

    @given(st.integers(0, 2**32 - 1))
    @settings(deadline=None, max_examples=50)
    def test_symmetry(self, seed):
        r = np.random.default_rng(seed)
        x, z = r.normal(size=4), r.normal(size=4)
        w = float(r.uniform(0.1, 3.0))
        spec = KernelSpec("rbf", width=w, bias_augment=bool(r.integers(2)))
        assert eval_kernel(spec, x, z) == eval_kernel(spec, z, x)


class TestKernelSpec:
    def test_rbf_requires_width_or_scale(self):
        with pytest.raises(ValueError):
            KernelSpec("rbf")
        with pytest.raises(ValueError):
            KernelSpec("rbf", width=1.0, width_scale=1.0)

    def test_nonpositive_width_rejected(self):
        with pytest.raises(ValueError):
            KernelSpec("rbf", width=0.0)
        with pytest.raises(ValueError):
            KernelSpec("rbf", width_scale=-1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown kernel kind"):
            KernelSpec("poly")

    def test_resolve_multiplies_scale(self):
        spec = KernelSpec("rbf", width_scale=0.25)
        assert not spec.is_resolved
        assert spec.resolve(2.0).width == 0.5

    def test_unresolved_spec_cannot_evaluate(self):
        with pytest.raises(ValueError, match="not resolved"):
            eval_kernel(KernelSpec("rbf", width_scale=1.0), np.zeros(1), np.zeros(1))


class TestGram:
    def test_single_instance(self):
        G = gram(RBF, np.array([[1.0, 2.0]]))
        assert G.dense.shape == (1, 1) and G.dense[0, 0] == 1.0

    def test_duplicate_rows_hit_diagonal_value(self):
        X = np.array([[0.5, 1.0], [0.5, 1.0]])
        G = gram(RBF, X).dense
        assert G[0, 1] == G[0, 0] == 1.0

    def test_linear_orthonormal_rows(self):
        G = gram(LIN, np.eye(2)).dense
        assert np.array_equal(G, np.eye(2))

    def test_exact_symmetry_by_construction(self, rng):
        X = rng.normal(size=(25, 3))
        G = gram(KernelSpec("rbf", width=0.8, bias_augment=True), X).dense
        assert np.array_equal(G, G.T)

    def test_rbf_entries_in_unit_interval(self, rng):
        X = rng.normal(size=(30, 2))
        G = gram(RBF, X).dense
        assert np.all(G > 0.0) and np.all(G <= 1.0)

    def test_entries_match_eval_kernel(self, rng):
        X = rng.normal(size=(8, 3))
        spec = KernelSpec("rbf", width=1.3, bias_augment=True)
        G = gram(spec, X).dense
        for i in range(8):
            for j in range(8):
                assert G[i, j] == pytest.approx(eval_kernel(spec, X[i], X[j]), abs=1e-12)

    def test_gram_of_augmented_kernel_is_plain_plus_one(self, rng):
        X = rng.normal(size=(10, 2))
        plain = gram(KernelSpec("rbf", width=0.9, bias_augment=False), X).dense
        aug = gram(KernelSpec("rbf", width=0.9, bias_augment=True), X).dense
        assert np.array_equal(aug, plain + 1.0)


class TestRowCacheVariant:
    def test_rows_match_dense_variant(self, rng):
        X = rng.normal(size=(12, 2))
        spec = KernelSpec("rbf", width=1.1, bias_augment=True)
        dense = gram(spec, X, cap=4096)
        lazy = gram(spec, X, cap=4)
        assert not lazy.is_dense
        for i in range(12):
            assert np.allclose(lazy.row(i), dense.row(i), atol=1e-12)

    def test_rbf_diagonal_exact(self, rng):
        X = rng.normal(size=(9, 2))
        lazy = gram(KernelSpec("rbf", width=0.5, bias_augment=False), X, cap=2)
        assert np.all(lazy.diag == 1.0)
        for i in range(9):
            assert lazy.row(i)[i] == 1.0

    def test_lru_eviction_keeps_results_correct(self, rng):
        X = rng.normal(size=(10, 2))
        spec = KernelSpec("rbf", width=1.0, bias_augment=False)
        lazy = GramMatrix(spec, X, cap=2, cached_rows=3)
        dense = gram(spec, X)
        for i in list(range(10)) + [0, 5, 9, 0]:
            assert np.allclose(lazy.row(i), dense.row(i), atol=1e-12)
        assert len(lazy._cache) <= 3

    def test_matvec_matches_dense(self, rng):
        X = rng.normal(size=(11, 3))
        spec = KernelSpec("rbf", width=0.8, bias_augment=True)
        c = rng.normal(size=11)
        assert np.allclose(gram(spec, X, cap=3).matvec(c), gram(spec, X).dense @ c,
                           atol=1e-10)

    def test_dense_accessor_raises_on_cache_variant(self, rng):
        lazy = gram(RBF, rng.normal(size=(5, 1)), cap=2)
        with pytest.raises(ValueError, match="row cache"):
            lazy.dense


class TestAvgPairwiseDistance:
    def test_three_four_five_pair(self):
        assert avg_pairwise_distance(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0

    def test_three_points_on_a_line(self):
        v = avg_pairwise_distance(np.array([[0.0], [1.0], [2.0]]))
        assert v == pytest.approx(4.0 / 3.0, rel=1e-15)

    def test_single_instance_rejected(self):
        with pytest.raises(ValueError, match="at least two"):
            avg_pairwise_distance(np.array([[1.0]]))


class TestCrossKernel:
    def test_shapes_and_values(self, rng):
        A, B = rng.normal(size=(4, 2)), rng.normal(size=(6, 2))
        spec = KernelSpec("rbf", width=1.2, bias_augment=True)
        K = cross_kernel(spec, A, B)
        assert K.shape == (4, 6)
        assert K[2, 3] == pytest.approx(eval_kernel(spec, A[2], B[3]), abs=1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="dimension mismatch"):
            cross_kernel(LIN, rng.normal(size=(2, 2)), rng.normal(size=(2, 3)))
