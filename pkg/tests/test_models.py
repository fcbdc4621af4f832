import numpy as np
import pytest
from numpy.testing import assert_allclose

from omvsl.evaluation import synth_multilabel, synth_multiview
from omvsl.models import (
    GEV_COUNTERPART,
    MODEL_KINDS,
    LabelOperators,
    ModelSpec,
    MultiViewDataset,
    apply_Q,
    between_scatter,
    build_grids,
    cross_cov_block,
    hsic_block,
    instantiate,
    mvmda_coupling,
    within_scatter,
)

from conftest import (
    as_dense,
    dense_between,
    dense_cov,
    dense_hsic,
    dense_mvmda_A,
    dense_pencil_matrices,
    dense_within,
)

ORTHOGONAL = ("OGMA", "OMLDA", "OMVMDA", "OM2CCA", "OMCCA", "OHSIC")


def close_rel(A, B, rtol):
    scale = max(np.max(np.abs(B)), 1e-300)
    assert np.max(np.abs(A - B)) <= rtol * scale


def ds_1d(x, y):
    return MultiViewDataset.from_class_labels([np.atleast_2d(np.asarray(x, float))], y)


class TestDataset:
    def test_one_hot_violation(self):
        with pytest.raises(ValueError, match="one-hot"):
            MultiViewDataset((np.ones((2, 3)),), np.array([[1, 1, 0], [1, 0, 1]]),
                             "multiclass_onehot")

    def test_sample_count_mismatch(self):
        with pytest.raises(ValueError):
            MultiViewDataset((np.ones((2, 3)), np.ones((2, 4))))

    def test_subset(self, small_multiclass):
        sub = small_multiclass.subset([0, 5, 7])
        assert sub.n == 3 and sub.dims == small_multiclass.dims

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ModelSpec("LDA")
        with pytest.raises(ValueError):
            ModelSpec("OMLDA", alpha=-1)
        assert not ModelSpec("OMVMDA").uses_alpha and ModelSpec("GEV_MLDA").solver == "gev"


class TestCrossCov:
    def test_constant_feature(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((3, 10))
        X[1] = 4.0
        ds = MultiViewDataset((X,))
        out = as_dense(cross_cov_block(ds, 0, 0))
        assert_allclose(out[1], 0, atol=1e-14)

    def test_hand_value(self):
        ds = MultiViewDataset((np.array([[1.0, -1.0]]),))
        assert_allclose(cross_cov_block(ds, 0, 0).matvec([1.0]), [1.0])

    def test_dense(self):
        rng = np.random.default_rng(1)
        X, Z = rng.standard_normal((6, 20)), rng.standard_normal((4, 20))
        ds = MultiViewDataset((X, Z))
        assert_allclose(as_dense(cross_cov_block(ds, 0, 1)), dense_cov(X, Z), atol=1e-13)


class TestApplyQ:
    def test_single_class(self):
        lab = LabelOperators(np.ones((1, 4)))
        assert_allclose(apply_Q(lab, [1.0, 2, 3, 6]), [3, 3, 3, 3])

    def test_hand_value(self):
        lab = LabelOperators(np.array([[1.0, 1, 0], [0, 0, 1]]))
        assert_allclose(apply_Q(lab, [1.0, 2, 3]), [1.5, 1.5, 3])

    def test_dense_and_idempotent(self, small_multiclass):
        Y = small_multiclass.labels
        lab = LabelOperators(Y)
        x = np.random.default_rng(2).standard_normal(Y.shape[1])
        Q = Y.T @ np.diag(1 / Y.sum(1)) @ Y
        assert_allclose(apply_Q(lab, x), Q @ x, atol=1e-13)
        assert_allclose(apply_Q(lab, apply_Q(lab, x)), apply_Q(lab, x), atol=1e-12)


class TestScatter:
    def test_between_single_class(self):
        ds = ds_1d([[1.0, 2, 4]], [0, 0, 0])
        assert_allclose(between_scatter(ds, 0).matvec([1.0]), [0.0], atol=1e-14)

    def test_hand_values(self):
        ds = ds_1d([1.0, -1, 1, -1], [0, 0, 1, 1])
        assert_allclose(between_scatter(ds, 0).matvec([1.0]), [0.0], atol=1e-14)
        assert_allclose(within_scatter(ds, 0).matvec([1.0]), [4.0])

    def test_within_singletons(self):
        rng = np.random.default_rng(3)
        ds = MultiViewDataset.from_class_labels([rng.standard_normal((3, 5))], np.arange(5))
        assert_allclose(as_dense(within_scatter(ds, 0)), 0, atol=1e-13)

    def test_definitional_oracles(self, small_multiclass):
        ds = small_multiclass
        for s, X in enumerate(ds.views):
            Sb, Sw = as_dense(between_scatter(ds, s)), as_dense(within_scatter(ds, s))
            close_rel(Sb, dense_between(X, ds.labels), 1e-12)
            close_rel(Sw, dense_within(X, ds.labels), 1e-12)

    def test_scatter_identity(self, small_multiclass):
        ds = small_multiclass
        rng = np.random.default_rng(4)
        for s in range(ds.v):
            for _ in range(5):
                x = rng.standard_normal(ds.dims[s])
                lhs = within_scatter(ds, s).matvec(x) + between_scatter(ds, s).matvec(x)
                rhs = ds.n * cross_cov_block(ds, s, s).matvec(x)
                assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


class TestMvMDA:
    def test_single_class_zero(self):
        ds = ds_1d([[1.0, 2, 4]], [0, 0, 0])
        assert_allclose(mvmda_coupling(ds, 0, 0).matvec([1.0]), [0.0], atol=1e-14)

    def test_two_class_scalar_views(self):
        y = [0, 0, 1, 1]
        ds = MultiViewDataset.from_class_labels([np.array([[1.0, 2, 3, 4]]),
                                                 np.array([[0.5, -1, 2, 0]])], y)
        A = dense_mvmda_A(ds.labels)
        ref = ds.views[0] @ A @ ds.views[1].T
        assert_allclose(mvmda_coupling(ds, 0, 1).matvec([1.0]), ref[:, 0])

    def test_random_three_class(self):
        ds = synth_multiview(5, 2, 3, 7, [4, 5], noise=1.0)
        A = dense_mvmda_A(ds.labels)
        ref = ds.views[0] @ A @ ds.views[1].T
        op = mvmda_coupling(ds, 0, 1)
        close_rel(as_dense(op), ref, 1e-12)
        close_rel(as_dense(op.T), ref.T, 1e-12)

    def test_permutation_invariance(self):
        ds = synth_multiview(6, 2, 3, 6, [4, 5], noise=1.0)
        perm = np.random.default_rng(7).permutation(ds.n)
        dp = ds.subset(perm)
        assert_allclose(as_dense(mvmda_coupling(dp, 0, 1)), as_dense(mvmda_coupling(ds, 0, 1)),
                        atol=1e-12)


class TestHSIC:
    def test_zero_labels(self):
        rng = np.random.default_rng(8)
        ds = MultiViewDataset((rng.standard_normal((3, 6)),), np.zeros((2, 6)), "multilabel")
        assert_allclose(as_dense(hsic_block(ds, 0)), 0, atol=1e-14)

    def test_all_ones_label(self):
        rng = np.random.default_rng(9)
        ds = MultiViewDataset((rng.standard_normal((3, 6)),), np.ones((1, 6)), "multilabel")
        assert_allclose(as_dense(hsic_block(ds, 0)), 0, atol=1e-12)

    def test_dense(self, small_multilabel):
        ds = small_multilabel
        for s, X in enumerate(ds.views):
            close_rel(as_dense(hsic_block(ds, s)), dense_hsic(X, ds.labels), 1e-12)


class TestInstantiate:
    @pytest.mark.parametrize("kind", ORTHOGONAL)
    def test_matches_dense_assembly(self, kind):
        ds = synth_multiview(10, 3, 4, 12, [8, 10, 12], noise=1.0)
        eps = 1e-3
        pencil, meta = instantiate(ds, ModelSpec(kind, 0.3, eps, 2))
        A, B, sizes = dense_pencil_matrices(ds, kind, alpha=0.3, epsilon=eps)
        assert list(pencil.block_sizes) == sizes and meta["label_view"] == (kind == "OM2CCA")
        close_rel(as_dense(pencil.A), A, 1e-10)
        close_rel(as_dense(pencil.B), B, 1e-10)

    @pytest.mark.parametrize("kind", ["GEV_GMA", "GEV_MLDA", "GEV_MVMDA", "GEV_MCCA", "HSIC_GEV"])
    def test_gev_kinds_share_grids(self, kind):
        ds = synth_multiview(11, 2, 3, 8, [5, 6], noise=1.0)
        p1, _ = instantiate(ds, ModelSpec(kind, 0.5, 1e-6, 2))
        p2, _ = instantiate(ds, ModelSpec(GEV_COUNTERPART[kind], 0.5, 1e-6, 2))
        assert_allclose(as_dense(p1.A), as_dense(p2.A), atol=1e-13)
        assert_allclose(as_dense(p1.B), as_dense(p2.B), atol=1e-13)

    def test_omcca_two_view(self):
        ds = synth_multiview(12, 2, 3, 8, [4, 5], noise=1.0)
        eps = 1e-8
        pencil, _ = instantiate(ds, ModelSpec("OMCCA", epsilon=eps, k=1))
        X1, X2 = ds.views
        A = np.zeros((9, 9))
        A[:4, 4:] = dense_cov(X1, X2)
        A[4:, :4] = dense_cov(X2, X1)
        B = np.zeros((9, 9))
        B[:4, :4] = dense_cov(X1, X1) + eps * np.eye(4)
        B[4:, 4:] = dense_cov(X2, X2) + eps * np.eye(5)
        close_rel(as_dense(pencil.A), A, 1e-12)
        close_rel(as_dense(pencil.B), B, 1e-12)

    def test_ogma_single_view_is_olda(self):
        ds = synth_multiview(13, 1, 3, 8, [5], noise=1.0)
        pencil, _ = instantiate(ds, ModelSpec("OGMA", epsilon=1e-8, k=1))
        X, Y = ds.views[0], ds.labels
        close_rel(as_dense(pencil.A), dense_between(X, Y), 1e-12)
        close_rel(as_dense(pencil.B), dense_within(X, Y) + 1e-8 * np.eye(5), 1e-12)

    def test_psi_psd_then_pd(self, small_multiclass):
        eps = 1e-4
        _, psi, _ = build_grids(small_multiclass, ModelSpec("OGMA", epsilon=eps))
        pencil, _ = instantiate(small_multiclass, ModelSpec("OGMA", epsilon=eps))
        for raw, reg in zip(psi, pencil.psi):
            R = as_dense(raw)
            scale = np.max(np.abs(R))
            assert np.linalg.eigvalsh(R).min() >= -1e-12 * scale
            assert np.linalg.eigvalsh(as_dense(reg)).min() >= eps / 2

    @pytest.mark.parametrize("kind,ds_kind,msg", [
        ("OMCCA", "one_view", "two views"),
        ("OGMA", "multilabel", "one-hot"),
        ("OHSIC", "unlabeled", "labels"),
        ("OM2CCA", "unlabeled", "labels"),
    ])
    def test_validation(self, kind, ds_kind, msg):
        rng = np.random.default_rng(14)
        if ds_kind == "one_view":
            ds = MultiViewDataset((rng.standard_normal((3, 6)),))
        elif ds_kind == "multilabel":
            ds = synth_multilabel(0, 2, 3, 10, [3, 3], 0.1)
        else:
            ds = MultiViewDataset((rng.standard_normal((3, 6)), rng.standard_normal((2, 6))))
        with pytest.raises(ValueError, match=msg):
            instantiate(ds, ModelSpec(kind, k=1))

    def test_mcca_baseline_without_labels(self):
        rng = np.random.default_rng(15)
        ds = MultiViewDataset((rng.standard_normal((3, 12)), rng.standard_normal((4, 12))))
        _, meta = instantiate(ds, ModelSpec("GEV_MCCA", k=1))
        assert not meta["label_view"]

    def test_alpha_grid(self, small_multiclass):
        a = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], float)
        p, _ = instantiate(small_multiclass, ModelSpec("OMLDA", alpha=a, epsilon=0, k=1))
        ref, _ = instantiate(small_multiclass, ModelSpec("OMLDA", alpha=1.0, epsilon=0, k=1))
        o = np.concatenate([[0], np.cumsum(small_multiclass.dims)])
        D, R = as_dense(p.A), as_dense(ref.A)
        assert_allclose(D[o[0]:o[1], o[2]:o[3]], 2 * R[o[0]:o[1], o[2]:o[3]], atol=1e-12)
        with pytest.raises(ValueError):
            instantiate(small_multiclass, ModelSpec("OMLDA", alpha=np.triu(a), k=1))


def test_every_kind_registered():
    assert set(ORTHOGONAL) <= set(MODEL_KINDS) and len(MODEL_KINDS) == 11
