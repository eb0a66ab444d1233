"""Learner behavior tests: per-kind updates, prediction, training, gradients."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cil_engine.errors import ValidationError
from cil_engine.learners import (
    LearnerState,
    StageBatchPlan,
    linear_loss_and_grad,
    observe_stage,
    predict,
    proof_loss_and_grads,
    train_linear_epochs,
)
from cil_engine.synth import SynthSpec, generate


def no_train_plan():
    return StageBatchPlan(train_indices=[], epochs=0, batch_size=32,
                          init_lr=0.01, weight_decay=0.0)


def plan(epochs=20, batch_size=16, init_lr=0.05, weight_decay=0.0005):
    return StageBatchPlan(train_indices=[], epochs=epochs,
                          batch_size=batch_size, init_lr=init_lr,
                          weight_decay=weight_decay)


@pytest.fixture(scope="module")
def banks():
    spec = SynthSpec(num_classes=8, dim=12, per_class_train=15,
                     per_class_test=6, sigma_within=0.25, sigma_text=0.05,
                     seed=33)
    return generate(spec)


class TestZsClip:
    def test_two_stages_accumulate_seen_classes_without_parameters(self, banks):
        train, _ = banks
        state = LearnerState.create("zs_clip")
        observe_stage(state, train, [0, 1, 2, 3, 4], [], no_train_plan())
        observe_stage(state, train, [5, 6, 7], [], no_train_plan())
        assert state.seen_classes == [0, 1, 2, 3, 4, 5, 6, 7]
        assert state.head is None and not state.prototypes and not state.projections

    def test_query_equal_to_text_vector_predicts_its_class(self, banks):
        train, _ = banks
        state = LearnerState.create("zs_clip")
        observe_stage(state, train, list(range(8)), [], no_train_plan())
        queries = train.text_embeddings[[3, 6]].astype(np.float64)
        assert list(predict(state, queries)) == [3, 6]

    def test_missing_text_embeddings_rejected(self, banks):
        _, test = banks   # the test bank carries no text block
        state = LearnerState.create("zs_clip")
        with pytest.raises(ValidationError, match="text"):
            observe_stage(state, test, [0], [], no_train_plan())

    def test_overlapping_classes_rejected(self, banks):
        train, _ = banks
        state = LearnerState.create("zs_clip")
        observe_stage(state, train, [0, 1], [], no_train_plan())
        with pytest.raises(ValidationError, match="already seen"):
            observe_stage(state, train, [1, 2], [], no_train_plan())


class TestSimpleCil:
    def test_single_sample_class_prototype_is_that_sample_normalized(self):
        from cil_engine.bank import EmbeddingBank
        x = np.array([[3.0, 4.0]], dtype=np.float32)
        bank = EmbeddingBank(dim=2, images=x, labels=np.array([0]),
                             class_names=["only"], split_tag="train")
        state = LearnerState.create("simple_cil")
        observe_stage(state, bank, [0], [], no_train_plan())
        np.testing.assert_allclose(state.prototypes[0], [0.6, 0.8])

    def test_refits_nothing_for_old_classes(self, banks):
        train, _ = banks
        state = LearnerState.create("simple_cil")
        observe_stage(state, train, [0, 1], [], no_train_plan())
        frozen = state.prototypes[0].copy()
        observe_stage(state, train, [2, 3], [], no_train_plan())
        assert np.array_equal(state.prototypes[0], frozen)

    def test_memorizes_one_sample_per_class(self):
        from cil_engine.bank import EmbeddingBank
        rng = np.random.default_rng(5)
        x = rng.standard_normal((4, 6)).astype(np.float32)
        bank = EmbeddingBank(dim=6, images=x, labels=np.arange(4),
                             class_names=list("abcd"), split_tag="train")
        state = LearnerState.create("simple_cil")
        observe_stage(state, bank, [0, 1, 2, 3], [], no_train_plan())
        assert list(predict(state, x.astype(np.float64))) == [0, 1, 2, 3]


class TestPredictContract:
    def test_scale_invariance_of_queries(self, banks):
        train, test = banks
        for kind in ("zs_clip", "simple_cil"):
            state = LearnerState.create(kind)
            observe_stage(state, train, list(range(8)), [], no_train_plan())
            q = test.images[:20].astype(np.float64)
            base = predict(state, q)
            assert np.array_equal(predict(state, 7.5 * q), base)
            assert np.array_equal(predict(state, 0.001 * q), base)

    def test_only_seen_classes_are_predicted(self, banks):
        train, test = banks
        state = LearnerState.create("simple_cil")
        observe_stage(state, train, [5, 2], [], no_train_plan())
        preds = predict(state, test.images.astype(np.float64))
        assert set(np.unique(preds)) <= {2, 5}

    def test_zero_norm_query_rejected(self, banks):
        train, _ = banks
        state = LearnerState.create("zs_clip")
        observe_stage(state, train, [0, 1], [], no_train_plan())
        with pytest.raises(ValidationError, match="zero norm"):
            predict(state, np.zeros((1, train.dim)))

    def test_prediction_before_any_stage_rejected(self):
        with pytest.raises(ValidationError):
            predict(LearnerState.create("zs_clip"), np.ones((1, 4)))

    def test_tie_breaks_to_lowest_class_id(self):
        from cil_engine.bank import EmbeddingBank
        x = np.array([[1.0, 0.0]], dtype=np.float32)
        bank = EmbeddingBank(
            dim=2,
            images=np.array([[1.0, 0.0], [2.0, 0.0]], dtype=np.float32),
            labels=np.array([0, 1]),
            class_names=["a", "b"],
            split_tag="train",
        )
        state = LearnerState.create("simple_cil")
        observe_stage(state, bank, [1, 0], [], no_train_plan())
        # both prototypes normalize to [1, 0]: a perfect tie for any query
        assert list(predict(state, np.array([[0.5, 0.5]]))) == [0]


class TestLinearGradient:
    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(17)
        feats = rng.standard_normal((5, 8))
        labels = np.array([0, 1, 2, 1, 0])
        weights = rng.standard_normal((3, 8))
        tau = 25.0
        _, grad = linear_loss_and_grad(weights, feats, labels, tau)
        eps = 1e-6
        for r in range(3):
            for c in range(8):
                up = weights.copy(); up[r, c] += eps
                dn = weights.copy(); dn[r, c] -= eps
                lu, _ = linear_loss_and_grad(up, feats, labels, tau)
                ld, _ = linear_loss_and_grad(dn, feats, labels, tau)
                numeric = (lu - ld) / (2 * eps)
                denom = max(abs(numeric), abs(grad[r, c]), 1e-8)
                assert abs(grad[r, c] - numeric) / denom < 1e-4

    def test_proof_gradients_match_finite_differences(self):
        rng = np.random.default_rng(23)
        dim, n_seen = 5, 3
        feats = rng.standard_normal((4, dim))
        text = rng.standard_normal((n_seen, dim))
        labels = np.array([0, 2, 1, 2])
        p_new = np.eye(dim) + 0.01 * rng.standard_normal((dim, dim))
        q_new = np.eye(dim) + 0.01 * rng.standard_normal((dim, dim))
        p_frozen = np.eye(dim)
        q_frozen = np.eye(dim)
        tau = 10.0
        _, dp, dq = proof_loss_and_grads(
            p_new, q_new, p_frozen, q_frozen, feats, text, labels, tau
        )
        eps = 1e-6

        def loss_at(pm, qm):
            loss, _, _ = proof_loss_and_grads(
                pm, qm, p_frozen, q_frozen, feats, text, labels, tau
            )
            return loss

        rng2 = np.random.default_rng(99)
        for _ in range(12):
            r, c = rng2.integers(0, dim, size=2)
            up = p_new.copy(); up[r, c] += eps
            dn = p_new.copy(); dn[r, c] -= eps
            numeric = (loss_at(up, q_new) - loss_at(dn, q_new)) / (2 * eps)
            denom = max(abs(numeric), abs(dp[r, c]), 1e-8)
            assert abs(dp[r, c] - numeric) / denom < 1e-4
            up = q_new.copy(); up[r, c] += eps
            dn = q_new.copy(); dn[r, c] -= eps
            numeric = (loss_at(p_new, up) - loss_at(p_new, dn)) / (2 * eps)
            denom = max(abs(numeric), abs(dq[r, c]), 1e-8)
            assert abs(dq[r, c] - numeric) / denom < 1e-4


class TestTrainLinear:
    def test_zero_epochs_leaves_weights_unchanged(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal((2, 4))
        out = train_linear_epochs(
            w, rng.standard_normal((6, 4)), np.array([0, 1] * 3),
            no_train_plan(), rng_seed=1,
        )
        assert np.array_equal(out, w)

    def test_separable_two_class_problem_reaches_perfect_train_accuracy(self):
        # two angular clusters in 2-D: a closed-form separating direction
        # exists, so the trained cosine head must fit the pool exactly
        rng = np.random.default_rng(8)
        angles0 = rng.uniform(-0.3, 0.3, size=20)
        angles1 = rng.uniform(math.pi / 2 - 0.3, math.pi / 2 + 0.3, size=20)
        feats = np.concatenate(
            [
                np.stack([np.cos(angles0), np.sin(angles0)], axis=1),
                np.stack([np.cos(angles1), np.sin(angles1)], axis=1),
            ]
        )
        labels = np.array([0] * 20 + [1] * 20)
        w0 = np.array([[1.0, 0.2], [0.2, 1.0]])
        trained = train_linear_epochs(
            w0, feats, labels,
            plan(epochs=100, batch_size=8, init_lr=0.05), rng_seed=11,
            tau=20.0,
        )
        wn = trained / np.linalg.norm(trained, axis=1, keepdims=True)
        fn = feats / np.linalg.norm(feats, axis=1, keepdims=True)
        preds = (fn @ wn.T).argmax(axis=1)
        assert (preds == labels).all()

    def test_training_is_bit_deterministic(self):
        rng = np.random.default_rng(4)
        feats = rng.standard_normal((30, 6))
        labels = rng.integers(0, 3, size=30)
        w = rng.standard_normal((3, 6))
        a = train_linear_epochs(w, feats, labels, plan(epochs=5), rng_seed=9)
        b = train_linear_epochs(w, feats, labels, plan(epochs=5), rng_seed=9)
        assert a.tobytes() == b.tobytes()

    def test_empty_pool_rejected(self):
        with pytest.raises(ValidationError):
            train_linear_epochs(
                np.ones((1, 2)), np.empty((0, 2)), np.empty(0, dtype=int),
                plan(), rng_seed=0,
            )


class TestFinetuneAndReplay:
    def test_head_rows_follow_seen_order(self, banks):
        train, _ = banks
        state = LearnerState.create("finetune_linear", rng_seed=2)
        observe_stage(state, train, [4, 1], [], no_train_plan())
        observe_stage(state, train, [7], [], no_train_plan())
        assert state.seen_classes == [4, 1, 7]
        assert state.head.shape == (3, train.dim)

    def test_epochs_zero_head_equals_prototypes(self, banks):
        train, test = banks
        ft = LearnerState.create("finetune_linear", rng_seed=2)
        sc = LearnerState.create("simple_cil")
        observe_stage(ft, train, [0, 1, 2], [], no_train_plan())
        observe_stage(sc, train, [0, 1, 2], [], no_train_plan())
        q = test.images[:30].astype(np.float64)
        assert np.array_equal(predict(ft, q), predict(sc, q))

    def test_replay_changes_training_but_not_interface(self, banks):
        train, test = banks
        replay_rows = [int(i) for i in np.flatnonzero(train.labels == 0)[:5]]
        state = LearnerState.create("replay_linear", rng_seed=2)
        observe_stage(state, train, [0], [], plan(epochs=3))
        observe_stage(state, train, [1, 2], replay_rows, plan(epochs=3))
        preds = predict(state, test.images[:10].astype(np.float64))
        assert set(np.unique(preds)) <= {0, 1, 2}

    def test_observe_is_deterministic(self, banks):
        train, _ = banks
        heads = []
        for _ in range(2):
            state = LearnerState.create("replay_linear", rng_seed=5)
            observe_stage(state, train, [0, 1], [], plan(epochs=4))
            observe_stage(
                state, train, [2, 3],
                [int(i) for i in np.flatnonzero(train.labels == 0)[:4]],
                plan(epochs=4),
            )
            heads.append(state.head.copy())
        assert heads[0].tobytes() == heads[1].tobytes()


class TestProofLite:
    def test_zero_epochs_keeps_identity_projections(self, banks):
        train, _ = banks
        state = LearnerState.create("proof_lite", rng_seed=1)
        observe_stage(state, train, [0, 1], [], no_train_plan())
        observe_stage(state, train, [2, 3], [], no_train_plan())
        assert len(state.projections) == 2
        for p, q in state.projections:
            assert np.array_equal(p, np.eye(train.dim))
            assert np.array_equal(q, np.eye(train.dim))

    def test_zero_epochs_predicts_like_zs_clip(self, banks):
        train, test = banks
        proof = LearnerState.create("proof_lite", rng_seed=1)
        zs = LearnerState.create("zs_clip")
        for stage in ([0, 1, 2], [3, 4], [5, 6, 7]):
            observe_stage(proof, train, stage, [], no_train_plan())
            observe_stage(zs, train, stage, [], no_train_plan())
            q = test.images.astype(np.float64)
            assert np.array_equal(predict(proof, q), predict(zs, q))

    def test_earlier_projections_stay_frozen(self, banks):
        train, _ = banks
        state = LearnerState.create("proof_lite", rng_seed=1)
        observe_stage(state, train, [0, 1], [], plan(epochs=3))
        first = tuple(m.copy() for m in state.projections[0])
        observe_stage(state, train, [2, 3], [], plan(epochs=3))
        assert np.array_equal(state.projections[0][0], first[0])
        assert np.array_equal(state.projections[0][1], first[1])
        assert not np.array_equal(state.projections[1][0], np.eye(train.dim))


class TestParameterScaleInvariance:
    @settings(max_examples=10, deadline=None)
    @given(alpha=st.floats(0.05, 50.0))
    def test_scaling_parameters_preserves_predictions(self, banks, alpha):
        train, test = banks
        state = LearnerState.create("finetune_linear", rng_seed=6)
        observe_stage(state, train, [0, 1, 2, 3], [], plan(epochs=2))
        q = test.images[:25].astype(np.float64)
        base = predict(state, q)
        state.head = state.head * alpha
        assert np.array_equal(predict(state, q), base)
