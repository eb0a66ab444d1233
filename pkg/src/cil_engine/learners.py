"""Frozen-feature learners behind one observe/predict interface.

All five methods classify by cosine similarity over the classes seen so far,
differing only in what stands in for each class:

* ``zs_clip``         -- the class's text embedding; nothing is trained.
* ``simple_cil``      -- the normalized mean of the class's train features.
* ``finetune_linear`` -- a trainable weight row, updated on new classes only
                         (the catastrophic-forgetting baseline).
* ``replay_linear``   -- the same head, trained on new rows plus replayed
                         exemplars of earlier classes.
* ``proof_lite``      -- per-stage visual/textual projection pairs on top of
                         the text route; only the newest pair trains, earlier
                         ones stay frozen.

Training is mini-batch SGD with momentum 0.9, decoupled weight decay, and a
per-epoch cosine learning-rate schedule, over cross-entropy on
temperature-scaled cosine logits. Parameters are held in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bank import EmbeddingBank
from .errors import NumericError, ValidationError
from .rng import SplitMix64, derive_seed

KINDS = ("finetune_linear", "zs_clip", "simple_cil", "replay_linear", "proof_lite")
TEXT_KINDS = ("zs_clip", "proof_lite")
REPLAY_KINDS = ("replay_linear", "proof_lite")
TRAINABLE_KINDS = ("finetune_linear", "replay_linear", "proof_lite")

MOMENTUM = 0.9


@dataclass
class StageBatchPlan:
    """Per-stage training hyperparameters, straight from the run config."""

    train_indices: list[int]
    epochs: int
    batch_size: int
    init_lr: float
    weight_decay: float


@dataclass
class LearnerState:
    kind: str
    tau: float
    rng_seed: int
    seen_classes: list[int] = field(default_factory=list)
    prototypes: dict[int, np.ndarray] = field(default_factory=dict)
    head: np.ndarray | None = None            # (S, dim) float64
    projections: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    text_seen: np.ndarray | None = None       # (S, dim) float64
    stages_observed: int = 0

    @classmethod
    def create(cls, kind: str, tau: float = 100.0, rng_seed: int = 0) -> "LearnerState":
        if kind not in KINDS:
            raise ValidationError(
                f"unknown learner kind {kind!r}; expected one of {KINDS}"
            )
        if tau <= 0:
            raise ValidationError(f"temperature must be positive, got {tau}")
        return cls(kind=kind, tau=tau, rng_seed=rng_seed)


def _rows_of_classes(bank: EmbeddingBank, class_ids: list[int]) -> np.ndarray:
    return np.flatnonzero(
        np.isin(bank.labels, np.asarray(class_ids, dtype=np.int64))
    ).astype(np.int64)


def _normalize_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValidationError(f"{what} row {int(zero[0])} has zero norm")
    return x / norms[:, None]


def _class_mean_direction(bank: EmbeddingBank, cid: int) -> np.ndarray:
    """Normalized float64 mean of one class's raw train features."""
    rows = np.flatnonzero(bank.labels == cid)
    if rows.size == 0:
        raise ValidationError(f"class {cid} has no train samples")
    mean = bank.images[rows].astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise ValidationError(f"class {cid} train mean has zero norm")
    return mean / norm


def linear_loss_and_grad(
    weights: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    tau: float,
) -> tuple[float, np.ndarray]:
    """Cross-entropy over tau-scaled cosine logits and its weight gradient.

    The gradient is the exact derivative of the mean batch loss, including
    the cosine's dependence on the weight-row norms.
    """
    x = np.asarray(features, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    xn = _normalize_rows(x, "feature")
    wnorm = np.linalg.norm(w, axis=1)
    if np.any(wnorm == 0.0):
        raise NumericError("a head row collapsed to zero norm")
    wn = w / wnorm[:, None]
    cos = xn @ wn.T                          # (B, S)
    z = tau * cos
    z -= z.max(axis=1, keepdims=True)
    expz = np.exp(z)
    p = expz / expz.sum(axis=1, keepdims=True)
    n = x.shape[0]
    loss = float(-np.log(p[np.arange(n), y]).mean())
    g = p.copy()
    g[np.arange(n), y] -= 1.0
    g /= n                                   # dL/dz
    grad = (g.T @ xn) - (g * cos).sum(axis=0)[:, None] * wn
    grad *= tau / wnorm[:, None]
    return loss, grad


def proof_loss_and_grads(
    p_new: np.ndarray,
    q_new: np.ndarray,
    p_frozen: np.ndarray,
    q_frozen: np.ndarray,
    features: np.ndarray,
    text: np.ndarray,
    labels: np.ndarray,
    tau: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and gradients w.r.t. the newest projection pair only.

    f(x) = (p_frozen + p_new) x and g(c) = (q_frozen + q_new) t_c; the loss
    is cross-entropy over tau * cos(f(x), g(c)) across the seen classes.
    """
    x = np.asarray(features, dtype=np.float64)
    t = np.asarray(text, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    u = x @ (p_frozen + p_new).T             # (B, d)
    v = t @ (q_frozen + q_new).T             # (S, d)
    unorm = np.linalg.norm(u, axis=1)
    vnorm = np.linalg.norm(v, axis=1)
    if np.any(unorm == 0.0) or np.any(vnorm == 0.0):
        raise NumericError("a projected feature collapsed to zero norm")
    un = u / unorm[:, None]
    vn = v / vnorm[:, None]
    cos = un @ vn.T
    z = tau * cos
    z -= z.max(axis=1, keepdims=True)
    expz = np.exp(z)
    p = expz / expz.sum(axis=1, keepdims=True)
    n = x.shape[0]
    loss = float(-np.log(p[np.arange(n), y]).mean())
    g = p.copy()
    g[np.arange(n), y] -= 1.0
    g /= n
    du = (g @ vn - (g * cos).sum(axis=1)[:, None] * un) * (tau / unorm[:, None])
    dv = (g.T @ un - (g * cos).sum(axis=0)[:, None] * vn) * (tau / vnorm[:, None])
    return loss, du.T @ x, dv.T @ t


def _run_sgd(
    params: list[np.ndarray],
    grad_fn,
    pool_size: int,
    plan: StageBatchPlan,
    seed: int,
) -> None:
    """Momentum SGD with decoupled weight decay over shuffled mini-batches.

    grad_fn(batch_indices) -> (loss, [grads]); params update in place. The
    learning rate follows a per-epoch cosine decay from init_lr toward 0.
    """
    if plan.batch_size < 1:
        raise ValidationError(f"batch_size must be positive, got {plan.batch_size}")
    if plan.epochs < 0:
        raise ValidationError(f"epochs must be non-negative, got {plan.epochs}")
    if plan.epochs == 0 or pool_size == 0:
        return
    velocity = [np.zeros_like(p) for p in params]
    for epoch in range(plan.epochs):
        lr = plan.init_lr * 0.5 * (1.0 + math.cos(math.pi * epoch / plan.epochs))
        order = list(range(pool_size))
        SplitMix64(derive_seed(seed, epoch)).shuffle(order)
        for start in range(0, pool_size, plan.batch_size):
            batch = order[start : start + plan.batch_size]
            loss, grads = grad_fn(batch)
            if not math.isfinite(loss):
                raise NumericError(f"non-finite loss {loss} at epoch {epoch}")
            for par, vel, grd in zip(params, velocity, grads):
                vel *= MOMENTUM
                vel += grd
                par -= lr * vel + lr * plan.weight_decay * par


def train_linear_epochs(
    weights: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    plan: StageBatchPlan,
    rng_seed: int,
    tau: float = 100.0,
) -> np.ndarray:
    """Train a cosine-logit linear head on the given pool; returns new weights."""
    if features.shape[0] == 0:
        raise ValidationError("training pool is empty")
    w = np.asarray(weights, dtype=np.float64).copy()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)

    def grad_fn(batch):
        loss, grad = linear_loss_and_grad(w, x[batch], y[batch], tau)
        return loss, [grad]

    _run_sgd([w], grad_fn, x.shape[0], plan, rng_seed)
    return w


def _append_text_rows(
    state: LearnerState, bank: EmbeddingBank, new_classes: list[int]
) -> None:
    if bank.text_embeddings is None:
        raise ValidationError(
            f"learner {state.kind!r} needs text embeddings on the train bank"
        )
    rows = bank.text_embeddings[np.asarray(new_classes, dtype=np.int64)]
    rows = rows.astype(np.float64)
    state.text_seen = (
        rows if state.text_seen is None else np.vstack([state.text_seen, rows])
    )


def observe_stage(
    state: LearnerState,
    train_bank: EmbeddingBank,
    new_classes: list[int],
    replay_indices: list[int],
    plan: StageBatchPlan,
) -> LearnerState:
    """Advance the learner by one stage; updates state in place and returns it.

    replay_indices must hold exemplar rows of previously seen classes only;
    kinds that do not rehearse ignore them.
    """
    if not new_classes:
        raise ValidationError("a stage must introduce at least one class")
    overlap = set(new_classes) & set(state.seen_classes)
    if overlap:
        raise ValidationError(f"classes {sorted(overlap)} were already seen")

    if state.kind in TEXT_KINDS:
        _append_text_rows(state, train_bank, new_classes)

    if state.kind == "zs_clip":
        pass

    elif state.kind == "simple_cil":
        for cid in new_classes:
            state.prototypes[cid] = _class_mean_direction(train_bank, cid)

    elif state.kind in ("finetune_linear", "replay_linear"):
        new_rows = [
            _class_mean_direction(train_bank, cid) for cid in new_classes
        ]
        state.head = (
            np.vstack(new_rows)
            if state.head is None
            else np.vstack([state.head, *new_rows])
        )
        seen_after = state.seen_classes + list(new_classes)
        local = {cid: i for i, cid in enumerate(seen_after)}
        pool = list(map(int, _rows_of_classes(train_bank, new_classes)))
        if state.kind == "replay_linear":
            pool = pool + [int(i) for i in replay_indices]
        feats = train_bank.images[np.asarray(pool, dtype=np.int64)]
        labels = np.asarray(
            [local[int(train_bank.labels[i])] for i in pool], dtype=np.int64
        )
        stage_seed = derive_seed(state.rng_seed, state.stages_observed)
        state.head = train_linear_epochs(
            state.head, feats, labels, plan, stage_seed, tau=state.tau
        )

    elif state.kind == "proof_lite":
        dim = train_bank.dim
        p_new = np.eye(dim)
        q_new = np.eye(dim)
        p_frozen = np.zeros((dim, dim))
        q_frozen = np.zeros((dim, dim))
        for p_i, q_i in state.projections:
            p_frozen += p_i
            q_frozen += q_i
        seen_after = state.seen_classes + list(new_classes)
        local = {cid: i for i, cid in enumerate(seen_after)}
        pool = list(map(int, _rows_of_classes(train_bank, new_classes)))
        pool = pool + [int(i) for i in replay_indices]
        feats = train_bank.images[np.asarray(pool, dtype=np.int64)].astype(np.float64)
        labels = np.asarray(
            [local[int(train_bank.labels[i])] for i in pool], dtype=np.int64
        )
        text = state.text_seen

        def grad_fn(batch):
            loss, dp, dq = proof_loss_and_grads(
                p_new, q_new, p_frozen, q_frozen,
                feats[batch], text, labels[batch], state.tau,
            )
            return loss, [dp, dq]

        stage_seed = derive_seed(state.rng_seed, state.stages_observed)
        _run_sgd([p_new, q_new], grad_fn, len(pool), plan, stage_seed)
        state.projections.append((p_new, q_new))

    state.seen_classes.extend(int(c) for c in new_classes)
    state.stages_observed += 1
    return state


def class_scores(
    state: LearnerState, queries: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Cosine score of every query against every seen class.

    Returns (scores, class_ids): scores[i, j] is the cosine between query i
    and the representation of class class_ids[j]; columns follow the order
    classes were seen in. Queries are taken raw; no normalization is assumed.
    """
    if not state.seen_classes:
        raise ValidationError("learner has not seen any class yet")
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim != 2:
        raise ValidationError(f"queries must be (M, dim), got shape {q.shape}")
    qn = _normalize_rows(q, "query")

    if state.kind == "zs_clip":
        reps = state.text_seen
    elif state.kind == "simple_cil":
        reps = np.vstack([state.prototypes[c] for c in state.seen_classes])
    elif state.kind in ("finetune_linear", "replay_linear"):
        reps = state.head
    elif state.kind == "proof_lite":
        dim = q.shape[1]
        p_sum = np.zeros((dim, dim))
        q_sum = np.zeros((dim, dim))
        for p_i, q_i in state.projections:
            p_sum += p_i
            q_sum += q_i
        u = q @ p_sum.T
        v = state.text_seen @ q_sum.T
        unorm = np.linalg.norm(u, axis=1)
        vnorm = np.linalg.norm(v, axis=1)
        if np.any(unorm == 0.0) or np.any(vnorm == 0.0):
            raise NumericError("a projection collapsed a vector to zero norm")
        scores = (u / unorm[:, None]) @ (v / vnorm[:, None]).T
        return scores, np.asarray(state.seen_classes, dtype=np.int64)
    else:  # pragma: no cover - guarded by create()
        raise ValidationError(f"unknown learner kind {state.kind!r}")

    rn = _normalize_rows(np.asarray(reps, dtype=np.float64), "class representation")
    return qn @ rn.T, np.asarray(state.seen_classes, dtype=np.int64)


def argmax_lowest_id(scores: np.ndarray, class_ids: np.ndarray) -> np.ndarray:
    """Row-wise argmax over class columns; exact ties go to the lowest id."""
    if not np.isfinite(scores).all():
        raise NumericError("non-finite class score; parameters diverged")
    mx = scores.max(axis=1, keepdims=True)
    tied = scores == mx
    sentinel = np.iinfo(np.int64).max
    candidates = np.where(tied, class_ids[None, :], sentinel)
    return candidates.min(axis=1)


def predict(state: LearnerState, queries: np.ndarray) -> np.ndarray:
    """Predicted class id for each query row, over seen classes only."""
    scores, ids = class_scores(state, queries)
    return argmax_lowest_id(scores, ids)
