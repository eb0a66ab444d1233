"""JSON config parsing, the incremental evaluation loop, and results files.

A run loads one train and one test bank, shuffles the class order with the
configured seed, slices it into stages, and walks the learner through them.
After every stage the engine scores all seen-class test rows once and derives
both the cumulative stage accuracy and the per-task accuracy-matrix row; each
task is re-evaluated in the label space it was learned under (the classes
seen when it arrived), so a learner whose parameters never change shows zero
forgetting by construction.

Everything that affects results is deterministic given (config, banks); wall
times are reported but carry no determinism guarantee. ``CIL_ENGINE_THREADS``
only fans evaluation chunks across threads and never changes results.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bank import load_bank, read_manifest
from .errors import ConfigError, EngineError, ValidationError
from .learners import (
    REPLAY_KINDS,
    LearnerState,
    StageBatchPlan,
    argmax_lowest_id,
    class_scores,
    observe_stage,
)
from .memory import ExemplarStore, replay_view, update_store
from .metrics import (
    AccuracyMatrix,
    RunMetrics,
    accuracy,
    forgetting,
    record_task_accuracies,
)
from .protocol import build_schedule, shuffle_classes, stage_classes

log = logging.getLogger(__name__)

MODEL_NAMES = {
    "finetune": "finetune_linear",
    "zs_clip": "zs_clip",
    "simplecil": "simple_cil",
    "replay_linear": "replay_linear",
    "proof_lite": "proof_lite",
}

# Any of these may appear in a config; non-SGD choices still run as SGD with
# momentum (the engine's single deterministic optimizer) and log a notice.
OPTIMIZER_NAMES = ("sgd", "adam", "adamw")

EVAL_CHUNK = 1024   # fixed evaluation chunk size; independent of thread count

THREADS_ENV = "CIL_ENGINE_THREADS"


@dataclass(frozen=True)
class RunConfig:
    model_name: str
    dataset: str
    increment: int
    init_cls: int = 0
    backbone_type: str = ""
    memory_per_class: int = 20
    seed: int = 1993
    tuned_epoch: int = 10
    batch_size: int = 64
    init_lr: float = 0.01
    weight_decay: float = 0.0005
    optimizer: str = "sgd"
    temperature: float = 100.0
    allow_ragged: bool = False
    output_dir: str = "./results"

    @property
    def learner_kind(self) -> str:
        return MODEL_NAMES[self.model_name]


_FIELD_TYPES = {
    "model_name": str,
    "dataset": str,
    "increment": int,
    "init_cls": int,
    "backbone_type": str,
    "memory_per_class": int,
    "seed": int,
    "tuned_epoch": int,
    "batch_size": int,
    "init_lr": float,
    "weight_decay": float,
    "optimizer": str,
    "temperature": float,
    "allow_ragged": bool,
    "output_dir": str,
}
_REQUIRED = ("model_name", "dataset", "increment")


def parse_config_dict(raw: dict) -> RunConfig:
    """Validate a config mapping and apply defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - set(_FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required config key {key!r}")
    clean = {}
    for key, value in raw.items():
        want = _FIELD_TYPES[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if want is not bool and isinstance(value, bool):
            raise ConfigError(f"config key {key!r} must be {want.__name__}")
        if not isinstance(value, want):
            raise ConfigError(
                f"config key {key!r} must be {want.__name__}, "
                f"got {type(value).__name__}"
            )
        clean[key] = value

    if clean["model_name"] not in MODEL_NAMES:
        raise ConfigError(
            f"unsupported model_name {clean['model_name']!r}; "
            f"supported: {', '.join(sorted(MODEL_NAMES))}"
        )
    cfg = RunConfig(**clean)
    if cfg.optimizer not in OPTIMIZER_NAMES:
        raise ConfigError(
            f"unknown optimizer {cfg.optimizer!r}; "
            f"accepted: {', '.join(OPTIMIZER_NAMES)}"
        )
    if cfg.optimizer != "sgd":
        log.info(
            "optimizer %r requested; the engine always runs SGD with momentum",
            cfg.optimizer,
        )
    if cfg.increment < 1:
        raise ConfigError("increment must be >= 1")
    if cfg.init_cls < 0:
        raise ConfigError("init_cls must be >= 0")
    if cfg.memory_per_class < 1:
        raise ConfigError("memory_per_class must be >= 1")
    if cfg.tuned_epoch < 0:
        raise ConfigError("tuned_epoch must be >= 0")
    if cfg.batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    if cfg.init_lr <= 0 or not np.isfinite(cfg.init_lr):
        raise ConfigError("init_lr must be a positive finite number")
    if cfg.weight_decay < 0 or not np.isfinite(cfg.weight_decay):
        raise ConfigError("weight_decay must be a non-negative finite number")
    if cfg.temperature <= 0 or not np.isfinite(cfg.temperature):
        raise ConfigError("temperature must be a positive finite number")
    return cfg


def parse_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config_dict(raw)


@dataclass
class StageResult:
    stage: int
    new_classes: list[int]
    seen_count: int
    acc: float                       # cumulative accuracy, fraction
    task_acc: list[float]            # accuracy-matrix row l, tasks 1..l
    running_forgetting: float | None
    wall_time_sec: float


@dataclass
class RunResult:
    config: dict
    stages: list[StageResult] = field(default_factory=list)
    avg_acc: float | None = None
    last_acc: float | None = None
    forgetting: float | None = None
    aborted: bool = False
    error: str | None = None


def _eval_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {threads}")
    return threads


def _scores_chunked(state: LearnerState, queries: np.ndarray, threads: int):
    """Score queries in fixed-size chunks, optionally across threads.

    The chunk boundaries never depend on the thread count, so the float
    results are identical whatever parallelism is in effect.
    """
    chunks = [queries[i : i + EVAL_CHUNK] for i in range(0, len(queries), EVAL_CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ch: class_scores(state, ch), chunks))
    else:
        parts = [class_scores(state, ch) for ch in chunks]
    return np.vstack([p[0] for p in parts]), parts[0][1]


def _percent(x: float | None) -> float | None:
    return None if x is None else round(100.0 * x, 2)


def run(config: RunConfig) -> RunResult:
    """Execute the full incremental protocol described by the config.

    Any engine error leaves an aborted result.json behind before
    propagating; errors inside a stage carry that stage in their message.
    """
    threads = _eval_threads()
    result = RunResult(config=asdict(config))
    try:
        return _run_stages(config, result, threads)
    except EngineError as exc:
        if not result.aborted:
            result.aborted = True
            result.error = str(exc)
            emit_results(result, config.output_dir)
        raise


def _run_stages(config: RunConfig, result: RunResult, threads: int) -> RunResult:
    train = load_bank(f"{config.dataset}_train.c3eb")
    test = load_bank(f"{config.dataset}_test.c3eb")
    if train.split_tag != "train" or test.split_tag != "test":
        raise ValidationError("bank split tags do not match their roles")
    if train.dim != test.dim:
        raise ValidationError(
            f"train dim {train.dim} != test dim {test.dim}"
        )
    if train.class_names != test.class_names:
        raise ValidationError("train and test banks disagree on class names")

    manifest = read_manifest(f"{config.dataset}_train.c3eb")
    if (
        manifest is not None
        and config.backbone_type
        and manifest.get("backbone_type") not in ("", config.backbone_type)
    ):
        log.warning(
            "config backbone_type %r does not match manifest %r",
            config.backbone_type, manifest.get("backbone_type"),
        )

    num_classes = train.num_classes
    order = shuffle_classes(num_classes, config.seed)
    schedule = build_schedule(
        order, config.init_cls, config.increment, config.allow_ragged
    )
    num_stages = schedule.num_stages

    state = LearnerState.create(
        config.learner_kind, tau=config.temperature, rng_seed=config.seed
    )
    store = (
        ExemplarStore(capacity_per_class=config.memory_per_class)
        if config.learner_kind in REPLAY_KINDS
        else None
    )
    matrix = AccuracyMatrix(num_stages)

    task_rows: list[np.ndarray] = []   # test rows per task, stage order
    prefix_cols: list[int] = []        # seen-class count through each stage
    per_stage_acc: list[float] = []

    for b in range(1, num_stages + 1):
        t0 = time.perf_counter()
        try:
            new_classes, _seen = stage_classes(schedule, b)
            replay = replay_view(store, train) if store is not None else []
            if store is not None:
                update_store(store, train, new_classes)

            new_train_rows = np.flatnonzero(
                np.isin(train.labels, np.asarray(new_classes))
            )
            plan = StageBatchPlan(
                train_indices=[*map(int, new_train_rows), *replay],
                epochs=config.tuned_epoch,
                batch_size=config.batch_size,
                init_lr=config.init_lr,
                weight_decay=config.weight_decay,
            )
            observe_stage(state, train, new_classes, replay, plan)

            rows = np.flatnonzero(np.isin(test.labels, np.asarray(new_classes)))
            for cid in new_classes:
                if not (test.labels[rows] == cid).any():
                    raise ValidationError(
                        f"class {cid} has no test samples"
                    )
            task_rows.append(rows.astype(np.int64))
            prefix_cols.append(len(state.seen_classes))

            all_rows = np.concatenate(task_rows)
            scores, ids = _scores_chunked(state, test.images[all_rows], threads)
            labels = test.labels[all_rows]

            acc_l = accuracy(argmax_lowest_id(scores, ids), labels)
            per_task: list[tuple[int, float]] = []
            offset = 0
            for t, t_rows in enumerate(task_rows, start=1):
                n_rows = len(t_rows)
                cols = prefix_cols[t - 1]
                preds = argmax_lowest_id(
                    scores[offset : offset + n_rows, :cols], ids[:cols]
                )
                per_task.append(
                    (t, accuracy(preds, labels[offset : offset + n_rows]))
                )
                offset += n_rows
            record_task_accuracies(matrix, b, per_task)
            per_stage_acc.append(acc_l)
            running_f = forgetting(matrix.leading(b)) if b >= 2 else None
        except EngineError as exc:
            result.aborted = True
            result.error = f"stage {b}: {exc}"
            emit_results(result, config.output_dir)
            raise type(exc)(f"stage {b}: {exc}") from exc

        wall = time.perf_counter() - t0
        result.stages.append(
            StageResult(
                stage=b,
                new_classes=[int(c) for c in new_classes],
                seen_count=len(state.seen_classes),
                acc=acc_l,
                task_acc=[a for _, a in per_task],
                running_forgetting=running_f,
                wall_time_sec=wall,
            )
        )
        log.info(
            "stage %d/%d: +%d classes (seen %d), accuracy %.2f%%",
            b, num_stages, len(new_classes), len(state.seen_classes),
            100.0 * acc_l,
        )

    metrics = RunMetrics.from_run(per_stage_acc, matrix)
    result.avg_acc = metrics.avg_acc
    result.last_acc = metrics.last_acc
    result.forgetting = metrics.forgetting
    emit_results(result, config.output_dir)
    return result


def emit_results(result: RunResult, output_dir: str | Path) -> None:
    """Write result.json and curve.csv (percent values, two decimals)."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    payload = {
        "config": result.config,
        "stages": [
            {
                "stage": s.stage,
                "new_classes": s.new_classes,
                "seen_count": s.seen_count,
                "acc_percent": _percent(s.acc),
                "task_acc_percent": [_percent(a) for a in s.task_acc],
                "forgetting_percent": _percent(s.running_forgetting),
                "wall_time_sec": s.wall_time_sec,
            }
            for s in result.stages
        ],
        "avg_acc_percent": _percent(result.avg_acc),
        "last_acc_percent": _percent(result.last_acc),
        "forgetting_percent": _percent(result.forgetting),
        "aborted": result.aborted,
        "error": result.error,
    }
    (out / "result.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )

    lines = ["stage,seen_classes,acc_percent,forgetting_percent"]
    for s in result.stages:
        f_cell = (
            "" if s.running_forgetting is None
            else f"{100.0 * s.running_forgetting:.2f}"
        )
        lines.append(f"{s.stage},{s.seen_count},{100.0 * s.acc:.2f},{f_cell}")
    (out / "curve.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    log_lines = [
        f"model={result.config.get('model_name')} "
        f"dataset={result.config.get('dataset')} "
        f"seed={result.config.get('seed')}"
    ]
    total = len(result.stages)
    for s in result.stages:
        log_lines.append(
            f"stage {s.stage}/{total}: +{len(s.new_classes)} classes "
            f"(seen {s.seen_count}), accuracy {100.0 * s.acc:.2f}%, "
            f"wall {s.wall_time_sec:.3f}s"
        )
    if result.aborted:
        log_lines.append(f"ABORTED: {result.error}")
    elif result.avg_acc is not None:
        fb = result.forgetting
        log_lines.append(
            f"final: avg {100.0 * result.avg_acc:.2f}%, "
            f"last {100.0 * result.last_acc:.2f}%, "
            f"forgetting {'n/a' if fb is None else f'{100.0 * fb:.2f}%'}"
        )
    (out / "run.log").write_text("\n".join(log_lines) + "\n", encoding="utf-8")
