"""Deterministic class-incremental learning evaluation engine.

Operates on precomputed embedding banks instead of live encoders: seeded
class ordering, B-m Inc-n staging, herding exemplar memory, frozen-feature
learners, and last/average/forgetting metrics.
"""

from .bank import (
    ClassSubsetView,
    EmbeddingBank,
    load_bank,
    subset_by_classes,
    write_bank,
    write_manifest,
)
from .errors import (
    ConfigError,
    EngineError,
    FormatError,
    IoError,
    NumericError,
    ScheduleError,
    StateError,
    UndefinedMetricError,
    ValidationError,
)
from .learners import LearnerState, StageBatchPlan, observe_stage, predict
from .memory import ExemplarStore, herding_select, replay_view, update_store
from .metrics import (
    AccuracyMatrix,
    RunMetrics,
    accuracy,
    average_accuracy,
    forgetting,
    record_task_accuracies,
)
from .protocol import (
    ClassOrder,
    StageSchedule,
    build_schedule,
    shuffle_classes,
    stage_classes,
)
from .runner import RunConfig, RunResult, emit_results, parse_config, run
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AccuracyMatrix",
    "ClassOrder",
    "ClassSubsetView",
    "ConfigError",
    "EmbeddingBank",
    "EngineError",
    "ExemplarStore",
    "FormatError",
    "IoError",
    "LearnerState",
    "NumericError",
    "RunConfig",
    "RunMetrics",
    "RunResult",
    "ScheduleError",
    "StageBatchPlan",
    "StageSchedule",
    "StateError",
    "SynthSpec",
    "UndefinedMetricError",
    "ValidationError",
    "accuracy",
    "average_accuracy",
    "build_schedule",
    "emit_results",
    "forgetting",
    "generate",
    "herding_select",
    "load_bank",
    "observe_stage",
    "parse_config",
    "predict",
    "record_task_accuracies",
    "replay_view",
    "run",
    "shuffle_classes",
    "stage_classes",
    "subset_by_classes",
    "update_store",
    "write_bank",
    "write_manifest",
]
