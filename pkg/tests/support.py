"""Shared test helpers: the standard desk benchmark and bank/config writers."""

from __future__ import annotations

import json
from pathlib import Path

from cil_engine.bank import write_bank, write_manifest
from cil_engine.synth import SynthSpec

# The fixed benchmark used by the cross-method acceptance checks:
# 20 classes, 32 dims, sigma_within 0.45, generator seed 7; runs split it
# B0 Inc4 with 30 tuned epochs and 20 exemplars per class.
STANDARD_SPEC = SynthSpec(
    num_classes=20,
    dim=32,
    per_class_train=50,
    per_class_test=20,
    sigma_between=1.0,
    sigma_within=0.45,
    sigma_text=0.1,
    seed=7,
)


def write_bank_pair(train, test, directory: Path, name: str) -> str:
    """Write a train/test pair plus manifests; returns the dataset base path."""
    directory.mkdir(parents=True, exist_ok=True)
    base = directory / name
    for bank, split in ((train, "train"), (test, "test")):
        path = Path(f"{base}_{split}.c3eb")
        write_bank(bank, path)
        write_manifest(bank, path, dataset=name, backbone_type="synthetic")
    return str(base)


def write_run_config(path: Path, **overrides) -> Path:
    cfg = {
        "model_name": "zs_clip",
        "dataset": "",
        "increment": 2,
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
    return path
