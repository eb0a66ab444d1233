"""Command-line entry points: run, synth, inspect.

Exit codes: 0 success, 1 config/validation problems, 2 numeric or other
runtime failures.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import runner as runner_mod
from . import synth as synth_mod
from .bank import load_bank, read_manifest, write_bank, write_manifest
from .errors import (
    ConfigError,
    EngineError,
    FormatError,
    ScheduleError,
    StateError,
    UndefinedMetricError,
    ValidationError,
)

_USAGE_ERRORS = (
    ConfigError,
    ValidationError,
    FormatError,
    ScheduleError,
    StateError,
    UndefinedMetricError,
)

log = logging.getLogger("cil_engine")

_SYNTH_KEYS = {
    "name": str,
    "num_classes": int,
    "dim": int,
    "per_class_train": int,
    "per_class_test": int,
    "sigma_between": float,
    "sigma_within": float,
    "sigma_text": float,
    "seed": int,
}
_SYNTH_REQUIRED = ("name", "num_classes", "dim", "per_class_train", "per_class_test")


def _fail(exc: BaseException) -> "click.exceptions.Exit":
    if isinstance(exc, _USAGE_ERRORS):
        code = 1
    else:
        code = 2
    click.echo(f"error: {exc}", err=True)
    return click.exceptions.Exit(code)


@click.group()
def main() -> None:
    """Deterministic class-incremental learning evaluation engine."""
    logging.basicConfig(
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path())
def run_cmd(config_path: str) -> None:
    """Run the incremental protocol described by a JSON config."""
    try:
        config = runner_mod.parse_config(config_path)
        result = runner_mod.run(config)
    except EngineError as exc:
        raise _fail(exc)
    except OSError as exc:
        raise _fail(exc)
    fb = result.forgetting
    click.echo(
        f"done: {len(result.stages)} stages, "
        f"avg {100.0 * result.avg_acc:.2f}%, last {100.0 * result.last_acc:.2f}%, "
        f"forgetting {'n/a' if fb is None else f'{100.0 * fb:.2f}%'} "
        f"-> {config.output_dir}"
    )


@main.command("synth")
@click.option("--spec", "spec_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def synth_cmd(spec_path: str, out_dir: str) -> None:
    """Generate a synthetic embedding-bank pair from a JSON spec."""
    try:
        raw = json.loads(Path(spec_path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ConfigError("synth spec root must be a JSON object")
        unknown = sorted(set(raw) - set(_SYNTH_KEYS))
        if unknown:
            raise ConfigError(f"unknown synth spec key {unknown[0]!r}")
        for key in _SYNTH_REQUIRED:
            if key not in raw:
                raise ConfigError(f"missing synth spec key {key!r}")
        for key, value in raw.items():
            want = _SYNTH_KEYS[key]
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                raw[key] = float(value)
            elif not isinstance(value, want) or isinstance(value, bool):
                raise ConfigError(f"synth spec key {key!r} must be {want.__name__}")
        name = raw.pop("name")
        spec = synth_mod.SynthSpec(**raw)
        train, test = synth_mod.generate(spec)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for bank, split in ((train, "train"), (test, "test")):
            path = out / f"{name}_{split}.c3eb"
            write_bank(bank, path)
            write_manifest(bank, path, dataset=name, backbone_type="synthetic")
        click.echo(f"wrote {name}_train.c3eb and {name}_test.c3eb to {out}")
    except json.JSONDecodeError as exc:
        raise _fail(ConfigError(f"{spec_path}: invalid JSON ({exc})"))
    except (EngineError, OSError, TypeError) as exc:
        raise _fail(exc)


@main.command("inspect")
@click.option("--bank", "bank_path", required=True, type=click.Path())
def inspect_cmd(bank_path: str) -> None:
    """Validate a bank file and print its manifest-level summary."""
    try:
        bank = load_bank(bank_path)
    except (EngineError, OSError) as exc:
        raise _fail(exc)
    manifest = read_manifest(bank_path)
    click.echo(f"bank: {bank_path}")
    click.echo(f"split: {bank.split_tag}")
    click.echo(f"dim: {bank.dim}")
    click.echo(f"samples: {bank.num_samples}")
    click.echo(f"classes: {bank.num_classes}")
    click.echo(f"text_embeddings: {'yes' if bank.text_embeddings is not None else 'no'}")
    if manifest is not None:
        click.echo(f"manifest: dataset={manifest.get('dataset')!r} "
                   f"backbone_type={manifest.get('backbone_type')!r}")
    click.echo("validation: ok")


if __name__ == "__main__":
    main()
