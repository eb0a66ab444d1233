"""Session fixtures shared across the engine test modules."""

import pytest

from cil_engine.synth import SynthSpec, generate

from support import STANDARD_SPEC


@pytest.fixture(scope="session")
def standard_banks():
    return generate(STANDARD_SPEC)


@pytest.fixture(scope="session")
def tiny_banks():
    """6 easy classes in 8 dims; fast enough for per-test runs."""
    spec = SynthSpec(
        num_classes=6,
        dim=8,
        per_class_train=12,
        per_class_test=5,
        sigma_within=0.15,
        sigma_text=0.05,
        seed=21,
    )
    return generate(spec)
