"""Fixtures wiring the stub dataset into the extractor registry."""

import pytest

from c3eb_extractor.datasets import DatasetInfo, SplitData

from stub_backends import make_stub_split


@pytest.fixture
def stub_dataset(monkeypatch):
    """Register an in-memory 'cifar100' stand-in with a class limit of 3."""
    import c3eb_extractor.datasets as ds

    def loader(root, split, limit):
        data = make_stub_split(split)
        kept = data.class_names[:limit]
        kept_ids = set(range(len(kept)))
        samples = [s for s in data.samples if s.label in kept_ids]
        return SplitData(samples=iter(samples), class_names=kept)

    monkeypatch.setitem(ds.DATASETS, "cifar100", DatasetInfo(3, loader))
    return "cifar100"
