"""Dataset registry: the ten supported benchmarks and their class budgets.

Each provider yields (samples, class_names) per split in dataset-native
order; class selection keeps the first `class_limit` classes of that order
so the benchmark class counts stay consistent across incremental stages
(100 for CIFAR100 / Aircraft / Cars / Food / UCF / TV100, 200 for CUB /
ObjectNet / ImageNet-R, 300 for SUN). All shuffling is the engine's job.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator


@dataclass(frozen=True)
class Sample:
    image: object       # PIL image or array, whatever the encoder accepts
    label: int


@dataclass(frozen=True)
class SplitData:
    samples: Iterator[Sample]
    class_names: list[str]


def _limit_classes(pairs, class_names, limit):
    keep = class_names[:limit]
    kept_ids = set(range(len(keep)))
    samples = (Sample(img, int(lab)) for img, lab in pairs if int(lab) in kept_ids)
    return SplitData(samples=samples, class_names=keep)


def _torchvision_loader(cls_name: str, split_kwargs: dict):
    def load(root: str, split: str, limit: int) -> SplitData:
        import torchvision.datasets as tvd

        dataset_cls = getattr(tvd, cls_name)
        ds = dataset_cls(root=root, download=True, **split_kwargs[split])
        names = [str(n) for n in ds.classes]
        pairs = ((img, lab) for img, lab in ds)
        return _limit_classes(pairs, names, limit)

    return load


def _image_folder_loader(root: str, split: str, limit: int) -> SplitData:
    """Fallback layout: <root>/<split>/<class_name>/*.png|jpg|jpeg."""
    from PIL import Image

    split_dir = Path(root) / split
    if not split_dir.is_dir():
        raise FileNotFoundError(f"expected an image-folder layout at {split_dir}")
    names = sorted(p.name for p in split_dir.iterdir() if p.is_dir())

    def iter_pairs():
        for label, name in enumerate(names):
            for img_path in sorted((split_dir / name).iterdir()):
                if img_path.suffix.lower() in (".png", ".jpg", ".jpeg"):
                    yield Image.open(img_path).convert("RGB"), label

    return _limit_classes(iter_pairs(), names, limit)


@dataclass(frozen=True)
class DatasetInfo:
    class_limit: int
    loader: Callable[[str, str, int], SplitData]


DATASETS: dict[str, DatasetInfo] = {
    "cifar100": DatasetInfo(100, _torchvision_loader(
        "CIFAR100", {"train": {"train": True}, "test": {"train": False}})),
    "aircraft": DatasetInfo(100, _torchvision_loader(
        "FGVCAircraft",
        {"train": {"split": "trainval"}, "test": {"split": "test"}})),
    "cars": DatasetInfo(100, _torchvision_loader(
        "StanfordCars", {"train": {"split": "train"}, "test": {"split": "test"}})),
    "food101": DatasetInfo(100, _torchvision_loader(
        "Food101", {"train": {"split": "train"}, "test": {"split": "test"}})),
    "sun397": DatasetInfo(300, _torchvision_loader(
        "SUN397", {"train": {}, "test": {}})),
    "ucf101": DatasetInfo(100, _image_folder_loader),
    "tv100": DatasetInfo(100, _image_folder_loader),
    "cub200": DatasetInfo(200, _image_folder_loader),
    "objectnet": DatasetInfo(200, _image_folder_loader),
    "imagenet_r": DatasetInfo(200, _image_folder_loader),
}


def load_split(dataset: str, root: str, split: str) -> SplitData:
    if dataset not in DATASETS:
        raise KeyError(
            f"unsupported dataset {dataset!r}; supported: "
            f"{', '.join(sorted(DATASETS))}"
        )
    info = DATASETS[dataset]
    return info.loader(root, split, info.class_limit)
