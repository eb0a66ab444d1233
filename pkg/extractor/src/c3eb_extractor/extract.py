"""The extraction pipeline: dataset -> frozen encoder -> C3EB banks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .c3eb import write_c3eb, write_manifest
from .datasets import DATASETS, load_split
from .encoders import BACKBONES, Encoder, make_encoder

log = logging.getLogger(__name__)

DEFAULT_TEMPLATE = "a photo of a {class}"


@dataclass(frozen=True)
class ExtractSpec:
    dataset: str
    backbone_type: str
    output_dir: str
    data_root: str = "./data"
    prompt_template: str = DEFAULT_TEMPLATE
    device: str = "cpu"
    batch_size: int = 64

    def validate(self) -> None:
        if self.dataset not in DATASETS:
            raise ValueError(
                f"unsupported dataset {self.dataset!r}; supported: "
                f"{', '.join(sorted(DATASETS))}"
            )
        if self.backbone_type not in BACKBONES:
            raise ValueError(
                f"unsupported backbone_type {self.backbone_type!r}; "
                f"supported: {', '.join(sorted(BACKBONES))}"
            )
        if "{class}" not in self.prompt_template:
            raise ValueError("prompt_template must contain '{class}'")


def render_prompt(template: str, class_name: str) -> str:
    """Substitute the class into the template; underscores become spaces.

    No article fix-up: "a photo of a apple" is what the default template
    yields for "apple", by design.
    """
    return template.replace("{class}", class_name.replace("_", " "))


def _encode_split(spec: ExtractSpec, encoder: Encoder, split: str):
    data = load_split(spec.dataset, spec.data_root, split)
    images, labels = [], []
    feats_parts = []
    for sample in data.samples:
        images.append(sample.image)
        labels.append(sample.label)
        if len(images) == spec.batch_size:
            feats_parts.append(encoder.encode_images(images))
            images = []
    if images:
        feats_parts.append(encoder.encode_images(images))
    if not feats_parts:
        raise ValueError(f"dataset {spec.dataset!r} {split} split is empty")
    feats = np.concatenate(feats_parts, axis=0)
    return feats, np.asarray(labels, dtype=np.int64), data.class_names


def extract(spec: ExtractSpec, encoder: Encoder | None = None) -> dict:
    """Encode both splits and write banks + manifests; returns file paths.

    Embeddings are written raw (not normalized) in dataset-native sample
    order; the text block carries one vector per class, encoded from the
    prompt template, and rides on the train bank.
    """
    spec.validate()
    if encoder is None:
        encoder = make_encoder(
            spec.backbone_type, device=spec.device, batch_size=spec.batch_size
        )
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    written = {}
    class_names = None
    for split in ("train", "test"):
        feats, labels, names = _encode_split(spec, encoder, split)
        if class_names is None:
            class_names = names
        elif names != class_names:
            raise ValueError(
                f"{spec.dataset!r}: class tables differ between splits"
            )
        if feats.shape[1] != encoder.dim:
            raise ValueError(
                f"encoder produced dim {feats.shape[1]}, expected {encoder.dim}"
            )
        text = None
        if split == "train":
            prompts = [
                render_prompt(spec.prompt_template, name)
                for name in class_names
            ]
            text = encoder.encode_texts(prompts)
        path = out / f"{spec.dataset}_{split}.c3eb"
        write_c3eb(path, feats, labels, class_names, split, text)
        write_manifest(
            path,
            dataset=spec.dataset,
            dim=int(feats.shape[1]),
            n=int(feats.shape[0]),
            c=len(class_names),
            split=split,
            backbone_type=spec.backbone_type,
        )
        log.info("wrote %s: %d samples, %d classes, dim %d",
                 path, feats.shape[0], len(class_names), feats.shape[1])
        written[split] = str(path)
    return written
