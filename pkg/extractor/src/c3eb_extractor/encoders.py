"""Encoder backends: anything with encode_images / encode_texts works.

The production backend wraps OpenCLIP's ViT-B/16 with either the LAION-400M
or the OpenAI weights. It is imported lazily so the tool (and its tests) can
run without torch installed, using a stub backend instead.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

BACKBONES = {
    "laion400m": ("ViT-B-16", "laion400m_e32"),
    "openai": ("ViT-B-16", "openai"),
}


class Encoder(Protocol):
    dim: int

    def encode_images(self, images: list) -> np.ndarray: ...
    def encode_texts(self, texts: list[str]) -> np.ndarray: ...


class OpenClipEncoder:
    """Frozen CLIP ViT-B/16 via open_clip; raw (unnormalized) features."""

    def __init__(self, backbone_type: str, device: str = "cpu",
                 batch_size: int = 64):
        if backbone_type not in BACKBONES:
            raise ValueError(
                f"unsupported backbone_type {backbone_type!r}; "
                f"supported: {', '.join(sorted(BACKBONES))}"
            )
        try:
            import open_clip
            import torch
        except ImportError as exc:
            raise RuntimeError(
                "the open_clip backend needs torch and open_clip_torch "
                "(pip install 'c3eb-extractor[clip]')"
            ) from exc
        self._torch = torch
        arch, pretrained = BACKBONES[backbone_type]
        model, _, preprocess = open_clip.create_model_and_transforms(
            arch, pretrained=pretrained
        )
        self._tokenizer = open_clip.get_tokenizer(arch)
        self._model = model.to(device).eval()
        self._preprocess = preprocess
        self._device = device
        self._batch_size = batch_size
        self.dim = int(model.visual.output_dim)

    def encode_images(self, images: list) -> np.ndarray:
        torch = self._torch
        out = []
        with torch.no_grad():
            for start in range(0, len(images), self._batch_size):
                batch = torch.stack(
                    [self._preprocess(img) for img in
                     images[start : start + self._batch_size]]
                ).to(self._device)
                feats = self._model.encode_image(batch)
                out.append(feats.cpu().numpy().astype(np.float32))
        return np.concatenate(out, axis=0)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        out = []
        with torch.no_grad():
            for start in range(0, len(texts), self._batch_size):
                tokens = self._tokenizer(
                    texts[start : start + self._batch_size]
                ).to(self._device)
                feats = self._model.encode_text(tokens)
                out.append(feats.cpu().numpy().astype(np.float32))
        return np.concatenate(out, axis=0)


def make_encoder(backbone_type: str, device: str = "cpu",
                 batch_size: int = 64) -> Encoder:
    return OpenClipEncoder(backbone_type, device=device, batch_size=batch_size)
