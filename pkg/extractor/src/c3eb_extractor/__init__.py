"""Offline CLIP feature extraction into C3EB embedding banks."""

from .c3eb import write_c3eb, write_manifest
from .datasets import DATASETS, load_split
from .encoders import BACKBONES, OpenClipEncoder, make_encoder
from .extract import DEFAULT_TEMPLATE, ExtractSpec, extract, render_prompt

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "DATASETS",
    "DEFAULT_TEMPLATE",
    "ExtractSpec",
    "OpenClipEncoder",
    "extract",
    "load_split",
    "make_encoder",
    "render_prompt",
    "write_c3eb",
    "write_manifest",
]
