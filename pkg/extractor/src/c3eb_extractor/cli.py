"""CLI: extract --dataset cifar100 --backbone laion400m --out <dir>."""

from __future__ import annotations

import logging
import sys

import click

from .datasets import DATASETS
from .encoders import BACKBONES
from .extract import DEFAULT_TEMPLATE, ExtractSpec, extract


@click.command()
@click.option("--dataset", required=True,
              type=click.Choice(sorted(DATASETS), case_sensitive=False))
@click.option("--backbone", "backbone_type", required=True,
              type=click.Choice(sorted(BACKBONES), case_sensitive=False))
@click.option("--out", "output_dir", required=True, type=click.Path())
@click.option("--data-root", default="./data", show_default=True,
              help="Where the raw dataset lives (or will be downloaded).")
@click.option("--template", default=DEFAULT_TEMPLATE, show_default=True,
              help="Prompt template; '{class}' is replaced per class.")
@click.option("--device", default="cpu", show_default=True)
@click.option("--batch-size", default=64, show_default=True)
def main(dataset, backbone_type, output_dir, data_root, template, device,
         batch_size):
    """Encode a dataset with frozen CLIP ViT-B/16 and write C3EB banks."""
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    spec = ExtractSpec(
        dataset=dataset.lower(),
        backbone_type=backbone_type.lower(),
        output_dir=output_dir,
        data_root=data_root,
        prompt_template=template,
        device=device,
        batch_size=batch_size,
    )
    try:
        written = extract(spec)
    except (RuntimeError, ValueError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        raise click.exceptions.Exit(1)
    for split, path in written.items():
        click.echo(f"{split}: {path}")


if __name__ == "__main__":
    main()
