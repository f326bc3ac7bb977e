#!/usr/bin/env python3
"""
File:       tools/make_idx.py
Author:     Stackfuse developers
Brief:      Script for making small IDX (MNIST format) files.

Details:
            Writes a pseudo-random set of images and labels, optionally gzip-compressed, to test the IDX reader
            without the real MNIST files. The `write_idx` function can also be called programmatically.
"""
# Standard library imports
import gzip
import os
import struct
import sys
from pathlib import Path

# Third party library imports
import click
import numpy as np

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.config import IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC, IDX_NUM_CLASSES  # noqa


def _open(path: Path):
    return gzip.open(path, "wb") if path.suffix == ".gz" else open(path, "wb")


def write_idx(images: np.ndarray, labels: np.ndarray, images_path: Path, labels_path: Path) -> None:
    """`images` is (count x rows x cols) uint8, `labels` is (count,) uint8"""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    count, rows, cols = images.shape
    with _open(Path(images_path)) as handle:
        handle.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, count, rows, cols))
        handle.write(images.tobytes())
    with _open(Path(labels_path)) as handle:
        handle.write(struct.pack(">II", IDX_LABELS_MAGIC, len(labels)))
        handle.write(labels.tobytes())


def random_digits(count: int, rows: int, cols: int, seed: int):
    """Images whose brightest pixel row encodes the label, so that a classifier has something to learn"""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, IDX_NUM_CLASSES, size=count)
    images = rng.integers(0, 64, size=(count, rows, cols))
    for i, label in enumerate(labels):
        images[i, label % rows, :] = 255
    return images.astype(np.uint8), labels.astype(np.uint8)


@click.command()
@click.argument("images_path", type=click.Path(dir_okay=False, path_type=Path))
@click.argument("labels_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--count", default=100, show_default=True, help="Number of images.")
@click.option("--size", default=10, show_default=True, help="Image height and width.")
@click.option("--seed", default=0, show_default=True)
def make_idx(images_path: Path, labels_path: Path, count: int, size: int, seed: int) -> None:
    images, labels = random_digits(count, size, size, seed)
    write_idx(images, labels, images_path, labels_path)


if __name__ == "__main__":
    make_idx()
