#!/usr/bin/env python
"""
File:       exp/exp_mnist_control.py
Author:     Stackfuse developers
Brief:      The MNIST control experiment: repeated 40/40/20 runs where stacking should neither help nor hurt.

Details:    Needs the four MNIST IDX files under `input_data/mnist/`. Training and test files are pooled into one
            70,000 sample corpus before splitting.

            The full setup (40 hidden neurons per net, 300 epochs, 15 runs) takes minutes to tens of minutes.
            The reduced one (25 hidden neurons, 100 epochs, 5 runs) is for quicker checks and gets a looser
            error ceiling.
"""
# Standard library imports
import os
import sys
from pathlib import Path
from typing import NamedTuple

# Third party library imports
import click
import pandas as pd

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.config import MNIST_TEST_IMAGES, MNIST_TEST_LABELS, MNIST_TRAIN_IMAGES, MNIST_TRAIN_LABELS
from src.experiment import ExperimentConfig, cmd_mnist, describe_runs, mnist_summary, parse_config
from src.utils import set_quiet


class ControlSetup(NamedTuple):
    hidden: int
    max_epochs: int
    runs: int
    error_ceiling: float


FULL = ControlSetup(hidden=40, max_epochs=300, runs=15, error_ceiling=0.08)
REDUCED = ControlSetup(hidden=25, max_epochs=100, runs=5, error_ceiling=0.10)
ERROR_FLOOR = 0.045
MAX_STAGE_GAP = 0.015


def mnist_files_present() -> bool:
    return all(p.is_file() for p in (MNIST_TRAIN_IMAGES, MNIST_TRAIN_LABELS, MNIST_TEST_IMAGES, MNIST_TEST_LABELS))


def control_config(setup: ControlSetup, seed: int, output_dir: Path, workers: int = 0) -> ExperimentConfig:
    text = (f"seed = {seed}\n"
            f"dataset.source = idx\n"
            f"dataset.idx.images = {MNIST_TRAIN_IMAGES},{MNIST_TEST_IMAGES}\n"
            f"dataset.idx.labels = {MNIST_TRAIN_LABELS},{MNIST_TEST_LABELS}\n"
            f"split.mode = fractions\n"
            f"split.fractions = 0.4,0.4,0.2\n"
            f"net.hidden1 = {setup.hidden}\n"
            f"net.hidden2 = {setup.hidden}\n"
            f"rprop.max_epochs = {setup.max_epochs}\n"
            f"run.mnist_runs = {setup.runs}\n"
            f"run.workers = {workers}\n")
    return parse_config(text, output_dir=output_dir)


def check_control(runs: pd.DataFrame, setup: ControlSetup) -> bool:
    """Net 1's mean error lies in the expected band and net 2's mean error stays close to it"""
    summary = mnist_summary(runs)
    stage1 = summary.loc["stage1_error", "mean"]
    stage2 = summary.loc["stage2_error", "mean"]
    return ERROR_FLOOR <= stage1 <= setup.error_ceiling and abs(stage1 - stage2) <= MAX_STAGE_GAP


@click.command()
@click.option("--reduced", is_flag=True, default=False, help="25 hidden neurons, 100 epochs, 5 runs.")
@click.option("--seed", default=1, show_default=True)
@click.option("--workers", default=0, show_default=True, help="0 means one per CPU.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("output_data/mnist_control"),
              show_default=True)
def main(reduced: bool, seed: int, workers: int, out: Path) -> None:
    if not mnist_files_present():
        raise click.ClickException(f"MNIST IDX files not found in '{MNIST_TRAIN_IMAGES.parent}'")
    setup = REDUCED if reduced else FULL
    set_quiet(False)
    runs = cmd_mnist(control_config(setup, seed, out, workers))
    for line in describe_runs(runs):
        click.echo(line)
    click.echo(f"within bounds: {check_control(runs, setup)}")


if __name__ == "__main__":
    main()
