#!/usr/bin/env python
"""
File:       exp/exp_fusion_benefit.py
Author:     Stackfuse developers
Brief:      Does the second stage help on a corpus with confusable classes?

Details:    Runs a full leave-one-person-out comparison on the hard synthetic preset for several root seeds.
            Stage 2 should not lose overall accuracy and should on most seeds gain recall on the classes of the
            confusable pairs.
"""
# Standard library imports
import os
import sys
from typing import List, NamedTuple, Optional, Sequence

# Third party library imports
import click
import numpy as np

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.evaluation import ComparisonReport, render_report, run_lopo
from src.fusion import FusionConfig
from src.rprop import RpropConfig
from src.synth import SynthSpec, generate
from src.utils import log, set_quiet

ROOT_SEEDS = (1, 2, 3, 4, 5)
ACCURACY_SLACK = 0.005
MIN_SEEDS_WITH_GAIN = 3


class SeedOutcome(NamedTuple):
    seed: int
    stage1_mean: float
    stage2_mean: float
    confusable_delta: float


def run_seed(seed: int,
             samples_per_class_per_person: Optional[int] = None,
             max_epochs: Optional[int] = None,
             workers: int = 0) -> SeedOutcome:
    spec = SynthSpec.hard_preset(seed, samples_per_class_per_person)
    rprop = RpropConfig() if max_epochs is None else RpropConfig(max_epochs=max_epochs)
    report: ComparisonReport = run_lopo(generate(spec), FusionConfig(rprop=rprop, seed=seed), workers)
    log(render_report(report))
    stage1, stage2 = report.stage_means()
    confusable = np.array(report.per_class_delta)[list(spec.confusable_classes())]
    return SeedOutcome(seed, stage1, stage2, float(confusable.mean()))


def fusion_helps(outcomes: Sequence[SeedOutcome]) -> bool:
    """Median stage 2 accuracy within half a point of stage 1, and a confusable-class gain on most seeds"""
    stage1 = float(np.median([o.stage1_mean for o in outcomes]))
    stage2 = float(np.median([o.stage2_mean for o in outcomes]))
    gains = sum(o.confusable_delta > 0 for o in outcomes)
    return stage2 >= stage1 - ACCURACY_SLACK and gains >= min(MIN_SEEDS_WITH_GAIN, len(outcomes))


@click.command()
@click.option("--samples", type=int, default=None, help="Samples per class and person (default 200).")
@click.option("--epochs", type=int, default=None, help="RPROP epochs (default 300).")
@click.option("--workers", default=0, show_default=True, help="0 means one per CPU.")
def main(samples: Optional[int], epochs: Optional[int], workers: int) -> None:
    set_quiet(False)
    outcomes: List[SeedOutcome] = [run_seed(seed, samples, epochs, workers) for seed in ROOT_SEEDS]
    for o in outcomes:
        click.echo(f"seed {o.seed}: stage 1 {o.stage1_mean:.4f}, stage 2 {o.stage2_mean:.4f}, "
                   f"confusable delta {100.0 * o.confusable_delta:+.2f} pp")
    click.echo(f"fusion helps: {fusion_helps(outcomes)}")


if __name__ == "__main__":
    main()
