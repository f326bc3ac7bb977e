"""
File:       src/__main__.py
Author:     Stackfuse developers
Brief:      The command-line front end: a *click* command group over the experiment commands.

Details:    Results go to stdout, progress messages to stderr. Every failure ends in a one-line diagnostic and the
            exit code of its error family: 2 for configuration errors, 3 for data and I/O errors, 4 otherwise.
"""
# Standard library imports
import os
import sys
from pathlib import Path
from typing import Callable, Optional

# Third party library imports
import click

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.config import EXIT_DATA_ERROR, EXIT_RUNTIME_ERROR, FLOAT_FORMAT, MODEL_DIR_NAME
from src.config import PROGRAM_NAME, VERSION
from src.errors import ConfigError, StackfuseError
from src.evaluation import render_report
from src.experiment import ExperimentConfig, cmd_eval, cmd_lopo, cmd_mnist, cmd_split, cmd_synth, cmd_train
from src.experiment import describe_runs, load_config, render_confusion
from src.utils import exit_program, set_quiet


def _guarded(command: Callable[[], None]) -> None:
    """Run a command body and turn any failure into a diagnostic and an exit code"""
    try:
        command()
    except StackfuseError as err:
        exit_program(f"{PROGRAM_NAME}: {err.kind}: {err}", err.exit_code)
    except OSError as err:
        exit_program(f"{PROGRAM_NAME}: I/O error: {err}", EXIT_DATA_ERROR)
    except Exception as err:  # noqa
        exit_program(f"{PROGRAM_NAME}: runtime error: {err!r}", EXIT_RUNTIME_ERROR)


def _config(ctx: click.Context) -> ExperimentConfig:
    options = ctx.obj
    if options["config"] is None:
        raise ConfigError("--config: a configuration file is required")
    try:
        return load_config(options["config"], options["seed"], options["out"])
    except FileNotFoundError:
        raise ConfigError(f"--config: no such file '{options['config']}'") from None


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Experiment configuration file (key = value lines).")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory; overrides run.output_dir.")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Root seed; overrides the file's seed.")
@click.option("--quiet", is_flag=True, default=False, help="Only print results and errors.")
@click.version_option(VERSION, prog_name=PROGRAM_NAME)
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], out: Optional[Path], seed: Optional[int],
        quiet: bool) -> None:
    """Two-stage stacked MLP classifier: training, evaluation and leave-one-person-out experiments."""
    set_quiet(quiet)
    ctx.obj = {"config": config_path, "out": out, "seed": seed}


@cli.command()
@click.pass_context
def split(ctx: click.Context) -> None:
    """Write the split plan of the configured split mode."""
    def body():
        plan = cmd_split(_config(ctx))
        for name, size in plan.sizes().items():
            click.echo(f"{name} {size}")
    _guarded(body)


@cli.command()
@click.pass_context
def train(ctx: click.Context) -> None:
    """Train both stages and save the model with its split plan and run manifest."""
    def body():
        _, stage1, stage2 = cmd_train(_config(ctx))
        click.echo(f"stage1_accuracy = {FLOAT_FORMAT % stage1.accuracy}")
        click.echo(f"stage2_accuracy = {FLOAT_FORMAT % stage2.accuracy}")
    _guarded(body)


@cli.command(name="eval")
@click.argument("model_dir", required=False, type=click.Path(file_okay=False, path_type=Path))
@click.option("--all-samples", is_flag=True, default=False,
              help="Evaluate every sample instead of D3 of the saved split plan.")
@click.pass_context
def eval_(ctx: click.Context, model_dir: Optional[Path], all_samples: bool) -> None:
    """Evaluate a saved model (default: <out>/model) on the configured dataset."""
    def body():
        cfg = _config(ctx)
        stage1, stage2 = cmd_eval(cfg, model_dir or cfg.output_dir / MODEL_DIR_NAME, all_samples)
        click.echo(f"stage1_accuracy = {FLOAT_FORMAT % stage1.accuracy}")
        click.echo(f"stage2_accuracy = {FLOAT_FORMAT % stage2.accuracy}")
        for name, cm in (("stage 1", stage1), ("stage 2", stage2)):
            click.echo(f"{name} confusion matrix:")
            click.echo(render_confusion(cm))
    _guarded(body)


@cli.command()
@click.pass_context
def lopo(ctx: click.Context) -> None:
    """Leave-one-person-out comparison of stage 1 and stage 2 over every person."""
    def body():
        click.echo(render_report(cmd_lopo(_config(ctx))), nl=False)
    _guarded(body)


@cli.command()
@click.pass_context
def mnist(ctx: click.Context) -> None:
    """Repeated fraction-split runs, e.g. the 40/40/20 MNIST control experiment."""
    def body():
        for line in describe_runs(cmd_mnist(_config(ctx))):
            click.echo(line)
    _guarded(body)


@cli.command()
@click.pass_context
def synth(ctx: click.Context) -> None:
    """Write a generated corpus as CSV."""
    def body():
        click.echo(str(cmd_synth(_config(ctx))))
    _guarded(body)


def main() -> None:
    """Local main"""
    cli(prog_name=PROGRAM_NAME)


if __name__ == "__main__":
    main()
