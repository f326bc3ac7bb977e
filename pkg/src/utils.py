"""
File:       src/utils.py
Author:     Stackfuse developers
Brief:      Utility functions: console messages, timing and program exit.
"""
# Standard library imports
import datetime
import sys
import timeit
from functools import wraps
from typing import Callable, NoReturn

# Third party library imports
import click
import numpy as np

# Local modules imports
from src.config import DEBUG

_quiet = False


def set_quiet(quiet: bool) -> None:
    """Silence (or re-enable) progress messages written by `log`"""
    global _quiet
    _quiet = quiet


def log(msg: str) -> None:
    """Progress message to stderr, unless running quietly"""
    if not _quiet:
        click.echo(msg, err=True)


def exit_program(msg: str, code: int = 1) -> NoReturn:
    """Print message to stderr and exit program with `code`"""
    click.echo(msg, err=True)
    sys.exit(code)


def time_it(function: Callable) -> Callable:
    """Report the wall time of `function` through `log`"""

    @wraps(function)
    def inner(*args, **kw):
        start = timeit.default_timer()
        result = function(*args, **kw)
        end = timeit.default_timer()
        diff = end - start
        if DEBUG or not _quiet:
            log(f"\t*** TIMING: {function.__qualname__} took {datetime.timedelta(seconds=diff)} "
                f"or {diff:.3f} s to complete.")
        return result
    return inner


def derive_seed(base_seed: int, salt: int) -> int:
    """A reproducible child seed, e.g. one per held-out person or per repeated run"""
    return int(np.random.SeedSequence([base_seed, salt]).generate_state(1, dtype=np.uint32)[0])
