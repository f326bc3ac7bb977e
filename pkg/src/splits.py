"""
File:       src/splits.py
Author:     Stackfuse developers
Brief:      The three-set split protocol and its text file format.

Details:    D3 is the generalization set, D1 trains net 1 and D2 trains net 2. Each of D1 and D2 is split 9:1
            into a training part and a monitor part used only to pick the best checkpoint.

            All shuffling goes through `numpy.random.default_rng(seed)`, so a plan is a pure function of its
            inputs and its seed.
"""
# Standard library imports
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

# Third party library imports
import numpy as np

# Local modules imports
from src.config import FRACTION_TOLERANCE, MIN_REMAINING_SAMPLES, MONITOR_DIVISOR, NEWLINE, SPLIT_FORMAT_TAG
from src.data import Dataset
from src.errors import FormatError, InsufficientDataError, InvalidFractionError, MissingSubjectError
from src.type_aliases import IndexSet

SET_NAMES = ("d1_train", "d1_test", "d2_train", "d2_test", "d3")


def _frozen_indices(indices) -> IndexSet:
    array = np.array(indices, dtype=np.int64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """Five disjoint index sets covering a dataset"""
    d1_train: IndexSet
    d1_test: IndexSet
    d2_train: IndexSet
    d2_test: IndexSet
    d3: IndexSet
    held_out_person: Optional[int]
    seed: int

    def __post_init__(self) -> None:
        for name in SET_NAMES:
            object.__setattr__(self, name, _frozen_indices(getattr(self, name)))

    def sets(self) -> Iterator[Tuple[str, IndexSet]]:
        for name in SET_NAMES:
            yield name, getattr(self, name)

    @property
    def d1(self) -> IndexSet:
        return np.concatenate([self.d1_train, self.d1_test])

    @property
    def d2(self) -> IndexSet:
        return np.concatenate([self.d2_train, self.d2_test])

    def sizes(self) -> Dict[str, int]:
        return {name: len(indices) for name, indices in self.sets()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SplitPlan):
            return NotImplemented
        return self.held_out_person == other.held_out_person and self.seed == other.seed \
            and all(np.array_equal(a, b) for (_, a), (_, b) in zip(self.sets(), other.sets()))

    __hash__ = None


def monitor_size(set_size: int) -> int:
    """round(|Di| / 10), halves rounded up"""
    return (set_size + MONITOR_DIVISOR // 2) // MONITOR_DIVISOR


def _split_monitor(indices: IndexSet) -> Tuple[IndexSet, IndexSet]:
    """The (already shuffled) set keeps its first 9/10 for training and its last 1/10 for monitoring"""
    cut = len(indices) - monitor_size(len(indices))
    return indices[:cut], indices[cut:]


def _plan(d1: IndexSet, d2: IndexSet, d3: IndexSet, held_out_person: Optional[int], seed: int) -> SplitPlan:
    d1_train, d1_test = _split_monitor(d1)
    d2_train, d2_test = _split_monitor(d2)
    return SplitPlan(d1_train, d1_test, d2_train, d2_test, d3, held_out_person, seed)


def split_leave_one_person(ds: Dataset, person: int, seed: int) -> SplitPlan:
    """ D3 holds every sample of `person`. The rest is shuffled and halved into D1 and D2
        (D1 takes the extra sample when the count is odd).
    """
    in_d3 = ds.persons == person
    d3 = np.flatnonzero(in_d3)
    if len(d3) == 0:
        raise MissingSubjectError(f"no samples of person {person} in '{ds.name}'")
    rest = np.flatnonzero(~in_d3)
    if len(rest) < MIN_REMAINING_SAMPLES:
        raise InsufficientDataError(
            f"only {len(rest)} samples remain without person {person}; at least {MIN_REMAINING_SAMPLES} are needed")
    rest = np.random.default_rng(seed).permutation(rest)
    half = (len(rest) + 1) // 2
    return _plan(rest[:half], rest[half:], d3, person, seed)


def split_fractions(ds: Dataset, fractions: Tuple[float, float, float], seed: int) -> SplitPlan:
    """ Shuffle the whole corpus and assign the fractions f1, f2, f3 to D1, D2, D3.

        Used where there is no person information (MNIST: 0.4, 0.4, 0.2).
    """
    if len(fractions) != 3 or any(not f > 0 for f in fractions):
        raise InvalidFractionError(f"three fractions, each > 0, are required; got {tuple(fractions)}")
    if abs(sum(fractions) - 1.0) > FRACTION_TOLERANCE:
        raise InvalidFractionError(f"fractions must sum to 1, got {sum(fractions)!r}")
    total = len(ds)
    n1 = int(np.floor(fractions[0] * total + 0.5))
    n2 = int(np.floor(fractions[1] * total + 0.5))
    n3 = total - n1 - n2
    if min(n1, n2, n3) < 1:
        raise InsufficientDataError(f"{total} samples can't fill three nonempty sets with fractions {fractions}")
    shuffled = np.random.default_rng(seed).permutation(total)
    return _plan(shuffled[:n1], shuffled[n1:n1 + n2], np.sort(shuffled[n1 + n2:]), None, seed)


def check_plan(plan: SplitPlan, ds: Dataset) -> None:
    """Raise AssertionError unless `plan` satisfies every split invariant over `ds`"""
    everything = np.concatenate([indices for _, indices in plan.sets()])
    assert len(np.unique(everything)) == len(everything), "index sets overlap"
    assert np.array_equal(np.sort(everything), np.arange(len(ds))), "index sets don't cover the dataset"
    if plan.held_out_person is not None:
        assert np.all(ds.persons[plan.d3] == plan.held_out_person), "D3 holds other persons"
        outside = np.setdiff1d(np.arange(len(ds)), plan.d3)
        assert not np.any(ds.persons[outside] == plan.held_out_person), "held-out person outside D3"
        assert abs(len(plan.d1) - len(plan.d2)) <= 1, "D1 and D2 differ by more than 1"
    for train_part, test_part in ((plan.d1_train, plan.d1_test), (plan.d2_train, plan.d2_test)):
        assert len(test_part) == monitor_size(len(train_part) + len(test_part)), "monitor split isn't 9:1"


def dumps_plan(plan: SplitPlan) -> str:
    person = "none" if plan.held_out_person is None else str(plan.held_out_person)
    lines: List[str] = [SPLIT_FORMAT_TAG, f"seed {plan.seed}", f"held_out_person {person}"]
    for name, indices in plan.sets():
        lines.append(" ".join([name, str(len(indices))] + [str(i) for i in indices]))
    return NEWLINE.join(lines) + NEWLINE


def save_plan(plan: SplitPlan, path: Path) -> None:
    with open(path, "wt", encoding="ascii", newline=NEWLINE) as handle:
        handle.write(dumps_plan(plan))


def loads_plan(text: str) -> SplitPlan:
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if len(lines) != 3 + len(SET_NAMES) or " ".join(lines[0]) != SPLIT_FORMAT_TAG:
        raise FormatError(f"not a '{SPLIT_FORMAT_TAG}' file")
    try:
        if lines[1][0] != "seed" or lines[2][0] != "held_out_person":
            raise ValueError
        seed = int(lines[1][1])
        person = None if lines[2][1] == "none" else int(lines[2][1])
        sets = {}
        for tokens, name in zip(lines[3:], SET_NAMES):
            if tokens[0] != name or int(tokens[1]) != len(tokens) - 2:
                raise ValueError
            sets[name] = [int(t) for t in tokens[2:]]
    except (ValueError, IndexError):
        raise FormatError("malformed split plan") from None
    return SplitPlan(**sets, held_out_person=person, seed=seed)


def load_plan(path: Path) -> SplitPlan:
    with open(path, "rt", encoding="ascii", newline=NEWLINE) as handle:
        return loads_plan(handle.read())
