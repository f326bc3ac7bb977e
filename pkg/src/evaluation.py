"""
File:       src/evaluation.py
Author:     Stackfuse developers
Brief:      Confusion matrices, per-class recall, the leave-one-person-out driver and comparison reports.

Details:    A "recognition rate" is per-class recall: the fraction of samples of a true class that are predicted
            as that class. Per-person rates are overall accuracy on that person's D3.

            The text report puts persons in columns with the stage 1 row above the stage 2 row, followed by a
            row of signed per-class deltas in percentage points.
"""
# Standard library imports
import io
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

# Third party library imports
import dask
import numpy as np
import pandas as pd

# Local modules imports
from src.config import DELTA_DECIMALS, FLOAT_FORMAT, NEWLINE, RATE_DECIMALS
from src.data import Dataset, Sample
from src.errors import DataError, EmptySetError, FormatError, InsufficientDataError, UndefinedClassError
from src.fusion import FusionConfig, FusionModel, predict_batch, train_two_stage
from src.initialize import compute_in_order, resolve_workers
from src.splits import SplitPlan, split_leave_one_person
from src.type_aliases import Classifier, IndexSet
from src.utils import derive_seed, log, time_it

TEXT_TABLE = "text"
CSV = "csv"
_LABEL_WIDTH = 8
_MIN_CELL_WIDTH = 4


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[true][predicted]"""
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or np.any(counts < 0):
            raise ValueError("a confusion matrix is a square matrix of nonnegative counts")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    __hash__ = None

    def to_frame(self) -> pd.DataFrame:
        classes = range(self.num_classes)
        return pd.DataFrame(self.counts,
                            index=pd.Index(classes, name="true"),
                            columns=pd.Index(classes, name="predicted"))


def confusion_from_labels(true_labels: np.ndarray, predicted: np.ndarray, num_classes: int) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if len(true_labels) == 0:
        raise EmptySetError("nothing to evaluate")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true_labels, predicted), 1)
    return ConfusionMatrix(counts)


def evaluate(predict: Classifier, samples: Iterable[Sample], num_classes: Optional[int] = None) -> ConfusionMatrix:
    """ Apply `predict` to every sample's features and count (true, predicted) pairs.

        The class count comes from `num_classes`, a Dataset's own count, or the largest label seen.
    """
    if num_classes is None and isinstance(samples, Dataset):
        num_classes = samples.num_classes
    true_labels: List[int] = []
    predicted: List[int] = []
    for sample in samples:
        true_labels.append(sample.label)
        predicted.append(int(predict(sample.features)))
    if not true_labels:
        raise EmptySetError("nothing to evaluate")
    if num_classes is None:
        num_classes = max(max(true_labels), max(predicted)) + 1
    return confusion_from_labels(np.array(true_labels), np.array(predicted), num_classes)


def evaluate_stages(model: FusionModel, ds: Dataset, indices: IndexSet) -> Tuple[ConfusionMatrix, ConfusionMatrix]:
    """Stage 1 and stage 2 confusion matrices over the samples at `indices`"""
    indices = np.asarray(indices, dtype=np.int64)
    stage1, stage2 = predict_batch(model, ds.features[indices])
    true_labels = ds.labels[indices]
    return (confusion_from_labels(true_labels, stage1, ds.num_classes),
            confusion_from_labels(true_labels, stage2, ds.num_classes))


def per_class_recall(cm: ConfusionMatrix) -> np.ndarray:
    """recall_c = counts[c][c] / row_sum(c)"""
    row_sums = cm.counts.sum(axis=1)
    empty = np.flatnonzero(row_sums == 0)
    if len(empty):
        raise UndefinedClassError(int(empty[0]))
    return np.diag(cm.counts) / row_sums


def defined_recall(cm: ConfusionMatrix) -> np.ndarray:
    """Like `per_class_recall`, with NaN for classes that have no samples"""
    row_sums = cm.counts.sum(axis=1)
    recall = np.full(cm.num_classes, np.nan)
    np.divide(np.diag(cm.counts), row_sums, out=recall, where=row_sums > 0)
    return recall


@dataclass(frozen=True, eq=False)
class LopoFold:
    person: int
    plan: SplitPlan
    stage1: ConfusionMatrix
    stage2: ConfusionMatrix


@dataclass(frozen=True)
class ComparisonReport:
    """ Per-person (stage 1, stage 2) accuracies and per-class recall deltas (stage 2 minus stage 1).

        `persons` labels the per-person columns. `folds` keeps the per-fold plans and confusion matrices
        of a LOPO run and is not part of the report's value.
    """
    persons: Tuple[int, ...]
    per_person: Tuple[Tuple[float, float], ...]
    per_class_delta: Tuple[float, ...]
    overall_delta: float
    folds: Tuple[LopoFold, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.persons) != len(self.per_person):
            raise ValueError("one accuracy pair per person is required")
        if any(not (0.0 <= a <= 1.0) for pair in self.per_person for a in pair):
            raise ValueError("accuracies must lie in [0, 1]")
        if any(not (-1.0 <= d <= 1.0) for d in self.per_class_delta):
            raise ValueError("per-class deltas must lie in [-1, 1]")

    def stage_means(self) -> Tuple[float, float]:
        if not self.per_person:
            return 0.0, 0.0
        stage1, stage2 = zip(*self.per_person)
        return float(np.mean(stage1)), float(np.mean(stage2))


def build_report(folds: Sequence[LopoFold]) -> ComparisonReport:
    """ Reduce fold results, in the given order, into a report.

        A class missing from a held-out person has no recall there; its delta is averaged over the folds
        that do have it. Only a class missing from every fold is an error.
    """
    if not folds:
        raise EmptySetError("no folds to report")
    per_person = tuple((f.stage1.accuracy, f.stage2.accuracy) for f in folds)
    deltas = np.array([defined_recall(f.stage2) - defined_recall(f.stage1) for f in folds])
    defined = ~np.isnan(deltas)
    for fold, row in zip(folds, defined):
        if not row.all():
            log(f"person {fold.person}: no samples of class(es) {np.flatnonzero(~row).tolist()}")
    never = np.flatnonzero(~defined.any(axis=0))
    if len(never):
        raise UndefinedClassError(int(never[0]))
    overall = float(np.mean([s2 - s1 for s1, s2 in per_person]))
    return ComparisonReport(tuple(f.person for f in folds), per_person,
                            tuple(float(d) for d in np.nanmean(deltas, axis=0)), overall, tuple(folds))


def run_fold(ds: Dataset, person: int, config: FusionConfig) -> LopoFold:
    seed = derive_seed(config.seed, person)
    plan = split_leave_one_person(ds, person, seed)
    model = train_two_stage(plan, ds, replace(config, seed=seed))
    stage1, stage2 = evaluate_stages(model, ds, plan.d3)
    log(f"person {person}: stage 1 {stage1.accuracy:.3f}, stage 2 {stage2.accuracy:.3f}")
    return LopoFold(person, plan, stage1, stage2)


@time_it
def run_lopo(ds: Dataset, config: FusionConfig, workers: int = 0) -> ComparisonReport:
    """ Hold out every person in turn, train both stages on the rest and evaluate them on that person.

        Folds may run in a process pool; the report is assembled in person order either way.
    """
    persons = [int(p) for p in ds.person_ids()]
    if not ds.has_persons or len(persons) < 2:
        raise InsufficientDataError(f"'{ds.name}' needs subject labels for at least 2 persons")
    workers = resolve_workers(workers, len(persons))
    tasks = [dask.delayed(run_fold)(ds, person, config) for person in persons]
    return build_report(compute_in_order(tasks, workers))


def _rate(value: float) -> str:
    text = f"{value:.{RATE_DECIMALS}f}"
    return text[1:] if text.startswith("0.") else text


def _delta_pp(value: float) -> str:
    text = f"{100.0 * value:+.{DELTA_DECIMALS}f}"
    return "+" + text[1:] if text.startswith("-") and float(text) == 0.0 else text


def _table(rows: Sequence[Tuple[str, Sequence[str]]]) -> List[str]:
    width = max([_MIN_CELL_WIDTH] + [len(cell) for _, cells in rows for cell in cells])
    return [f"{label:<{_LABEL_WIDTH}} | " + " | ".join(cell.rjust(width) for cell in cells) for label, cells in rows]


def _render_text(report: ComparisonReport) -> str:
    stage1 = [_rate(s1) for s1, _ in report.per_person]
    stage2 = [_rate(s2) for _, s2 in report.per_person]
    lines = _table([("person", [str(p) for p in report.persons]),
                    ("stage 1", stage1),
                    ("stage 2", stage2)])
    lines.append("")
    lines += _table([("class", [str(c) for c in range(len(report.per_class_delta))]),
                     ("delta pp", [_delta_pp(d) for d in report.per_class_delta])])
    lines.append("")
    lines.append(f"overall delta pp: {_delta_pp(report.overall_delta)}")
    return NEWLINE.join(lines) + NEWLINE


def _frames(report: ComparisonReport) -> Tuple[pd.DataFrame, pd.DataFrame]:
    persons = pd.DataFrame({
        "person": list(report.persons),
        "stage1_acc": [s1 for s1, _ in report.per_person],
        "stage2_acc": [s2 for _, s2 in report.per_person],
    })
    classes = pd.DataFrame({
        "class": list(range(len(report.per_class_delta))),
        "delta_pp": [100.0 * d for d in report.per_class_delta],
    })
    return persons, classes


def render_report(report: ComparisonReport, format: str = TEXT_TABLE) -> str:
    """ `format` "text": fixed-width tables, rates with 3 decimals, deltas as signed percentage points.
        `format` "csv": the person block and the class block, separated by an empty line.
    """
    if format == TEXT_TABLE:
        return _render_text(report)
    if format == CSV:
        persons, classes = _frames(report)
        blocks = [frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator=NEWLINE)
                  for frame in (persons, classes)]
        return NEWLINE.join(blocks)
    raise ValueError(f"unknown report format '{format}'")


def parse_report_csv(text: str) -> ComparisonReport:
    """Inverse of `render_report(report, "csv")`; the overall delta is recomputed from the per-person rows"""
    blocks = [block for block in text.split(NEWLINE + NEWLINE) if block.strip()]
    if len(blocks) != 2:
        raise FormatError("a CSV report holds a person block and a class block")
    try:
        persons = pd.read_csv(io.StringIO(blocks[0]), float_precision="round_trip")
        classes = pd.read_csv(io.StringIO(blocks[1]), float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise FormatError(f"malformed CSV report: {err}") from None
    if list(persons.columns) != ["person", "stage1_acc", "stage2_acc"] or list(classes.columns) != ["class",
                                                                                                    "delta_pp"]:
        raise FormatError("unexpected CSV report header")
    per_person = tuple((float(s1), float(s2)) for s1, s2 in zip(persons["stage1_acc"], persons["stage2_acc"]))
    overall = float(np.mean([s2 - s1 for s1, s2 in per_person])) if per_person else 0.0
    try:
        return ComparisonReport(tuple(int(p) for p in persons["person"]), per_person,
                                tuple(float(d) / 100.0 for d in classes["delta_pp"]), overall)
    except ValueError as err:
        raise DataError(f"invalid CSV report: {err}") from None


def write_report_files(report: ComparisonReport, text_path, persons_csv, classes_csv) -> None:
    with open(text_path, "wt", encoding="ascii", newline=NEWLINE) as handle:
        handle.write(render_report(report, TEXT_TABLE))
    persons, classes = _frames(report)
    for frame, path in ((persons, persons_csv), (classes, classes_csv)):
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator=NEWLINE)
