"""
File:       src/data.py
Author:     Stackfuse developers
Brief:      The sample and dataset model, and one-against-all target encoding.
"""
# Standard library imports
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

# Third party library imports
import numpy as np

# Local modules imports
from src.errors import DimensionError, EmptySetError, InvalidLabelError
from src.type_aliases import Batch, IndexSet, Matrix, Vector

NO_PERSON = -1  # Stored in the person column of corpora without subjects.


class Sample(NamedTuple):
    features: Vector
    label: int
    person: Optional[int]


@dataclass(frozen=True, eq=False)
class Dataset:
    """ An immutable set of samples stored column-wise.

        `features` is (N x m), `labels` and `persons` have length N. A person of `NO_PERSON` means the
        corpus has no subject information for that sample.
    """
    features: Matrix
    labels: np.ndarray
    persons: np.ndarray
    num_classes: int
    name: str = ""

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        persons = np.array(self.persons, dtype=np.int64)
        if features.ndim != 2 or labels.shape != (len(features),) or persons.shape != (len(features),):
            raise DimensionError("features, labels and persons must be row-aligned")
        if features.shape[1] < 1 or self.num_classes < 1:
            raise DimensionError("a dataset needs at least one feature and one class")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise InvalidLabelError(f"labels must lie in [0, {self.num_classes})")
        for array in (features, labels, persons):
            array.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "persons", persons)

    @property
    def feature_len(self) -> int:
        return self.features.shape[1]

    @property
    def has_persons(self) -> bool:
        return bool(len(self.persons)) and bool(np.all(self.persons != NO_PERSON))

    def person_ids(self) -> np.ndarray:
        """Sorted distinct subject identifiers"""
        return np.unique(self.persons[self.persons != NO_PERSON])

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, index: int) -> Sample:
        person = int(self.persons[index])
        return Sample(self.features[index], int(self.labels[index]), None if person == NO_PERSON else person)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def samples(self) -> Sequence[Sample]:
        return list(self)

    def subset(self, indices: IndexSet, name: Optional[str] = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.persons[indices],
                       self.num_classes, self.name if name is None else name)

    def batch(self, indices: IndexSet) -> Batch:
        """(inputs, one-against-all targets) for the samples at `indices`"""
        indices = np.asarray(indices, dtype=np.int64)
        return self.features[indices], encode_targets_batch(self.labels[indices], self.num_classes)


def concatenate(datasets: Sequence[Dataset], name: str = "") -> Dataset:
    if not datasets:
        raise EmptySetError("nothing to concatenate")
    return Dataset(np.vstack([d.features for d in datasets]),
                   np.concatenate([d.labels for d in datasets]),
                   np.concatenate([d.persons for d in datasets]),
                   max(d.num_classes for d in datasets),
                   name or datasets[0].name)


def encode_targets(label: int, num_classes: int) -> Vector:
    """+1.0 at the label index and -1.0 elsewhere, matching the symmetric sigmoid's range"""
    if not 0 <= label < num_classes:
        raise InvalidLabelError(f"label {label} is outside [0, {num_classes})")
    target = np.full(num_classes, -1.0)
    target[label] = 1.0
    return target


def encode_targets_batch(labels: np.ndarray, num_classes: int) -> Matrix:
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidLabelError(f"labels must lie in [0, {num_classes})")
    targets = np.full((len(labels), num_classes), -1.0)
    targets[np.arange(len(labels)), labels] = 1.0
    return targets
