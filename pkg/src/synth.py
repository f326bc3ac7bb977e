"""
File:       src/synth.py
Author:     Stackfuse developers
Brief:      Deterministic generator of a gesture-like corpus with designated confusable class pairs.

Details:    Every class has a center. Each confusable pair (a, b, k) pulls the two centers towards their midpoint
            until their distance is k times the original. Every person gets an offset vector added to all class
            centers (inter-subject variation), and samples are drawn isotropically around the shifted centers.

            Draw order: person offsets first, then for every person and every class its block of samples.
"""
# Standard library imports
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

# Third party library imports
import numpy as np

# Local modules imports
from src.config import SYNTH_CENTER_SCALE, SYNTH_CONFUSABLE_PAIRS, SYNTH_FEATURE_LEN, SYNTH_NUM_CLASSES
from src.config import SYNTH_PERSON_SHIFT_SIGMA, SYNTH_PERSONS, SYNTH_SAMPLES_PER_CLASS_PER_PERSON
from src.config import SYNTH_WITHIN_CLASS_SIGMA
from src.data import Dataset
from src.errors import ConfigError
from src.type_aliases import ConfusablePair, IndexSet, Matrix


@dataclass(frozen=True, eq=False)
class SynthSpec:
    num_classes: int
    feature_len: int
    persons: int
    samples_per_class_per_person: int
    class_centers: Matrix
    within_class_sigma: float
    person_shift_sigma: float
    confusable_pairs: Tuple[ConfusablePair, ...]
    seed: int

    def __post_init__(self) -> None:
        centers = np.array(self.class_centers, dtype=np.float64)
        centers.setflags(write=False)
        object.__setattr__(self, "class_centers", centers)
        object.__setattr__(self, "confusable_pairs", tuple((int(a), int(b), float(k))
                                                           for a, b, k in self.confusable_pairs))
        if min(self.num_classes, self.feature_len, self.persons, self.samples_per_class_per_person) < 1:
            raise ConfigError("synth counts must all be >= 1")
        if centers.shape != (self.num_classes, self.feature_len):
            raise ConfigError(f"class_centers must be {self.num_classes} x {self.feature_len}, got {centers.shape}")
        if self.within_class_sigma < 0 or self.person_shift_sigma < 0:
            raise ConfigError("synth sigmas must be >= 0")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")
        for a, b, k in self.confusable_pairs:
            if a == b or not (0 <= a < self.num_classes and 0 <= b < self.num_classes):
                raise ConfigError(f"confusable pair ({a}, {b}) must name two distinct valid classes")
            if not 0.0 < k <= 1.0:
                raise ConfigError(f"confusable multiplier must lie in (0, 1], got {k}")

    @classmethod
    def with_random_centers(cls,
                            num_classes: int,
                            feature_len: int,
                            persons: int,
                            samples_per_class_per_person: int,
                            within_class_sigma: float,
                            person_shift_sigma: float,
                            center_scale: float,
                            confusable_pairs: Sequence[ConfusablePair],
                            seed: int) -> "SynthSpec":
        """Centers drawn from N(0, center_scale^2) with a generator derived from `seed`"""
        if min(num_classes, feature_len) < 1:
            raise ConfigError("synth counts must all be >= 1")
        center_rng = np.random.default_rng([seed, 0])
        centers = center_rng.normal(0.0, center_scale, size=(num_classes, feature_len))
        return cls(num_classes, feature_len, persons, samples_per_class_per_person, centers,
                   within_class_sigma, person_shift_sigma, tuple(confusable_pairs), seed)

    @classmethod
    def hard_preset(cls, seed: int, samples_per_class_per_person: Optional[int] = None) -> "SynthSpec":
        """C=10, m=32, P=15, 200 samples per class and person, two confusable pairs at multiplier 0.25"""
        return cls.with_random_centers(
            SYNTH_NUM_CLASSES, SYNTH_FEATURE_LEN, SYNTH_PERSONS,
            samples_per_class_per_person or SYNTH_SAMPLES_PER_CLASS_PER_PERSON,
            SYNTH_WITHIN_CLASS_SIGMA, SYNTH_PERSON_SHIFT_SIGMA, SYNTH_CENTER_SCALE,
            SYNTH_CONFUSABLE_PAIRS, seed)

    def confusable_classes(self) -> Tuple[int, ...]:
        return tuple(sorted({c for a, b, _ in self.confusable_pairs for c in (a, b)}))


def pulled_centers(spec: SynthSpec) -> Matrix:
    """Class centers after the confusable pairs have been pulled together"""
    centers = np.array(spec.class_centers)
    for a, b, k in spec.confusable_pairs:
        midpoint = (centers[a] + centers[b]) / 2.0
        centers[a] = midpoint + k * (centers[a] - midpoint)
        centers[b] = midpoint + k * (centers[b] - midpoint)
    return centers


def generate(spec: SynthSpec) -> Dataset:
    """Bit-identical output for the same spec"""
    rng = np.random.default_rng([spec.seed, 1])
    centers = pulled_centers(spec)
    count = spec.samples_per_class_per_person
    person_offsets = rng.normal(0.0, spec.person_shift_sigma, size=(spec.persons, spec.feature_len))

    blocks, labels, persons = [], [], []
    for person in range(spec.persons):
        for label in range(spec.num_classes):
            noise = rng.normal(0.0, spec.within_class_sigma, size=(count, spec.feature_len))
            blocks.append(centers[label] + person_offsets[person] + noise)
            labels.append(np.full(count, label))
            persons.append(np.full(count, person))
    return Dataset(np.vstack(blocks), np.concatenate(labels), np.concatenate(persons), spec.num_classes,
                   f"synth-{spec.seed}")


def nearest_centroid_predictions(ds: Dataset, train_indices: IndexSet, test_indices: IndexSet) -> np.ndarray:
    """ Class predictions of a 1-nearest-centroid classifier fitted on `train_indices`.

        This is the ambiguity oracle for a generated corpus.
    """
    train_features = ds.features[train_indices]
    train_labels = ds.labels[train_indices]
    centroids = np.array([train_features[train_labels == c].mean(axis=0) for c in range(ds.num_classes)])
    test_features = ds.features[test_indices]
    distances = ((test_features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(distances, axis=1)


def nearest_centroid_accuracy(ds: Dataset, held_out_person: int) -> float:
    held_out = ds.persons == held_out_person
    predictions = nearest_centroid_predictions(ds, np.flatnonzero(~held_out), np.flatnonzero(held_out))
    return float(np.mean(predictions == ds.labels[held_out]))
