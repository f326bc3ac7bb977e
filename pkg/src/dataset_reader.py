"""
File:       src/dataset_reader.py
Author:     Stackfuse developers
Brief:      Dataset input and output facilities: CSV files and MNIST IDX files.

Details:    IDX layout (big-endian):
                images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8 pixels, row-wise
                labels: u32 magic 0x00000801 | u32 count | u8 labels
            Files ending in ".gz" are decompressed on the fly.
"""
# Standard library imports
import gzip
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

# Third party library imports
import numpy as np
import pandas as pd

# Local modules imports
from src.config import FLOAT_FORMAT, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC, IDX_NUM_CLASSES, NEWLINE, PIXEL_SCALE
from src.data import NO_PERSON, Dataset, concatenate
from src.errors import EmptySetError, FormatError, ParseError


@dataclass(frozen=True)
class CsvSchema:
    """ Column layout of a CSV corpus.

        Columns other than the label and person columns are features, in file order, and there must be
        exactly `feature_count` of them. `num_classes` of None means "max label + 1".
    """
    feature_count: int
    label_column: int
    person_column: Optional[int] = None
    num_classes: Optional[int] = None
    has_header: bool = False

    @property
    def column_count(self) -> int:
        return self.feature_count + 1 + (self.person_column is not None)

    def feature_columns(self) -> List[int]:
        special = {self.label_column, self.person_column}
        return [c for c in range(self.column_count) if c not in special]


def default_schema(feature_count: int, with_person: bool, num_classes: Optional[int] = None) -> CsvSchema:
    """The layout `write_csv` produces: features, then label, then person"""
    return CsvSchema(feature_count, feature_count, feature_count + 1 if with_person else None,
                     num_classes, has_header=True)


class _DatasetReader(ABC):
    """Abstract Base Class for dataset readers"""

    @abstractmethod
    def read(self) -> Dataset:
        """Read the whole corpus eagerly and return it as a Dataset"""
        pass


class _CsvReader(_DatasetReader):
    """A *pandas* implementation of a CSV reader that reports bad rows by their line number"""

    def __init__(self, path: Path, schema: CsvSchema) -> None:
        self.path = Path(path)
        self.schema = schema

    def _line_no(self, row: int) -> int:
        return row + 1 + int(self.schema.has_header)

    def _to_float(self, cells: np.ndarray) -> np.ndarray:
        try:
            return cells.astype(np.float64)
        except (TypeError, ValueError):
            pass
        for row, line in enumerate(cells):
            for cell in line:
                try:
                    float(cell)
                except (TypeError, ValueError):
                    raise ParseError(f"non-numeric cell '{cell}'", self._line_no(row)) from None
        raise ParseError("non-numeric cell")

    def _integral(self, values: np.ndarray, what: str) -> np.ndarray:
        bad = np.flatnonzero((values != np.floor(values)) | (values < 0))
        if len(bad):
            raise ParseError(f"{what} must be a nonnegative integer, got {values[bad[0]]}", self._line_no(bad[0]))
        return values.astype(np.int64)

    def read(self) -> Dataset:
        schema = self.schema
        try:
            frame = pd.read_csv(self.path, header=None, skiprows=int(schema.has_header), dtype=str,
                                keep_default_na=False, skip_blank_lines=True)
        except pd.errors.EmptyDataError:
            raise EmptySetError(f"'{self.path}' holds no samples") from None
        except pd.errors.ParserError as err:
            raise ParseError(f"ragged rows in '{self.path}': {err}") from None

        if frame.shape[1] != schema.column_count:
            raise ParseError(f"expected {schema.column_count} columns, found {frame.shape[1]}", self._line_no(0))
        missing = frame.isna().any(axis=1).to_numpy()
        if missing.any():
            raise ParseError("ragged row: too few cells", self._line_no(int(np.argmax(missing))))

        values = self._to_float(frame.to_numpy(dtype=object))
        non_finite = ~np.isfinite(values).all(axis=1)
        if non_finite.any():
            raise ParseError("non-finite value", self._line_no(int(np.argmax(non_finite))))

        labels = self._integral(values[:, schema.label_column], "label")
        if schema.num_classes is not None:
            too_big = np.flatnonzero(labels >= schema.num_classes)
            if len(too_big):
                raise ParseError(f"label {labels[too_big[0]]} >= declared class count {schema.num_classes}",
                                 self._line_no(too_big[0]))
            num_classes = schema.num_classes
        else:
            num_classes = int(labels.max()) + 1
        if schema.person_column is not None:
            persons = self._integral(values[:, schema.person_column], "person")
        else:
            persons = np.full(len(labels), NO_PERSON)

        features = values[:, schema.feature_columns()]
        return Dataset(features, labels, persons, num_classes, self.path.stem)


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        with opener(path, "rb") as handle:
            return handle.read()
    except (EOFError, gzip.BadGzipFile) as err:
        raise FormatError(f"'{path}': {err}") from None


class _IdxReader(_DatasetReader):
    """Reader for an MNIST IDX3 image file and its IDX1 label file"""

    def __init__(self, images_path: Path, labels_path: Path) -> None:
        self.images_path = Path(images_path)
        self.labels_path = Path(labels_path)

    def _read_images(self) -> np.ndarray:
        data = _read_bytes(self.images_path)
        if len(data) < 16:
            raise FormatError(f"'{self.images_path}' is truncated: no IDX3 header")
        magic, count, rows, cols = struct.unpack_from(">IIII", data)
        if magic != IDX_IMAGES_MAGIC:
            raise FormatError(f"bad magic 0x{magic:08x} in image file '{self.images_path}'")
        expected = 16 + count * rows * cols
        if len(data) != expected:
            raise FormatError(f"'{self.images_path}' holds {len(data)} bytes, its header promises {expected}")
        return np.frombuffer(data, dtype=np.uint8, offset=16).reshape(count, rows * cols)

    def _read_labels(self) -> np.ndarray:
        data = _read_bytes(self.labels_path)
        if len(data) < 8:
            raise FormatError(f"'{self.labels_path}' is truncated: no IDX1 header")
        magic, count = struct.unpack_from(">II", data)
        if magic != IDX_LABELS_MAGIC:
            raise FormatError(f"bad magic 0x{magic:08x} in label file '{self.labels_path}'")
        if len(data) != 8 + count:
            raise FormatError(f"'{self.labels_path}' holds {len(data)} bytes, its header promises {8 + count}")
        labels = np.frombuffer(data, dtype=np.uint8, offset=8)
        if len(labels) and labels.max() >= IDX_NUM_CLASSES:
            raise FormatError(f"label {labels.max()} in '{self.labels_path}' is not a digit")
        return labels

    def read(self) -> Dataset:
        pixels = self._read_images()
        labels = self._read_labels()
        if len(pixels) != len(labels):
            raise FormatError(f"{len(pixels)} images but {len(labels)} labels")
        if len(pixels) == 0:
            raise EmptySetError(f"'{self.images_path}' holds no images")
        features = pixels.astype(np.float64) / PIXEL_SCALE
        return Dataset(features, labels, np.full(len(labels), NO_PERSON), IDX_NUM_CLASSES, self.images_path.name)


def load_csv(path: Path, schema: CsvSchema) -> Dataset:
    return _CsvReader(path, schema).read()


def load_idx(images_path: Path, labels_path: Path) -> Dataset:
    """Pixel bytes are scaled to [0, 1]; there is no subject information"""
    return _IdxReader(images_path, labels_path).read()


def load_idx_many(pairs: Sequence[Tuple[Path, Path]]) -> Dataset:
    """Concatenate several IDX pairs in order, e.g. MNIST training and test files (70000 samples)"""
    datasets = [load_idx(images, labels) for images, labels in pairs]
    return concatenate(datasets, name="+".join(d.name for d in datasets))


def write_csv(ds: Dataset, path: Path) -> None:
    """ Header `f0..f{m-1},label[,person]`, floats with 17 significant digits.

        The person column is written only when every sample has a subject.
    """
    frame = pd.DataFrame(ds.features, columns=[f"f{i}" for i in range(ds.feature_len)])
    frame["label"] = ds.labels
    if ds.has_persons:
        frame["person"] = ds.persons
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator=NEWLINE)
