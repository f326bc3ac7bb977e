"""
File:       tests/test_dataset_reader.py
Author:     Stackfuse developers
Brief:      Unit tests for the CSV and IDX readers and the CSV writer.
"""
# Standard library imports
import os
import struct
import sys
import tempfile
import unittest
from pathlib import Path

# Third party library imports
import numpy as np

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.data import Dataset
from src.dataset_reader import CsvSchema, default_schema, load_csv, load_idx, load_idx_many, write_csv
from src.errors import EmptySetError, FormatError, ParseError
from tools.make_idx import random_digits, write_idx

SCHEMA = CsvSchema(feature_count=2, label_column=2, person_column=3)


class TestCsvReader(unittest.TestCase):
    """Class for automated testing of CSV ingestion"""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def _write(self, text: str) -> Path:
        path = self.dir / "corpus.csv"
        path.write_text(text, encoding="ascii")
        return path

    def test_read_plain(self):
        ds = load_csv(self._write("0.5,1.5,0,3\n-2,4e-3,2,3\n1,1,1,7\n"), SCHEMA)
        self.assertEqual(3, len(ds))
        self.assertEqual(3, ds.num_classes)
        np.testing.assert_array_equal([[0.5, 1.5], [-2.0, 0.004], [1.0, 1.0]], ds.features)
        np.testing.assert_array_equal([0, 2, 1], ds.labels)
        np.testing.assert_array_equal([3, 3, 7], ds.persons)

    def test_label_column_first(self):
        schema = CsvSchema(feature_count=2, label_column=0, num_classes=5)
        ds = load_csv(self._write("4,0.1,0.2\n0,0.3,0.4\n"), schema)
        np.testing.assert_array_equal([4, 0], ds.labels)
        np.testing.assert_array_equal([[0.1, 0.2], [0.3, 0.4]], ds.features)
        self.assertEqual(5, ds.num_classes)
        self.assertFalse(ds.has_persons)

    def test_non_numeric_cell_names_row(self):
        with self.assertRaises(ParseError) as context:
            load_csv(self._write("0.5,1.5,0,3\n1,1,1,7\n0.1,abc,1,0\n"), SCHEMA)
        self.assertEqual(3, context.exception.row)
        self.assertIn("row 3", str(context.exception))

    def test_row_numbers_count_the_header(self):
        schema = CsvSchema(feature_count=2, label_column=2, person_column=3, has_header=True)
        with self.assertRaises(ParseError) as context:
            load_csv(self._write("f0,f1,label,person\nx,1,0,0\n"), schema)
        self.assertEqual(2, context.exception.row)

    def test_short_row(self):
        with self.assertRaises(ParseError) as context:
            load_csv(self._write("0.5,1.5,0,3\n1,1,1\n"), SCHEMA)
        self.assertEqual(2, context.exception.row)

    def test_non_integral_label(self):
        with self.assertRaises(ParseError) as context:
            load_csv(self._write("0.5,1.5,0,3\n1,1,1.5,7\n"), SCHEMA)
        self.assertEqual(2, context.exception.row)

    def test_label_beyond_declared_classes(self):
        schema = CsvSchema(feature_count=2, label_column=2, num_classes=2)
        with self.assertRaises(ParseError):
            load_csv(self._write("0,0,0\n0,0,2\n"), schema)

    def test_wrong_column_count(self):
        with self.assertRaises(ParseError):
            load_csv(self._write("0.5,1.5,0,3\n"), CsvSchema(feature_count=3, label_column=3, person_column=4))

    def test_non_finite_value(self):
        with self.assertRaises(ParseError):
            load_csv(self._write("0.5,inf,0,3\n"), SCHEMA)

    def test_empty_file(self):
        with self.assertRaises(EmptySetError):
            load_csv(self._write(""), SCHEMA)

    def test_write_then_read_is_exact(self):
        rng = np.random.default_rng(9)
        ds = Dataset(rng.normal(size=(7, 3)), rng.integers(0, 4, size=7), rng.integers(0, 3, size=7), 4)
        path = self.dir / "written.csv"
        write_csv(ds, path)
        self.assertTrue(path.read_text(encoding="ascii").startswith("f0,f1,f2,label,person\n"))
        again = load_csv(path, default_schema(3, with_person=True, num_classes=4))
        np.testing.assert_array_equal(ds.features, again.features)
        np.testing.assert_array_equal(ds.labels, again.labels)
        np.testing.assert_array_equal(ds.persons, again.persons)


class TestIdxReader(unittest.TestCase):
    """Class for automated testing of MNIST IDX ingestion"""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def _pair(self, count: int = 20, suffix: str = "", seed: int = 0):
        images, labels = random_digits(count, 4, 5, seed)
        images_path = self.dir / f"images-{seed}{suffix}"
        labels_path = self.dir / f"labels-{seed}{suffix}"
        write_idx(images, labels, images_path, labels_path)
        return images, labels, images_path, labels_path

    def test_read(self):
        images, labels, images_path, labels_path = self._pair()
        ds = load_idx(images_path, labels_path)
        self.assertEqual(20, len(ds))
        self.assertEqual(20, ds.feature_len)
        self.assertEqual(10, ds.num_classes)
        self.assertFalse(ds.has_persons)
        np.testing.assert_array_equal(images.reshape(20, 20) / 255.0, ds.features)
        np.testing.assert_array_equal(labels, ds.labels)
        self.assertTrue(np.all((ds.features >= 0.0) & (ds.features <= 1.0)))

    def test_read_gzip(self):
        _, labels, images_path, labels_path = self._pair(suffix=".gz")
        np.testing.assert_array_equal(labels, load_idx(images_path, labels_path).labels)

    def test_read_many(self):
        _, labels_a, images_a, labels_path_a = self._pair(seed=1)
        _, labels_b, images_b, labels_path_b = self._pair(count=7, seed=2)
        ds = load_idx_many([(images_a, labels_path_a), (images_b, labels_path_b)])
        self.assertEqual(27, len(ds))
        np.testing.assert_array_equal(np.concatenate([labels_a, labels_b]), ds.labels)

    def test_bad_magic(self):
        _, _, images_path, labels_path = self._pair()
        data = bytearray(images_path.read_bytes())
        data[:4] = struct.pack(">I", 0x00000804)
        images_path.write_bytes(bytes(data))
        with self.assertRaises(FormatError):
            load_idx(images_path, labels_path)

    def test_truncated(self):
        _, _, images_path, labels_path = self._pair()
        images_path.write_bytes(images_path.read_bytes()[:-1])
        with self.assertRaises(FormatError):
            load_idx(images_path, labels_path)
        labels_path.write_bytes(b"\x00\x00")
        with self.assertRaises(FormatError):
            load_idx(self._pair(seed=5)[2], labels_path)

    def test_count_mismatch(self):
        _, _, images_path, _ = self._pair(count=20, seed=3)
        _, _, _, labels_path = self._pair(count=19, seed=4)
        with self.assertRaises(FormatError):
            load_idx(images_path, labels_path)


if __name__ == "__main__":
    unittest.main(argv=[""], verbosity=2, exit=False)
