"""
File:       tests/test_splits.py
Author:     Stackfuse developers
Brief:      Unit and property tests for the three-set split protocol.
"""
# Standard library imports
import os
import sys
import tempfile
import unittest
from pathlib import Path

# Third party library imports
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.data import NO_PERSON, Dataset
from src.errors import FormatError, InsufficientDataError, InvalidFractionError, MissingSubjectError
from src.splits import check_plan, dumps_plan, load_plan, loads_plan, monitor_size, save_plan
from src.splits import split_fractions, split_leave_one_person


def _corpus(persons: np.ndarray, feature_len: int = 1) -> Dataset:
    """A dataset whose only interesting column is the person column"""
    count = len(persons)
    return Dataset(np.zeros((count, feature_len)), np.arange(count) % 2, persons, 2)


class TestSplits(unittest.TestCase):
    """Class for automated testing of split plans"""

    def test_monitor_size_rounding(self):
        self.assertEqual(0, monitor_size(4))
        self.assertEqual(1, monitor_size(5))
        self.assertEqual(1, monitor_size(14))
        self.assertEqual(2, monitor_size(15))
        self.assertEqual(21000, monitor_size(210000))

    def test_full_scale_arithmetic(self):
        # 15 persons x 30000 samples: D3 is one person, the remaining 420000 are halved and split 9:1.
        persons = np.repeat(np.arange(15), 30000)
        ds = _corpus(persons)
        plan = split_leave_one_person(ds, 4, seed=1)
        self.assertEqual({"d1_train": 189000, "d1_test": 21000, "d2_train": 189000, "d2_test": 21000,
                          "d3": 30000}, plan.sizes())
        check_plan(plan, ds)

    def test_odd_remainder_goes_to_d1(self):
        persons = np.array([0] * 5 + [1] * 21)
        plan = split_leave_one_person(_corpus(persons), 0, seed=3)
        self.assertEqual(11, len(plan.d1))
        self.assertEqual(10, len(plan.d2))
        self.assertEqual((10, 1), (len(plan.d1_train), len(plan.d1_test)))
        self.assertEqual((9, 1), (len(plan.d2_train), len(plan.d2_test)))

    def test_missing_person(self):
        with self.assertRaises(MissingSubjectError):
            split_leave_one_person(_corpus(np.repeat([0, 1], 20)), 7, seed=0)

    def test_too_few_remaining(self):
        with self.assertRaises(InsufficientDataError):
            split_leave_one_person(_corpus(np.array([0] * 30 + [1] * 19)), 0, seed=0)

    def test_same_seed_same_plan(self):
        ds = _corpus(np.repeat(np.arange(4), 30))
        self.assertEqual(split_leave_one_person(ds, 2, seed=5), split_leave_one_person(ds, 2, seed=5))
        self.assertNotEqual(split_leave_one_person(ds, 2, seed=5), split_leave_one_person(ds, 2, seed=6))

    def test_fractions(self):
        ds = _corpus(np.full(70000, NO_PERSON))
        plan = split_fractions(ds, (0.4, 0.4, 0.2), seed=0)
        self.assertEqual(28000, len(plan.d1))
        self.assertEqual(28000, len(plan.d2))
        self.assertEqual(14000, len(plan.d3))
        self.assertEqual((25200, 2800), (len(plan.d1_train), len(plan.d1_test)))
        self.assertIsNone(plan.held_out_person)
        check_plan(plan, ds)

    def test_fraction_rounding(self):
        plan = split_fractions(_corpus(np.full(11, NO_PERSON)), (0.25, 0.25, 0.5), seed=0)
        # floor(2.75 + 0.5) = 3 for each of D1 and D2, D3 takes the rest.
        self.assertEqual((3, 3, 5), (len(plan.d1), len(plan.d2), len(plan.d3)))

    def test_invalid_fractions(self):
        ds = _corpus(np.full(100, NO_PERSON))
        with self.assertRaises(InvalidFractionError):
            split_fractions(ds, (0.5, 0.5, 0.5), seed=0)
        with self.assertRaises(InvalidFractionError):
            split_fractions(ds, (0.6, 0.4, 0.0), seed=0)
        with self.assertRaises(InsufficientDataError):
            split_fractions(_corpus(np.full(2, NO_PERSON)), (0.4, 0.4, 0.2), seed=0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1),
           st.integers(min_value=2, max_value=5),
           st.integers(min_value=40, max_value=1000))
    def test_leave_one_person_invariants(self, seed, person_count, size):
        persons = np.random.default_rng(seed).integers(0, person_count, size=size)
        persons[:person_count] = np.arange(person_count)
        ds = _corpus(persons)
        held_out = int(persons[seed % person_count])
        try:
            plan = split_leave_one_person(ds, held_out, seed)
        except InsufficientDataError:
            self.assertLess(int(np.sum(persons != held_out)), 20)
            return
        check_plan(plan, ds)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.integers(min_value=10, max_value=1000))
    def test_fraction_invariants(self, seed, size):
        ds = _corpus(np.full(size, NO_PERSON))
        check_plan(split_fractions(ds, (0.4, 0.4, 0.2), seed), ds)

    def test_plan_file_round_trip(self):
        ds = _corpus(np.repeat(np.arange(3), 15))
        plan = split_leave_one_person(ds, 1, seed=12)
        text = dumps_plan(plan)
        self.assertTrue(text.startswith("stackfuse-split v1\nseed 12\nheld_out_person 1\nd1_train 13 "))
        self.assertEqual(plan, loads_plan(text))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "split.txt"
            save_plan(plan, path)
            self.assertEqual(plan, load_plan(path))

    def test_plan_file_errors(self):
        text = dumps_plan(split_fractions(_corpus(np.full(30, NO_PERSON)), (0.4, 0.4, 0.2), seed=1))
        self.assertIn("held_out_person none\n", text)
        with self.assertRaises(FormatError):
            loads_plan(text.replace("d3 6", "d3 7"))
        with self.assertRaises(FormatError):
            loads_plan(text.replace("stackfuse-split v1", "something else"))


if __name__ == "__main__":
    unittest.main(argv=[""], verbosity=2, exit=False)
