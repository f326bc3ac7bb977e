"""
File:       tests/test_acceptance.py
Author:     Stackfuse developers
Brief:      Long-running end-to-end experiments; skipped unless STACKFUSE_LONG_TESTS=1.
"""
# Standard library imports
import os
import sys
import tempfile
import unittest
from pathlib import Path

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from exp.exp_fusion_benefit import ROOT_SEEDS, fusion_helps, run_seed
from exp.exp_mnist_control import REDUCED, check_control, control_config, mnist_files_present
from src.experiment import cmd_mnist

LONG_TESTS = os.environ.get("STACKFUSE_LONG_TESTS") == "1"


@unittest.skipUnless(LONG_TESTS, "set STACKFUSE_LONG_TESTS=1 to run")
class TestAcceptance(unittest.TestCase):
    """Class for automated testing of the MNIST control and the fusion benefit on the hard preset"""

    @unittest.skipUnless(mnist_files_present(), "MNIST IDX files are not in input_data/mnist")
    def test_mnist_control_reduced(self):
        with tempfile.TemporaryDirectory() as tmp:
            runs = cmd_mnist(control_config(REDUCED, seed=1, output_dir=Path(tmp)))
        self.assertEqual(REDUCED.runs, len(runs))
        self.assertTrue(check_control(runs, REDUCED), runs.to_string())

    def test_fusion_benefit_on_hard_preset(self):
        outcomes = [run_seed(seed) for seed in ROOT_SEEDS]
        self.assertTrue(fusion_helps(outcomes), outcomes)


if __name__ == "__main__":
    unittest.main(argv=[""], verbosity=2, exit=False)
