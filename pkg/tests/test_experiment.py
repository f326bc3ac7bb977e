"""
File:       tests/test_experiment.py
Author:     Stackfuse developers
Brief:      Tests for configuration parsing and for the command-line subcommands end to end.
"""
# Standard library imports
import os
import sys
import tempfile
import unittest
from pathlib import Path
from typing import Dict

# Third party library imports
import pandas as pd
from click.testing import CliRunner

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.__main__ import cli
from src.config import MNIST_FRACTIONS, MNIST_RUNS, TEST_EXPERIMENT_CONFIG
from src.errors import ConfigError, InvalidFractionError
from src.experiment import LOPO_ALL, IdxSource, SynthSettings, make_plan, mnist_summary, parse_config
from src.synth import generate
from tools.make_idx import random_digits, write_idx

MINIMAL = "seed = 7\ndataset.source = synth\n"


def _manifest(path: Path) -> Dict[str, str]:
    entries = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition(" = ")
        entries[key] = value
    return entries


def _snapshot(directory: Path) -> Dict[str, bytes]:
    return {str(p.relative_to(directory)): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


class TestConfigParsing(unittest.TestCase):
    """Class for automated testing of the configuration file parser"""

    def _error(self, text: str, **overrides) -> str:
        with self.assertRaises(ConfigError) as context:
            parse_config(text, **overrides)
        return str(context.exception)

    def test_defaults(self):
        cfg = parse_config(MINIMAL)
        self.assertEqual(7, cfg.seed)
        self.assertIsInstance(cfg.source, SynthSettings)
        self.assertEqual(7, cfg.synth.seed)
        self.assertEqual(MNIST_FRACTIONS, cfg.split.fractions)
        self.assertEqual((40, 40), (cfg.fusion.hidden1, cfg.fusion.hidden2))
        self.assertEqual(300, cfg.fusion.rprop.max_epochs)
        self.assertEqual((1.2, 0.5, 0.1, 1e-6, 50.0),
                         (cfg.fusion.rprop.eta_plus, cfg.fusion.rprop.eta_minus, cfg.fusion.rprop.delta_init,
                          cfg.fusion.rprop.delta_min, cfg.fusion.rprop.delta_max))
        self.assertEqual(0.5, cfg.fusion.steepness)
        self.assertEqual(MNIST_RUNS, cfg.mnist_runs)
        self.assertEqual(15, cfg.mnist_runs)
        self.assertEqual(0, cfg.workers)

    def test_preset_and_overrides(self):
        cfg = parse_config(MINIMAL + "net.preset = small\nnet.hidden2 = 9\nrprop.max_epochs = 12\n")
        self.assertEqual((25, 9), (cfg.fusion.hidden1, cfg.fusion.hidden2))
        self.assertEqual(12, cfg.fusion.rprop.max_epochs)

    def test_workers_setting(self):
        self.assertEqual(1, parse_config(MINIMAL + "run.workers = 1\n").workers)
        self.assertEqual("0", parse_config(MINIMAL).echo()["run.workers"])

    def test_stage2_input_setting(self):
        self.assertEqual("augmented", parse_config(MINIMAL).fusion.stage2_input)
        cfg = parse_config(MINIMAL + "net.stage2_input = scores\n")
        self.assertEqual("scores", cfg.fusion.stage2_input)
        self.assertEqual("scores", cfg.echo()["net.stage2_input"])
        with self.assertRaises(ConfigError):
            parse_config(MINIMAL + "net.stage2_input = both\n")

    def test_seed_override(self):
        cfg = parse_config(MINIMAL, seed=99)
        self.assertEqual((99, 99, 99), (cfg.seed, cfg.fusion.seed, cfg.synth.seed))
        self.assertEqual(5, parse_config("dataset.source = synth\n", seed=5).seed)

    def test_missing_seed(self):
        self.assertTrue(self._error("dataset.source = synth\n").startswith("seed: required"))

    def test_errors_name_the_key(self):
        self.assertEqual("net.hiden1: unknown key (line 3)", self._error(MINIMAL + "net.hiden1 = 3\n"))
        self.assertEqual("seed: duplicate key (line 3)", self._error(MINIMAL + "seed = 8\n"))
        self.assertEqual("rprop.max_epochs: invalid value '-1' (line 3)",
                         self._error(MINIMAL + "rprop.max_epochs = -1\n"))
        self.assertEqual("split.mode: invalid value 'sideways' (line 3)",
                         self._error(MINIMAL + "split.mode = sideways\n"))
        self.assertEqual("line 3: expected 'key = value'", self._error(MINIMAL + "net.hidden1\n"))
        self.assertTrue(self._error("seed = 1\n").startswith("dataset.source: required"))
        self.assertTrue(self._error(MINIMAL + "split.mode = leave-one-person\n").startswith("split.person: required"))
        self.assertTrue(self._error("seed = 1\ndataset.source = csv\n").startswith("dataset.csv.features: required"))
        self.assertTrue(self._error(MINIMAL + "synth.confusable_pairs = 0:0:0.5\n").startswith("synth: "))

    def test_random_halves(self):
        cfg = parse_config(MINIMAL + "split.mode = random-halves\n")
        self.assertEqual((0.25, 0.25, 0.5), cfg.split.fractions)
        plan = make_plan(cfg, generate(SynthSettings(samples_per_class_per_person=2, seed=7).to_spec()))
        self.assertEqual((75, 75, 150), (len(plan.d1), len(plan.d2), len(plan.d3)))

    def test_invalid_fractions(self):
        with self.assertRaises(InvalidFractionError):
            parse_config(MINIMAL + "split.fractions = 0.5,0.5,0.5\n")

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# header\n\n  seed = 3  \n# another\ndataset.source = synth\n")
        self.assertEqual(3, cfg.seed)

    def test_dumped_config_parses_back(self):
        cfg = parse_config(TEST_EXPERIMENT_CONFIG.read_text(encoding="utf-8"))
        self.assertEqual("0:1:0.5", cfg.echo()["synth.confusable_pairs"])
        self.assertEqual("1", cfg.echo()["split.person"])
        self.assertEqual(cfg, parse_config(cfg.dumps()))

    def test_idx_source(self):
        cfg = parse_config("seed = 1\ndataset.source = idx\ndataset.idx.images = a.gz, b.gz\n"
                           "dataset.idx.labels = c.gz,d.gz\n")
        self.assertEqual(IdxSource((Path("a.gz"), Path("b.gz")), (Path("c.gz"), Path("d.gz"))), cfg.source)
        with self.assertRaises(ConfigError):
            parse_config("seed = 1\ndataset.source = idx\ndataset.idx.images = a.gz,b.gz\ndataset.idx.labels = c.gz\n")

    def test_lopo_all_has_no_single_plan(self):
        cfg = parse_config(MINIMAL + f"split.mode = {LOPO_ALL}\nsynth.samples_per_class_per_person = 2\n")
        with self.assertRaises(ConfigError):
            make_plan(cfg, generate(cfg.synth.to_spec()))

    def test_mnist_summary(self):
        runs = pd.DataFrame({"run": [0, 1], "seed": [5, 6], "stage1_error": [0.1, 0.3], "stage2_error": [0.2, 0.2]})
        summary = mnist_summary(runs)
        self.assertAlmostEqual(0.2, summary.loc["stage1_error", "mean"])
        self.assertAlmostEqual(0.01, summary.loc["stage1_error", "variance"])
        self.assertAlmostEqual(0.0, summary.loc["stage2_error", "variance"])


class TestCommandLine(unittest.TestCase):
    """Class for automated testing of the command-line subcommands"""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)
        self.out = self.dir / "out"
        self.runner = CliRunner()

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def _run(self, *args: str, config: Path = TEST_EXPERIMENT_CONFIG):
        return self.runner.invoke(cli, ["--quiet", "--config", str(config), "--out", str(self.out), *args])

    def test_split(self):
        result = self._run("split")
        self.assertEqual(0, result.exit_code, result.output)
        self.assertIn("d3 36\n", result.output)
        self.assertTrue((self.out / "split.txt").is_file())

    def test_train_then_eval(self):
        result = self._run("train")
        self.assertEqual(0, result.exit_code, result.output)
        lines = result.output.splitlines()
        self.assertEqual(2, len(lines))
        manifest = _manifest(self.out / "run_manifest.txt")
        self.assertEqual("train", manifest["command"])
        self.assertEqual("36", manifest["d3.size"])
        self.assertEqual(f"stage1_accuracy = {manifest['d3.stage1_accuracy']}", lines[0])
        self.assertEqual(f"stage2_accuracy = {manifest['d3.stage2_accuracy']}", lines[1])
        for name in ("net1.mlp", "net2.mlp", "net1_history.csv", "net2_history.csv", "manifest.txt", "split.txt"):
            self.assertTrue((self.out / "model" / name).is_file(), name)

        evaluated = self._run("eval")
        self.assertEqual(0, evaluated.exit_code, evaluated.output)
        self.assertEqual(lines, evaluated.output.splitlines()[:2])
        self.assertIn("stage 2 confusion matrix:", evaluated.output)

        everything = self._run("eval", str(self.out / "model"), "--all-samples")
        self.assertEqual(0, everything.exit_code, everything.output)

    def test_rerun_is_byte_identical(self):
        self.assertEqual(0, self._run("train").exit_code)
        first = _snapshot(self.out)
        self.assertEqual(0, self._run("train").exit_code)
        self.assertEqual(first, _snapshot(self.out))

    def test_seed_option_changes_the_run(self):
        self.assertEqual(0, self._run("train").exit_code)
        first = (self.out / "model" / "net1.mlp").read_bytes()
        result = self.runner.invoke(cli, ["--quiet", "--seed", "8", "--config", str(TEST_EXPERIMENT_CONFIG),
                                          "--out", str(self.out), "train"])
        self.assertEqual(0, result.exit_code, result.output)
        self.assertEqual("8", _manifest(self.out / "run_manifest.txt")["seed"])
        self.assertNotEqual(first, (self.out / "model" / "net1.mlp").read_bytes())

    def test_lopo(self):
        result = self._run("lopo")
        self.assertEqual(0, result.exit_code, result.output)
        self.assertEqual((self.out / "lopo_report.txt").read_text(encoding="ascii"), result.output)
        self.assertTrue(result.output.startswith("person   | "))
        persons = pd.read_csv(self.out / "lopo_persons.csv")
        self.assertEqual([0, 1, 2], list(persons["person"]))
        self.assertEqual(3, len(pd.read_csv(self.out / "lopo_classes.csv")))
        self.assertEqual("3", _manifest(self.out / "run_manifest.txt")["lopo.persons"])

    def test_synth(self):
        result = self._run("synth")
        self.assertEqual(0, result.exit_code, result.output)
        corpus = pd.read_csv(self.out / "synth.csv")
        self.assertEqual(108, len(corpus))
        self.assertEqual(["f0", "f1", "f2", "f3", "label", "person"], list(corpus.columns))

    def test_mnist(self):
        images, labels = random_digits(60, 4, 5, seed=2)
        write_idx(images, labels, self.dir / "images.gz", self.dir / "labels.gz")
        config = self.dir / "mnist.cfg"
        config.write_text(f"seed = 3\ndataset.source = idx\ndataset.idx.images = {self.dir / 'images.gz'}\n"
                          f"dataset.idx.labels = {self.dir / 'labels.gz'}\nnet.hidden1 = 3\nnet.hidden2 = 3\n"
                          f"rprop.max_epochs = 5\nrun.mnist_runs = 2\n", encoding="utf-8")
        result = self._run("mnist", config=config)
        self.assertEqual(0, result.exit_code, result.output)
        runs = pd.read_csv(self.out / "mnist_runs.csv")
        self.assertEqual(["run", "seed", "stage1_error", "stage2_error"], list(runs.columns))
        self.assertEqual([0, 1], list(runs["run"]))
        self.assertNotEqual(runs["seed"][0], runs["seed"][1])
        self.assertEqual("2", _manifest(self.out / "run_manifest.txt")["mnist.runs"])

    def test_config_error_exit_code(self):
        config = self.dir / "bad.cfg"
        config.write_text(MINIMAL + "net.hiden1 = 3\n", encoding="utf-8")
        result = self._run("train", config=config)
        self.assertEqual(2, result.exit_code)
        self.assertIn("net.hiden1", result.output)
        self.assertFalse((self.out / "model").exists())

    def test_missing_config_file(self):
        result = self._run("split", config=self.dir / "nowhere.cfg")
        self.assertEqual(2, result.exit_code)
        self.assertIn("--config", result.output)

    def test_data_error_exit_code(self):
        config = self.dir / "csv.cfg"
        config.write_text(f"seed = 1\ndataset.source = csv\ndataset.csv.path = {self.dir / 'missing.csv'}\n"
                          f"dataset.csv.features = 2\n", encoding="utf-8")
        self.assertEqual(3, self._run("split", config=config).exit_code)

    def test_bad_seed_option(self):
        result = self.runner.invoke(cli, ["--seed", "-3", "--config", str(TEST_EXPERIMENT_CONFIG), "split"])
        self.assertEqual(2, result.exit_code)


if __name__ == "__main__":
    unittest.main(argv=[""], verbosity=2, exit=False)
