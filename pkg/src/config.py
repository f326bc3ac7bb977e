"""
File:       src/config.py
Author:     Stackfuse developers
Brief:      Program configuration, defaults and constants.
"""
from pathlib import Path
from typing import Final, Tuple

DEBUG: Final[bool] = False

PROGRAM_NAME: Final[str] = "stackfuse"
VERSION: Final[str] = "1.0.0"

NEWLINE: Final[str] = "\n"
FLOAT_FORMAT: Final[str] = "%.17g"  # 17 significant digits round-trip a float64 exactly.

# Activation
DEFAULT_STEEPNESS: Final[float] = 0.5

# RPROP (iRPROP-) defaults
ETA_PLUS: Final[float] = 1.2
ETA_MINUS: Final[float] = 0.5
DELTA_INIT: Final[float] = 0.1
DELTA_MIN: Final[float] = 1e-6
DELTA_MAX: Final[float] = 50.0
MAX_EPOCHS: Final[int] = 300

# Hidden layer presets: "large" is 40/40, "small" is 25/20.
HIDDEN_PRESETS: Final = {
    "large": (40, 40),
    "small": (25, 20),
}
DEFAULT_PRESET: Final[str] = "large"

# What net 2 sees: the descriptor extended with net 1's scores, or those scores alone.
STAGE2_AUGMENTED: Final[str] = "augmented"
STAGE2_SCORES: Final[str] = "scores"
STAGE2_INPUTS: Final = (STAGE2_AUGMENTED, STAGE2_SCORES)

# Split protocol
MONITOR_DIVISOR: Final[int] = 10  # Di.test = round(|Di| / 10)
MIN_REMAINING_SAMPLES: Final[int] = 20
FRACTION_TOLERANCE: Final[float] = 1e-9
MNIST_FRACTIONS: Final[Tuple[float, float, float]] = (0.4, 0.4, 0.2)
RANDOM_HALVES_FRACTIONS: Final[Tuple[float, float, float]] = (0.25, 0.25, 0.5)
MNIST_RUNS: Final[int] = 15

# IDX format
IDX_IMAGES_MAGIC: Final[int] = 0x00000803
IDX_LABELS_MAGIC: Final[int] = 0x00000801
IDX_NUM_CLASSES: Final[int] = 10
PIXEL_SCALE: Final[float] = 255.0

# Synthetic "hard" preset
SYNTH_NUM_CLASSES: Final[int] = 10
SYNTH_FEATURE_LEN: Final[int] = 32
SYNTH_PERSONS: Final[int] = 15
SYNTH_SAMPLES_PER_CLASS_PER_PERSON: Final[int] = 200
SYNTH_WITHIN_CLASS_SIGMA: Final[float] = 1.0
SYNTH_PERSON_SHIFT_SIGMA: Final[float] = 0.5
SYNTH_CENTER_SCALE: Final[float] = 0.5
SYNTH_CONFUSABLE_PAIRS: Final = ((0, 1, 0.25), (2, 3, 0.25))

# Serialization tags
MLP_FORMAT_TAG: Final[str] = "stackfuse-mlp v1"
SPLIT_FORMAT_TAG: Final[str] = "stackfuse-split v1"
MODEL_FORMAT_TAG: Final[str] = "stackfuse-model v1"
RUN_FORMAT_TAG: Final[str] = "stackfuse-run v1"

# Report formatting
RATE_DECIMALS: Final[int] = 3
DELTA_DECIMALS: Final[int] = 1

# Exit codes
EXIT_OK: Final[int] = 0
EXIT_CONFIG_ERROR: Final[int] = 2
EXIT_DATA_ERROR: Final[int] = 3
EXIT_RUNTIME_ERROR: Final[int] = 4

# Files inside an output directory
MODEL_DIR_NAME: Final[str] = "model"
NET1_FILE: Final[str] = "net1.mlp"
NET2_FILE: Final[str] = "net2.mlp"
NET1_HISTORY_FILE: Final[str] = "net1_history.csv"
NET2_HISTORY_FILE: Final[str] = "net2_history.csv"
MODEL_MANIFEST_FILE: Final[str] = "manifest.txt"
SPLIT_PLAN_FILE: Final[str] = "split.txt"
RUN_MANIFEST_FILE: Final[str] = "run_manifest.txt"
LOPO_REPORT_TEXT: Final[str] = "lopo_report.txt"
LOPO_PERSONS_CSV: Final[str] = "lopo_persons.csv"
LOPO_CLASSES_CSV: Final[str] = "lopo_classes.csv"
MNIST_RUNS_CSV: Final[str] = "mnist_runs.csv"
SYNTH_CSV: Final[str] = "synth.csv"


# Data files
_INPUT_DATA_DIR = Path("input_data")
MNIST_DIR = Path(_INPUT_DATA_DIR / "mnist")
MNIST_TRAIN_IMAGES = Path(MNIST_DIR / "train-images-idx3-ubyte.gz")
MNIST_TRAIN_LABELS = Path(MNIST_DIR / "train-labels-idx1-ubyte.gz")
MNIST_TEST_IMAGES = Path(MNIST_DIR / "t10k-images-idx3-ubyte.gz")
MNIST_TEST_LABELS = Path(MNIST_DIR / "t10k-labels-idx1-ubyte.gz")

_OUTPUT_DATA_DIR = Path("output_data")
DEFAULT_OUTPUT_DIR = _OUTPUT_DATA_DIR


# Test files
_TEST_DATA_DIR = Path("tests/data")
TEST_LOPO_REPORT_GOLDEN = Path(_TEST_DATA_DIR / "lopo_report_golden.txt")
TEST_EXPERIMENT_CONFIG = Path(_TEST_DATA_DIR / "experiment.cfg")
