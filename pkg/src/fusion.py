"""
File:       src/fusion.py
Author:     Stackfuse developers
Brief:      The two-stage classifier: net 1 on the descriptor, net 2 on the descriptor plus net 1's class scores.

Details:    Net 1 is trained on D1.train and its checkpoint is picked by MSE on D1.test. Every D2 sample is then
            fed through that checkpoint and its C output activations are appended to its descriptor (length n + C).
            Net 2 is trained on the augmented D2.train and picked by MSE on the augmented D2.test.
            D3 is never touched while training.

            With `stage2_input = "scores"` net 2 sees net 1's C scores alone instead of the extended descriptor.

            A model is saved as a directory: two net files, two training histories and a manifest.
"""
# Standard library imports
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

# Third party library imports
import numpy as np
import pandas as pd

# Local modules imports
from src.config import DEFAULT_PRESET, DEFAULT_STEEPNESS, FLOAT_FORMAT, HIDDEN_PRESETS, MODEL_FORMAT_TAG, NEWLINE
from src.config import MODEL_MANIFEST_FILE, NET1_FILE, NET1_HISTORY_FILE, NET2_FILE, NET2_HISTORY_FILE
from src.config import STAGE2_AUGMENTED, STAGE2_INPUTS, STAGE2_SCORES
from src.data import Dataset, Sample
from src.errors import ConfigError, DimensionError, EmptySetError, FormatError
from src.mlp import Mlp, SymmetricSigmoid, forward, init_weights, load_mlp, save_mlp
from src.rprop import RpropConfig, TrainedModel, train
from src.splits import SplitPlan
from src.type_aliases import Matrix, Prediction, Vector
from src.utils import log, time_it


@dataclass(frozen=True)
class FusionConfig:
    hidden1: int = HIDDEN_PRESETS[DEFAULT_PRESET][0]
    hidden2: int = HIDDEN_PRESETS[DEFAULT_PRESET][1]
    rprop: RpropConfig = field(default_factory=RpropConfig)
    seed: int = 0
    steepness: float = DEFAULT_STEEPNESS
    stage2_input: str = STAGE2_AUGMENTED

    def __post_init__(self) -> None:
        if self.hidden1 < 1 or self.hidden2 < 1:
            raise ConfigError(f"hidden sizes must be >= 1, got {self.hidden1}/{self.hidden2}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")
        if not self.steepness > 0:
            raise ConfigError(f"net.steepness must be > 0, got {self.steepness}")
        if self.stage2_input not in STAGE2_INPUTS:
            raise ConfigError(f"net.stage2_input must be one of {', '.join(STAGE2_INPUTS)}, got '{self.stage2_input}'")

    @classmethod
    def preset(cls, name: str, **overrides) -> "FusionConfig":
        """"large" is 40/40 hidden neurons, "small" is 25/20"""
        try:
            hidden1, hidden2 = HIDDEN_PRESETS[name]
        except KeyError:
            raise ConfigError(f"unknown net preset '{name}'; known: {', '.join(HIDDEN_PRESETS)}") from None
        return cls(**{"hidden1": hidden1, "hidden2": hidden2, **overrides})

    def stage_seeds(self) -> Tuple[int, int]:
        return self.seed, self.seed + 1


@dataclass(frozen=True)
class FusionModel:
    net1: TrainedModel
    net2: TrainedModel
    descriptor_len: int
    num_classes: int
    stage2_input: str = STAGE2_AUGMENTED

    def __post_init__(self) -> None:
        n, c = self.descriptor_len, self.num_classes
        if self.stage2_input not in STAGE2_INPUTS:
            raise FormatError(f"unknown stage 2 input '{self.stage2_input}'")
        if (self.net1.net.input_size, self.net1.net.output_size) != (n, c):
            raise DimensionError(f"net 1 must map {n} inputs to {c} outputs")
        m = stage2_input_size(n, c, self.stage2_input)
        if (self.net2.net.input_size, self.net2.net.output_size) != (m, c):
            raise DimensionError(f"net 2 must map {m} inputs to {c} outputs")


def stage2_input_size(descriptor_len: int, num_classes: int, stage2_input: str = STAGE2_AUGMENTED) -> int:
    return num_classes if stage2_input == STAGE2_SCORES else descriptor_len + num_classes


def augment(net1: Mlp, sample) -> Vector:
    """ [descriptor || net 1 output activations], length n + C.

        Accepts a `Sample` or a bare feature vector. The descriptor part is copied bit for bit.
    """
    features = sample.features if isinstance(sample, Sample) else sample
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1 or features.shape[0] != net1.input_size:
        raise DimensionError(f"descriptor of shape {features.shape} doesn't fit net 1 ({net1.input_size} inputs)")
    return np.concatenate([features, forward(net1, features)])


def augment_batch(net1: Mlp, features: Matrix) -> Matrix:
    """Row-wise `augment` for a whole matrix of descriptors"""
    features = np.asarray(features, dtype=np.float64)
    return np.hstack([features, forward(net1, features)])


def stage2_inputs(net1: Mlp, features: Matrix, stage2_input: str = STAGE2_AUGMENTED) -> Matrix:
    """Net 2's input rows: `augment_batch`, or net 1's scores alone"""
    if stage2_input == STAGE2_SCORES:
        return forward(net1, np.asarray(features, dtype=np.float64))
    return augment_batch(net1, features)


def _stage_net(input_size: int, hidden_size: int, num_classes: int, config: FusionConfig, seed: int) -> Mlp:
    activation = SymmetricSigmoid(config.steepness)
    return init_weights(input_size, hidden_size, num_classes, (activation, activation), seed)


def _require_nonempty(plan: SplitPlan) -> None:
    for name, indices in plan.sets():
        if len(indices) == 0:
            raise EmptySetError(f"split set {name} is empty")


@time_it
def train_two_stage(plan: SplitPlan, ds: Dataset, config: FusionConfig) -> FusionModel:
    _require_nonempty(plan)
    n, c = ds.feature_len, ds.num_classes
    seed1, seed2 = config.stage_seeds()

    net1 = _stage_net(n, config.hidden1, c, config, seed1)
    stage1 = train(net1, ds.batch(plan.d1_train), ds.batch(plan.d1_test), config.rprop.with_seed(seed1))
    log(f"net 1: best epoch {stage1.best_epoch}, monitor MSE {stage1.best_monitor_mse:.6f}")

    d2_train_inputs, d2_train_targets = ds.batch(plan.d2_train)
    d2_test_inputs, d2_test_targets = ds.batch(plan.d2_test)
    d2_train = (stage2_inputs(stage1.net, d2_train_inputs, config.stage2_input), d2_train_targets)
    d2_test = (stage2_inputs(stage1.net, d2_test_inputs, config.stage2_input), d2_test_targets)

    net2 = _stage_net(stage2_input_size(n, c, config.stage2_input), config.hidden2, c, config, seed2)
    stage2 = train(net2, d2_train, d2_test, config.rprop.with_seed(seed2))
    log(f"net 2: best epoch {stage2.best_epoch}, monitor MSE {stage2.best_monitor_mse:.6f}")

    return FusionModel(stage1, stage2, n, c, config.stage2_input)


def _argmax(scores: np.ndarray) -> np.ndarray:
    """numpy's argmax returns the first maximum, so ties go to the lowest class index"""
    return np.argmax(scores, axis=-1)


def _check_features(model: FusionModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != model.descriptor_len:
        raise DimensionError(f"descriptor of length {features.shape[-1]}, the model expects {model.descriptor_len}")
    return features


def predict_stage1(model: FusionModel, features: Vector) -> Prediction:
    scores = forward(model.net1.net, _check_features(model, features))
    return int(_argmax(scores)), scores


def predict_stage2(model: FusionModel, features: Vector) -> Prediction:
    features = _check_features(model, features)
    if model.stage2_input == STAGE2_SCORES:
        net2_input = forward(model.net1.net, features)
    else:
        net2_input = augment(model.net1.net, features)
    scores = forward(model.net2.net, net2_input)
    return int(_argmax(scores)), scores


def stage1_scores(model: FusionModel, features: Matrix) -> Matrix:
    return forward(model.net1.net, _check_features(model, features))


def stage2_scores(model: FusionModel, features: Matrix) -> Matrix:
    net2_input = stage2_inputs(model.net1.net, _check_features(model, features), model.stage2_input)
    return forward(model.net2.net, net2_input)


def predict_batch(model: FusionModel, features: Matrix) -> Tuple[np.ndarray, np.ndarray]:
    """Stage 1 and stage 2 class predictions for every row of `features`"""
    return _argmax(stage1_scores(model, features)), _argmax(stage2_scores(model, features))


def _history_frame(trained: TrainedModel) -> pd.DataFrame:
    return pd.DataFrame(list(trained.history), columns=["epoch", "train_mse", "monitor_mse"])


def save_model(model: FusionModel,
               directory: Path,
               config: Optional[FusionConfig] = None,
               split_plan_file: str = "") -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_mlp(model.net1.net, directory / NET1_FILE)
    save_mlp(model.net2.net, directory / NET2_FILE)
    for trained, name in ((model.net1, NET1_HISTORY_FILE), (model.net2, NET2_HISTORY_FILE)):
        _history_frame(trained).to_csv(directory / name, index=False, float_format=FLOAT_FORMAT,
                                       lineterminator=NEWLINE)

    entries: Dict[str, str] = {
        "format": MODEL_FORMAT_TAG,
        "descriptor_len": str(model.descriptor_len),
        "num_classes": str(model.num_classes),
        "hidden1": str(model.net1.net.hidden_size),
        "hidden2": str(model.net2.net.hidden_size),
        "steepness": FLOAT_FORMAT % model.net1.net.hidden_activation.steepness,
        "stage2_input": model.stage2_input,
        "net1.best_epoch": str(model.net1.best_epoch),
        "net1.best_monitor_mse": FLOAT_FORMAT % model.net1.best_monitor_mse,
        "net2.best_epoch": str(model.net2.best_epoch),
        "net2.best_monitor_mse": FLOAT_FORMAT % model.net2.best_monitor_mse,
    }
    if config is not None:
        seed1, seed2 = config.stage_seeds()
        entries.update({"seed": str(config.seed), "net1.seed": str(seed1), "net2.seed": str(seed2)})
    entries["split_plan"] = split_plan_file or "none"
    with open(directory / MODEL_MANIFEST_FILE, "wt", encoding="ascii", newline=NEWLINE) as handle:
        handle.writelines(f"{key} = {value}{NEWLINE}" for key, value in entries.items())


def read_manifest(path: Path) -> Dict[str, str]:
    """Parse a `key = value` manifest file"""
    entries: Dict[str, str] = {}
    with open(path, "rt", encoding="ascii", newline=NEWLINE) as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"{path}: line {line_no} is not 'key = value'")
            entries[key.strip()] = value.strip()
    return entries


def _load_history(path: Path) -> Tuple[Tuple[int, float, float], ...]:
    frame = pd.read_csv(path, dtype={"epoch": np.int64}, float_precision="round_trip")
    if list(frame.columns) != ["epoch", "train_mse", "monitor_mse"]:
        raise FormatError(f"{path}: unexpected history columns")
    return tuple((int(e), float(t), float(m)) for e, t, m in frame.itertuples(index=False))


def load_model(directory: Path) -> FusionModel:
    directory = Path(directory)
    manifest_path = directory / MODEL_MANIFEST_FILE
    if not manifest_path.is_file():
        raise FormatError(f"no model manifest in '{directory}'")
    manifest = read_manifest(manifest_path)
    if manifest.get("format") != MODEL_FORMAT_TAG:
        raise FormatError(f"'{manifest_path}' is not a '{MODEL_FORMAT_TAG}' manifest")
    try:
        stages = []
        for prefix, net_file, history_file in (("net1", NET1_FILE, NET1_HISTORY_FILE),
                                               ("net2", NET2_FILE, NET2_HISTORY_FILE)):
            stages.append(TrainedModel(load_mlp(directory / net_file),
                                       int(manifest[f"{prefix}.best_epoch"]),
                                       float(manifest[f"{prefix}.best_monitor_mse"]),
                                       _load_history(directory / history_file)))
        return FusionModel(stages[0], stages[1], int(manifest["descriptor_len"]), int(manifest["num_classes"]),
                           manifest.get("stage2_input", STAGE2_AUGMENTED))
    except KeyError as err:
        raise FormatError(f"'{manifest_path}' lacks key {err}") from None
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        if isinstance(err, FormatError):
            raise
        raise FormatError(f"corrupt model in '{directory}': {err}") from None
    except FileNotFoundError as err:
        raise FormatError(f"missing model file '{err.filename}'") from None
