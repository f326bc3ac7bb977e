"""
File:       src/experiment.py
Author:     Stackfuse developers
Brief:      Experiment configuration files and the bodies of the command-line subcommands.

Details:    A configuration file is a flat list of `key = value` lines; `#` starts a comment line and blank lines
            are ignored. Keys carry a section prefix (dataset., synth., split., net., rprop., run.) except for
            the root `seed`, which is mandatory. Every default is resolved when the file is parsed and echoed into
            the run manifest, so a manifest alone reproduces its run.

            Example:
                seed = 7
                dataset.source = synth
                split.mode = leave-one-person
                split.person = 3
                net.preset = small
                rprop.max_epochs = 100
"""
# Standard library imports
import platform
from dataclasses import dataclass, field, replace
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

# Third party library imports
import dask
import numpy as np
import pandas as pd

# Local modules imports
from src.config import DEFAULT_OUTPUT_DIR, DEFAULT_PRESET, FLOAT_FORMAT, FRACTION_TOLERANCE, HIDDEN_PRESETS
from src.config import LOPO_CLASSES_CSV, LOPO_PERSONS_CSV, LOPO_REPORT_TEXT, MNIST_FRACTIONS, MNIST_RUNS, MNIST_RUNS_CSV
from src.config import MODEL_DIR_NAME, NEWLINE, PROGRAM_NAME, RANDOM_HALVES_FRACTIONS, RUN_FORMAT_TAG
from src.config import RUN_MANIFEST_FILE, SPLIT_PLAN_FILE, SYNTH_CENTER_SCALE, SYNTH_CONFUSABLE_PAIRS, SYNTH_CSV
from src.config import SYNTH_FEATURE_LEN, SYNTH_NUM_CLASSES, SYNTH_PERSON_SHIFT_SIGMA, SYNTH_PERSONS
from src.config import STAGE2_INPUTS, SYNTH_SAMPLES_PER_CLASS_PER_PERSON, SYNTH_WITHIN_CLASS_SIGMA, VERSION
from src.data import Dataset
from src.dataset_reader import CsvSchema, load_csv, load_idx_many, write_csv
from src.errors import ConfigError, DimensionError, InvalidFractionError
from src.evaluation import ConfusionMatrix, evaluate_stages, run_lopo, write_report_files
from src.fusion import FusionConfig, FusionModel, load_model, save_model, train_two_stage
from src.initialize import compute_in_order, resolve_workers
from src.rprop import RpropConfig
from src.splits import SplitPlan, load_plan, save_plan, split_fractions, split_leave_one_person
from src.synth import SynthSpec, generate
from src.type_aliases import ConfusablePair
from src.utils import derive_seed, log, time_it

SOURCES = ("csv", "idx", "synth")
LEAVE_ONE_PERSON = "leave-one-person"
LOPO_ALL = "lopo-all"
FRACTIONS = "fractions"
RANDOM_HALVES = "random-halves"
SPLIT_MODES = (LEAVE_ONE_PERSON, LOPO_ALL, FRACTIONS, RANDOM_HALVES)


# Value parsers. Each raises ValueError on bad input; the caller turns that into a ConfigError naming the key.

def _uint(value: str) -> int:
    number = int(value)
    if number < 0:
        raise ValueError
    return number


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise ValueError
    return number


def _bool(value: str) -> bool:
    lowered = value.lower()
    if lowered not in ("true", "false", "yes", "no", "1", "0"):
        raise ValueError
    return lowered in ("true", "yes", "1")


def _choice(*choices: str) -> Callable[[str], str]:
    def parse(value: str) -> str:
        if value not in choices:
            raise ValueError
        return value
    return parse


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    return lambda value: None if value.lower() == "none" else parse(value)


def _paths(value: str) -> Tuple[Path, ...]:
    paths = tuple(Path(item.strip()) for item in value.split(",") if item.strip())
    if not paths:
        raise ValueError
    return paths


def _fractions(value: str) -> Tuple[float, float, float]:
    parts = tuple(float(item) for item in value.split(","))
    if len(parts) != 3:
        raise ValueError
    return parts


def _pairs(value: str) -> Tuple[ConfusablePair, ...]:
    """`a:b:k` entries separated by commas, or `none`"""
    if value.lower() == "none":
        return ()
    pairs = []
    for item in value.split(","):
        a, b, k = item.strip().split(":")
        pairs.append((int(a), int(b), float(k)))
    return tuple(pairs)


_KEYS: Dict[str, Callable[[str], Any]] = {
    "seed": _uint,
    "dataset.source": _choice(*SOURCES),
    "dataset.csv.path": Path,
    "dataset.csv.features": _positive_int,
    "dataset.csv.label_column": _uint,
    "dataset.csv.person_column": _optional(_uint),
    "dataset.csv.num_classes": _optional(_positive_int),
    "dataset.csv.header": _bool,
    "dataset.idx.images": _paths,
    "dataset.idx.labels": _paths,
    "synth.num_classes": _positive_int,
    "synth.feature_len": _positive_int,
    "synth.persons": _positive_int,
    "synth.samples_per_class_per_person": _positive_int,
    "synth.within_class_sigma": float,
    "synth.person_shift_sigma": float,
    "synth.center_scale": float,
    "synth.confusable_pairs": _pairs,
    "synth.seed": _uint,
    "split.mode": _choice(*SPLIT_MODES),
    "split.person": _uint,
    "split.fractions": _fractions,
    "net.preset": _choice(*HIDDEN_PRESETS),
    "net.hidden1": _positive_int,
    "net.hidden2": _positive_int,
    "net.steepness": float,
    "net.stage2_input": _choice(*STAGE2_INPUTS),
    "rprop.eta_plus": float,
    "rprop.eta_minus": float,
    "rprop.delta_init": float,
    "rprop.delta_min": float,
    "rprop.delta_max": float,
    "rprop.max_epochs": _uint,
    "run.workers": _uint,
    "run.mnist_runs": _positive_int,
    "run.output_dir": Path,
}


@dataclass(frozen=True)
class CsvSource:
    path: Path
    schema: CsvSchema


@dataclass(frozen=True)
class IdxSource:
    images: Tuple[Path, ...]
    labels: Tuple[Path, ...]


@dataclass(frozen=True)
class SynthSettings:
    num_classes: int = SYNTH_NUM_CLASSES
    feature_len: int = SYNTH_FEATURE_LEN
    persons: int = SYNTH_PERSONS
    samples_per_class_per_person: int = SYNTH_SAMPLES_PER_CLASS_PER_PERSON
    within_class_sigma: float = SYNTH_WITHIN_CLASS_SIGMA
    person_shift_sigma: float = SYNTH_PERSON_SHIFT_SIGMA
    center_scale: float = SYNTH_CENTER_SCALE
    confusable_pairs: Tuple[ConfusablePair, ...] = SYNTH_CONFUSABLE_PAIRS
    seed: int = 0

    def to_spec(self) -> SynthSpec:
        return SynthSpec.with_random_centers(self.num_classes, self.feature_len, self.persons,
                                             self.samples_per_class_per_person, self.within_class_sigma,
                                             self.person_shift_sigma, self.center_scale,
                                             self.confusable_pairs, self.seed)


DatasetSource = Union[CsvSource, IdxSource, SynthSettings]


@dataclass(frozen=True)
class SplitSettings:
    mode: str = FRACTIONS
    person: Optional[int] = None
    fractions: Tuple[float, float, float] = MNIST_FRACTIONS


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment: one dataset source, one split mode, the fusion setup and run options"""
    source: DatasetSource
    synth: SynthSettings
    split: SplitSettings
    fusion: FusionConfig
    seed: int
    workers: int = 0
    mnist_runs: int = MNIST_RUNS
    output_dir: Path = field(default=DEFAULT_OUTPUT_DIR)

    def echo(self) -> Dict[str, str]:
        """Every setting as `key -> value`, in the file's own key syntax"""
        entries: Dict[str, str] = {"seed": str(self.seed)}
        source = self.source
        if isinstance(source, CsvSource):
            schema = source.schema
            entries.update({
                "dataset.source": "csv",
                "dataset.csv.path": str(source.path),
                "dataset.csv.features": str(schema.feature_count),
                "dataset.csv.label_column": str(schema.label_column),
                "dataset.csv.person_column": _echo_optional(schema.person_column),
                "dataset.csv.num_classes": _echo_optional(schema.num_classes),
                "dataset.csv.header": str(schema.has_header).lower(),
            })
        elif isinstance(source, IdxSource):
            entries.update({
                "dataset.source": "idx",
                "dataset.idx.images": ",".join(str(p) for p in source.images),
                "dataset.idx.labels": ",".join(str(p) for p in source.labels),
            })
        else:
            entries["dataset.source"] = "synth"
        synth = self.synth
        entries.update({
            "synth.num_classes": str(synth.num_classes),
            "synth.feature_len": str(synth.feature_len),
            "synth.persons": str(synth.persons),
            "synth.samples_per_class_per_person": str(synth.samples_per_class_per_person),
            "synth.within_class_sigma": repr(synth.within_class_sigma),
            "synth.person_shift_sigma": repr(synth.person_shift_sigma),
            "synth.center_scale": repr(synth.center_scale),
            "synth.confusable_pairs": ",".join(f"{a}:{b}:{k!r}" for a, b, k in synth.confusable_pairs) or "none",
            "synth.seed": str(synth.seed),
            "split.mode": self.split.mode,
        })
        if self.split.mode == LEAVE_ONE_PERSON:
            entries["split.person"] = str(self.split.person)
        if self.split.mode == FRACTIONS:
            entries["split.fractions"] = ",".join(repr(f) for f in self.split.fractions)
        rprop = self.fusion.rprop
        entries.update({
            "net.hidden1": str(self.fusion.hidden1),
            "net.hidden2": str(self.fusion.hidden2),
            "net.steepness": repr(self.fusion.steepness),
            "net.stage2_input": self.fusion.stage2_input,
            "rprop.eta_plus": repr(rprop.eta_plus),
            "rprop.eta_minus": repr(rprop.eta_minus),
            "rprop.delta_init": repr(rprop.delta_init),
            "rprop.delta_min": repr(rprop.delta_min),
            "rprop.delta_max": repr(rprop.delta_max),
            "rprop.max_epochs": str(rprop.max_epochs),
            "run.workers": str(self.workers),
            "run.mnist_runs": str(self.mnist_runs),
            "run.output_dir": str(self.output_dir),
        })
        return entries

    def dumps(self) -> str:
        return "".join(f"{key} = {value}{NEWLINE}" for key, value in self.echo().items())


def _echo_optional(value: Optional[int]) -> str:
    return "none" if value is None else str(value)


def _read_entries(text: str) -> Dict[str, Any]:
    entries: Dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {line_no}: expected 'key = value'")
        if key not in _KEYS:
            raise ConfigError(f"{key}: unknown key (line {line_no})")
        if key in entries:
            raise ConfigError(f"{key}: duplicate key (line {line_no})")
        try:
            entries[key] = _KEYS[key](value)
        except ValueError:
            raise ConfigError(f"{key}: invalid value '{value}' (line {line_no})") from None
    return entries


def _require(entries: Dict[str, Any], key: str, reason: str) -> Any:
    if key not in entries:
        raise ConfigError(f"{key}: required {reason}")
    return entries[key]


def _source(entries: Dict[str, Any], synth: SynthSettings) -> DatasetSource:
    kind = _require(entries, "dataset.source", "(one of csv, idx, synth)")
    if kind == "csv":
        reason = "when dataset.source = csv"
        feature_count = _require(entries, "dataset.csv.features", reason)
        schema = CsvSchema(feature_count,
                           entries.get("dataset.csv.label_column", feature_count),
                           entries.get("dataset.csv.person_column"),
                           entries.get("dataset.csv.num_classes"),
                           entries.get("dataset.csv.header", False))
        columns = {schema.label_column, schema.person_column} - {None}
        if any(c >= schema.column_count for c in columns) or schema.label_column == schema.person_column:
            raise ConfigError(f"dataset.csv.label_column: label and person columns must be distinct and lie "
                              f"within the {schema.column_count} columns")
        return CsvSource(_require(entries, "dataset.csv.path", reason), schema)
    if kind == "idx":
        reason = "when dataset.source = idx"
        images = _require(entries, "dataset.idx.images", reason)
        labels = _require(entries, "dataset.idx.labels", reason)
        if len(images) != len(labels):
            raise ConfigError("dataset.idx.labels: needs one labels file per images file")
        return IdxSource(images, labels)
    return synth


def _synth(entries: Dict[str, Any], seed: int) -> SynthSettings:
    overrides = {key[len("synth."):]: value for key, value in entries.items() if key.startswith("synth.")}
    overrides.setdefault("seed", seed)
    settings = SynthSettings(**overrides)
    try:
        settings.to_spec()
    except ConfigError as err:
        raise ConfigError(f"synth: {err}") from None
    return settings


def _split(entries: Dict[str, Any]) -> SplitSettings:
    mode = entries.get("split.mode", FRACTIONS)
    person = entries.get("split.person")
    if mode == LEAVE_ONE_PERSON and person is None:
        raise ConfigError("split.person: required when split.mode = leave-one-person")
    if mode == RANDOM_HALVES:
        return SplitSettings(mode, person, RANDOM_HALVES_FRACTIONS)
    fractions = entries.get("split.fractions", MNIST_FRACTIONS)
    if any(not f > 0 for f in fractions) or abs(sum(fractions) - 1.0) > FRACTION_TOLERANCE:
        raise InvalidFractionError(f"split.fractions: each must be > 0 and they must sum to 1, got {fractions}")
    return SplitSettings(mode, person, fractions)


def _fusion(entries: Dict[str, Any], seed: int) -> FusionConfig:
    rprop_overrides = {key[len("rprop."):]: value for key, value in entries.items() if key.startswith("rprop.")}
    rprop = RpropConfig(**rprop_overrides, seed=seed)
    hidden1, hidden2 = HIDDEN_PRESETS[entries.get("net.preset", DEFAULT_PRESET)]
    overrides = {"rprop": rprop, "seed": seed}
    if "net.steepness" in entries:
        overrides["steepness"] = entries["net.steepness"]
    if "net.stage2_input" in entries:
        overrides["stage2_input"] = entries["net.stage2_input"]
    return FusionConfig(entries.get("net.hidden1", hidden1), entries.get("net.hidden2", hidden2), **overrides)


def parse_config(text: str, seed: Optional[int] = None, output_dir: Optional[Path] = None) -> ExperimentConfig:
    """ Parse configuration text. `seed` and `output_dir`, when given, override the file.

        Raises ConfigError naming the offending key, or the line when no key can be read.
    """
    entries = _read_entries(text)
    if seed is None:
        seed = _require(entries, "seed", "(there is no implicit random seed)")
    elif seed < 0:
        raise ConfigError(f"seed: must be unsigned, got {seed}")
    synth = _synth(entries, seed)
    return ExperimentConfig(source=_source(entries, synth),
                            synth=synth,
                            split=_split(entries),
                            fusion=_fusion(entries, seed),
                            seed=seed,
                            workers=entries.get("run.workers", 0),
                            mnist_runs=entries.get("run.mnist_runs", MNIST_RUNS),
                            output_dir=Path(output_dir or entries.get("run.output_dir", DEFAULT_OUTPUT_DIR)))


def load_config(path: Path, seed: Optional[int] = None, output_dir: Optional[Path] = None) -> ExperimentConfig:
    with open(path, "rt", encoding="utf-8") as handle:
        return parse_config(handle.read(), seed, output_dir)


def load_dataset(source: DatasetSource) -> Dataset:
    if isinstance(source, CsvSource):
        return load_csv(source.path, source.schema)
    if isinstance(source, IdxSource):
        return load_idx_many(list(zip(source.images, source.labels)))
    return generate(source.to_spec())


def make_plan(cfg: ExperimentConfig, ds: Dataset) -> SplitPlan:
    split = cfg.split
    if split.mode == LEAVE_ONE_PERSON:
        return split_leave_one_person(ds, split.person, cfg.seed)
    if split.mode == LOPO_ALL:
        raise ConfigError("split.mode: 'lopo-all' yields one split per person; use the lopo command")
    return split_fractions(ds, split.fractions, cfg.seed)


def _versions() -> Dict[str, str]:
    versions = {"program": f"{PROGRAM_NAME} {VERSION}", "python": platform.python_version()}
    for package in ("numpy", "pandas", "dask", "click"):
        versions[package] = metadata.version(package)
    return versions


def write_run_manifest(cfg: ExperimentConfig, command: str, results: Dict[str, str]) -> Path:
    """ `key = value` lines: format tag, command, versions, the resolved config, then the results.

        Nothing time- or host-dependent is recorded, so re-running a command rewrites the same bytes.
    """
    entries = {"format": RUN_FORMAT_TAG, "command": command, **_versions(), **cfg.echo(), **results}
    path = cfg.output_dir / RUN_MANIFEST_FILE
    with open(path, "wt", encoding="utf-8", newline=NEWLINE) as handle:
        handle.writelines(f"{key} = {value}{NEWLINE}" for key, value in entries.items())
    return path


def _prepare_output(cfg: ExperimentConfig) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir


def _float(value: float) -> str:
    return FLOAT_FORMAT % value


def cmd_split(cfg: ExperimentConfig) -> SplitPlan:
    ds = load_dataset(cfg.source)
    plan = make_plan(cfg, ds)
    path = _prepare_output(cfg) / SPLIT_PLAN_FILE
    save_plan(plan, path)
    sizes = ", ".join(f"{name} {size}" for name, size in plan.sizes().items())
    log(f"split of '{ds.name}' ({len(ds)} samples): {sizes}")
    log(f"written to '{path}'")
    return plan


@time_it
def cmd_train(cfg: ExperimentConfig) -> Tuple[FusionModel, ConfusionMatrix, ConfusionMatrix]:
    """ Train both stages on the configured split and save model, split plan and run manifest.

        The recorded D3 accuracies come from `evaluate_stages`, the same path `cmd_eval` takes.
    """
    ds = load_dataset(cfg.source)
    plan = make_plan(cfg, ds)
    model = train_two_stage(plan, ds, cfg.fusion)
    model_dir = _prepare_output(cfg) / MODEL_DIR_NAME
    save_model(model, model_dir, cfg.fusion, SPLIT_PLAN_FILE)
    save_plan(plan, model_dir / SPLIT_PLAN_FILE)
    stage1, stage2 = evaluate_stages(model, ds, plan.d3)
    write_run_manifest(cfg, "train", {
        "d3.size": str(len(plan.d3)),
        "d3.stage1_accuracy": _float(stage1.accuracy),
        "d3.stage2_accuracy": _float(stage2.accuracy),
    })
    log(f"model written to '{model_dir}'")
    return model, stage1, stage2


def cmd_eval(cfg: ExperimentConfig,
             model_dir: Path,
             all_samples: bool = False) -> Tuple[ConfusionMatrix, ConfusionMatrix]:
    """ Evaluate a saved model on the configured dataset.

        By default only D3 of the split plan saved with the model is used; `all_samples` evaluates every sample.
    """
    model_dir = Path(model_dir)
    model = load_model(model_dir)
    ds = load_dataset(cfg.source)
    if (ds.feature_len, ds.num_classes) != (model.descriptor_len, model.num_classes):
        raise DimensionError(f"'{ds.name}' has {ds.feature_len} features and {ds.num_classes} classes, the model "
                             f"expects {model.descriptor_len} and {model.num_classes}")
    plan_path = model_dir / SPLIT_PLAN_FILE
    if all_samples or not plan_path.is_file():
        indices = np.arange(len(ds))
    else:
        indices = load_plan(plan_path).d3
    return evaluate_stages(model, ds, indices)


@time_it
def cmd_lopo(cfg: ExperimentConfig):
    ds = load_dataset(cfg.source)
    report = run_lopo(ds, cfg.fusion, cfg.workers)
    out = _prepare_output(cfg)
    write_report_files(report, out / LOPO_REPORT_TEXT, out / LOPO_PERSONS_CSV, out / LOPO_CLASSES_CSV)
    stage1_mean, stage2_mean = report.stage_means()
    write_run_manifest(cfg, "lopo", {
        "lopo.persons": str(len(report.persons)),
        "lopo.stage1_mean_accuracy": _float(stage1_mean),
        "lopo.stage2_mean_accuracy": _float(stage2_mean),
        "lopo.overall_delta": _float(report.overall_delta),
    })
    return report


def _mnist_run(ds: Dataset, run: int, seed: int, fractions, fusion: FusionConfig) -> Tuple[int, int, float, float]:
    plan = split_fractions(ds, fractions, seed)
    model = train_two_stage(plan, ds, replace(fusion, seed=seed))
    stage1, stage2 = evaluate_stages(model, ds, plan.d3)
    log(f"run {run}: stage 1 error {1.0 - stage1.accuracy:.4f}, stage 2 error {1.0 - stage2.accuracy:.4f}")
    return run, seed, 1.0 - stage1.accuracy, 1.0 - stage2.accuracy


def mnist_summary(runs: pd.DataFrame) -> pd.DataFrame:
    """Mean and population variance of the per-run errors of both stages"""
    errors = runs[["stage1_error", "stage2_error"]]
    return pd.DataFrame({"mean": errors.mean(), "variance": errors.var(ddof=0)})


@time_it
def cmd_mnist(cfg: ExperimentConfig) -> pd.DataFrame:
    """ Repeat the fraction protocol `run.mnist_runs` times with seeds derived from the root seed.

        `split.mode = fractions` supplies the fractions; any other mode uses 0.4, 0.4, 0.2.
    """
    ds = load_dataset(cfg.source)
    fractions = cfg.split.fractions if cfg.split.mode == FRACTIONS else MNIST_FRACTIONS
    tasks = [dask.delayed(_mnist_run)(ds, run, derive_seed(cfg.seed, run), fractions, cfg.fusion)
             for run in range(cfg.mnist_runs)]
    rows = compute_in_order(tasks, resolve_workers(cfg.workers, len(tasks)))
    runs = pd.DataFrame(rows, columns=["run", "seed", "stage1_error", "stage2_error"])
    out = _prepare_output(cfg)
    runs.to_csv(out / MNIST_RUNS_CSV, index=False, float_format=FLOAT_FORMAT, lineterminator=NEWLINE)
    summary = mnist_summary(runs)
    write_run_manifest(cfg, "mnist", {
        "mnist.runs": str(len(runs)),
        "mnist.fractions": ",".join(repr(f) for f in fractions),
        "mnist.stage1_mean_error": _float(summary.loc["stage1_error", "mean"]),
        "mnist.stage1_error_variance": _float(summary.loc["stage1_error", "variance"]),
        "mnist.stage2_mean_error": _float(summary.loc["stage2_error", "mean"]),
        "mnist.stage2_error_variance": _float(summary.loc["stage2_error", "variance"]),
    })
    return runs


def cmd_synth(cfg: ExperimentConfig) -> Path:
    """Write the corpus described by the synth.* keys as CSV"""
    ds = generate(cfg.synth.to_spec())
    path = _prepare_output(cfg) / SYNTH_CSV
    write_csv(ds, path)
    log(f"{len(ds)} samples of {ds.num_classes} classes and {len(ds.person_ids())} persons written to '{path}'")
    return path


def render_confusion(cm: ConfusionMatrix) -> str:
    return cm.to_frame().to_string()


def describe_runs(runs: pd.DataFrame) -> List[str]:
    lines = [runs.to_string(index=False, float_format=lambda v: f"{v:.4f}")]
    summary = mnist_summary(runs)
    for stage in ("stage1_error", "stage2_error"):
        lines.append(f"{stage}: mean {summary.loc[stage, 'mean']:.4f}, variance {summary.loc[stage, 'variance']:.6f}")
    return lines
