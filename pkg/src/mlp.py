"""
File:       src/mlp.py
Author:     Stackfuse developers
Brief:      The three-layer perceptron: activations, forward pass, MSE, exact gradients and the text file format.

Details:    A net has an input, a hidden and an output layer. Input->hidden and hidden->output are fully connected
            and there are no other connections. Batches are row-major: one sample per row.

            File format, one net per file:
                stackfuse-mlp v1
                sizes <in> <hidden> <out>
                activation <kind> <steepness>       (hidden layer)
                activation <kind> <steepness>       (output layer)
                weights_ih <rows> <cols>
                <rows lines of cols floats>
                bias_h <len>
                <one line>
                weights_ho <rows> <cols>
                ...
                bias_o <len>
                ...
            Floats are written with 17 significant digits so that a load returns bit-identical weights.
"""
# Standard library imports
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, NamedTuple, Tuple

# Third party library imports
import numpy as np

# Local modules imports
from src.config import DEFAULT_STEEPNESS, FLOAT_FORMAT, MLP_FORMAT_TAG, NEWLINE
from src.errors import DimensionError, EmptySetError, FormatError, InvalidDimensionError
from src.type_aliases import Batch, Matrix, Vector

# Largest float64 strictly below 1; keeps saturated symmetric sigmoid outputs inside (-1, 1).
_OPEN_BOUND = np.nextafter(1.0, 0.0)


class ActivationKind(ABC):
    """Abstract Base Class for activation functions"""

    name: str = ""

    @property
    @abstractmethod
    def steepness(self) -> float:
        pass

    @abstractmethod
    def apply(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def derivative(self, y: np.ndarray) -> np.ndarray:
        """Derivative expressed through the activation's output `y`"""
        pass


@dataclass(frozen=True)
class SymmetricSigmoid(ActivationKind):
    """ 2 / (1 + exp(-2*s*x)) - 1, which equals tanh(s*x).

        Outputs are clipped to the open interval (-1, 1) because float64 tanh rounds to exactly +-1
        once |s*x| exceeds about 19.
    """
    s: float = DEFAULT_STEEPNESS
    name = "symmetric_sigmoid"

    def __post_init__(self) -> None:
        if not (np.isfinite(self.s) and self.s > 0):
            raise ValueError(f"steepness must be a positive real, got {self.s}")

    @property
    def steepness(self) -> float:
        return self.s

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.tanh(self.s * x), -_OPEN_BOUND, _OPEN_BOUND)

    def derivative(self, y: np.ndarray) -> np.ndarray:
        return self.s * (1.0 - y * y)


@dataclass(frozen=True)
class Linear(ActivationKind):
    """Identity, meant for unit tests"""
    name = "linear"

    @property
    def steepness(self) -> float:
        return 1.0

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x

    def derivative(self, y: np.ndarray) -> np.ndarray:
        return np.ones_like(y)


def activation_from_name(name: str, steepness: float) -> ActivationKind:
    if name == SymmetricSigmoid.name:
        return SymmetricSigmoid(steepness)
    if name == Linear.name:
        return Linear()
    raise ValueError(f"unknown activation kind '{name}'")


class MlpGradient(NamedTuple):
    """Gradient (or weight update) structure mirroring the parameters of an `Mlp`"""
    weights_ih: Matrix
    bias_h: Vector
    weights_ho: Matrix
    bias_o: Vector


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Mlp:
    """ A three-layer fully connected network. Immutable: weights are read-only arrays.

        weights_ih is (hidden_size x input_size), weights_ho is (output_size x hidden_size).
    """
    weights_ih: Matrix
    bias_h: Vector
    weights_ho: Matrix
    bias_o: Vector
    hidden_activation: ActivationKind
    output_activation: ActivationKind

    def __post_init__(self) -> None:
        for field in MlpGradient._fields:
            object.__setattr__(self, field, _frozen(getattr(self, field)))
        hidden, inputs = self.weights_ih.shape if self.weights_ih.ndim == 2 else (0, 0)
        if self.weights_ih.ndim != 2 or self.weights_ho.ndim != 2 \
                or self.weights_ho.shape[1] != hidden \
                or self.bias_h.shape != (hidden,) \
                or self.bias_o.shape != (self.weights_ho.shape[0],):
            raise DimensionError("inconsistent weight and bias shapes")
        if min(inputs, hidden, self.weights_ho.shape[0]) < 1:
            raise InvalidDimensionError("every layer needs at least one unit")
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise ValueError("weights and biases must be finite")

    @property
    def input_size(self) -> int:
        return self.weights_ih.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.weights_ih.shape[0]

    @property
    def output_size(self) -> int:
        return self.weights_ho.shape[0]

    def parameters(self) -> MlpGradient:
        return MlpGradient(self.weights_ih, self.bias_h, self.weights_ho, self.bias_o)

    def apply_delta(self, delta: MlpGradient) -> "Mlp":
        """Return a new net whose parameters are this net's plus `delta`"""
        updated = [p + d for p, d in zip(self.parameters(), delta)]
        return Mlp(*updated, self.hidden_activation, self.output_activation)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mlp):
            return NotImplemented
        return self.hidden_activation == other.hidden_activation \
            and self.output_activation == other.output_activation \
            and all(a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.parameters(), other.parameters()))

    __hash__ = None


def init_weights(input_size: int,
                 hidden_size: int,
                 output_size: int,
                 activations: Tuple[ActivationKind, ActivationKind],
                 seed: int) -> Mlp:
    """ Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer, biases zero.

        The generator is seeded, so the same (sizes, seed) always give a bit-identical net.
    """
    if min(input_size, hidden_size, output_size) < 1:
        raise InvalidDimensionError(
            f"layer sizes must be >= 1, got {input_size}-{hidden_size}-{output_size}")
    rng = np.random.default_rng(seed)
    bound_ih = 1.0 / np.sqrt(input_size)
    bound_ho = 1.0 / np.sqrt(hidden_size)
    weights_ih = rng.uniform(-bound_ih, bound_ih, size=(hidden_size, input_size))
    weights_ho = rng.uniform(-bound_ho, bound_ho, size=(output_size, hidden_size))
    hidden_activation, output_activation = activations
    return Mlp(weights_ih, np.zeros(hidden_size), weights_ho, np.zeros(output_size),
               hidden_activation, output_activation)


def _forward_layers(net: Mlp, inputs: Matrix) -> Tuple[Matrix, Matrix]:
    hidden = net.hidden_activation.apply(inputs @ net.weights_ih.T + net.bias_h)
    outputs = net.output_activation.apply(hidden @ net.weights_ho.T + net.bias_o)
    return hidden, outputs


def forward(net: Mlp, inputs: np.ndarray) -> np.ndarray:
    """ Output activations for one input vector, or for each row of an input matrix.

        Pure function of (net, inputs).
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim not in (1, 2) or inputs.shape[-1] != net.input_size:
        raise DimensionError(f"input of shape {inputs.shape} doesn't fit a net with {net.input_size} inputs")
    _, outputs = _forward_layers(net, inputs)
    return outputs


def _check_batch(net: Mlp, batch: Batch) -> Batch:
    inputs, targets = (np.asarray(a, dtype=np.float64) for a in batch)
    if inputs.ndim != 2 or targets.ndim != 2 or len(inputs) != len(targets):
        raise DimensionError("a batch is a pair of row-aligned matrices")
    if len(inputs) == 0:
        raise EmptySetError("the sample set is empty")
    if inputs.shape[1] != net.input_size or targets.shape[1] != net.output_size:
        raise DimensionError(
            f"batch of {inputs.shape[1]} inputs / {targets.shape[1]} targets doesn't fit a "
            f"{net.input_size}-{net.hidden_size}-{net.output_size} net")
    return inputs, targets


def mse(net: Mlp, samples: Batch) -> float:
    """Mean over all samples and output components of (output - target)**2"""
    inputs, targets = _check_batch(net, samples)
    _, outputs = _forward_layers(net, inputs)
    return float(np.mean((outputs - targets) ** 2))


def mse_and_gradient(net: Mlp, batch: Batch) -> Tuple[float, MlpGradient]:
    """Batch MSE together with its exact partial derivatives w.r.t. every weight and bias"""
    inputs, targets = _check_batch(net, batch)
    hidden, outputs = _forward_layers(net, inputs)
    error = outputs - targets

    delta_o = (2.0 / error.size) * error * net.output_activation.derivative(outputs)
    delta_h = (delta_o @ net.weights_ho) * net.hidden_activation.derivative(hidden)

    gradient_ = MlpGradient(
        weights_ih=delta_h.T @ inputs,
        bias_h=delta_h.sum(axis=0),
        weights_ho=delta_o.T @ hidden,
        bias_o=delta_o.sum(axis=0),
    )
    return float(np.mean(error ** 2)), gradient_


def gradient(net: Mlp, batch: Batch) -> MlpGradient:
    """Exact partial derivatives of the batch MSE with respect to every weight and bias"""
    return mse_and_gradient(net, batch)[1]


def _format_row(values: np.ndarray) -> str:
    return " ".join(FLOAT_FORMAT % v for v in values)


def dumps_mlp(net: Mlp) -> str:
    lines: List[str] = [
        MLP_FORMAT_TAG,
        f"sizes {net.input_size} {net.hidden_size} {net.output_size}",
    ]
    for activation in (net.hidden_activation, net.output_activation):
        lines.append(f"activation {activation.name} {FLOAT_FORMAT % activation.steepness}")
    for name, param in zip(MlpGradient._fields, net.parameters()):
        if param.ndim == 2:
            lines.append(f"{name} {param.shape[0]} {param.shape[1]}")
            lines.extend(_format_row(row) for row in param)
        else:
            lines.append(f"{name} {param.shape[0]}")
            lines.append(_format_row(param))
    return NEWLINE.join(lines) + NEWLINE


def save_mlp(net: Mlp, path: Path) -> None:
    with open(path, "wt", encoding="ascii", newline=NEWLINE) as handle:
        handle.write(dumps_mlp(net))


def _next_line(lines: Iterator[str], what: str) -> List[str]:
    try:
        return next(lines).split()
    except StopIteration:
        raise FormatError(f"net file ends before {what}") from None


def _read_floats(tokens: List[str], count: int, what: str) -> np.ndarray:
    if len(tokens) != count:
        raise FormatError(f"{what}: expected {count} values, found {len(tokens)}")
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError:
        raise FormatError(f"{what}: non-numeric value") from None


def loads_mlp(text: str) -> Mlp:
    lines = iter(line for line in text.splitlines() if line.strip())
    if " ".join(_next_line(lines, "the header")) != MLP_FORMAT_TAG:
        raise FormatError(f"not a '{MLP_FORMAT_TAG}' file")
    sizes = _next_line(lines, "sizes")
    if len(sizes) != 4 or sizes[0] != "sizes":
        raise FormatError("malformed sizes line")
    activations = []
    for _ in range(2):
        tokens = _next_line(lines, "activation")
        if len(tokens) != 3 or tokens[0] != "activation":
            raise FormatError("malformed activation line")
        try:
            activations.append(activation_from_name(tokens[1], float(tokens[2])))
        except ValueError as err:
            raise FormatError(str(err)) from None
    params = []
    for name in MlpGradient._fields:
        header = _next_line(lines, name)
        if not header or header[0] != name:
            raise FormatError(f"expected block '{name}'")
        try:
            shape = tuple(int(t) for t in header[1:])
        except ValueError:
            raise FormatError(f"malformed '{name}' header") from None
        if len(shape) == 2:
            rows = [_read_floats(_next_line(lines, name), shape[1], name) for _ in range(shape[0])]
            params.append(np.array(rows).reshape(shape))
        elif len(shape) == 1:
            params.append(_read_floats(_next_line(lines, name), shape[0], name))
        else:
            raise FormatError(f"malformed '{name}' header")
    try:
        net = Mlp(*params, *activations)
    except ValueError as err:
        raise FormatError(str(err)) from None
    try:
        declared = tuple(int(s) for s in sizes[1:])
    except ValueError:
        raise FormatError("malformed sizes line") from None
    if declared != (net.input_size, net.hidden_size, net.output_size):
        raise FormatError("sizes line disagrees with the weight blocks")
    return net


def load_mlp(path: Path) -> Mlp:
    with open(path, "rt", encoding="ascii", newline=NEWLINE) as handle:
        return loads_mlp(handle.read())
