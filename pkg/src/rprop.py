"""
File:       src/rprop.py
Author:     Stackfuse developers
Brief:      iRPROP- weight updates and the MSE-monitored full-batch training loop.

Details:    Every weight has its own step size. When the sign of its gradient is the same as in the previous
            epoch the step grows by `eta_plus`, when it flips the step shrinks by `eta_minus`, the move is skipped
            for that epoch and the stored gradient is zeroed (the "i" and "-" of iRPROP-). The weight always
            moves by -sign(grad) * step otherwise.

            Training never stops early: it runs `max_epochs` epochs and keeps the checkpoint whose MSE on the
            monitor set is lowest (earliest epoch on ties).
"""
# Standard library imports
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Tuple

# Third party library imports
import numpy as np

# Local modules imports
from src.config import DELTA_INIT, DELTA_MAX, DELTA_MIN, ETA_MINUS, ETA_PLUS, MAX_EPOCHS
from src.errors import ConfigError, DimensionError, TrainingError
from src.mlp import Mlp, MlpGradient, mse, mse_and_gradient
from src.type_aliases import Batch, HistoryRow


@dataclass(frozen=True)
class RpropConfig:
    eta_plus: float = ETA_PLUS
    eta_minus: float = ETA_MINUS
    delta_init: float = DELTA_INIT
    delta_min: float = DELTA_MIN
    delta_max: float = DELTA_MAX
    max_epochs: int = MAX_EPOCHS
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.eta_plus > 1.0:
            raise ConfigError(f"rprop.eta_plus must be > 1, got {self.eta_plus}")
        if not 0.0 < self.eta_minus < 1.0:
            raise ConfigError(f"rprop.eta_minus must lie in (0, 1), got {self.eta_minus}")
        if not 0.0 < self.delta_min <= self.delta_init <= self.delta_max:
            raise ConfigError("rprop step bounds must satisfy 0 < delta_min <= delta_init <= delta_max")
        if self.max_epochs < 0:
            raise ConfigError(f"rprop.max_epochs must be >= 0, got {self.max_epochs}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")

    def with_seed(self, seed: int) -> "RpropConfig":
        return replace(self, seed=seed)


class RpropState(NamedTuple):
    """Per-weight step sizes and previous gradients, shaped like the net's parameters"""
    steps: MlpGradient
    prev_grads: MlpGradient


def init_state(net: Mlp, config: RpropConfig) -> RpropState:
    params = net.parameters()
    steps = MlpGradient(*(np.full(p.shape, config.delta_init) for p in params))
    prev_grads = MlpGradient(*(np.zeros(p.shape) for p in params))
    return RpropState(steps, prev_grads)


def rprop_step(state: RpropState, grad: MlpGradient, config: RpropConfig) -> Tuple[MlpGradient, RpropState]:
    """Return the weight change for this epoch and the updated state"""
    deltas, steps, prev_grads = [], [], []
    for step, prev, g in zip(state.steps, state.prev_grads, grad):
        if step.shape != g.shape or prev.shape != g.shape:
            raise DimensionError("rprop state doesn't mirror the gradient's shapes")
        product = np.sign(g) * np.sign(prev)
        step = np.where(product > 0, np.minimum(step * config.eta_plus, config.delta_max),
                        np.where(product < 0, np.maximum(step * config.eta_minus, config.delta_min), step))
        g = np.where(product < 0, 0.0, g)
        deltas.append(-np.sign(g) * step)
        steps.append(step)
        prev_grads.append(g)
    return MlpGradient(*deltas), RpropState(MlpGradient(*steps), MlpGradient(*prev_grads))


@dataclass(frozen=True)
class TrainedModel:
    """The best checkpoint of a training run and the per-epoch (epoch, train_mse, monitor_mse) history"""
    net: Mlp
    best_epoch: int
    best_monitor_mse: float
    history: Tuple[HistoryRow, ...]


def train(net: Mlp, train_set: Batch, monitor_set: Batch, config: RpropConfig) -> TrainedModel:
    """ Full-batch iRPROP- for `config.max_epochs` epochs.

        After every epoch the train and monitor MSE of the updated net are recorded. The returned net is the
        checkpoint with the lowest monitor MSE. With `max_epochs` = 0 the initial net is returned as best.
        Deterministic given (net, sets, config).
    """
    best_net = net
    best_epoch = 0
    best_monitor_mse = mse(net, monitor_set)
    history: List[HistoryRow] = []

    state = init_state(net, config)
    _, grad = mse_and_gradient(net, train_set)
    for epoch in range(1, config.max_epochs + 1):
        delta, state = rprop_step(state, grad, config)
        if not all(np.all(np.isfinite(d)) for d in delta):
            raise TrainingError(f"non-finite weight update at epoch {epoch}")
        net = net.apply_delta(delta)
        train_mse, grad = mse_and_gradient(net, train_set)
        monitor_mse = mse(net, monitor_set)
        if not (np.isfinite(train_mse) and np.isfinite(monitor_mse)):
            raise TrainingError(f"non-finite error at epoch {epoch}")
        history.append((epoch, train_mse, monitor_mse))
        if epoch == 1 or monitor_mse < best_monitor_mse:
            best_net, best_epoch, best_monitor_mse = net, epoch, monitor_mse

    return TrainedModel(best_net, best_epoch, best_monitor_mse, tuple(history))

