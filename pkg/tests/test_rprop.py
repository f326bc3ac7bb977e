"""
File:       tests/test_rprop.py
Author:     Stackfuse developers
Brief:      Unit tests for iRPROP- step rules and the training loop.
"""
# Standard library imports
import os
import sys
import unittest

# Third party library imports
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

# Local modules imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), r".."))
from src.errors import ConfigError, EmptySetError
from src.mlp import MlpGradient, SymmetricSigmoid, forward, init_weights, mse
from src.rprop import RpropConfig, RpropState, rprop_step, train

CONFIG = RpropConfig()


def _scalar_state(step: float, prev: float) -> RpropState:
    """A state for a net with one parameter per block, all sharing the same values"""
    steps = MlpGradient(*(np.full(shape, step) for shape in ((1, 1), (1,), (1, 1), (1,))))
    prev_grads = MlpGradient(*(np.full(shape, prev) for shape in ((1, 1), (1,), (1, 1), (1,))))
    return RpropState(steps, prev_grads)


def _scalar_grad(value: float) -> MlpGradient:
    return MlpGradient(*(np.full(shape, value) for shape in ((1, 1), (1,), (1, 1), (1,))))


def _blobs(seed: int):
    """Two well separated Gaussian blobs in 2-D, 25 points each, one-against-all targets"""
    rng = np.random.default_rng(seed)
    inputs = np.vstack([rng.normal(-3.0, 0.5, size=(25, 2)), rng.normal(3.0, 0.5, size=(25, 2))])
    labels = np.repeat([0, 1], 25)
    order = rng.permutation(50)
    inputs, labels = inputs[order], labels[order]
    targets = np.where(np.arange(2) == labels[:, None], 1.0, -1.0)
    return inputs, targets, labels


class TestRprop(unittest.TestCase):
    """Class for automated testing of the iRPROP- update rule and training loop"""

    def test_first_epoch_moves_by_initial_step(self):
        delta, state = rprop_step(_scalar_state(0.1, 0.0), _scalar_grad(2.3), CONFIG)
        for part in delta:
            self.assertAlmostEqual(-0.1, float(part.flat[0]))
        for part in state.steps:
            self.assertAlmostEqual(0.1, float(part.flat[0]))

    def test_same_sign_grows_step(self):
        state = _scalar_state(0.1, 0.0)
        _, state = rprop_step(state, _scalar_grad(1.0), CONFIG)
        delta, state = rprop_step(state, _scalar_grad(0.5), CONFIG)
        self.assertAlmostEqual(0.12, float(state.steps.weights_ih[0, 0]))
        self.assertAlmostEqual(-0.12, float(delta.weights_ih[0, 0]))

    def test_sign_change_shrinks_step_and_skips_move(self):
        state = _scalar_state(0.1, 0.0)
        _, state = rprop_step(state, _scalar_grad(1.0), CONFIG)
        delta, state = rprop_step(state, _scalar_grad(-1.0), CONFIG)
        self.assertAlmostEqual(0.05, float(state.steps.bias_o[0]))
        self.assertEqual(0.0, float(delta.bias_o[0]))
        self.assertEqual(0.0, float(state.prev_grads.bias_o[0]))
        # The stored zero gradient makes the next epoch take the unchanged-step branch.
        delta, state = rprop_step(state, _scalar_grad(-3.0), CONFIG)
        self.assertAlmostEqual(0.05, float(state.steps.bias_o[0]))
        self.assertAlmostEqual(0.05, float(delta.bias_o[0]))

    def test_hand_computed_trace(self):
        signs = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0]
        expected_steps = [0.1, 0.12, 0.144, 0.072, 0.072, 0.0864, 0.0432]
        expected_deltas = [-0.1, -0.12, -0.144, 0.0, 0.072, 0.0864, 0.0]
        state = _scalar_state(CONFIG.delta_init, 0.0)
        for sign, step, move in zip(signs, expected_steps, expected_deltas):
            delta, state = rprop_step(state, _scalar_grad(sign), CONFIG)
            self.assertAlmostEqual(step, float(state.steps.weights_ho[0, 0]))
            self.assertAlmostEqual(move, float(delta.weights_ho[0, 0]))

    def test_step_capped_at_delta_max(self):
        delta, state = rprop_step(_scalar_state(50.0, 1.0), _scalar_grad(1.0), CONFIG)
        self.assertEqual(50.0, float(state.steps.weights_ih[0, 0]))
        self.assertEqual(-50.0, float(delta.weights_ih[0, 0]))

    def test_step_floored_at_delta_min(self):
        _, state = rprop_step(_scalar_state(1e-6, 1.0), _scalar_grad(-1.0), CONFIG)
        self.assertEqual(1e-6, float(state.steps.bias_h[0]))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(min_value=-10.0, max_value=10.0), min_size=1, max_size=40))
    def test_steps_stay_within_bounds(self, gradients):
        config = RpropConfig(delta_init=0.1, delta_min=0.01, delta_max=0.5)
        state = _scalar_state(config.delta_init, 0.0)
        for value in gradients:
            _, state = rprop_step(state, _scalar_grad(value), config)
            for part in state.steps:
                self.assertTrue(config.delta_min <= float(part.flat[0]) <= config.delta_max)

    def test_config_validation(self):
        with self.assertRaises(ConfigError):
            RpropConfig(eta_plus=1.0)
        with self.assertRaises(ConfigError):
            RpropConfig(eta_minus=1.0)
        with self.assertRaises(ConfigError):
            RpropConfig(delta_init=100.0)
        with self.assertRaises(ConfigError):
            RpropConfig(delta_min=0.0)

    def test_zero_epochs_returns_initial_net(self):
        inputs, targets, _ = _blobs(0)
        net = init_weights(2, 3, 2, (SymmetricSigmoid(), SymmetricSigmoid()), seed=1)
        trained = train(net, (inputs[:40], targets[:40]), (inputs[40:], targets[40:]), RpropConfig(max_epochs=0))
        self.assertEqual(net, trained.net)
        self.assertEqual(0, trained.best_epoch)
        self.assertEqual(mse(net, (inputs[40:], targets[40:])), trained.best_monitor_mse)
        self.assertEqual((), trained.history)

    def test_training_separates_blobs(self):
        inputs, targets, labels = _blobs(1)
        net = init_weights(2, 4, 2, (SymmetricSigmoid(), SymmetricSigmoid()), seed=2)
        train_set, monitor_set = (inputs[:40], targets[:40]), (inputs[40:], targets[40:])
        trained = train(net, train_set, monitor_set, RpropConfig(max_epochs=100))

        self.assertEqual(100, len(trained.history))
        monitor = [row[2] for row in trained.history]
        self.assertEqual(min(monitor), trained.best_monitor_mse)
        self.assertEqual(monitor.index(min(monitor)) + 1, trained.best_epoch)
        self.assertLessEqual(trained.best_monitor_mse, monitor[-1])
        self.assertLess(trained.best_monitor_mse, mse(net, monitor_set))
        early = [mse(net, monitor_set)] + monitor[:2]
        for before, after in zip(early, early[1:]):
            self.assertLess(after, before)

        predictions = np.argmax(forward(trained.net, inputs), axis=1)
        np.testing.assert_array_equal(labels, predictions)

    def test_training_is_reproducible(self):
        inputs, targets, _ = _blobs(3)
        net = init_weights(2, 3, 2, (SymmetricSigmoid(), SymmetricSigmoid()), seed=4)
        sets = ((inputs[:40], targets[:40]), (inputs[40:], targets[40:]))
        first = train(net, *sets, RpropConfig(max_epochs=30))
        second = train(net, *sets, RpropConfig(max_epochs=30))
        self.assertEqual(first.net, second.net)
        self.assertEqual(first.history, second.history)
        self.assertEqual(first.best_epoch, second.best_epoch)

    def test_empty_monitor_set(self):
        inputs, targets, _ = _blobs(0)
        net = init_weights(2, 3, 2, (SymmetricSigmoid(), SymmetricSigmoid()), seed=1)
        with self.assertRaises(EmptySetError):
            train(net, (inputs, targets), (inputs[:0], targets[:0]), CONFIG)


if __name__ == "__main__":
    unittest.main(argv=[""], verbosity=2, exit=False)
