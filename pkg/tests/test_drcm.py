from __future__ import annotations

import math
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from noisetuner import drcm
from noisetuner.drcm import BaselineNet, InputMode
from noisetuner.errors import InvalidArgumentError
from noisetuner.oracle import central_difference
from noisetuner.policy import Policy
from noisetuner.rng import make_rng

POLICY = Policy(mu=[0.5, -0.3], log_sigma=[0.1, -0.2])


class BaselineNetShapeTests(unittest.TestCase):
    def test_initialized_layer_shapes(self) -> None:
        net = BaselineNet.initialize(3, hidden=16, seed=0)
        self.assertEqual([w.shape for w in net.weights], [(16, 6), (16, 16), (1, 16)])
        self.assertEqual(net.num_params, 16 * 6 + 16 + 16 * 16 + 16 + 16 + 1)
        assert_array_equal(net.biases[0], np.zeros(16))

    def test_initialization_is_deterministic_in_seed(self) -> None:
        first = BaselineNet.initialize(2, hidden=8, seed=42)
        second = BaselineNet.initialize(2, hidden=8, seed=42)
        other = BaselineNet.initialize(2, hidden=8, seed=43)
        assert_array_equal(first.flat_params(), second.flat_params())
        self.assertFalse(np.array_equal(first.flat_params(), other.flat_params()))

    def test_summary_mode_has_fixed_width(self) -> None:
        net = BaselineNet.initialize(10, hidden=4, seed=0, input_mode=InputMode.SUMMARY)
        self.assertEqual(net.input_width, drcm.SUMMARY_WIDTH)
        self.assertTrue(math.isfinite(drcm.predict(net, Policy.standard(10))))

    def test_predict_rejects_policy_of_other_dimension(self) -> None:
        net = BaselineNet.initialize(2, hidden=4, seed=0)
        with self.assertRaises(InvalidArgumentError):
            drcm.predict(net, Policy.standard(3))

    def test_flat_params_round_trip(self) -> None:
        net = BaselineNet.initialize(2, hidden=5, seed=1)
        flat = make_rng(3).normal(size=net.num_params)
        net.set_flat_params(flat)
        assert_array_equal(net.flat_params(), flat)

    def test_dict_round_trip_preserves_prediction(self) -> None:
        net = BaselineNet.initialize(2, hidden=8, seed=5)
        drcm.update(net, POLICY, [0.4], 0.01)
        restored = BaselineNet.from_dict(net.to_dict())
        self.assertEqual(drcm.predict(restored, POLICY), drcm.predict(net, POLICY))
        self.assertEqual(restored.optim_state.step_count, 1)


class BaselineNetGradientTests(unittest.TestCase):
    def test_backprop_matches_central_differences(self) -> None:
        net = BaselineNet.initialize(2, hidden=5, seed=7)
        net.set_flat_params(make_rng(8).normal(size=net.num_params))
        rewards = [0.3, 1.1, -0.4]
        _, analytic = drcm.loss_and_gradient(net, POLICY, rewards)

        probe = net.copy()

        def loss_at(flat: np.ndarray) -> float:
            probe.set_flat_params(flat)
            return drcm.loss_and_gradient(probe, POLICY, rewards)[0]

        numeric = central_difference(loss_at, net.flat_params(), h=1e-6)
        assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)

    def test_loss_is_mean_squared_error(self) -> None:
        net = BaselineNet.zeros(2, hidden=4)
        flat = net.flat_params()
        flat[-1] = 0.5
        net.set_flat_params(flat)
        loss, _ = drcm.loss_and_gradient(net, POLICY, [0.0, 1.0])
        self.assertAlmostEqual(loss, 0.25, places=15)

    def test_rejects_empty_or_non_finite_rewards(self) -> None:
        net = BaselineNet.initialize(2, hidden=4, seed=0)
        with self.assertRaises(InvalidArgumentError):
            drcm.loss_and_gradient(net, POLICY, [])
        with self.assertRaises(InvalidArgumentError):
            drcm.loss_and_gradient(net, POLICY, [math.inf])


class BaselineNetUpdateTests(unittest.TestCase):
    def test_calibrated_network_is_left_unchanged(self) -> None:
        net = BaselineNet.zeros(2, hidden=4)
        flat = net.flat_params()
        flat[-1] = 0.5
        net.set_flat_params(flat)
        before = net.flat_params()

        loss = drcm.update(net, POLICY, [0.5], 0.01)

        self.assertEqual(loss, 0.0)
        assert_array_equal(net.flat_params(), before)

    def test_update_reduces_loss_on_a_fixed_target(self) -> None:
        net = BaselineNet.initialize(2, hidden=16, seed=2)
        first = drcm.update(net, POLICY, [1.0], 0.01)
        for _ in range(20):
            last = drcm.update(net, POLICY, [1.0], 0.01)
        self.assertLess(last, first)

    def test_fit_to_a_constant_target(self) -> None:
        net = BaselineNet.initialize(2, hidden=64, seed=0)
        for _ in range(500):
            drcm.update(net, POLICY, [0.7], 1e-3)
        self.assertLessEqual(abs(drcm.predict(net, POLICY) - 0.7), 0.01)

    def test_online_fit_converges_to_mean_reward(self) -> None:
        net = BaselineNet.initialize(2, hidden=64, seed=0)
        rewards = 0.7 + 0.3 * make_rng(9).standard_normal(500)
        for reward in rewards:
            drcm.update(net, POLICY, [reward], 1e-3)
        self.assertLessEqual(abs(drcm.predict(net, POLICY) - 0.7), 0.1)


if __name__ == "__main__":
    unittest.main()
