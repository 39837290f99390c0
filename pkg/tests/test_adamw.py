from __future__ import annotations

import math
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from noisetuner.adamw import AdamSettings, OptimState, adamw_step
from noisetuner.errors import InvalidArgumentError


class AdamWStepTests(unittest.TestCase):
    def test_zero_gradient_without_decay_leaves_params_unchanged(self) -> None:
        params = np.array([1.5, -2.0, 0.25])
        state = OptimState.zeros(3, AdamSettings(weight_decay=0.0))
        assert_array_equal(adamw_step(params, np.zeros(3), state, 0.01), params)
        self.assertEqual(state.step_count, 1)

    def test_first_step_moves_by_learning_rate(self) -> None:
        state = OptimState.zeros(1, AdamSettings(weight_decay=0.0))
        updated = adamw_step(np.array([0.0]), np.array([1.0]), state, 0.001)
        self.assertAlmostEqual(float(updated[0]), -0.001, places=10)

    def test_decay_acts_on_pre_update_params(self) -> None:
        state = OptimState.zeros(1, AdamSettings(weight_decay=0.01))
        updated = adamw_step(np.array([2.0]), np.array([0.0]), state, 0.1)
        self.assertAlmostEqual(float(updated[0]), 2.0 - 0.1 * 0.01 * 2.0, places=15)

    def test_identical_state_copies_give_identical_results(self) -> None:
        state = OptimState.zeros(2)
        adamw_step(np.array([0.1, 0.2]), np.array([0.3, -0.4]), state, 0.01)
        first, second = state.copy(), state.copy()
        params, grad = np.array([0.5, 0.5]), np.array([1.0, -2.0])
        assert_array_equal(adamw_step(params, grad, first, 0.01), adamw_step(params, grad, second, 0.01))
        assert_array_equal(first.m2, second.m2)

    def test_rejects_non_finite_gradient(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            adamw_step(np.zeros(1), np.array([math.nan]), OptimState.zeros(1), 0.01)

    def test_rejects_shape_mismatch(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            adamw_step(np.zeros(2), np.zeros(3), OptimState.zeros(2), 0.01)


class OptimStateTests(unittest.TestCase):
    def test_rejects_betas_outside_unit_interval(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            AdamSettings(beta1=1.0)

    def test_dict_round_trip_preserves_state(self) -> None:
        state = OptimState.zeros(2, AdamSettings(beta1=0.8, weight_decay=0.0))
        adamw_step(np.zeros(2), np.array([0.5, -0.25]), state, 0.01)
        restored = OptimState.from_dict(state.to_dict())
        assert_array_equal(restored.m1, state.m1)
        assert_array_equal(restored.m2, state.m2)
        self.assertEqual(restored.step_count, 1)
        self.assertEqual(restored.settings, state.settings)


if __name__ == "__main__":
    unittest.main()
