"""End-to-end training runs on the shipped configs. The runs are slow; enable with NOISE_TUNER_SLOW=1."""

from __future__ import annotations

import os
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

from noisetuner import oracle
from noisetuner.config import load_config
from noisetuner.optimizer import run, run_ablation
from noisetuner.policy import Policy

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SLOW = os.environ.get("NOISE_TUNER_SLOW") == "1"
EVAL_SEED = 12345


class ShippedConfigTests(unittest.TestCase):
    def test_acceptance_configs_keep_task_sizes(self) -> None:
        quadratic = load_config(CONFIGS / "quadratic.json").find
        self.assertEqual((quadratic.dim, quadratic.batch_size, quadratic.total_steps), (4, 8, 500))
        steering = load_config(CONFIGS / "mode_steering.json").find
        self.assertEqual((steering.dim, steering.batch_size, steering.total_steps), (2, 8, 600))

    def test_second_moment_memory_is_shorter_than_the_runs(self) -> None:
        for name in ("quadratic.json", "mode_steering.json"):
            with self.subTest(config=name):
                find = load_config(CONFIGS / name).find
                self.assertLess(1.0 / (1.0 - find.adam.beta2), find.total_steps)

    def test_mode_steering_decays_the_mean_back_toward_the_boundary(self) -> None:
        find = load_config(CONFIGS / "mode_steering.json").find
        self.assertGreater(find.adam.weight_decay, 0.01)
        self.assertFalse(find.early_stop.enabled)


@unittest.skipUnless(SLOW, "set NOISE_TUNER_SLOW=1 to run training acceptance checks")
class QuadraticConvergenceTests(unittest.TestCase):
    def test_policy_mean_reaches_the_target(self) -> None:
        config = load_config(CONFIGS / "quadratic.json").find
        result = run(config)

        target = config.reward.target
        self.assertLessEqual(float(np.max(np.abs(result.policy.mu - target))), 0.1)
        estimate = oracle.expected_reward(result.policy, config.generator, config.reward, 10_000, EVAL_SEED)
        self.assertGreaterEqual(estimate.mean, -0.2)

    def test_training_is_reproducible(self) -> None:
        config = replace(load_config(CONFIGS / "quadratic.json").find, total_steps=50)
        first, second = run(config), run(config)
        self.assertEqual(first.policy.to_dict(), second.policy.to_dict())
        self.assertEqual([m.row() for m in first.trajectory], [m.row() for m in second.trajectory])


@unittest.skipUnless(SLOW, "set NOISE_TUNER_SLOW=1 to run training acceptance checks")
class ModeSteeringTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.config = load_config(CONFIGS / "mode_steering.json").find
        cls.mixture = cls.config.reward.mixture
        cls.component = cls.config.reward.component

    def test_untrained_policy_hits_the_rare_mode_at_its_weight(self) -> None:
        estimate = oracle.mode_hit_rate(
            Policy.standard(self.config.dim), self.config.generator, self.mixture, self.component, 10_000, EVAL_SEED
        )
        self.assertAlmostEqual(estimate.mean, 0.05, delta=0.02)

    def test_training_steers_outputs_into_the_rare_mode_without_quality_loss(self) -> None:
        policy = run(self.config).policy

        hit_rate = oracle.mode_hit_rate(policy, self.config.generator, self.mixture, self.component, 1000, EVAL_SEED)
        self.assertGreaterEqual(hit_rate.mean, 0.80)

        density = oracle.output_log_density(policy, self.config.generator, self.mixture, 1000, EVAL_SEED)
        reference = oracle.component_log_density(self.mixture, self.component, 10_000, EVAL_SEED)
        self.assertGreaterEqual(density.mean, reference.mean - 1.0)

    def test_full_method_is_not_beaten_by_its_ablations(self) -> None:
        results = run_ablation(self.config, seeds=range(5), samples=1000)
        best_ablation = max(results["no_drcm"].mean, results["no_rca"].mean)
        self.assertGreaterEqual(results["full"].mean, best_ablation - 0.05)


if __name__ == "__main__":
    unittest.main()
