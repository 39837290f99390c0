from __future__ import annotations

import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from noisetuner.environment import (
    GaussianMixture,
    GeneratorKind,
    GeneratorSpec,
    NoiseSchedule,
    ddim_step,
    ddim_update,
    generate,
    generate_batch,
    make_linear_schedule,
    posterior_mean,
    responsibilities,
)
from noisetuner.errors import InvalidArgumentError
from noisetuner.policy import Action, Policy, sample_array


def _mixture(weights, means, stds=None) -> GaussianMixture:
    means = np.asarray(means, dtype=np.float64)
    return GaussianMixture(weights=weights, means=means, stds=np.ones_like(means) if stds is None else stds)


def _ddim(mixture: GaussianMixture, stride: int = 20) -> GeneratorSpec:
    return GeneratorSpec(
        kind=GeneratorKind.EXACT_DDIM,
        mixture=mixture,
        schedule=make_linear_schedule(1000),
        stride=stride,
    )


class ScheduleTests(unittest.TestCase):
    def test_linear_schedule_invariants(self) -> None:
        schedule = make_linear_schedule(1000)
        self.assertEqual(schedule.T, 1000)
        self.assertEqual(schedule.alpha_bar[0], 1.0)
        self.assertTrue(np.all(np.diff(schedule.alpha_bar) < 0))
        self.assertLess(schedule.alpha_bar[-1], 1e-3)

    def test_first_step_uses_beta_min(self) -> None:
        schedule = make_linear_schedule(10, beta_min=0.01, beta_max=0.1)
        self.assertAlmostEqual(schedule.alpha_bar[1], 0.99, places=15)

    def test_rejects_bad_arguments(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            make_linear_schedule(0)
        with self.assertRaises(InvalidArgumentError):
            make_linear_schedule(10, beta_min=0.1, beta_max=0.01)

    def test_rejects_schedule_not_starting_at_one(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            NoiseSchedule(alpha_bar=[0.99, 0.5])

    def test_rejects_non_decreasing_schedule(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            NoiseSchedule(alpha_bar=[1.0, 0.5, 0.5])


class MixtureTests(unittest.TestCase):
    def test_rejects_weights_not_summing_to_one(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            _mixture([0.5, 0.6], [[0.0], [1.0]])

    def test_rejects_non_positive_std(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            GaussianMixture(weights=[1.0], means=[[0.0]], stds=[[0.0]])

    def test_responsibilities_sum_to_one(self) -> None:
        mixture = _mixture([0.2, 0.3, 0.5], [[-2.0, 0.0], [0.0, 1.0], [3.0, 3.0]])
        points = np.random.default_rng(0).normal(size=(50, 2)) * 3.0
        weights = responsibilities(mixture, points, 0.4)
        assert_allclose(weights.sum(axis=-1), np.ones(50), atol=1e-12)

    def test_symmetric_mixture_is_split_evenly_at_origin(self) -> None:
        mixture = _mixture([0.5, 0.5], [[-3.0], [3.0]])
        assert_allclose(responsibilities(mixture, [0.0], 0.3), [0.5, 0.5], atol=1e-15)

    def test_rare_component_dominates_at_its_mean(self) -> None:
        mixture = _mixture([0.05, 0.95], [[3.0], [-3.0]])
        self.assertGreaterEqual(responsibilities(mixture, [3.0], 1.0)[0], 1.0 - 1e-6)

    def test_posterior_mean_is_responsibility_weighted_component_means(self) -> None:
        weights = [0.2, 0.5, 0.3]
        means = np.array([[-2.0, 1.0], [0.5, 0.0], [3.0, -1.5]])
        stds = np.array([[0.5, 1.0], [1.5, 0.7], [1.0, 2.0]])
        mixture = GaussianMixture(weights=weights, means=means, stds=stds)
        points = np.random.default_rng(3).normal(size=(20, 2)) * 2.0
        for alpha_bar in (0.05, 0.4, 0.9):
            singles = np.stack(
                [
                    posterior_mean(GaussianMixture(weights=[1.0], means=[mean], stds=[std]), points, alpha_bar)
                    for mean, std in zip(means, stds)
                ],
                axis=-2,
            )
            expected = np.einsum("nk,nkd->nd", responsibilities(mixture, points, alpha_bar), singles)
            assert_allclose(posterior_mean(mixture, points, alpha_bar), expected, rtol=1e-12, atol=1e-12)

    def test_pure_noise_level_returns_mixture_mean(self) -> None:
        mixture = _mixture([0.3, 0.7], [[-1.0, 0.5], [2.0, 1.0]])
        assert_allclose(posterior_mean(mixture, [0.2, -0.1], 1e-12), mixture.mean(), atol=1e-6)

    def test_posterior_mean_at_clean_level_is_identity(self) -> None:
        mixture = _mixture([0.7, 0.3], [[-1.0, 2.0], [4.0, 0.5]], stds=[[0.5, 1.5], [2.0, 1.0]])
        point = np.array([0.3, -0.8])
        assert_allclose(posterior_mean(mixture, point, 1.0), point, atol=1e-12)

    def test_posterior_mean_matches_single_gaussian_closed_form(self) -> None:
        mean, std, alpha_bar, z = 1.0, 2.0, 0.5, 0.3
        mixture = GaussianMixture(weights=[1.0], means=[[mean]], stds=[[std]])
        expected = mean + np.sqrt(alpha_bar) * std**2 / (alpha_bar * std**2 + 1 - alpha_bar) * (
            z - np.sqrt(alpha_bar) * mean
        )
        assert_allclose(posterior_mean(mixture, [z], alpha_bar), [expected], rtol=1e-12)

    def test_rejects_dimension_mismatch(self) -> None:
        mixture = _mixture([1.0], [[0.0, 0.0]])
        with self.assertRaises(InvalidArgumentError):
            posterior_mean(mixture, [0.0], 0.5)


class DdimTests(unittest.TestCase):
    def test_update_to_same_level_returns_input(self) -> None:
        z = np.array([0.4, -1.2])
        assert_allclose(ddim_update(z, np.array([1.0, 2.0]), 0.3, 0.3), z, atol=1e-12)

    def test_update_to_clean_level_returns_estimate(self) -> None:
        x0 = np.array([1.0, 2.0])
        assert_array_equal(ddim_update(np.array([0.4, -1.2]), x0, 0.3, 1.0), x0)

    def test_update_hand_example(self) -> None:
        assert_allclose(ddim_update([2.0], [1.0], 0.25, 0.5), [1.931852], atol=1e-6)

    def test_final_step_of_point_mass_lands_on_its_location(self) -> None:
        mixture = GaussianMixture(weights=[1.0], means=[[1.5, -0.5]], stds=[[1e-9, 1e-9]])
        assert_allclose(ddim_step(mixture, make_linear_schedule(10), [0.7, 2.0], 1, 0), [1.5, -0.5], atol=1e-6)

    def test_update_rejects_clean_start(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            ddim_update([0.0], [0.0], 1.0, 1.0)

    def test_step_rejects_bad_timesteps(self) -> None:
        mixture = _mixture([1.0], [[0.0]])
        schedule = make_linear_schedule(10)
        with self.assertRaises(InvalidArgumentError):
            ddim_step(mixture, schedule, [0.0], 3, 3)
        with self.assertRaises(InvalidArgumentError):
            ddim_step(mixture, schedule, [0.0], 11, 5)

    def test_stride_must_divide_schedule_length(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            _ddim(_mixture([1.0], [[0.0]]), stride=7)

    def test_timesteps_run_from_T_to_zero(self) -> None:
        steps = _ddim(_mixture([1.0], [[0.0]])).timesteps()
        self.assertEqual(len(steps), 51)
        self.assertEqual(steps[0], 1000)
        self.assertEqual(steps[-1], 0)

    def test_standard_gaussian_data_is_preserved(self) -> None:
        spec = _ddim(_mixture([1.0], [[0.0, 0.0]]), stride=1)
        outputs = generate_batch(spec, sample_array(Policy.standard(2), 10_000, seed=1))
        self.assertTrue(np.all(np.abs(outputs.mean(axis=0)) <= 0.05))
        assert_allclose(outputs.std(axis=0), [1.0, 1.0], rtol=0.1)

    def test_mixture_weights_are_preserved(self) -> None:
        mixture = _mixture([0.95, 0.05], [[-3.0, -3.0], [3.0, 3.0]])
        outputs = generate_batch(_ddim(mixture), sample_array(Policy.standard(2), 10_000, seed=2))
        rare = np.mean(np.argmax(responsibilities(mixture, outputs, 1.0), axis=-1) == 1)
        self.assertAlmostEqual(rare, 0.05, delta=0.02)

    def test_single_gaussian_rollout_is_affine(self) -> None:
        mixture = GaussianMixture(weights=[1.0], means=[[1.0, -2.0]], stds=[[0.5, 2.0]])
        spec = _ddim(mixture)
        rng = np.random.default_rng(6)
        first, second = rng.normal(size=2), rng.normal(size=2)
        for weight in (0.0, 0.3, 1.7):
            blended = generate_batch(spec, weight * first + (1.0 - weight) * second)
            expected = weight * generate_batch(spec, first) + (1.0 - weight) * generate_batch(spec, second)
            assert_allclose(blended, expected, atol=1e-9)

    def test_standard_gaussian_rollout_contracts_by_product_of_step_cosines(self) -> None:
        spec = _ddim(_mixture([1.0], [[0.0]]))
        alpha_bar = spec.schedule.alpha_bar
        steps = spec.timesteps()
        factor = 1.0
        for t, t_prev in zip(steps[:-1], steps[1:]):
            factor *= np.sqrt(alpha_bar[t] * alpha_bar[t_prev]) + np.sqrt((1 - alpha_bar[t]) * (1 - alpha_bar[t_prev]))
        points = np.array([[-2.0], [0.5], [3.0]])
        assert_allclose(generate_batch(spec, points), factor * points, rtol=1e-12)
        self.assertLess(factor, 0.98)

    def test_stride_twenty_tracks_single_steps_near_the_origin(self) -> None:
        # within the unit box the per-step contraction keeps the gap below 0.05
        grid = np.linspace(-1.0, 1.0, 5)
        probes = np.stack(np.meshgrid(grid, grid), axis=-1).reshape(-1, 2)
        mixture = _mixture([1.0], [[0.0, 0.0]])
        fine = generate_batch(_ddim(mixture, stride=1), probes)
        coarse = generate_batch(_ddim(mixture, stride=20), probes)
        self.assertLessEqual(np.max(np.abs(fine - coarse)), 0.05)

    def test_batch_and_single_rollouts_agree(self) -> None:
        spec = _ddim(_mixture([0.6, 0.4], [[-2.0], [2.0]]))
        batch = sample_array(Policy.standard(1), 5, seed=4)
        outputs = generate_batch(spec, batch)
        for row, output in zip(batch, outputs):
            assert_allclose(generate(spec, Action(row)), output, rtol=1e-12, atol=1e-12)


class SimpleGeneratorTests(unittest.TestCase):
    def test_identity_returns_a_copy(self) -> None:
        z = np.array([1.0, 2.0])
        output = generate(GeneratorSpec(kind="identity"), Action(z))
        assert_array_equal(output, z)
        output[0] = 5.0
        assert_array_equal(z, [1.0, 2.0])

    def test_linear_generator(self) -> None:
        spec = GeneratorSpec(kind="linear", matrix=[[2.0, 0.0], [1.0, 1.0]], offset=[0.5, -0.5])
        assert_allclose(generate(spec, Action([1.0, 2.0])), [2.5, 2.5])

    def test_linear_generator_rejects_wrong_dimension(self) -> None:
        spec = GeneratorSpec(kind="linear", matrix=[[1.0]])
        with self.assertRaises(InvalidArgumentError):
            generate(spec, Action([1.0, 2.0]))

    def test_exact_ddim_needs_mixture_and_schedule(self) -> None:
        with self.assertRaises(InvalidArgumentError):
            GeneratorSpec(kind="exact_ddim", mixture=_mixture([1.0], [[0.0]]))


if __name__ == "__main__":
    unittest.main()
