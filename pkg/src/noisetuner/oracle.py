"""Brute-force Monte-Carlo checks of the quantities the trainer optimizes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .environment import GaussianMixture, GeneratorSpec, generate_batch, responsibilities
from .errors import InvalidArgumentError
from .policy import Policy, standard_normals
from .reward import RewardSpec, evaluate_batch, mixture_log_density
from .rng import ORACLE_STREAM, derive_seed, make_rng

DEFAULT_SAMPLES = 100_000
DEFAULT_STEP = 1e-3


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 1 or not self.stderr >= 0:
            raise InvalidArgumentError("An estimate needs n >= 1 and a nonnegative standard error.")

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.stderr

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n}


@dataclass(frozen=True, eq=False)
class FdGradient:
    grad_mu: np.ndarray
    grad_log_sigma: np.ndarray
    stderr_mu: np.ndarray
    stderr_log_sigma: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "grad_mu": self.grad_mu.tolist(),
            "grad_log_sigma": self.grad_log_sigma.tolist(),
            "stderr_mu": self.stderr_mu.tolist(),
            "stderr_log_sigma": self.stderr_log_sigma.tolist(),
        }


def mc_estimate(values: Any) -> McEstimate:
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < 2:
        raise InvalidArgumentError(f"Need at least 2 samples for a standard error, got {values.size}.")
    stderr = float(np.std(values, ddof=1) / np.sqrt(values.size))
    return McEstimate(mean=float(np.mean(values)), stderr=stderr, n=int(values.size))


def _check_samples(n: int) -> None:
    if n < 2:
        raise InvalidArgumentError(f"Oracle estimates need n >= 2, got {n}.")


def _noise(policy: Policy, n: int, seed: int) -> np.ndarray:
    return standard_normals(n, policy.dim, derive_seed(seed, ORACLE_STREAM))


def rollouts(policy: Policy, generator: GeneratorSpec, n: int, seed: int) -> np.ndarray:
    _check_samples(n)
    return generate_batch(generator, policy.mu + policy.sigma * _noise(policy, n, seed))


def expected_reward(
    policy: Policy,
    generator: GeneratorSpec,
    reward: RewardSpec,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> McEstimate:
    return mc_estimate(evaluate_batch(reward, rollouts(policy, generator, n, seed)))


def mode_hit_rate(
    policy: Policy,
    generator: GeneratorSpec,
    mixture: GaussianMixture,
    target_k: int,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> McEstimate:
    if not 0 <= target_k < mixture.K:
        raise InvalidArgumentError(f"Target component {target_k} is out of range for K={mixture.K}.")
    outputs = rollouts(policy, generator, n, seed)
    winners = np.argmax(responsibilities(mixture, outputs, 1.0), axis=-1)
    return mc_estimate((winners == target_k).astype(np.float64))


def output_log_density(
    policy: Policy,
    generator: GeneratorSpec,
    mixture: GaussianMixture,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> McEstimate:
    return mc_estimate(mixture_log_density(mixture, rollouts(policy, generator, n, seed)))


def component_log_density(mixture: GaussianMixture, component: int, n: int = DEFAULT_SAMPLES, seed: int = 0) -> McEstimate:
    """Mixture log-density of exact draws from one component; the reference for steered outputs."""
    _check_samples(n)
    if not 0 <= component < mixture.K:
        raise InvalidArgumentError(f"Component {component} is out of range for K={mixture.K}.")
    rng = make_rng(seed, ORACLE_STREAM, component)
    draws = mixture.means[component] + mixture.stds[component] * rng.standard_normal((n, mixture.dim))
    return mc_estimate(mixture_log_density(mixture, draws))


def central_difference(f: Callable[[np.ndarray], float], x: Any, h: float = DEFAULT_STEP) -> np.ndarray:
    if not h > 0:
        raise InvalidArgumentError(f"Finite-difference step must be positive, got {h}.")
    x = np.array(x, dtype=np.float64, ndmin=1)
    grad = np.empty_like(x)
    for index in range(x.size):
        step = np.zeros_like(x)
        step[index] = h
        grad[index] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def fd_objective_gradient(
    policy: Policy,
    generator: GeneratorSpec,
    reward: RewardSpec,
    n: int = DEFAULT_SAMPLES,
    h: float = DEFAULT_STEP,
    seed: int = 0,
) -> FdGradient:
    """Central differences of E[r] in (mu, log_sigma) with common random numbers.

    Both sides of every difference reuse the same unit normals, so the
    per-sample differences are paired and their spread gives the standard error.
    """
    _check_samples(n)
    if not h > 0:
        raise InvalidArgumentError(f"Finite-difference step must be positive, got {h}.")
    eps = _noise(policy, n, seed)
    params = policy.params()
    dim = policy.dim

    def rewards_at(flat: np.ndarray) -> np.ndarray:
        mu, log_sigma = flat[:dim], flat[dim:]
        return evaluate_batch(reward, generate_batch(generator, mu + np.exp(log_sigma) * eps))

    means = np.empty(params.size)
    stderrs = np.empty(params.size)
    for index in range(params.size):
        step = np.zeros_like(params)
        step[index] = h
        estimate = mc_estimate((rewards_at(params + step) - rewards_at(params - step)) / (2.0 * h))
        means[index] = estimate.mean
        stderrs[index] = estimate.stderr
    return FdGradient(
        grad_mu=means[:dim],
        grad_log_sigma=means[dim:],
        stderr_mu=stderrs[:dim],
        stderr_log_sigma=stderrs[dim:],
    )
