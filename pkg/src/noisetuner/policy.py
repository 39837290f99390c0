"""Diagonal Gaussian policy over the initial noise z_T."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.stats import norm

from .errors import InvalidArgumentError
from .rng import make_rng

FORMAT_VERSION = 1


class RatioMode(str, Enum):
    FULL = "full"
    PER_DIM_GEO_MEAN = "per_dim_geo_mean"


def _frozen_vector(values: Any, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    if array.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector, got shape {array.shape}.")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Policy:
    mu: np.ndarray
    log_sigma: np.ndarray

    def __post_init__(self) -> None:
        mu = _frozen_vector(self.mu, "mu")
        log_sigma = _frozen_vector(self.log_sigma, "log_sigma")
        if mu.shape != log_sigma.shape:
            raise InvalidArgumentError(
                f"mu and log_sigma must have the same length ({mu.size} != {log_sigma.size})."
            )
        if mu.size == 0:
            raise InvalidArgumentError("Policy dimension must be positive.")
        if not np.all(np.isfinite(log_sigma)):
            raise InvalidArgumentError("log_sigma entries must be finite.")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "log_sigma", log_sigma)

    @classmethod
    def standard(cls, dim: int) -> Policy:
        if dim < 1:
            raise InvalidArgumentError(f"Policy dimension must be positive, got {dim}.")
        return cls(mu=np.zeros(dim), log_sigma=np.zeros(dim))

    @classmethod
    def from_params(cls, params: np.ndarray) -> Policy:
        """Rebuild a policy from the flat ``[mu, log_sigma]`` vector."""
        params = np.asarray(params, dtype=np.float64)
        if params.ndim != 1 or params.size % 2 or params.size == 0:
            raise InvalidArgumentError(f"Flat policy parameters need an even, positive length, got {params.size}.")
        dim = params.size // 2
        return cls(mu=params[:dim], log_sigma=params[dim:])

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma)

    @property
    def variance(self) -> np.ndarray:
        return np.exp(2.0 * self.log_sigma)

    def params(self) -> np.ndarray:
        return np.concatenate([self.mu, self.log_sigma])

    def same_as(self, other: Policy) -> bool:
        return np.array_equal(self.mu, other.mu) and np.array_equal(self.log_sigma, other.log_sigma)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "mu": [float(value) for value in self.mu],
            "log_sigma": [float(value) for value in self.log_sigma],
            "format_version": FORMAT_VERSION,
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> Policy:
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise InvalidArgumentError(f"Unsupported policy format_version: {version!r}.")
        policy = cls(mu=payload["mu"], log_sigma=payload["log_sigma"])
        if policy.dim != payload.get("dim"):
            raise InvalidArgumentError(
                f"Policy document declares dim={payload.get('dim')!r} but holds {policy.dim} entries."
            )
        return policy


@dataclass(frozen=True, eq=False)
class Action:
    z: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", _frozen_vector(self.z, "action"))

    @property
    def dim(self) -> int:
        return int(self.z.size)


def _check_dim(policy: Policy, z: np.ndarray) -> None:
    if z.shape[-1] != policy.dim:
        raise InvalidArgumentError(
            f"Action dimension {z.shape[-1]} does not match policy dimension {policy.dim}."
        )


def standard_normals(count: int, dim: int, seed: int) -> np.ndarray:
    """Unit normals of shape ``(count, dim)`` from the stream keyed by ``seed``."""
    return make_rng(seed).standard_normal((count, dim))


def sample_array(policy: Policy, count: int, seed: int) -> np.ndarray:
    if count < 1:
        raise InvalidArgumentError(f"Sample count must be at least 1, got {count}.")
    return policy.mu + policy.sigma * standard_normals(count, policy.dim, seed)


def sample(policy: Policy, count: int, seed: int) -> list[Action]:
    return [Action(row) for row in sample_array(policy, count, seed)]


def log_prob_batch(policy: Policy, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    _check_dim(policy, z)
    return norm.logpdf(z, loc=policy.mu, scale=policy.sigma).sum(axis=-1)


def log_prob(policy: Policy, action: Action) -> float:
    return float(log_prob_batch(policy, action.z))


def score_batch(policy: Policy, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the log-density with respect to ``(mu, log_sigma)``."""
    z = np.asarray(z, dtype=np.float64)
    _check_dim(policy, z)
    standardized = (z - policy.mu) / policy.sigma
    grad_mu = standardized / policy.sigma
    grad_log_sigma = standardized**2 - 1.0
    return grad_mu, grad_log_sigma


def score(policy: Policy, action: Action) -> tuple[np.ndarray, np.ndarray]:
    return score_batch(policy, action.z)


def ratio_from_log_probs(
    logp_new: Any,
    logp_old: Any,
    dim: int,
    mode: RatioMode = RatioMode.PER_DIM_GEO_MEAN,
) -> Any:
    log_ratio = np.asarray(logp_new, dtype=np.float64) - np.asarray(logp_old, dtype=np.float64)
    if RatioMode(mode) is RatioMode.PER_DIM_GEO_MEAN:
        log_ratio = log_ratio / dim
    return np.exp(log_ratio)


def density_ratio(
    policy_new: Policy,
    policy_old: Policy,
    action: Action,
    mode: RatioMode = RatioMode.PER_DIM_GEO_MEAN,
) -> float:
    if policy_new.dim != policy_old.dim:
        raise InvalidArgumentError(
            f"Policies disagree on dimension ({policy_new.dim} != {policy_old.dim})."
        )
    return float(
        ratio_from_log_probs(
            log_prob(policy_new, action),
            log_prob(policy_old, action),
            policy_new.dim,
            mode,
        )
    )


def stack_actions(actions: Iterable[Action]) -> np.ndarray:
    rows: Sequence[np.ndarray] = [action.z for action in actions]
    if not rows:
        raise InvalidArgumentError("Expected at least one action.")
    return np.stack(rows)
