"""Policy-gradient training of the initial noise distribution.

One iteration samples a batch of initial noises from the current policy, runs
them through the frozen generator, scores the outputs, refreshes the reward
baseline network, and then takes AdamW steps on (mu, log_sigma) using the
calibrated rewards weighted by a clipped importance ratio.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter1d

from . import drcm, oracle
from .adamw import AdamSettings, OptimState, adamw_step
from .drcm import DrcmSettings
from .environment import GeneratorSpec, generate_batch
from .errors import InvalidArgumentError, NonFiniteStateError
from .policy import Action, Policy, RatioMode, log_prob_batch, ratio_from_log_probs, sample_array, score_batch
from .reward import RewardKind, RewardNormalization, RewardSpec, evaluate_batch
from .rng import DRCM_INIT_STREAM, SAMPLE_STREAM, derive_seed

__all__ = [
    "AblationResult",
    "AdamSettings",
    "ClipMode",
    "EarlyStopSettings",
    "FindConfig",
    "FindState",
    "IterationMetrics",
    "OptimState",
    "RunResult",
    "SampleRecord",
    "StepResult",
    "adamw_step",
    "find_step",
    "has_plateaued",
    "initial_state",
    "policy_gradient",
    "rca_sample_weight",
    "reinforce_gradient",
    "run",
    "run_ablation",
    "smooth_rewards",
]


class ClipMode(str, Enum):
    DROP = "drop"
    CLAMP = "clamp"


@dataclass(frozen=True)
class EarlyStopSettings:
    enabled: bool = False
    smoothing_sigma: float = 5.0
    window: int = 30
    tolerance: float = 1e-3

    def __post_init__(self) -> None:
        if self.smoothing_sigma <= 0 or self.window < 1 or self.tolerance < 0:
            raise InvalidArgumentError("Early-stop settings need sigma > 0, window >= 1, tolerance >= 0.")

    def to_dict(self) -> dict[str, object]:
        return {
            "enabled": self.enabled,
            "smoothing_sigma": self.smoothing_sigma,
            "window": self.window,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class FindConfig:
    generator: GeneratorSpec
    reward: RewardSpec
    dim: int
    batch_size: int = 1
    total_steps: int = 150
    lr: float = 1e-3
    clip_margin: float = 0.02
    ratio_mode: RatioMode = RatioMode.PER_DIM_GEO_MEAN
    clip_mode: ClipMode = ClipMode.DROP
    replay_window: int = 1
    inner_epochs: int = 1
    seed: int = 0
    log_sigma_floor: float = -10.0
    adam: AdamSettings = AdamSettings()
    drcm: DrcmSettings = DrcmSettings()
    early_stop: EarlyStopSettings = EarlyStopSettings()
    reward_normalization: Optional[RewardNormalization] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratio_mode", RatioMode(self.ratio_mode))
        object.__setattr__(self, "clip_mode", ClipMode(self.clip_mode))
        if not self.clip_margin > 0:
            raise InvalidArgumentError(f"clip_margin must be > 0, got {self.clip_margin}.")
        if self.batch_size < 1 or self.replay_window < 1 or self.inner_epochs < 1:
            raise InvalidArgumentError("batch_size, replay_window and inner_epochs must be at least 1.")
        if self.total_steps < 0:
            raise InvalidArgumentError(f"total_steps must be nonnegative, got {self.total_steps}.")
        if not self.lr > 0:
            raise InvalidArgumentError(f"lr must be positive, got {self.lr}.")
        if self.dim < 1:
            raise InvalidArgumentError(f"dim must be positive, got {self.dim}.")
        for label, spec_dim in (("generator", self.generator.dim), ("reward", self.reward.dim)):
            if spec_dim is not None and spec_dim != self.dim:
                raise InvalidArgumentError(f"{label} dimension {spec_dim} does not match dim={self.dim}.")


@dataclass(frozen=True, eq=False)
class SampleRecord:
    action: Action
    output: np.ndarray
    reward: float
    baseline: float
    calibrated: float
    logp_old: float
    iteration: int

    def __post_init__(self) -> None:
        if abs(self.calibrated - (self.reward - self.baseline)) > 1e-12:
            raise InvalidArgumentError("calibrated must equal reward - baseline.")

    @classmethod
    def create(
        cls,
        action: Action,
        output: np.ndarray,
        reward: float,
        baseline: float,
        logp_old: float,
        iteration: int,
    ) -> SampleRecord:
        return cls(action, output, reward, baseline, reward - baseline, logp_old, iteration)


@dataclass(frozen=True)
class IterationMetrics:
    iteration: int
    reward: float
    baseline: float
    calibrated: float
    eta_mean: float
    clip_fraction: float
    mu_norm: float
    sigma_mean: float
    drcm_loss: float

    COLUMNS = (
        "iteration",
        "reward",
        "baseline",
        "calibrated",
        "eta_mean",
        "clip_fraction",
        "mu_norm",
        "sigma_mean",
        "drcm_loss",
    )

    def row(self) -> list[object]:
        return [getattr(self, column) for column in self.COLUMNS]


@dataclass
class FindState:
    policy: Policy
    policy_optim: OptimState
    net: drcm.BaselineNet
    replay: deque = field(default_factory=deque)
    iteration: int = 0

    def copy(self) -> FindState:
        return FindState(
            policy=self.policy,
            policy_optim=self.policy_optim.copy(),
            net=self.net.copy(),
            replay=deque(self.replay, maxlen=self.replay.maxlen),
            iteration=self.iteration,
        )


@dataclass(frozen=True)
class StepResult:
    state: FindState
    records: list[SampleRecord]
    metrics: IterationMetrics


@dataclass(frozen=True)
class RunResult:
    policy: Policy
    trajectory: list[IterationMetrics]
    state: FindState
    stopped_early: bool = False


def rca_sample_weight(eta: float, margin: float) -> float:
    """Importance weight kept inside ``[1 - margin, 1 + margin]``, zero outside."""
    if not eta > 0.0:
        raise InvalidArgumentError(f"density ratio must be > 0, got {eta!r}.")
    if not margin > 0.0:
        raise InvalidArgumentError(f"clip margin must be > 0, got {margin!r}.")
    if 1.0 - margin <= eta <= 1.0 + margin:
        return float(eta)
    return 0.0


def _sample_weights(eta: np.ndarray, margin: float, mode: ClipMode) -> np.ndarray:
    if math.isinf(margin):
        return eta.copy()
    if ClipMode(mode) is ClipMode.CLAMP:
        return np.clip(eta, 1.0 - margin, 1.0 + margin)
    # underflowed ratios are out of band
    return np.array([rca_sample_weight(float(value), margin) if value > 0.0 else 0.0 for value in eta])


def _weighted_score_mean(
    policy: Policy,
    records: Sequence[SampleRecord],
    weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    actions = np.stack([record.action.z for record in records])
    calibrated = np.array([record.calibrated for record in records])
    grad_mu, grad_log_sigma = score_batch(policy, actions)
    coefficient = (-calibrated * weights)[:, None]
    return np.mean(coefficient * grad_mu, axis=0), np.mean(coefficient * grad_log_sigma, axis=0)


def record_ratios(policy: Policy, records: Sequence[SampleRecord], mode: RatioMode) -> np.ndarray:
    actions = np.stack([record.action.z for record in records])
    logp_old = np.array([record.logp_old for record in records])
    return ratio_from_log_probs(log_prob_batch(policy, actions), logp_old, policy.dim, mode)


def policy_gradient(
    policy: Policy,
    records: Sequence[SampleRecord],
    margin: float,
    ratio_mode: RatioMode = RatioMode.PER_DIM_GEO_MEAN,
    clip_mode: ClipMode = ClipMode.DROP,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the clipped surrogate loss; dropped records still count in the mean."""
    if not records:
        raise InvalidArgumentError("policy_gradient needs at least one record.")
    eta = record_ratios(policy, records, ratio_mode)
    return _weighted_score_mean(policy, records, _sample_weights(eta, margin, clip_mode))


def reinforce_gradient(policy: Policy, records: Sequence[SampleRecord]) -> tuple[np.ndarray, np.ndarray]:
    if not records:
        raise InvalidArgumentError("reinforce_gradient needs at least one record.")
    return _weighted_score_mean(policy, records, np.ones(len(records)))


def smooth_rewards(values: Sequence[float], sigma: float = 5.0) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    return gaussian_filter1d(values, sigma=sigma, mode="nearest")


def has_plateaued(values: Sequence[float], sigma: float = 5.0, window: int = 30, tolerance: float = 1e-3) -> bool:
    if len(values) <= window:
        return False
    smoothed = smooth_rewards(values, sigma)
    return bool(smoothed[-1] - smoothed[-1 - window] < tolerance)


def initial_state(config: FindConfig) -> FindState:
    policy = Policy.standard(config.dim)
    settings = config.drcm
    net = drcm.BaselineNet.initialize(
        config.dim,
        hidden=settings.hidden,
        seed=derive_seed(config.seed, DRCM_INIT_STREAM),
        input_mode=settings.input_mode,
        adam=settings.adam,
    )
    return FindState(
        policy=policy,
        policy_optim=OptimState.zeros(2 * config.dim, config.adam),
        net=net,
        replay=deque(maxlen=config.replay_window - 1),
    )


def _apply_floor(params: np.ndarray, dim: int, floor: float) -> np.ndarray:
    params = params.copy()
    params[dim:] = np.maximum(params[dim:], floor)
    return params


def _check_finite(params: np.ndarray, dim: int, iteration: int) -> None:
    if not np.all(np.isfinite(params[:dim])):
        raise NonFiniteStateError(f"mu became non-finite at iteration {iteration}.")
    if not np.all(np.isfinite(params[dim:])):
        raise NonFiniteStateError(f"log_sigma became non-finite at iteration {iteration}.")


def find_step(state: FindState, config: FindConfig, seed: int) -> StepResult:
    """One loop body: sample, generate, reward, refresh the baseline, then update theta."""
    state = state.copy()
    policy = state.policy
    iteration = state.iteration

    z = sample_array(policy, config.batch_size, seed)
    outputs = generate_batch(config.generator, z)
    rewards = evaluate_batch(config.reward, outputs)
    if config.reward_normalization is not None:
        rewards = config.reward_normalization.apply(rewards)
    logp_old = log_prob_batch(policy, z)

    if config.drcm.enabled:
        baseline = drcm.predict(state.net, policy)
        drcm_loss = drcm.update(state.net, policy, rewards, config.drcm.lr)
        if not math.isfinite(baseline):
            raise NonFiniteStateError(f"DRCM baseline became non-finite at iteration {iteration}.")
    else:
        baseline = 0.0
        drcm_loss = float("nan")

    records = [
        SampleRecord.create(Action(z[i]), outputs[i], float(rewards[i]), baseline, float(logp_old[i]), iteration)
        for i in range(config.batch_size)
    ]
    training_set = [record for batch in state.replay for record in batch] + records

    etas: list[np.ndarray] = []
    dropped = 0
    for _ in range(config.inner_epochs):
        eta = record_ratios(policy, training_set, config.ratio_mode)
        weights = _sample_weights(eta, config.clip_margin, config.clip_mode)
        etas.append(eta)
        dropped += int(np.count_nonzero(weights == 0.0 if config.clip_mode is ClipMode.DROP else weights != eta))
        grad_mu, grad_log_sigma = _weighted_score_mean(policy, training_set, weights)
        params = adamw_step(
            policy.params(),
            np.concatenate([grad_mu, grad_log_sigma]),
            state.policy_optim,
            config.lr,
        )
        params = _apply_floor(params, config.dim, config.log_sigma_floor)
        _check_finite(params, config.dim, iteration)
        policy = Policy.from_params(params)

    if config.replay_window > 1:
        state.replay.append(records)
    state.policy = policy
    state.iteration = iteration + 1

    all_etas = np.concatenate(etas)
    metrics = IterationMetrics(
        iteration=iteration,
        reward=float(np.mean(rewards)),
        baseline=float(baseline),
        calibrated=float(np.mean(rewards - baseline)),
        eta_mean=float(np.mean(all_etas)),
        clip_fraction=dropped / all_etas.size,
        mu_norm=float(np.linalg.norm(policy.mu)),
        sigma_mean=float(np.mean(policy.sigma)),
        drcm_loss=drcm_loss,
    )
    return StepResult(state=state, records=records, metrics=metrics)


def iteration_seed(config: FindConfig, iteration: int) -> int:
    return derive_seed(config.seed, SAMPLE_STREAM, iteration)


def run(
    config: FindConfig,
    *,
    state: Optional[FindState] = None,
    on_iteration: Optional[Callable[[IterationMetrics], None]] = None,
) -> RunResult:
    state = state or initial_state(config)
    trajectory: list[IterationMetrics] = []
    rewards: list[float] = []
    stop = config.early_stop

    while state.iteration < config.total_steps:
        result = find_step(state, config, iteration_seed(config, state.iteration))
        state = result.state
        trajectory.append(result.metrics)
        rewards.append(result.metrics.reward)
        if on_iteration is not None:
            on_iteration(result.metrics)
        if stop.enabled and has_plateaued(rewards, stop.smoothing_sigma, stop.window, stop.tolerance):
            return RunResult(policy=state.policy, trajectory=trajectory, state=state, stopped_early=True)

    return RunResult(policy=state.policy, trajectory=trajectory, state=state)


def ablation_variants(config: FindConfig) -> dict[str, FindConfig]:
    return {
        "full": config,
        "no_drcm": replace(config, drcm=replace(config.drcm, enabled=False)),
        "no_rca": replace(config, clip_margin=math.inf),
    }


@dataclass(frozen=True)
class AblationResult:
    variant: str
    metric: str
    per_seed: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_seed))

    def to_dict(self) -> dict[str, object]:
        return {"variant": self.variant, "metric": self.metric, "mean": self.mean, "per_seed": self.per_seed}


def final_score(config: FindConfig, policy: Policy, samples: int, seed: int) -> tuple[str, float]:
    """Hit rate of the target mode for indicator rewards, expected reward otherwise."""
    reward = config.reward
    if reward.kind is RewardKind.MODE_INDICATOR:
        estimate = oracle.mode_hit_rate(policy, config.generator, reward.mixture, reward.component, samples, seed)
        return "mode_hit_rate", estimate.mean
    return "expected_reward", oracle.expected_reward(policy, config.generator, reward, samples, seed).mean


def run_ablation(
    config: FindConfig,
    seeds: Sequence[int],
    samples: int = 1000,
    on_run: Optional[Callable[[str, int, float], None]] = None,
) -> dict[str, AblationResult]:
    if not seeds:
        raise InvalidArgumentError("run_ablation needs at least one seed.")
    results: dict[str, AblationResult] = {}
    for name, variant in ablation_variants(config).items():
        scores: list[float] = []
        metric = ""
        for seed in seeds:
            seeded = replace(variant, seed=int(seed))
            metric, score = final_score(seeded, run(seeded).policy, samples, int(seed))
            scores.append(score)
            if on_run is not None:
                on_run(name, int(seed), score)
        results[name] = AblationResult(variant=name, metric=metric, per_seed=scores)
    return results
