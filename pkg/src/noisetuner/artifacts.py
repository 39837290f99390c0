"""Checkpoint, metrics and result files written by the CLI."""

from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence, Union

from .adamw import OptimState
from .debug import log
from .drcm import BaselineNet
from .errors import ConfigError, InvalidArgumentError
from .optimizer import FindState, IterationMetrics, smooth_rewards
from .policy import FORMAT_VERSION, Policy

METRICS_FILE = "metrics.csv"
SMOOTHED_FILE = "smoothed.csv"
CHECKPOINT_FILE = "checkpoint.json"
CONFIG_FILE = "config.json"
SMOOTHED_COLUMNS = ("iteration", "reward", "smoothed_reward")

PathLike = Union[str, Path]


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log(f"Wrote {path}")
    return path


def write_json(path: PathLike, payload: Any) -> Path:
    return write_text(path, canonical_json(payload))


@dataclass(frozen=True)
class Checkpoint:
    iteration: int
    seed: int
    policy: Policy
    policy_optim: OptimState
    baseline_net: BaselineNet

    @classmethod
    def from_state(cls, state: FindState, seed: int) -> Checkpoint:
        return cls(
            iteration=state.iteration,
            seed=seed,
            policy=state.policy,
            policy_optim=state.policy_optim,
            baseline_net=state.net,
        )

    def to_state(self, replay_window: int = 1) -> FindState:
        """Resume point; the replay buffer is not persisted and restarts empty."""
        return FindState(
            policy=self.policy,
            policy_optim=self.policy_optim.copy(),
            net=self.baseline_net.copy(),
            replay=deque(maxlen=replay_window - 1),
            iteration=self.iteration,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "iteration": self.iteration,
            "seed": self.seed,
            "policy": self.policy.to_dict(),
            "policy_optim": self.policy_optim.to_dict(),
            "baseline_net": self.baseline_net.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> Checkpoint:
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise ConfigError(f"Unsupported checkpoint format_version: {version!r}.")
        return cls(
            iteration=int(payload["iteration"]),
            seed=int(payload["seed"]),
            policy=Policy.from_dict(payload["policy"]),
            policy_optim=OptimState.from_dict(payload["policy_optim"]),
            baseline_net=BaselineNet.from_dict(payload["baseline_net"]),
        )


def save_checkpoint(path: PathLike, checkpoint: Checkpoint) -> Path:
    return write_json(path, checkpoint.to_dict())


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path).expanduser()
    if not path.exists():
        raise ConfigError(f"Checkpoint not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path} does not hold a checkpoint object.")
    try:
        return Checkpoint.from_dict(payload)
    except KeyError as exc:
        raise ConfigError(f"{path} is missing checkpoint field {exc}.") from exc
    except (InvalidArgumentError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path} holds an invalid checkpoint: {exc}") from exc


def write_metrics_csv(path: PathLike, trajectory: Sequence[IterationMetrics]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(IterationMetrics.COLUMNS)
        for metrics in trajectory:
            writer.writerow([repr(value) for value in metrics.row()])
    log(f"Wrote {path} ({len(trajectory)} rows)")
    return path


def write_smoothed_csv(path: PathLike, trajectory: Sequence[IterationMetrics], sigma: float = 5.0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rewards = [metrics.reward for metrics in trajectory]
    smoothed = smooth_rewards(rewards, sigma)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SMOOTHED_COLUMNS)
        for metrics, value in zip(trajectory, smoothed):
            writer.writerow([metrics.iteration, repr(metrics.reward), repr(float(value))])
    log(f"Wrote {path}")
    return path


def read_csv(path: PathLike) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))
