from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import typer

from .. import oracle as estimators
from ..artifacts import canonical_json, write_json
from ..cli_helpers import build_config, exit_with_error, resolve_policy
from ..config import ExperimentConfig
from ..environment import GaussianMixture
from ..policy import Policy
from ..reward import RewardKind

EVAL_FILE = "eval.json"


def evaluate(
    checkpoint: Path = typer.Option(..., help="Checkpoint written by `noisetuner train`"),
    config_path: Path = typer.Option(
        ...,
        "--config",
        help="Experiment config (JSON)",
        envvar="NOISE_TUNER_CONFIG",
    ),
    samples: Optional[int] = typer.Option(None, min=2, help="Fresh samples to draw (default: eval.samples)"),
    seed: Optional[int] = typer.Option(None, help="Override the config seed", envvar="NOISE_TUNER_SEED"),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        help="Override the config output directory",
        envvar="NOISE_TUNER_OUT",
    ),
) -> None:
    """Sample the optimized policy and report expected reward and mode statistics."""
    try:
        config = build_config(config_path, seed=seed, output_dir=out)
        policy = resolve_policy(checkpoint, config)
        report = evaluation_report(policy, config, samples or config.eval.samples)
        typer.echo(canonical_json(report), nl=False)
        write_json(Path(config.output_dir) / EVAL_FILE, report)
    except Exception as exc:  # noqa: BLE001
        exit_with_error(exc)


def task_mixture(config: ExperimentConfig) -> Optional[GaussianMixture]:
    return config.reward.mixture if config.reward.mixture is not None else config.generator.mixture


def target_component(config: ExperimentConfig) -> int:
    return config.reward.component if config.reward.kind is RewardKind.MODE_INDICATOR else 0


def evaluation_report(policy: Policy, config: ExperimentConfig, samples: int) -> dict[str, Any]:
    report: dict[str, Any] = {
        "samples": samples,
        "seed": config.seed,
        "expected_reward": estimators.expected_reward(
            policy, config.generator, config.reward, samples, config.seed
        ).to_dict(),
    }
    mixture = task_mixture(config)
    if mixture is not None:
        component = target_component(config)
        report["target_component"] = component
        report["mode_hit_rate"] = estimators.mode_hit_rate(
            policy, config.generator, mixture, component, samples, config.seed
        ).to_dict()
        report["output_log_density"] = estimators.output_log_density(
            policy, config.generator, mixture, samples, config.seed
        ).to_dict()
    return report
