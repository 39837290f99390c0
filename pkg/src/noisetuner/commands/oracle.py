from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import typer

from .. import oracle as estimators
from ..artifacts import canonical_json, write_json
from ..cli_helpers import build_config, exit_with_error, resolve_policy
from ..config import ExperimentConfig
from ..debug import info
from ..errors import ConfigError
from ..optimizer import run_ablation
from .evaluate import target_component, task_mixture

CONFIG_OPTION = typer.Option(..., "--config", help="Experiment config (JSON)", envvar="NOISE_TUNER_CONFIG")
CHECKPOINT_OPTION = typer.Option(None, help="Checkpoint to probe (default: initial N(0, I) policy)")
SEED_OPTION = typer.Option(None, help="Override the config seed", envvar="NOISE_TUNER_SEED")
OUT_OPTION = typer.Option(None, "--out", help="Override the config output directory", envvar="NOISE_TUNER_OUT")


def expected_reward(
    config_path: Path = CONFIG_OPTION,
    checkpoint: Optional[Path] = CHECKPOINT_OPTION,
    samples: int = typer.Option(estimators.DEFAULT_SAMPLES, min=2, help="Monte-Carlo samples"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Estimate E[reward] under a policy with its standard error."""
    try:
        config = build_config(config_path, seed=seed, output_dir=out)
        policy = resolve_policy(checkpoint, config)
        estimate = estimators.expected_reward(policy, config.generator, config.reward, samples, config.seed)
        _emit(config, "expected-reward", estimate.to_dict())
    except Exception as exc:  # noqa: BLE001
        exit_with_error(exc)


def fd_gradient(
    config_path: Path = CONFIG_OPTION,
    checkpoint: Optional[Path] = CHECKPOINT_OPTION,
    samples: int = typer.Option(estimators.DEFAULT_SAMPLES, min=2, help="Monte-Carlo samples per difference"),
    step: Optional[float] = typer.Option(None, help="Finite-difference step (default: eval.fd_step)"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Central-difference gradient of E[reward] in (mu, log_sigma) using common random numbers."""
    try:
        config = build_config(config_path, seed=seed, output_dir=out)
        policy = resolve_policy(checkpoint, config)
        h = config.eval.fd_step if step is None else step
        if not h > 0:
            raise ConfigError(f"--step must be positive, got {h}.")
        gradient = estimators.fd_objective_gradient(
            policy, config.generator, config.reward, samples, h, config.seed
        )
        _emit(config, "fd-gradient", {"n": samples, "h": h, **gradient.to_dict()})
    except Exception as exc:  # noqa: BLE001
        exit_with_error(exc)


def hit_rate(
    config_path: Path = CONFIG_OPTION,
    checkpoint: Optional[Path] = CHECKPOINT_OPTION,
    component: Optional[int] = typer.Option(None, min=0, help="Target mixture component (default: reward's)"),
    samples: int = typer.Option(estimators.DEFAULT_SAMPLES, min=2, help="Monte-Carlo samples"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Fraction of generated outputs that land in a target mixture component."""
    try:
        config = build_config(config_path, seed=seed, output_dir=out)
        mixture = task_mixture(config)
        if mixture is None:
            raise ConfigError("hit-rate needs a mixture on the generator or the reward.")
        target = target_component(config) if component is None else component
        if target >= mixture.K:
            raise ConfigError(f"--component {target} is out of range for a {mixture.K}-component mixture.")
        policy = resolve_policy(checkpoint, config)
        estimate = estimators.mode_hit_rate(policy, config.generator, mixture, target, samples, config.seed)
        _emit(config, "hit-rate", {"component": target, **estimate.to_dict()})
    except Exception as exc:  # noqa: BLE001
        exit_with_error(exc)


def ablation(
    config_path: Path = CONFIG_OPTION,
    seeds: int = typer.Option(5, min=1, help="Number of seeds, starting at the config seed"),
    samples: Optional[int] = typer.Option(None, min=2, help="Evaluation samples per run (default: eval.samples)"),
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
) -> None:
    """Train full, no-DRCM and no-RCA variants over several seeds and compare final scores."""
    try:
        config = build_config(config_path, seed=seed, output_dir=out)
        seed_list = [config.seed + offset for offset in range(seeds)]

        def report(variant: str, seed: int, score: float) -> None:
            info(f"{variant} seed={seed} score={score:.4f}")

        results = run_ablation(config.find, seed_list, samples or config.eval.samples, on_run=report)
        _emit(
            config,
            "ablation",
            {"seeds": seed_list, "variants": {name: result.to_dict() for name, result in results.items()}},
        )
    except Exception as exc:  # noqa: BLE001
        exit_with_error(exc)


def _emit(config: ExperimentConfig, kind: str, payload: dict[str, Any]) -> None:
    document = {"kind": kind, **payload}
    typer.echo(canonical_json(document), nl=False)
    write_json(Path(config.output_dir) / f"oracle-{kind}.json", document)
