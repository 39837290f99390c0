from __future__ import annotations

import traceback
from pathlib import Path
from typing import Optional

import typer

from .artifacts import Checkpoint, load_checkpoint
from .config import ExperimentConfig, apply_overrides, load_config
from .debug import is_debug, log
from .errors import ConfigError
from .policy import Policy

CONFIG_EXIT_CODE = 2
RUNTIME_EXIT_CODE = 3


def build_config(
    config_path: Path,
    *,
    seed: Optional[int] = None,
    output_dir: Optional[Path] = None,
) -> ExperimentConfig:
    return apply_overrides(load_config(config_path), seed=seed, output_dir=output_dir)


def resolve_policy(checkpoint_path: Optional[Path], config: ExperimentConfig) -> Policy:
    """Policy from a checkpoint, or the untrained N(0, I) when none is given."""
    if checkpoint_path is None:
        log("No checkpoint given; using the initial N(0, I) policy.")
        return Policy.standard(config.dim)
    checkpoint: Checkpoint = load_checkpoint(checkpoint_path)
    if checkpoint.policy.dim != config.dim:
        raise ConfigError(
            f"Checkpoint policy has dimension {checkpoint.policy.dim} but the config expects {config.dim}."
        )
    log(f"Loaded checkpoint from {checkpoint_path} (iteration {checkpoint.iteration})")
    return checkpoint.policy


def exit_with_error(exc: Exception) -> None:
    typer.secho(str(exc), fg=typer.colors.RED, err=True)
    if is_debug():
        log("Stack trace:")
        typer.secho(traceback.format_exc(), fg=typer.colors.BRIGHT_BLACK, err=True)
    code = CONFIG_EXIT_CODE if isinstance(exc, ConfigError) else RUNTIME_EXIT_CODE
    raise typer.Exit(code=code)
