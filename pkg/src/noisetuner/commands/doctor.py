from __future__ import annotations

import platform
import sys
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from ..cli_helpers import CONFIG_EXIT_CODE, RUNTIME_EXIT_CODE
from ..config import ExperimentConfig, load_config
from ..errors import ConfigError
from ..rng import make_rng

_PACKAGES = ("numpy", "scipy", "typer")


@dataclass(frozen=True)
class _Report:
    issues: list[str]
    config_error: Optional[str] = None


def doctor(
    config_path: Optional[Path] = typer.Option(
        None,
        "--config",
        help="Also validate this experiment config",
        envvar="NOISE_TUNER_CONFIG",
    ),
) -> None:
    """Check the numeric environment and optionally validate a config."""
    report = _run_doctor(config_path)
    if report.config_error is not None:
        raise typer.Exit(code=CONFIG_EXIT_CODE)
    if report.issues:
        raise typer.Exit(code=RUNTIME_EXIT_CODE)


def _run_doctor(config_path: Optional[Path]) -> _Report:
    issues: list[str] = []

    typer.secho("noisetuner doctor", fg=typer.colors.CYAN, bold=True)
    typer.echo(f"Platform: {platform.system()} {platform.release()}")
    typer.echo(f"Python: {sys.version.split()[0]} ({sys.executable})")

    for name in _PACKAGES:
        version = _package_version(name)
        if version is None:
            issues.append(f"Python package `{name}` is not installed in this environment.")
        else:
            typer.echo(f"{name}: {version}")

    issues.extend(_check_numerics())

    config_error = None
    if config_path is not None:
        config_error = _check_config(config_path)
        if config_error is not None:
            issues.append(config_error)

    if issues:
        typer.secho("\nIssues found:", fg=typer.colors.RED, bold=True)
        for issue in issues:
            typer.echo(f"  - {issue}")
    else:
        typer.secho("\nNo blocking issues found.", fg=typer.colors.GREEN, bold=True)

    return _Report(issues=issues, config_error=config_error)


def _package_version(name: str) -> Optional[str]:
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return None


def _check_numerics() -> list[str]:
    issues: list[str] = []
    if np.finfo(np.float64).eps > 2.3e-16:
        issues.append("float64 does not have IEEE double precision on this platform.")
    else:
        typer.secho("✔ float64 arithmetic is IEEE double precision", fg=typer.colors.GREEN)

    try:
        first = make_rng(0).standard_normal(4)
        second = make_rng(0).standard_normal(4)
    except Exception as exc:  # noqa: BLE001
        issues.append(f"Philox random streams are unavailable ({exc}).")
        return issues

    if np.array_equal(first, second):
        typer.secho("✔ Philox random streams are reproducible", fg=typer.colors.GREEN)
    else:
        issues.append("Philox random streams are not reproducible for a fixed seed.")
    return issues


def _check_config(path: Path) -> Optional[str]:
    typer.secho(f"\nConfig: {path}", fg=typer.colors.CYAN, bold=True)
    try:
        config = load_config(path)
    except ConfigError as exc:
        typer.secho(f"✘ {exc}", fg=typer.colors.RED)
        return f"Config {path} is invalid."

    typer.secho("✔ config is valid", fg=typer.colors.GREEN)
    _print_task_summary(config)
    return None


def _print_task_summary(config: ExperimentConfig) -> None:
    generator = config.generator
    typer.echo(f"  dimension: {config.dim}")
    typer.echo(f"  generator: {generator.kind.value}")
    steps = generator.timesteps()
    if steps:
        typer.echo(f"  reverse steps: {len(steps) - 1} (T={generator.schedule.T}, stride={generator.stride})")
    typer.echo(f"  reward: {config.reward.kind.value}")
    typer.echo(f"  iterations: {config.find.total_steps}, batch size: {config.find.batch_size}")
