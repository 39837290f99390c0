from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, Optional

import typer

from ..artifacts import (
    CHECKPOINT_FILE,
    CONFIG_FILE,
    METRICS_FILE,
    SMOOTHED_FILE,
    Checkpoint,
    save_checkpoint,
    write_metrics_csv,
    write_smoothed_csv,
    write_text,
)
from ..cli_helpers import build_config, exit_with_error
from ..config import dump_config
from ..debug import info, warn
from ..optimizer import IterationMetrics, run


def train(
    config_path: Path = typer.Option(
        ...,
        "--config",
        help="Experiment config (JSON)",
        envvar="NOISE_TUNER_CONFIG",
    ),
    seed: Optional[int] = typer.Option(None, help="Override the config seed", envvar="NOISE_TUNER_SEED"),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        help="Override the config output directory",
        envvar="NOISE_TUNER_OUT",
    ),
) -> None:
    """Optimize the initial-noise policy and write checkpoint and metrics."""
    try:
        config = build_config(config_path, seed=seed, output_dir=out)
        output_dir = Path(config.output_dir)
        total = config.find.total_steps
        if not config.find.drcm.enabled:
            warn("DRCM is disabled; rewards are used without a baseline.")
        if math.isinf(config.find.clip_margin):
            warn("RCA clipping is disabled (clip_margin is null).")

        typer.echo(f"Training for {total} iterations (seed {config.seed}, dim {config.dim})...")
        result = run(config.find, on_iteration=_progress_logger(config.log_every, total))

        write_text(output_dir / CONFIG_FILE, dump_config(config))
        save_checkpoint(output_dir / CHECKPOINT_FILE, Checkpoint.from_state(result.state, config.seed))
        write_metrics_csv(output_dir / METRICS_FILE, result.trajectory)
        write_smoothed_csv(
            output_dir / SMOOTHED_FILE,
            result.trajectory,
            sigma=config.find.early_stop.smoothing_sigma,
        )
        _print_summary(result.trajectory, result.stopped_early, output_dir)
    except Exception as exc:  # noqa: BLE001
        exit_with_error(exc)


def _progress_logger(every: int, total: int) -> Callable[[IterationMetrics], None]:
    width = len(str(max(total, 1)))

    def report(metrics: IterationMetrics) -> None:
        step = metrics.iteration + 1
        if step % every and step != total:
            return
        info(
            f"iter {step:>{width}}/{total} reward={metrics.reward:.4f} baseline={metrics.baseline:.4f} "
            f"eta={metrics.eta_mean:.4f} clipped={metrics.clip_fraction:.2f} "
            f"|mu|={metrics.mu_norm:.4f} sigma={metrics.sigma_mean:.4f}"
        )

    return report


def _print_summary(trajectory: list[IterationMetrics], stopped_early: bool, output_dir: Path) -> None:
    if stopped_early:
        typer.secho(
            f"Reward plateaued; stopped after {len(trajectory)} iterations.",
            fg=typer.colors.YELLOW,
        )
    if trajectory:
        last = trajectory[-1]
        typer.echo(f"Final reward: {last.reward:.4f}  |mu|: {last.mu_norm:.4f}  mean sigma: {last.sigma_mean:.4f}")
    typer.secho(f"Training finished. Artifacts written to {output_dir}", fg=typer.colors.GREEN)
