from __future__ import annotations

import typer

from .commands import doctor, evaluate, oracle, train
from .debug import LogLevel, set_level


CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


def _new_subapp(help_text: str) -> typer.Typer:
    return typer.Typer(
        help=help_text,
        no_args_is_help=True,
        context_settings=CONTEXT_SETTINGS,
    )


def create_app() -> typer.Typer:
    app = typer.Typer(
        help=(
            "Optimize the initial-noise distribution of a frozen generator against a reward.\n\n"
            "Typical session:\n"
            "  noisetuner train --config configs/quadratic.json\n"
            "  noisetuner eval --checkpoint runs/quadratic/checkpoint.json --config configs/quadratic.json\n"
            "  noisetuner oracle hit-rate --config configs/mode_steering.json\n"
        ),
        no_args_is_help=True,
        context_settings=CONTEXT_SETTINGS,
    )

    @app.callback()
    def main_callback(
        log_level: LogLevel = typer.Option(
            LogLevel.INFO,
            "--log-level",
            help="Logging verbosity: error, info or debug",
            envvar="NOISE_TUNER_LOG",
            case_sensitive=False,
        ),
    ) -> None:
        """Global CLI options."""
        set_level(log_level)

    app.command("train")(train.train)
    app.command("eval")(evaluate.evaluate)

    oracle_app = _new_subapp("Monte-Carlo checks: expected reward, finite-difference gradients, hit rates.")
    oracle_app.command("expected-reward")(oracle.expected_reward)
    oracle_app.command("fd-gradient")(oracle.fd_gradient)
    oracle_app.command("hit-rate")(oracle.hit_rate)
    oracle_app.command("ablation")(oracle.ablation)
    app.add_typer(oracle_app, name="oracle")

    app.command("doctor")(doctor.doctor)
    return app


app = create_app()


def main() -> None:
    app()
