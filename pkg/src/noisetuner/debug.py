from __future__ import annotations

import json
from enum import Enum
from typing import Any

import typer


class LogLevel(str, Enum):
    ERROR = "error"
    INFO = "info"
    DEBUG = "debug"


_ORDER = {LogLevel.ERROR: 0, LogLevel.INFO: 1, LogLevel.DEBUG: 2}
_LEVEL = LogLevel.INFO


def set_level(level: LogLevel | str) -> None:
    global _LEVEL
    _LEVEL = LogLevel(level)


def get_level() -> LogLevel:
    return _LEVEL


def is_debug() -> bool:
    return _LEVEL is LogLevel.DEBUG


def _enabled(level: LogLevel) -> bool:
    return _ORDER[_LEVEL] >= _ORDER[level]


def log(message: str) -> None:
    if _enabled(LogLevel.DEBUG):
        typer.secho(f"[debug] {message}", fg=typer.colors.BRIGHT_BLACK, err=True)


def info(message: str) -> None:
    if _enabled(LogLevel.INFO):
        typer.secho(f"[info] {message}", err=True)


def warn(message: str) -> None:
    if _enabled(LogLevel.INFO):
        typer.secho(f"[warn] {message}", fg=typer.colors.YELLOW, err=True)


def preview(value: Any, limit: int = 1600) -> str:
    text = _to_text(value)
    if len(text) <= limit:
        return text
    hidden = len(text) - limit
    return f"{text[:limit]}... [truncated {hidden} chars]"


def _to_text(value: Any) -> str:
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(value, indent=2, ensure_ascii=False)
    return str(value)
