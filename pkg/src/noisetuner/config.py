from __future__ import annotations

import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterator, Optional, Union

from .adamw import AdamSettings
from .debug import log, preview
from .drcm import DrcmSettings, InputMode
from .environment import GaussianMixture, GeneratorKind, GeneratorSpec, make_linear_schedule
from .errors import ConfigError, InvalidArgumentError
from .optimizer import ClipMode, EarlyStopSettings, FindConfig
from .policy import RatioMode
from .reward import RewardKind, RewardNormalization, RewardSpec

DEFAULT_OUTPUT_DIR = "runs/default"
DEFAULT_STRIDE = 20

_MISSING = object()


@dataclass(frozen=True)
class EvalSettings:
    samples: int = 1000
    fd_step: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    find: FindConfig
    output_dir: str = DEFAULT_OUTPUT_DIR
    log_every: int = 1
    eval: EvalSettings = EvalSettings()
    condition: str = ""

    def __post_init__(self) -> None:
        if not str(self.output_dir).strip():
            raise ConfigError("output_dir must be a nonempty path.")

    @property
    def seed(self) -> int:
        return self.find.seed

    @property
    def dim(self) -> int:
        return self.find.dim

    @property
    def generator(self) -> GeneratorSpec:
        return self.find.generator

    @property
    def reward(self) -> RewardSpec:
        return self.find.reward


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path).expanduser()
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    config = parse_config(raw)
    log(f"Loaded config from {path}")
    return config


def parse_config(raw: Any) -> ExperimentConfig:
    root = _Section(raw, "")

    generator = _parse_generator(root.section("generator", required=True))
    reward = _parse_reward(root.section("reward", required=True), generator.mixture)
    condition = root.string("condition", "")
    if condition:
        generator = replace(generator, condition=condition)
        reward = _with_condition(reward, condition)

    dim = root.get("dim", None)
    if dim is None:
        dim = generator.dim if generator.dim is not None else reward.dim
        if dim is None:
            raise ConfigError("dim is required when neither the generator nor the reward fixes a dimension.")
    else:
        dim = _integer(dim, "dim", minimum=1)

    find_section = root.section("find")
    drcm_section = root.section("drcm")
    normalization = _parse_normalization(root)
    with _field("find"):
        find = FindConfig(
            generator=generator,
            reward=reward,
            dim=dim,
            seed=root.integer("seed", 0),
            batch_size=find_section.integer("batch_size", 1, minimum=1),
            total_steps=find_section.integer("total_steps", 150, minimum=0),
            lr=find_section.number("lr", 1e-3, positive=True),
            clip_margin=_clip_margin(find_section),
            ratio_mode=find_section.choice("ratio_mode", RatioMode, RatioMode.PER_DIM_GEO_MEAN),
            clip_mode=find_section.choice("clip_mode", ClipMode, ClipMode.DROP),
            replay_window=find_section.integer("replay_window", 1, minimum=1),
            inner_epochs=find_section.integer("inner_epochs", 1, minimum=1),
            log_sigma_floor=find_section.number("log_sigma_floor", -10.0),
            adam=_parse_adam(find_section.section("adam"), weight_decay=0.01),
            drcm=_parse_drcm(drcm_section),
            early_stop=_parse_early_stop(find_section.section("early_stop")),
            reward_normalization=normalization,
        )
    find_section.finish()

    eval_section = root.section("eval")
    settings = EvalSettings(
        samples=eval_section.integer("samples", 1000, minimum=2),
        fd_step=eval_section.number("fd_step", 1e-3, positive=True),
    )
    eval_section.finish()

    config = ExperimentConfig(
        find=find,
        output_dir=root.string("output_dir", DEFAULT_OUTPUT_DIR),
        log_every=root.integer("log_every", 1, minimum=1),
        eval=settings,
        condition=condition,
    )
    root.finish()
    return config


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    find = config.find
    return {
        "seed": find.seed,
        "dim": find.dim,
        "condition": config.condition,
        "output_dir": config.output_dir,
        "log_every": config.log_every,
        "find": {
            "batch_size": find.batch_size,
            "total_steps": find.total_steps,
            "lr": find.lr,
            "clip_margin": None if math.isinf(find.clip_margin) else find.clip_margin,
            "ratio_mode": find.ratio_mode.value,
            "clip_mode": find.clip_mode.value,
            "replay_window": find.replay_window,
            "inner_epochs": find.inner_epochs,
            "log_sigma_floor": find.log_sigma_floor,
            "adam": find.adam.to_dict(),
            "early_stop": find.early_stop.to_dict(),
        },
        "drcm": find.drcm.to_dict(),
        "generator": find.generator.to_dict(),
        "reward": find.reward.to_dict(),
        "reward_normalization": (
            None if find.reward_normalization is None else find.reward_normalization.to_dict()
        ),
        "eval": {"samples": config.eval.samples, "fd_step": config.eval.fd_step},
    }


def dump_config(config: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n"


def apply_overrides(
    config: ExperimentConfig,
    *,
    seed: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> ExperimentConfig:
    """Command-line and environment values win over the file."""
    if seed is not None:
        config = replace(config, find=replace(config.find, seed=int(seed)))
    if output_dir is not None:
        config = replace(config, output_dir=str(output_dir))
    log(f"Using seed: {config.seed}")
    log(f"Using output directory: {config.output_dir}")
    log(f"Resolved config:\n{preview(config_to_dict(config))}")
    return config


@contextmanager
def _field(path: str) -> Iterator[None]:
    try:
        yield
    except ConfigError:
        raise
    except (InvalidArgumentError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"Invalid {path}: {exc}") from exc


class _Section:
    def __init__(self, raw: Any, path: str) -> None:
        if not isinstance(raw, dict):
            raise ConfigError(f"{path or 'config'} must be a JSON object.")
        self._raw = raw
        self.path = path
        self._seen: set[str] = set()

    def key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def has(self, name: str) -> bool:
        return name in self._raw

    def get(self, name: str, default: Any = _MISSING) -> Any:
        self._seen.add(name)
        if name not in self._raw:
            if default is _MISSING:
                raise ConfigError(f"{self.key(name)} is required.")
            return default
        return self._raw[name]

    def section(self, name: str, *, required: bool = False) -> _Section:
        value = self.get(name) if required else self.get(name, None)
        return _Section({} if value is None else value, self.key(name))

    def number(self, name: str, default: float, *, positive: bool = False) -> float:
        return _number(self.get(name, default), self.key(name), positive=positive)

    def integer(self, name: str, default: int, *, minimum: Optional[int] = None) -> int:
        return _integer(self.get(name, default), self.key(name), minimum=minimum)

    def boolean(self, name: str, default: bool) -> bool:
        value = self.get(name, default)
        if not isinstance(value, bool):
            raise ConfigError(f"{self.key(name)} must be true or false, got {value!r}.")
        return value

    def string(self, name: str, default: str) -> str:
        value = self.get(name, default)
        if not isinstance(value, str):
            raise ConfigError(f"{self.key(name)} must be a string, got {value!r}.")
        return value

    def choice(self, name: str, enum: Any, default: Any) -> Any:
        value = self.get(name, default.value)
        try:
            return enum(value)
        except ValueError:
            allowed = ", ".join(member.value for member in enum)
            raise ConfigError(f"{self.key(name)} must be one of {allowed}; got {value!r}.") from None

    def finish(self) -> None:
        unknown = sorted(set(self._raw) - self._seen)
        if unknown:
            raise ConfigError(f"Unknown config key: {self.key(unknown[0])}")


def _number(value: Any, path: str, *, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}.")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path} must be finite.")
    if positive and value <= 0:
        raise ConfigError(f"{path} must be > 0, got {value}.")
    return value


def _integer(value: Any, path: str, *, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer, got {value!r}.")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path} must be >= {minimum}, got {value}.")
    return value


def _clip_margin(section: _Section) -> float:
    value = section.get("clip_margin", 0.02)
    if value is None:
        return math.inf
    return _number(value, section.key("clip_margin"), positive=True)


def _parse_adam(section: _Section, *, weight_decay: float) -> AdamSettings:
    with _field(section.path):
        settings = AdamSettings(
            beta1=section.number("beta1", 0.9),
            beta2=section.number("beta2", 0.999),
            eps=section.number("eps", 1e-8, positive=True),
            weight_decay=section.number("weight_decay", weight_decay),
        )
    section.finish()
    return settings


def _parse_drcm(section: _Section) -> DrcmSettings:
    enabled = section.boolean("enabled", True)
    hidden = section.integer("hidden", 64, minimum=1)
    lr = section.number("lr", 1e-3, positive=True)
    input_mode = section.choice("input_mode", InputMode, InputMode.CONCAT)
    # optimizer keys sit flat in this section
    adam = _parse_adam(section, weight_decay=0.0)
    return DrcmSettings(enabled=enabled, hidden=hidden, lr=lr, input_mode=input_mode, adam=adam)


def _parse_early_stop(section: _Section) -> EarlyStopSettings:
    with _field(section.path):
        settings = EarlyStopSettings(
            enabled=section.boolean("enabled", False),
            smoothing_sigma=section.number("smoothing_sigma", 5.0, positive=True),
            window=section.integer("window", 30, minimum=1),
            tolerance=section.number("tolerance", 1e-3),
        )
    section.finish()
    return settings


def _parse_normalization(root: _Section) -> Optional[RewardNormalization]:
    if root.get("reward_normalization", None) is None:
        return None
    section = root.section("reward_normalization")
    with _field(section.path):
        normalization = RewardNormalization(
            shift=section.number("shift", 0.0),
            scale=section.number("scale", 1.0, positive=True),
        )
    section.finish()
    return normalization


def _parse_mixture(section: _Section) -> GaussianMixture:
    with _field(section.path):
        mixture = GaussianMixture(
            weights=section.get("weights"),
            means=section.get("means"),
            stds=section.get("stds"),
        )
    section.finish()
    return mixture


def _parse_generator(section: _Section) -> GeneratorSpec:
    kind = section.choice("kind", GeneratorKind, GeneratorKind.IDENTITY)
    with _field(section.path):
        if kind is GeneratorKind.IDENTITY:
            spec = GeneratorSpec(kind=kind)
        elif kind is GeneratorKind.LINEAR:
            spec = GeneratorSpec(kind=kind, matrix=section.get("matrix"), offset=section.get("offset", None))
        else:
            schedule_section = section.section("schedule")
            schedule = make_linear_schedule(
                schedule_section.integer("steps", 1000, minimum=1),
                beta_min=schedule_section.number("beta_min", 1e-4, positive=True),
                beta_max=schedule_section.number("beta_max", 0.02, positive=True),
            )
            schedule_section.finish()
            spec = GeneratorSpec(
                kind=kind,
                mixture=_parse_mixture(section.section("mixture", required=True)),
                schedule=schedule,
                stride=section.integer("stride", DEFAULT_STRIDE, minimum=1),
            )
    section.finish()
    return spec


def _parse_reward(section: _Section, fallback_mixture: Optional[GaussianMixture]) -> RewardSpec:
    kind = section.choice("kind", RewardKind, RewardKind.NEG_SQ_DIST)
    with _field(section.path):
        if kind is RewardKind.NEG_SQ_DIST:
            spec = RewardSpec(kind=kind, target=section.get("target"))
        elif kind is RewardKind.WEIGHTED_SUM:
            terms = section.get("terms")
            if not isinstance(terms, list):
                raise ConfigError(f"{section.key('terms')} must be a list.")
            parsed = []
            for index, term in enumerate(terms):
                term_section = _Section(term, f"{section.key('terms')}[{index}]")
                weight = term_section.number("weight", 1.0)
                member = _parse_reward(term_section.section("reward", required=True), fallback_mixture)
                term_section.finish()
                parsed.append((member, weight))
            spec = RewardSpec(kind=kind, terms=tuple(parsed))
        else:
            if section.has("mixture"):
                mixture = _parse_mixture(section.section("mixture"))
            elif fallback_mixture is not None:
                mixture = fallback_mixture
            else:
                raise ConfigError(f"{section.key('mixture')} is required unless the generator has a mixture.")
            component = section.integer("component", 0, minimum=0) if kind is RewardKind.MODE_INDICATOR else 0
            spec = RewardSpec(kind=kind, mixture=mixture, component=component)
    section.finish()
    return spec


def _with_condition(spec: RewardSpec, condition: str) -> RewardSpec:
    terms = tuple((_with_condition(member, condition), weight) for member, weight in spec.terms)
    return replace(spec, condition=condition, terms=terms)
