"""Deterministic generators mapping initial noise z_T to an output z_0.

The exact-DDIM generator replaces a frozen neural denoiser with the closed-form
posterior mean of Gaussian-mixture data, so the whole reverse chain is an
analytic function of z_T.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

import numpy as np
from scipy.special import softmax
from scipy.stats import norm

from .errors import InvalidArgumentError
from .policy import Action


def _frozen(values: Any, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    if array.ndim != ndim:
        raise InvalidArgumentError(f"{name} must have {ndim} dimension(s), got shape {array.shape}.")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    alpha_bar: np.ndarray
    beta_min: Optional[float] = None
    beta_max: Optional[float] = None

    def __post_init__(self) -> None:
        alpha_bar = _frozen(self.alpha_bar, 1, "alpha_bar")
        if alpha_bar.size < 2:
            raise InvalidArgumentError("A noise schedule needs at least one diffusion step.")
        if alpha_bar[0] != 1.0:
            raise InvalidArgumentError(f"alpha_bar[0] must be exactly 1, got {alpha_bar[0]!r}.")
        if not np.all(np.diff(alpha_bar) < 0):
            raise InvalidArgumentError("alpha_bar must be strictly decreasing in t.")
        if not np.all((alpha_bar > 0) & (alpha_bar <= 1)):
            raise InvalidArgumentError("alpha_bar entries must lie in (0, 1].")
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def T(self) -> int:
        return int(self.alpha_bar.size - 1)

    def to_dict(self) -> dict[str, Any]:
        if self.beta_min is not None and self.beta_max is not None:
            return {"steps": self.T, "beta_min": self.beta_min, "beta_max": self.beta_max}
        return {"alpha_bar": [float(value) for value in self.alpha_bar]}


def make_linear_schedule(T: int, beta_min: float = 1e-4, beta_max: float = 0.02) -> NoiseSchedule:
    if T < 1:
        raise InvalidArgumentError(f"Schedule length T must be at least 1, got {T}.")
    if not 0 < beta_min <= beta_max < 1:
        raise InvalidArgumentError(
            f"Need 0 < beta_min <= beta_max < 1, got beta_min={beta_min}, beta_max={beta_max}."
        )
    betas = np.linspace(beta_min, beta_max, T)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return NoiseSchedule(alpha_bar=alpha_bar, beta_min=float(beta_min), beta_max=float(beta_max))


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self) -> None:
        weights = _frozen(self.weights, 1, "weights")
        means = _frozen(self.means, 2, "means")
        stds = _frozen(self.stds, 2, "stds")
        if weights.size == 0:
            raise InvalidArgumentError("A mixture needs at least one component.")
        if means.shape[0] != weights.size or stds.shape != means.shape:
            raise InvalidArgumentError(
                f"Mixture shapes disagree: weights {weights.shape}, means {means.shape}, stds {stds.shape}."
            )
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("Mixture weights must be nonnegative and sum to 1.")
        if not np.all(stds > 0):
            raise InvalidArgumentError("Mixture standard deviations must be positive.")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def K(self) -> int:
        return int(self.weights.size)

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def to_dict(self) -> dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> GaussianMixture:
        return cls(weights=payload["weights"], means=payload["means"], stds=payload["stds"])


def _as_points(mixture: GaussianMixture, z: Any) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 0 or z.shape[-1] != mixture.dim:
        raise InvalidArgumentError(
            f"Point dimension {z.shape[-1] if z.ndim else 0} does not match mixture dimension {mixture.dim}."
        )
    return z


def _check_alpha_bar(alpha_bar_t: float) -> None:
    if not 0 < alpha_bar_t <= 1:
        raise InvalidArgumentError(f"alpha_bar_t must lie in (0, 1], got {alpha_bar_t}.")


def responsibilities(mixture: GaussianMixture, z_t: Any, alpha_bar_t: float) -> np.ndarray:
    """Posterior component weights given a noised observation; rows sum to 1."""
    z_t = _as_points(mixture, z_t)
    _check_alpha_bar(alpha_bar_t)
    root = np.sqrt(alpha_bar_t)
    scale = np.sqrt(alpha_bar_t * mixture.stds**2 + (1.0 - alpha_bar_t))
    per_dim = norm.logpdf(z_t[..., None, :], loc=root * mixture.means, scale=scale)
    with np.errstate(divide="ignore"):
        log_weights = np.log(mixture.weights)
    return softmax(log_weights + per_dim.sum(axis=-1), axis=-1)


def posterior_mean(mixture: GaussianMixture, z_t: Any, alpha_bar_t: float) -> np.ndarray:
    """Exact E[z_0 | z_t] for mixture data under the forward noising process."""
    z_t = _as_points(mixture, z_t)
    _check_alpha_bar(alpha_bar_t)
    signal = alpha_bar_t * mixture.stds**2
    total = signal + (1.0 - alpha_bar_t)
    gain = np.sqrt(alpha_bar_t) * mixture.stds**2 / total
    prior_pull = (1.0 - alpha_bar_t) / total
    per_component = prior_pull * mixture.means + gain * z_t[..., None, :]
    weights = responsibilities(mixture, z_t, alpha_bar_t)
    return np.sum(weights[..., :, None] * per_component, axis=-2)


def ddim_update(z_t: Any, x0: Any, alpha_bar_t: float, alpha_bar_prev: float) -> np.ndarray:
    """Deterministic DDIM move from noise level alpha_bar_t to alpha_bar_prev given a clean estimate."""
    if not alpha_bar_t < 1:
        raise InvalidArgumentError(f"alpha_bar_t must be below 1 for a reverse step, got {alpha_bar_t}.")
    z_t = np.asarray(z_t, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    eps = (z_t - np.sqrt(alpha_bar_t) * x0) / np.sqrt(1.0 - alpha_bar_t)
    return np.sqrt(alpha_bar_prev) * x0 + np.sqrt(1.0 - alpha_bar_prev) * eps


def ddim_step(
    mixture: GaussianMixture,
    schedule: NoiseSchedule,
    z_t: Any,
    t: int,
    t_prev: int,
) -> np.ndarray:
    if not 0 <= t_prev < t <= schedule.T:
        raise InvalidArgumentError(f"Need 0 <= t_prev < t <= {schedule.T}, got t={t}, t_prev={t_prev}.")
    alpha_bar_t = float(schedule.alpha_bar[t])
    x0 = posterior_mean(mixture, z_t, alpha_bar_t)
    return ddim_update(z_t, x0, alpha_bar_t, float(schedule.alpha_bar[t_prev]))


class GeneratorKind(str, Enum):
    IDENTITY = "identity"
    LINEAR = "linear"
    EXACT_DDIM = "exact_ddim"


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    kind: GeneratorKind
    condition: str = ""
    matrix: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    mixture: Optional[GaussianMixture] = None
    schedule: Optional[NoiseSchedule] = None
    stride: int = 1

    def __post_init__(self) -> None:
        kind = GeneratorKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is GeneratorKind.LINEAR:
            if self.matrix is None:
                raise InvalidArgumentError("A linear generator needs a matrix.")
            matrix = _frozen(self.matrix, 2, "matrix")
            if matrix.shape[0] != matrix.shape[1]:
                raise InvalidArgumentError(f"Linear generator matrix must be square, got {matrix.shape}.")
            offset = np.zeros(matrix.shape[0]) if self.offset is None else self.offset
            offset = _frozen(offset, 1, "offset")
            if offset.size != matrix.shape[0]:
                raise InvalidArgumentError(
                    f"Linear generator offset has length {offset.size}, expected {matrix.shape[0]}."
                )
            object.__setattr__(self, "matrix", matrix)
            object.__setattr__(self, "offset", offset)
        elif kind is GeneratorKind.EXACT_DDIM:
            if self.mixture is None or self.schedule is None:
                raise InvalidArgumentError("An exact_ddim generator needs a mixture and a schedule.")
            if self.stride < 1 or self.schedule.T % self.stride:
                raise InvalidArgumentError(
                    f"Stride {self.stride} must be positive and divide T={self.schedule.T} evenly."
                )

    @property
    def dim(self) -> Optional[int]:
        if self.kind is GeneratorKind.LINEAR:
            return int(self.matrix.shape[0])
        if self.kind is GeneratorKind.EXACT_DDIM:
            return self.mixture.dim
        return None

    def timesteps(self) -> list[int]:
        """Reverse-chain timesteps ``T, T - stride, ..., 0`` for exact_ddim."""
        if self.kind is not GeneratorKind.EXACT_DDIM:
            return []
        return list(range(self.schedule.T, -1, -self.stride))

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"kind": self.kind.value}
        if self.kind is GeneratorKind.LINEAR:
            payload["matrix"] = self.matrix.tolist()
            payload["offset"] = self.offset.tolist()
        elif self.kind is GeneratorKind.EXACT_DDIM:
            payload["mixture"] = self.mixture.to_dict()
            payload["schedule"] = self.schedule.to_dict()
            payload["stride"] = self.stride
        return payload


def generate_batch(spec: GeneratorSpec, z_T: Any) -> np.ndarray:
    z = np.asarray(z_T, dtype=np.float64)
    if z.ndim == 0:
        raise InvalidArgumentError("Generator input must be a vector or a batch of vectors.")
    expected = spec.dim
    if expected is not None and z.shape[-1] != expected:
        raise InvalidArgumentError(f"Generator expects dimension {expected}, got {z.shape[-1]}.")

    if spec.kind is GeneratorKind.IDENTITY:
        return z.copy()
    if spec.kind is GeneratorKind.LINEAR:
        return z @ spec.matrix.T + spec.offset

    steps = spec.timesteps()
    for t, t_prev in zip(steps[:-1], steps[1:]):
        z = ddim_step(spec.mixture, spec.schedule, z, t, t_prev)
    return z


def generate(spec: GeneratorSpec, z_T: Action) -> np.ndarray:
    return generate_batch(spec, z_T.z)
