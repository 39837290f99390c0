"""Adaptive-moment updates with decoupled weight decay over flat float64 vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class AdamSettings:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self) -> None:
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidArgumentError("AdamW betas must lie in [0, 1).")
        if self.eps <= 0 or self.weight_decay < 0:
            raise InvalidArgumentError("AdamW needs eps > 0 and weight_decay >= 0.")

    def to_dict(self) -> dict[str, float]:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "weight_decay": self.weight_decay,
        }


@dataclass
class OptimState:
    m1: np.ndarray
    m2: np.ndarray
    step_count: int = 0
    settings: AdamSettings = field(default_factory=AdamSettings)

    def __post_init__(self) -> None:
        self.m1 = np.array(self.m1, dtype=np.float64)
        self.m2 = np.array(self.m2, dtype=np.float64)
        if self.m1.shape != self.m2.shape or self.m1.ndim != 1:
            raise InvalidArgumentError("Moment vectors must be matching 1-D arrays.")
        if self.step_count < 0:
            raise InvalidArgumentError("step_count must be nonnegative.")

    @classmethod
    def zeros(cls, size: int, settings: AdamSettings | None = None) -> OptimState:
        return cls(m1=np.zeros(size), m2=np.zeros(size), settings=settings or AdamSettings())

    @property
    def beta1(self) -> float:
        return self.settings.beta1

    @property
    def beta2(self) -> float:
        return self.settings.beta2

    @property
    def eps(self) -> float:
        return self.settings.eps

    @property
    def weight_decay(self) -> float:
        return self.settings.weight_decay

    def copy(self) -> OptimState:
        return OptimState(m1=self.m1.copy(), m2=self.m2.copy(), step_count=self.step_count, settings=self.settings)

    def to_dict(self) -> dict[str, Any]:
        return {
            "m1": self.m1.tolist(),
            "m2": self.m2.tolist(),
            "step_count": self.step_count,
            **self.settings.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> OptimState:
        settings = AdamSettings(
            beta1=payload["beta1"],
            beta2=payload["beta2"],
            eps=payload["eps"],
            weight_decay=payload["weight_decay"],
        )
        return cls(m1=payload["m1"], m2=payload["m2"], step_count=payload["step_count"], settings=settings)


def adamw_step(params: np.ndarray, grad: np.ndarray, state: OptimState, lr: float) -> np.ndarray:
    """Return updated parameters; ``state`` moments and step counter advance in place."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != grad.shape or params.shape != state.m1.shape:
        raise InvalidArgumentError(
            f"Shape mismatch: params {params.shape}, grad {grad.shape}, moments {state.m1.shape}."
        )
    if not np.all(np.isfinite(grad)):
        raise InvalidArgumentError("Gradient contains non-finite entries.")

    beta1, beta2 = state.beta1, state.beta2
    state.step_count += 1
    state.m1 = beta1 * state.m1 + (1.0 - beta1) * grad
    state.m2 = beta2 * state.m2 + (1.0 - beta2) * grad * grad

    bias_correction1 = 1.0 - beta1**state.step_count
    bias_correction2 = 1.0 - beta2**state.step_count
    denom = np.sqrt(state.m2 / bias_correction2) + state.eps
    step_size = lr / bias_correction1

    # decoupled decay acts on the pre-update parameters
    decayed = params - lr * state.weight_decay * params
    return decayed - step_size * state.m1 / denom
