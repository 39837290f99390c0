"""Synthetic reward functions f_r(c, z_0)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .environment import GaussianMixture, responsibilities
from .errors import InvalidArgumentError


class RewardKind(str, Enum):
    NEG_SQ_DIST = "neg_sq_dist"
    MIXTURE_LOG_DENSITY = "mixture_log_density"
    MODE_INDICATOR = "mode_indicator"
    WEIGHTED_SUM = "weighted_sum"


@dataclass(frozen=True, eq=False)
class RewardSpec:
    kind: RewardKind
    condition: str = ""
    target: Optional[np.ndarray] = None
    mixture: Optional[GaussianMixture] = None
    component: int = 0
    terms: tuple[tuple[RewardSpec, float], ...] = ()

    def __post_init__(self) -> None:
        kind = RewardKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is RewardKind.NEG_SQ_DIST:
            if self.target is None:
                raise InvalidArgumentError("neg_sq_dist needs a target vector.")
            target = np.array(self.target, dtype=np.float64)
            if target.ndim != 1 or not np.all(np.isfinite(target)):
                raise InvalidArgumentError("neg_sq_dist target must be a finite vector.")
            target.setflags(write=False)
            object.__setattr__(self, "target", target)
        elif kind in (RewardKind.MIXTURE_LOG_DENSITY, RewardKind.MODE_INDICATOR):
            if self.mixture is None:
                raise InvalidArgumentError(f"{kind.value} needs a mixture.")
            if kind is RewardKind.MODE_INDICATOR and not 0 <= self.component < self.mixture.K:
                raise InvalidArgumentError(
                    f"Target component {self.component} is out of range for a {self.mixture.K}-component mixture."
                )
        else:
            if not self.terms:
                raise InvalidArgumentError("weighted_sum needs at least one term.")
            terms = tuple((member, float(weight)) for member, weight in self.terms)
            if not all(np.isfinite(weight) for _, weight in terms):
                raise InvalidArgumentError("weighted_sum weights must be finite.")
            object.__setattr__(self, "terms", terms)

    @property
    def dim(self) -> Optional[int]:
        if self.kind is RewardKind.NEG_SQ_DIST:
            return int(self.target.size)
        if self.mixture is not None:
            return self.mixture.dim
        dims = {member.dim for member, _ in self.terms} - {None}
        return dims.pop() if len(dims) == 1 else None

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"kind": self.kind.value}
        if self.kind is RewardKind.NEG_SQ_DIST:
            payload["target"] = self.target.tolist()
        elif self.kind is RewardKind.WEIGHTED_SUM:
            payload["terms"] = [
                {"weight": weight, "reward": member.to_dict()} for member, weight in self.terms
            ]
        else:
            payload["mixture"] = self.mixture.to_dict()
            if self.kind is RewardKind.MODE_INDICATOR:
                payload["component"] = self.component
        return payload


@dataclass(frozen=True)
class RewardNormalization:
    """Affine rescaling ``(r - shift) / scale`` applied to raw rewards."""

    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.shift) or not np.isfinite(self.scale) or self.scale <= 0:
            raise InvalidArgumentError("Reward normalization needs a finite shift and a positive scale.")

    def apply(self, rewards: np.ndarray) -> np.ndarray:
        return (np.asarray(rewards, dtype=np.float64) - self.shift) / self.scale

    def to_dict(self) -> dict[str, float]:
        return {"shift": self.shift, "scale": self.scale}


def mixture_log_density(mixture: GaussianMixture, z: Any) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    per_dim = norm.logpdf(z[..., None, :], loc=mixture.means, scale=mixture.stds)
    with np.errstate(divide="ignore"):
        log_weights = np.log(mixture.weights)
    return logsumexp(log_weights + per_dim.sum(axis=-1), axis=-1)


def evaluate_batch(spec: RewardSpec, z_0: Any) -> np.ndarray:
    z = np.asarray(z_0, dtype=np.float64)
    if z.ndim == 0 or not np.all(np.isfinite(z)):
        raise InvalidArgumentError("Reward input must be a finite vector or batch of vectors.")
    expected = spec.dim
    if expected is not None and z.shape[-1] != expected:
        raise InvalidArgumentError(f"Reward expects dimension {expected}, got {z.shape[-1]}.")

    if spec.kind is RewardKind.NEG_SQ_DIST:
        return -np.sum((z - spec.target) ** 2, axis=-1)
    if spec.kind is RewardKind.MIXTURE_LOG_DENSITY:
        return mixture_log_density(spec.mixture, z)
    if spec.kind is RewardKind.MODE_INDICATOR:
        winner = np.argmax(responsibilities(spec.mixture, z, 1.0), axis=-1)
        return (winner == spec.component).astype(np.float64)

    total = np.zeros(z.shape[:-1])
    for member, weight in spec.terms:
        total = total + weight * evaluate_batch(member, z)
    return total


def evaluate(spec: RewardSpec, z_0: Any) -> float:
    z = np.asarray(z_0, dtype=np.float64)
    if z.ndim != 1:
        raise InvalidArgumentError(f"evaluate takes a single vector, got shape {z.shape}.")
    return float(evaluate_batch(spec, z))
