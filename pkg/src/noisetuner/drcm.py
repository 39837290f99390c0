"""Dynamic reward calibration: a 3-layer MLP g(theta) predicting the expected reward.

The network is trained online with one AdamW step per iteration against the
mean squared error between its prediction and the rewards sampled under the
current policy. Gradients are computed by explicit backpropagation; the policy
input is a constant, so nothing flows back into theta.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .adamw import AdamSettings, OptimState, adamw_step
from .errors import InvalidArgumentError
from .policy import Policy
from .rng import make_rng

SUMMARY_WIDTH = 8


class InputMode(str, Enum):
    CONCAT = "concat"
    SUMMARY = "summary"


@dataclass(frozen=True)
class DrcmSettings:
    enabled: bool = True
    hidden: int = 64
    lr: float = 1e-3
    input_mode: InputMode = InputMode.CONCAT
    adam: AdamSettings = AdamSettings(weight_decay=0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_mode", InputMode(self.input_mode))
        if self.hidden < 1:
            raise InvalidArgumentError(f"DRCM hidden width must be positive, got {self.hidden}.")
        if not self.lr > 0:
            raise InvalidArgumentError(f"DRCM learning rate must be positive, got {self.lr}.")

    def to_dict(self) -> dict[str, Any]:
        return {
            "enabled": self.enabled,
            "hidden": self.hidden,
            "lr": self.lr,
            "input_mode": self.input_mode.value,
            **self.adam.to_dict(),
        }


def input_width(dim: int, mode: InputMode) -> int:
    return 2 * dim if InputMode(mode) is InputMode.CONCAT else SUMMARY_WIDTH


def encode_policy(policy: Policy, mode: InputMode) -> np.ndarray:
    if InputMode(mode) is InputMode.CONCAT:
        return policy.params()
    features = []
    for block in (policy.mu, policy.log_sigma):
        features.extend([block.mean(), block.std(), block.min(), block.max()])
    return np.array(features, dtype=np.float64)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _relu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, 0.0)


@dataclass
class BaselineNet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    optim_state: OptimState
    input_mode: InputMode = InputMode.CONCAT

    def __post_init__(self) -> None:
        self.weights = [np.array(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.array(b, dtype=np.float64) for b in self.biases]
        self.input_mode = InputMode(self.input_mode)
        if len(self.weights) != 3 or len(self.biases) != 3:
            raise InvalidArgumentError("BaselineNet has exactly three layers.")
        fan_in = self.weights[0].shape[1]
        for weight, bias in zip(self.weights, self.biases):
            if weight.ndim != 2 or weight.shape[1] != fan_in or bias.shape != (weight.shape[0],):
                raise InvalidArgumentError("BaselineNet layer shapes are inconsistent.")
            fan_in = weight.shape[0]
        if self.weights[2].shape[0] != 1:
            raise InvalidArgumentError("BaselineNet output layer must be scalar.")
        if self.optim_state.m1.size != self.num_params:
            raise InvalidArgumentError("BaselineNet optimizer state does not match its parameter count.")

    @classmethod
    def initialize(
        cls,
        dim: int,
        hidden: int = 64,
        seed: int = 0,
        input_mode: InputMode = InputMode.CONCAT,
        adam: AdamSettings | None = None,
    ) -> BaselineNet:
        """Glorot-uniform weights, zero biases, drawn from the stream keyed by ``seed``."""
        rng = make_rng(seed)
        widths = [input_width(dim, input_mode), hidden, hidden, 1]
        weights = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases = [np.zeros(width) for width in widths[1:]]
        return cls._with_fresh_state(weights, biases, input_mode, adam)

    @classmethod
    def zeros(
        cls,
        dim: int,
        hidden: int = 64,
        input_mode: InputMode = InputMode.CONCAT,
        adam: AdamSettings | None = None,
    ) -> BaselineNet:
        widths = [input_width(dim, input_mode), hidden, hidden, 1]
        weights = [np.zeros((fan_out, fan_in)) for fan_in, fan_out in zip(widths[:-1], widths[1:])]
        biases = [np.zeros(width) for width in widths[1:]]
        return cls._with_fresh_state(weights, biases, input_mode, adam)

    @classmethod
    def _with_fresh_state(
        cls,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        input_mode: InputMode,
        adam: AdamSettings | None,
    ) -> BaselineNet:
        size = sum(w.size + b.size for w, b in zip(weights, biases))
        settings = adam or AdamSettings(weight_decay=0.0)
        return cls(weights, biases, OptimState.zeros(size, settings), input_mode)

    @property
    def input_width(self) -> int:
        return int(self.weights[0].shape[1])

    @property
    def hidden(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flat_params(self) -> np.ndarray:
        return np.concatenate([part.ravel() for pair in zip(self.weights, self.biases) for part in pair])

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.num_params:
            raise InvalidArgumentError(f"Expected {self.num_params} parameters, got {flat.size}.")
        offset = 0
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            self.weights[index] = flat[offset : offset + weight.size].reshape(weight.shape).copy()
            offset += weight.size
            self.biases[index] = flat[offset : offset + bias.size].copy()
            offset += bias.size

    def encode(self, policy: Policy) -> np.ndarray:
        x = encode_policy(policy, self.input_mode)
        if x.size != self.input_width:
            raise InvalidArgumentError(
                f"Policy encoding has width {x.size}, network expects {self.input_width}."
            )
        return x

    def forward(self, x: np.ndarray) -> tuple[float, list[np.ndarray]]:
        w1, w2, w3 = self.weights
        b1, b2, b3 = self.biases
        z1 = w1 @ x + b1
        a1 = _relu(z1)
        z2 = w2 @ a1 + b2
        a2 = _relu(z2)
        y = w3 @ a2 + b3
        return float(y[0]), [x, z1, a1, z2, a2]

    def backward(self, cache: list[np.ndarray], d_out: float) -> np.ndarray:
        """Flat gradient of a scalar loss given d(loss)/d(output)."""
        x, z1, a1, z2, a2 = cache
        w2, w3 = self.weights[1], self.weights[2]
        dy = np.array([d_out])
        dw3 = np.outer(dy, a2)
        db3 = dy
        dz2 = _relu_grad(z2) * (w3.T @ dy)
        dw2 = np.outer(dz2, a1)
        db2 = dz2
        dz1 = _relu_grad(z1) * (w2.T @ dz2)
        dw1 = np.outer(dz1, x)
        db1 = dz1
        return np.concatenate([part.ravel() for part in (dw1, db1, dw2, db2, dw3, db3)])

    def copy(self) -> BaselineNet:
        return BaselineNet(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.optim_state.copy(),
            self.input_mode,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_mode": self.input_mode.value,
            "shapes": [list(w.shape) for w in self.weights],
            "params": self.flat_params().tolist(),
            "optim_state": self.optim_state.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> BaselineNet:
        shapes = [tuple(shape) for shape in payload["shapes"]]
        weights = [np.zeros(shape) for shape in shapes]
        biases = [np.zeros(shape[0]) for shape in shapes]
        net = cls(weights, biases, OptimState.from_dict(payload["optim_state"]), payload["input_mode"])
        net.set_flat_params(np.asarray(payload["params"], dtype=np.float64))
        return net


def predict(net: BaselineNet, policy: Policy) -> float:
    output, _ = net.forward(net.encode(policy))
    return output


def _checked_rewards(rewards: Sequence[float]) -> np.ndarray:
    values = np.asarray(rewards, dtype=np.float64).ravel()
    if values.size == 0:
        raise InvalidArgumentError("DRCM update needs at least one reward.")
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("DRCM rewards must be finite.")
    return values


def loss_and_gradient(net: BaselineNet, policy: Policy, rewards: Sequence[float]) -> tuple[float, np.ndarray]:
    """Mean squared error between g(theta) and the sampled rewards, with its parameter gradient."""
    values = _checked_rewards(rewards)
    output, cache = net.forward(net.encode(policy))
    residual = output - values
    loss = float(np.mean(residual**2))
    return loss, net.backward(cache, 2.0 * float(np.mean(residual)))


def update(net: BaselineNet, policy: Policy, rewards: Sequence[float], lr: float) -> float:
    """One AdamW step on the network; returns the pre-step loss."""
    loss, grad = loss_and_gradient(net, policy, rewards)
    net.set_flat_params(adamw_step(net.flat_params(), grad, net.optim_state, lr))
    return loss
