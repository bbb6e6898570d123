"""One-hidden-layer feed-forward network with flat float32 weight storage.

Weight layout is row-major with one row per neuron and the bias in the
trailing slot, so ``w_ih`` has hidden_dim * (input_dim + 1) entries and
``w_ho`` has output_dim * (hidden_dim + 1). The bias units are a deliberate
addition to the minimal sizing rule (without them a sigmoid net cannot move
its decision boundary off the origin); reports carry a deviation flag so the
difference is never silent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import NumericError, ShapeError, ValidationError
from .schema import GOOD, POOR

CHECKPOINT_VERSION = "glycemlp-net-v1"

# flagged in every training report: biases are not part of the minimal
# hidden*columns sizing rule this engine otherwise follows
DEVIATION_FLAGS = ("bias-terms-enabled",)


@dataclass(frozen=True)
class NetworkConfig:
    """Topology and optimizer constants; momentum is fixed at zero."""

    input_dim: int
    hidden_dim: int | None = None  # defaults to input_dim
    output_dim: int = 1
    learning_rate: float = 0.1
    momentum: float = 0.0
    seed: int = 0
    init_range: float = 0.5

    def __post_init__(self) -> None:
        if self.input_dim < 1:
            raise ValidationError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.hidden_dim is None:
            object.__setattr__(self, "hidden_dim", self.input_dim)
        if self.hidden_dim < 1:
            raise ValidationError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.output_dim != 1:
            raise ValidationError("output_dim is fixed at 1")
        if not (self.learning_rate > 0):
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.momentum != 0.0:
            raise ValidationError("momentum is fixed at 0")
        if not (self.init_range > 0):
            raise ValidationError(f"init_range must be positive, got {self.init_range}")

    @property
    def w_ih_len(self) -> int:
        return self.hidden_dim * (self.input_dim + 1)

    @property
    def w_ho_len(self) -> int:
        return self.output_dim * (self.hidden_dim + 1)


@dataclass
class Network:
    """Config plus the two flat weight arrays (mutated in place by training)."""

    config: NetworkConfig
    w_ih: np.ndarray
    w_ho: np.ndarray

    def __post_init__(self) -> None:
        for name, arr, want in (("w_ih", self.w_ih, self.config.w_ih_len),
                                ("w_ho", self.w_ho, self.config.w_ho_len)):
            if arr.dtype != np.float32 or arr.ndim != 1:
                raise ShapeError(f"{name} must be a flat float32 array")
            if arr.shape[0] != want:
                raise ShapeError(f"{name} length {arr.shape[0]} != required {want}")

    @property
    def w_ih2d(self) -> np.ndarray:
        return self.w_ih.reshape(self.config.hidden_dim, self.config.input_dim + 1)

    @property
    def w_ho2d(self) -> np.ndarray:
        return self.w_ho.reshape(self.config.output_dim, self.config.hidden_dim + 1)

    def copy(self) -> "Network":
        return Network(self.config, self.w_ih.copy(), self.w_ho.copy())

    def weights_finite(self) -> bool:
        return bool(np.isfinite(self.w_ih).all() and np.isfinite(self.w_ho).all())


@dataclass(frozen=True)
class Activations:
    hidden: np.ndarray  # float32, length hidden_dim
    output: np.ndarray  # float32, length output_dim


def sigmoid(x: float) -> float:
    """Logistic function 1/(1+e^-x); strictly inside (0,1) until float64 saturation."""
    return float(kernels.sigmoid64(float(x)))


def init_weights(config: NetworkConfig) -> Network:
    """Seeded i.i.d. uniform weights on [-init_range, +init_range)."""
    rng = np.random.default_rng(config.seed)
    r = config.init_range
    w_ih = rng.uniform(-r, r, config.w_ih_len).astype(np.float32)
    w_ho = rng.uniform(-r, r, config.w_ho_len).astype(np.float32)
    return Network(config, w_ih, w_ho)


def _as_instance(net: Network, instance) -> np.ndarray:
    x = np.ascontiguousarray(instance, dtype=np.float32)
    if x.ndim != 1 or x.shape[0] != net.config.input_dim:
        raise ShapeError(
            f"instance must have length {net.config.input_dim}, got shape {x.shape}"
        )
    return x


def forward(net: Network, instance) -> Activations:
    """Dense forward pass; every neuron reads every output of the layer below."""
    x = _as_instance(net, instance)
    hidden = np.empty(net.config.hidden_dim, dtype=np.float32)
    kernels.layer_forward_seq(net.w_ih2d, x, hidden)
    output = np.empty(net.config.output_dim, dtype=np.float32)
    kernels.layer_forward_seq(net.w_ho2d, hidden, output)
    return Activations(hidden=hidden, output=output)


def predict(net: Network, instance) -> str:
    """poor iff the output activation is at or above 0.5."""
    acts = forward(net, instance)
    return POOR if acts.output[0] >= np.float32(0.5) else GOOD


def loss_gradients(net: Network, instance, target: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Analytic gradients of E = (target - output)^2 / 2 for every weight.

    Returns float64 gradient arrays shaped like w_ih2d / w_ho2d plus the
    squared error at the current weights. Does not modify the network.
    """
    x = _as_instance(net, instance)
    if target not in (0, 1):
        raise ValidationError(f"target must be 0 or 1, got {target}")
    acts = forward(net, instance)
    o = acts.output
    err_o = np.array([float(o[0]) - float(target)], dtype=np.float64)
    delta_o = np.empty(1, dtype=np.float64)
    g_ho = np.empty((1, net.config.hidden_dim + 1), dtype=np.float64)
    kernels.layer_backward_seq(net.w_ho2d, acts.hidden, o, err_o, delta_o, g_ho)
    err_h = np.empty(net.config.hidden_dim, dtype=np.float64)
    kernels.backprop_error_seq(net.w_ho2d, delta_o, err_h)
    delta_h = np.empty(net.config.hidden_dim, dtype=np.float64)
    g_ih = np.empty((net.config.hidden_dim, net.config.input_dim + 1), dtype=np.float64)
    kernels.layer_backward_seq(net.w_ih2d, x, acts.hidden, err_h, delta_h, g_ih)
    error = 0.5 * (float(target) - float(o[0])) ** 2
    return g_ih, g_ho, error


def backprop_update(net: Network, instance, target: float, lr: float | None = None) -> float:
    """One in-place gradient-descent step on one instance; returns the
    pre-update squared error.

    Output deltas are formed from the output-vs-target difference first,
    hidden deltas by propagating them back through the output weights; the
    update is w <- w - lr * dE/dw with no momentum term.
    """
    x = _as_instance(net, instance)
    if target not in (0, 1):
        raise ValidationError(f"target must be 0 or 1, got {target}")
    rate = net.config.learning_rate if lr is None else float(lr)
    if rate < 0:
        raise ValidationError(f"learning rate must be non-negative, got {rate}")
    acts = forward(net, instance)
    o = acts.output
    if not math.isfinite(float(o[0])):
        raise NumericError("non-finite activation during update; training aborted")
    error = 0.5 * (float(target) - float(o[0])) ** 2
    err_o = np.array([float(o[0]) - float(target)], dtype=np.float64)
    delta_o = np.empty(1, dtype=np.float64)
    kernels.layer_deltas_seq(o, err_o, delta_o)
    err_h = np.empty(net.config.hidden_dim, dtype=np.float64)
    kernels.backprop_error_seq(net.w_ho2d, delta_o, err_h)
    delta_h = np.empty(net.config.hidden_dim, dtype=np.float64)
    kernels.layer_deltas_seq(acts.hidden, err_h, delta_h)
    # hidden layer first: its deltas were taken from the pre-update w_ho
    kernels.apply_deltas(net.w_ih2d, x, delta_h, rate)
    kernels.apply_deltas(net.w_ho2d, acts.hidden, delta_o, rate)
    return error


def checkpoint_dict(net: Network) -> dict:
    """Portable checkpoint document; field order is part of the format."""
    cfg = net.config
    return {
        "version": CHECKPOINT_VERSION,
        "config": {
            "input_dim": cfg.input_dim,
            "hidden_dim": cfg.hidden_dim,
            "output_dim": cfg.output_dim,
            "learning_rate": cfg.learning_rate,
            "momentum": cfg.momentum,
            "seed": cfg.seed,
            "init_range": cfg.init_range,
        },
        "w_ih": [float(v) for v in net.w_ih],
        "w_ho": [float(v) for v in net.w_ho],
    }


def network_from_dict(doc: dict) -> Network:
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(
            f"unsupported checkpoint version {doc.get('version')!r}; "
            f"expected {CHECKPOINT_VERSION}"
        )
    cfg = NetworkConfig(**doc["config"])
    w_ih = np.array(doc["w_ih"], dtype=np.float32)
    w_ho = np.array(doc["w_ho"], dtype=np.float32)
    return Network(cfg, w_ih, w_ho)


def save_checkpoint(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(net)), encoding="utf-8")


def load_checkpoint(path: str | Path) -> Network:
    return network_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
