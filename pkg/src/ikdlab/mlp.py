"""Small fully connected regressor: 2 inputs -> 32 -> 32 -> 1 output.

Maps (commanded velocity, observed yaw rate) to the joystick yaw rate that
produced it.  ReLU hidden layers, linear output head, MSE loss, analytic
backpropagation, AdamW updates.  Everything runs in double precision on
plain numpy arrays; no input normalization is applied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .align import AlignedDataset
from .errors import ParseError, ValidationError

LAYER_SIZES = (2, 32, 32, 1)
MODEL_VERSION = 1

_FIELDS = ("W1", "b1", "W2", "b2", "W3", "b3")
_SHAPES = {
    "W1": (32, 2), "b1": (32,),
    "W2": (32, 32), "b2": (32,),
    "W3": (1, 32), "b3": (1,),
}


@dataclass(frozen=True)
class MlpParams:
    """Network weights; shapes are fixed by LAYER_SIZES."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for name in _FIELDS:
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != _SHAPES[name]:
                raise ValidationError(
                    f"{name} has shape {arr.shape}, expected {_SHAPES[name]}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")

    @classmethod
    def zeros(cls) -> "MlpParams":
        return cls(**{n: np.zeros(_SHAPES[n]) for n in _FIELDS})


def init_params(rng: np.random.Generator) -> MlpParams:
    """Uniform init in +-1/sqrt(fan_in), applied to weights and biases."""
    vals = {}
    fan_in = {"W1": 2, "b1": 2, "W2": 32, "b2": 32, "W3": 32, "b3": 32}
    for name in _FIELDS:
        bound = 1.0 / np.sqrt(fan_in[name])
        vals[name] = rng.uniform(-bound, bound, size=_SHAPES[name])
    return MlpParams(**vals)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 50
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    seed: int = 0
    split_fraction: float = 0.1  # fraction of rows held out for the test split

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValidationError("split_fraction must be in (0, 1)")


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators and the step counter."""

    m: dict
    v: dict
    t: int = 0

    @classmethod
    def fresh(cls) -> "AdamState":
        return cls(m={n: np.zeros(_SHAPES[n]) for n in _FIELDS},
                   v={n: np.zeros(_SHAPES[n]) for n in _FIELDS})


@dataclass(frozen=True)
class LossCurve:
    train_mse: np.ndarray
    test_mse: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "train_mse", np.asarray(self.train_mse, dtype=float))
        object.__setattr__(self, "test_mse", np.asarray(self.test_mse, dtype=float))
        if self.train_mse.shape != self.test_mse.shape:
            raise ValidationError("loss curve arrays must have equal length")
        if np.any(self.train_mse < 0) or np.any(self.test_mse < 0):
            raise ValidationError("mse values must be non-negative")

    def __len__(self) -> int:
        return self.train_mse.size


def _forward_batch(p: MlpParams, X: np.ndarray):
    """Return activations needed for backprop: (z1, a1, z2, a2, out)."""
    z1 = X @ p.W1.T + p.b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ p.W2.T + p.b2
    a2 = np.maximum(z2, 0.0)
    out = a2 @ p.W3.T + p.b3
    return z1, a1, z2, a2, out[:, 0]


def forward(p: MlpParams, inputs) -> float | np.ndarray:
    """Evaluate the network on one (v, av) pair or a batch of them.

    A shape-(2,) input returns a scalar; shape-(n, 2) returns shape (n,).
    """
    X = np.asarray(inputs, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValidationError(f"inputs must have shape (2,) or (n, 2), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("inputs must be finite")
    out = _forward_batch(p, X)[4]
    return float(out[0]) if single else out


def loss_and_grads(p: MlpParams, X: np.ndarray, y: np.ndarray):
    """MSE over the batch and its exact analytic gradients.

    Returns:
        (mse, grads) with grads keyed like MlpParams fields.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2 or y.shape != (X.shape[0],):
        raise ValidationError("batch must be X:(n,2), y:(n,)")
    n = X.shape[0]
    if n == 0:
        raise ValidationError("batch must be non-empty")

    z1, a1, z2, a2, out = _forward_batch(p, X)
    resid = out - y
    mse = float(np.mean(resid * resid))

    d_out = (2.0 / n) * resid[:, None]          # (n, 1)
    g_W3 = d_out.T @ a2
    g_b3 = d_out.sum(axis=0)
    d_a2 = d_out @ p.W3                          # (n, 32)
    d_z2 = d_a2 * (z2 > 0.0)
    g_W2 = d_z2.T @ a1
    g_b2 = d_z2.sum(axis=0)
    d_a1 = d_z2 @ p.W2
    d_z1 = d_a1 * (z1 > 0.0)
    g_W1 = d_z1.T @ X
    g_b1 = d_z1.sum(axis=0)

    grads = {"W1": g_W1, "b1": g_b1, "W2": g_W2, "b2": g_b2,
             "W3": g_W3, "b3": g_b3}
    return mse, grads


def adamw_step(p: MlpParams, grads: dict, s: AdamState,
               cfg: TrainConfig) -> tuple[MlpParams, AdamState]:
    """One decoupled-weight-decay Adam update with bias correction.

    Weight decay is applied to every parameter tensor, biases included.
    """
    t = s.t + 1
    new_vals, new_m, new_v = {}, {}, {}
    bc1 = 1.0 - cfg.beta1 ** t
    bc2 = 1.0 - cfg.beta2 ** t
    for name in _FIELDS:
        g = np.asarray(grads[name], dtype=float)
        theta = getattr(p, name)
        if g.shape != theta.shape:
            raise ValidationError(f"grad {name} has shape {g.shape}, "
                                  f"expected {theta.shape}")
        m = cfg.beta1 * s.m[name] + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * s.v[name] + (1.0 - cfg.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        step = m_hat / (np.sqrt(v_hat) + cfg.eps_adam) + cfg.weight_decay * theta
        new_vals[name] = theta - cfg.lr * step
        new_m[name] = m
        new_v[name] = v
    return MlpParams(**new_vals), AdamState(m=new_m, v=new_v, t=t)


def _dataset_xy(data: AlignedDataset) -> tuple[np.ndarray, np.ndarray]:
    X = np.column_stack([data.v_joy, data.av_imu])
    y = np.asarray(data.av_joy, dtype=float)
    return X, y


def train(data: AlignedDataset, cfg: TrainConfig = TrainConfig()
          ) -> tuple[MlpParams, LossCurve]:
    """Train the regressor on aligned rows: inputs (v_joy, av_imu), target av_joy.

    Seeded and fully deterministic: weight init, train/test split, and the
    per-epoch shuffles all come from one generator seeded with cfg.seed.
    The loss curve holds full-split MSE evaluated after each epoch.
    """
    n = len(data)
    if n < 2 * cfg.batch_size:
        raise ValidationError(
            f"dataset has {n} rows; need at least {2 * cfg.batch_size}")

    rng = np.random.default_rng(cfg.seed)
    p = init_params(rng)
    s = AdamState.fresh()

    X, y = _dataset_xy(data)
    perm = rng.permutation(n)
    n_test = min(max(int(round(n * cfg.split_fraction)), 1), n - cfg.batch_size)
    test_idx = perm[:n_test]
    train_idx = perm[n_test:]
    X_tr, y_tr = X[train_idx], y[train_idx]
    X_te, y_te = X[test_idx], y[test_idx]

    train_mse = np.empty(cfg.epochs)
    test_mse = np.empty(cfg.epochs)
    n_tr = len(train_idx)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_tr)
        for start in range(0, n_tr, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, grads = loss_and_grads(p, X_tr[batch], y_tr[batch])
            p, s = adamw_step(p, grads, s, cfg)
        train_mse[epoch] = np.mean((forward(p, X_tr) - y_tr) ** 2)
        test_mse[epoch] = np.mean((forward(p, X_te) - y_te) ** 2)
    return p, LossCurve(train_mse=train_mse, test_mse=test_mse)


def save_model(p: MlpParams, path: str) -> None:
    payload = {
        "version": MODEL_VERSION,
        "layer_sizes": list(LAYER_SIZES),
        "weights": {name: getattr(p, name).tolist() for name in _FIELDS},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> MlpParams:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict) or "version" not in raw:
        raise ParseError(f"{path}: missing version field")
    if raw["version"] != MODEL_VERSION:
        raise ValidationError(
            f"{path}: model version {raw['version']!r}, expected {MODEL_VERSION}")
    if raw.get("layer_sizes") != list(LAYER_SIZES):
        raise ValidationError(
            f"{path}: layer sizes {raw.get('layer_sizes')!r}, "
            f"expected {list(LAYER_SIZES)}")
    weights = raw.get("weights")
    if not isinstance(weights, dict):
        raise ParseError(f"{path}: missing weights table")
    vals = {}
    for name in _FIELDS:
        if name not in weights:
            raise ValidationError(f"{path}: missing tensor {name}")
        arr = np.asarray(weights[name], dtype=float)
        if arr.shape != _SHAPES[name]:
            raise ValidationError(
                f"{path}: tensor {name} has shape {arr.shape}, "
                f"expected {_SHAPES[name]}")
        vals[name] = arr
    return MlpParams(**vals)


def write_loss_csv(curve: LossCurve, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,train_mse,test_mse\n")
        for i in range(len(curve)):
            fh.write(f"{i},{repr(float(curve.train_mse[i]))},"
                     f"{repr(float(curve.test_mse[i]))}\n")
