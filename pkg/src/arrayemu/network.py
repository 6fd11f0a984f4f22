"""From-scratch fully connected emulator network.

Maps stacked real/imaginary low-array snapshot columns to high-array
columns: three ReLU hidden layers of widths 2L, 2L, 2H feeding a 2H output
layer (linear or ReLU).  Includes forward/backward passes, Adam, min-max
feature normalization, a seeded training loop with best-validation model
selection, and a versioned binary model format.

Data layout convention: feature-major, i.e. matrices are (features, samples)
so a snapshot block stacks directly into a batch of columns.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .arrays import ArrayConfig, SnapshotBlock

__all__ = [
    "MlpModel",
    "TrainConfig",
    "OptimizerState",
    "TrainingError",
    "stack_real_imag",
    "unstack_real_imag",
    "minmax_fit",
    "minmax_apply",
    "minmax_invert",
    "mlp_forward",
    "mlp_backward",
    "adam_step",
    "init_model",
    "train",
    "predict",
    "save_model",
    "load_model",
]

MODEL_MAGIC = b"AEMU-MLP"
MODEL_VERSION = 1
ACTIVATIONS = ("linear", "relu")


class TrainingError(RuntimeError):
    """Raised when training diverges (non-finite loss or gradients)."""


@dataclass
class MlpModel:
    """Weights, biases, output activation and the normalization statistics
    the model was trained with."""

    layer_dims: list[int]
    weights: list[np.ndarray]  # weights[i] has shape (dims[i+1], dims[i])
    biases: list[np.ndarray]
    output_activation: str = "linear"
    norm_in: np.ndarray | None = None  # (input_dim, 2) min/max columns
    norm_out: np.ndarray | None = None

    def __post_init__(self):
        if self.output_activation not in ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        dims = self.layer_dims
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("one weight matrix and bias per layer transition required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} parameter shapes inconsistent with dims")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} has non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]


@dataclass
class TrainConfig:
    """Training-loop hyperparameters."""

    epochs: int = 150
    batch_size: int = 120
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    output_activation: str = "linear"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


@dataclass
class OptimizerState:
    """Adam first/second-moment accumulators mirroring the parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "OptimizerState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            step=0,
        )


def stack_real_imag(block: SnapshotBlock) -> np.ndarray:
    """Stack a complex block into reals: real parts on top, imaginary below."""
    return np.vstack([block.data.real, block.data.imag])


def unstack_real_imag(data: np.ndarray, cfg: ArrayConfig, snr_db: float) -> SnapshotBlock:
    """Inverse of stack_real_imag, rebuilding a complex SnapshotBlock."""
    half = data.shape[0] // 2
    if data.shape[0] != 2 * cfg.virtual_size:
        raise ValueError("stacked row count does not match the array size")
    return SnapshotBlock(data=data[:half] + 1j * data[half:], snr_db=snr_db, array=cfg)


def minmax_fit(data: np.ndarray) -> np.ndarray:
    """Per-feature (min, max) over samples; returns an (F, 2) array."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ValueError("need a (features, samples) matrix with >= 1 sample")
    return np.column_stack([data.min(axis=1), data.max(axis=1)])


def minmax_apply(data: np.ndarray, stats: np.ndarray) -> np.ndarray:
    """Map features to (x - min) / (max - min).

    Constant features map to 0.  Values outside the fitted range pass
    through unclamped, so unseen test conditions may fall outside [0, 1].
    """
    lo, hi = stats[:, 0:1], stats[:, 1:2]
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (data - lo) / safe, 0.0)


def minmax_invert(data: np.ndarray, stats: np.ndarray) -> np.ndarray:
    """Exact inverse of minmax_apply on non-constant features; constant
    features reproduce their fitted value."""
    lo, hi = stats[:, 0:1], stats[:, 1:2]
    span = hi - lo
    return np.where(span > 0, data * span + lo, lo)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def mlp_forward(model: MlpModel, x: np.ndarray):
    """Forward pass.

    ``x`` is a feature vector or a (features, samples) batch.  Returns the
    output in the same layout plus the list of cached layer activations
    (post-activation, input included) needed by mlp_backward.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x[:, None] if single else x
    if a.shape[0] != model.input_dim:
        raise ValueError(f"input has {a.shape[0]} features, model expects {model.input_dim}")
    activations = [a]
    n_layers = len(model.weights)
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = w @ a + b[:, None]
        last = i == n_layers - 1
        if last and model.output_activation == "linear":
            a = z
        else:
            a = _relu(z)
        activations.append(a)
    out = activations[-1]
    return (out[:, 0], activations) if single else (out, activations)


def mlp_backward(model: MlpModel, x: np.ndarray, target: np.ndarray):
    """Gradients of the MSE loss for a sample or batch.

    The loss is the squared error averaged over output features and over
    the batch; batch gradients are therefore means of per-sample gradients.
    Returns (grad_weights, grad_biases, loss).
    """
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    a = x[:, None] if x.ndim == 1 else x
    t = target[:, None] if target.ndim == 1 else target
    if t.shape[0] != model.output_dim or t.shape[1] != a.shape[1]:
        raise ValueError("target shape does not match model output / batch size")
    out, acts = mlp_forward(model, a)
    batch = a.shape[1]
    err = out - t
    loss = float(np.mean(err**2))
    # d(loss)/d(out): mean over output dim and batch.
    delta = 2.0 * err / (model.output_dim * batch)
    if model.output_activation == "relu":
        delta = delta * (acts[-1] > 0)
    grad_w: list[np.ndarray] = [None] * len(model.weights)
    grad_b: list[np.ndarray] = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = delta @ acts[i].T
        grad_b[i] = delta.sum(axis=1)
        if i > 0:
            delta = (model.weights[i].T @ delta) * (acts[i] > 0)
    return grad_w, grad_b, loss


def adam_step(
    state: OptimizerState,
    params: list[np.ndarray],
    grads: list[np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> list[np.ndarray]:
    """One Adam update with bias correction; mutates ``state``, returns the
    updated parameter list."""
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient passed to the optimizer")
    state.step += 1
    t = state.step
    out = []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g**2
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        out.append(p - lr * m_hat / (np.sqrt(v_hat) + epsilon))
    return out


def init_model(
    layer_dims: list[int],
    output_activation: str,
    rng,
) -> MlpModel:
    """He-style uniform fan-in initialization, zero biases."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_dims=list(layer_dims),
        weights=weights,
        biases=biases,
        output_activation=output_activation,
    )


def default_layer_dims(input_dim: int, output_dim: int) -> list[int]:
    """Hidden widths matching the stacked input/output sizes: the two first
    hidden layers repeat the input width, the third the output width."""
    return [input_dim, input_dim, input_dim, output_dim, output_dim]


def _flatten_params(model: MlpModel) -> list[np.ndarray]:
    return list(model.weights) + list(model.biases)


def _unflatten_params(model: MlpModel, params: list[np.ndarray]) -> None:
    n = len(model.weights)
    model.weights = params[:n]
    model.biases = params[n:]


def _mse(model: MlpModel, x: np.ndarray, t: np.ndarray) -> float:
    out, _ = mlp_forward(model, x)
    return float(np.mean((out - t) ** 2))


def train(
    inputs: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    layer_dims: list[int] | None = None,
):
    """Train an emulator on (features, samples) input/target matrices.

    The sample pool is shuffled once (seeded) and split per cfg.split into
    train/validation/held-out parts; the held-out part is not touched here.
    Normalization statistics are fitted on the training part only.  Returns
    the model with the weights of the best-validation epoch together with
    the per-epoch {"train": [...], "val": [...]} loss history.
    """
    x = np.asarray(inputs, dtype=float)
    t = np.asarray(targets, dtype=float)
    if x.ndim != 2 or t.ndim != 2 or x.shape[1] != t.shape[1]:
        raise ValueError("inputs and targets must be (features, samples) with equal samples")
    n = x.shape[1]
    if n < cfg.batch_size:
        raise ValueError(f"dataset size {n} smaller than batch size {cfg.batch_size}")

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n)
    n_train = int(round(cfg.split[0] * n))
    n_val = int(round(cfg.split[1] * n))
    idx_train = order[:n_train]
    idx_val = order[n_train : n_train + n_val]
    if idx_train.size < 1 or idx_val.size < 1:
        raise ValueError("split leaves an empty training or validation part")

    norm_in = minmax_fit(x[:, idx_train])
    norm_out = minmax_fit(t[:, idx_train])
    xn = minmax_apply(x, norm_in)
    tn = minmax_apply(t, norm_out)
    x_tr, t_tr = xn[:, idx_train], tn[:, idx_train]
    x_val, t_val = xn[:, idx_val], tn[:, idx_val]

    if layer_dims is None:
        layer_dims = default_layer_dims(x.shape[0], t.shape[0])
    model = init_model(layer_dims, cfg.output_activation, rng)
    model.norm_in = norm_in
    model.norm_out = norm_out

    params = _flatten_params(model)
    state = OptimizerState.zeros_like(params)
    history = {"train": [], "val": []}
    best_val = np.inf
    best_params = [p.copy() for p in params]

    n_tr = x_tr.shape[1]
    for _epoch in range(cfg.epochs):
        perm = rng.permutation(n_tr)
        for start in range(0, n_tr, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            gw, gb, loss = mlp_backward(model, x_tr[:, batch], t_tr[:, batch])
            if not np.isfinite(loss):
                raise TrainingError(f"loss became non-finite at step {state.step}")
            params = adam_step(
                state, params, gw + gb, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon
            )
            _unflatten_params(model, params)
        tr_loss = _mse(model, x_tr, t_tr)
        val_loss = _mse(model, x_val, t_val)
        history["train"].append(tr_loss)
        history["val"].append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_params = [p.copy() for p in params]

    _unflatten_params(model, best_params)
    return model, history


def predict(model: MlpModel, block: SnapshotBlock, high_array: ArrayConfig) -> SnapshotBlock:
    """Emulate the high-array observation for a low-array block.

    Columns are processed independently: stack real/imag, normalize with
    the stored input statistics, run the network, undo the output
    normalization and reassemble a complex block for ``high_array``.
    """
    if model.norm_in is None or model.norm_out is None:
        raise ValueError("model has no normalization statistics; train or load it first")
    x = stack_real_imag(block)
    if x.shape[0] != model.input_dim:
        raise ValueError(
            f"stacked input has {x.shape[0]} rows, model expects {model.input_dim}"
        )
    if model.output_dim != 2 * high_array.virtual_size:
        raise ValueError("model output does not match the requested high array size")
    out, _ = mlp_forward(model, minmax_apply(x, model.norm_in))
    return unstack_real_imag(minmax_invert(out, model.norm_out), high_array, block.snr_db)


def save_model(model: MlpModel, path) -> None:
    """Write the versioned binary model file (little-endian float64 blocks)."""
    if model.norm_in is None or model.norm_out is None:
        raise ValueError("refusing to save a model without normalization statistics")
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<II", MODEL_VERSION, len(model.layer_dims)))
        f.write(struct.pack(f"<{len(model.layer_dims)}I", *model.layer_dims))
        f.write(struct.pack("<B", ACTIVATIONS.index(model.output_activation)))
        f.write(np.ascontiguousarray(model.norm_in, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(model.norm_out, dtype="<f8").tobytes())
        for w, b in zip(model.weights, model.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path) -> MlpModel:
    """Read a model file written by save_model; bit-exact round trip."""
    with open(path, "rb") as f:
        magic = f.read(len(MODEL_MAGIC))
        if magic != MODEL_MAGIC:
            raise ValueError(f"{path}: not an emulator model file")
        version, n_dims = struct.unpack("<II", f.read(8))
        if version != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model format version {version}")
        dims = list(struct.unpack(f"<{n_dims}I", f.read(4 * n_dims)))
        (act_flag,) = struct.unpack("<B", f.read(1))
        activation = ACTIVATIONS[act_flag]

        def read_array(shape):
            count = int(np.prod(shape))
            buf = f.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"{path}: truncated model file")
            return np.frombuffer(buf, dtype="<f8").reshape(shape).copy()

        norm_in = read_array((dims[0], 2))
        norm_out = read_array((dims[-1], 2))
        weights, biases = [], []
        for i in range(n_dims - 1):
            weights.append(read_array((dims[i + 1], dims[i])))
            biases.append(read_array((dims[i + 1],)))
    return MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        output_activation=activation,
        norm_in=norm_in,
        norm_out=norm_out,
    )
