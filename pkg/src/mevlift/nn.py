"""From-scratch convolutional network over bundle matrices.

Stacked conv -> relu -> dropout -> maxpool blocks, three fully connected
layers whose last output is the bundle's feature vector, and a small
sigmoid head predicting per-label presence.  Everything is plain numpy
with hand-written backprop; grad_check compares the analytic gradients
against central finite differences so the arithmetic stays honest.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .matrix import BundleMatrix

MAGIC = b"MLFT"
FORMAT_VERSION = 1

# Keep sigmoid inputs in a range where the output is strictly inside
# (0, 1) in float64; past ~36 the result would round to exactly 0 or 1.
SIGMOID_CLIP = 30.0


class ModelError(ValueError):
    pass


class ConfigError(ModelError):
    pass


class TrainingError(ModelError):
    def __init__(self, message: str, epoch: int | None = None) -> None:
        super().__init__(message)
        self.epoch = epoch


class GradCheckError(ModelError):
    pass


class CheckpointError(ModelError):
    pass


@dataclass(frozen=True)
class ConvBlockConfig:
    out_channels: int = 8
    kernel: tuple[int, int] = (3, 3)
    pool: tuple[int, int] = (2, 2)
    dropout: float = 0.1

    def __post_init__(self) -> None:
        if self.out_channels < 1:
            raise ConfigError("conv block needs at least one channel")
        if min(self.kernel) < 1 or min(self.pool) < 1:
            raise ConfigError("kernel and pool dims must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout rate {self.dropout} outside [0, 1)")


def default_conv_blocks() -> tuple[ConvBlockConfig, ...]:
    return (ConvBlockConfig(out_channels=8),
            ConvBlockConfig(out_channels=16),
            ConvBlockConfig(out_channels=32))


@dataclass(frozen=True)
class ModelConfig:
    input_height: int = 16
    input_width: int = 256
    conv_blocks: tuple[ConvBlockConfig, ...] = field(
        default_factory=default_conv_blocks)
    fc_sizes: tuple[int, int, int] = (128, 64, 16)
    feature_dim: int = 16
    head_hidden: int = 32
    label_count: int = 3
    seed: int = 7
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 20

    def __post_init__(self) -> None:
        if len(self.fc_sizes) != 3:
            raise ConfigError("exactly three fully connected sizes required")
        if self.fc_sizes[-1] != self.feature_dim:
            raise ConfigError("feature_dim must equal the last fc size")
        if self.label_count < 1:
            raise ConfigError("label_count must be at least 1")
        if not self.conv_blocks:
            raise ConfigError("at least one conv block required")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("bad training schedule")

    def conv_output_shape(self) -> tuple[int, int, int]:
        """Channels and spatial dims after the last pooling stage."""
        h, w = self.input_height, self.input_width
        channels = 1
        for blk in self.conv_blocks:
            h //= blk.pool[0]
            w //= blk.pool[1]
            channels = blk.out_channels
            if h < 1 or w < 1:
                raise ConfigError("pooling exhausts the input spatially")
        return channels, h, w

    def flat_dim(self) -> int:
        c, h, w = self.conv_output_shape()
        return c * h * w


def _he_init(rng: np.random.Generator, shape: tuple[int, ...],
             fan_in: int) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


def _linear_init(rng: np.random.Generator, shape: tuple[int, ...],
                 fan_in: int) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(1.0 / fan_in)


class Model:
    """Parameter store plus forward/backward passes."""

    def __init__(self, config: ModelConfig) -> None:
        self.config = config
        self.params: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(config.seed)
        in_ch = 1
        for i, blk in enumerate(config.conv_blocks):
            kh, kw = blk.kernel
            fan_in = in_ch * kh * kw
            self.params[f"conv{i}_w"] = _he_init(
                rng, (blk.out_channels, in_ch, kh, kw), fan_in)
            self.params[f"conv{i}_b"] = np.zeros(blk.out_channels)
            in_ch = blk.out_channels
        dims = [config.flat_dim(), *config.fc_sizes]
        for i in range(3):
            init = _he_init if i < 2 else _linear_init
            self.params[f"fc{i + 1}_w"] = init(
                rng, (dims[i + 1], dims[i]), dims[i])
            self.params[f"fc{i + 1}_b"] = np.zeros(dims[i + 1])
        self.params["head1_w"] = _he_init(
            rng, (config.head_hidden, config.feature_dim), config.feature_dim)
        self.params["head1_b"] = np.zeros(config.head_hidden)
        self.params["head2_w"] = _linear_init(
            rng, (config.label_count, config.head_hidden), config.head_hidden)
        self.params["head2_b"] = np.zeros(config.label_count)
        self._rng = np.random.default_rng(config.seed)

    def reseed(self, seed: int | None = None) -> None:
        self._rng = np.random.default_rng(
            self.config.seed if seed is None else seed)

    def forward_batch(self, x: np.ndarray, train_mode: bool = False,
                      cache: dict | None = None
                      ) -> tuple[np.ndarray, np.ndarray]:
        """x: (batch, 1, H, W) -> (features (batch, F), predictions (batch, L))."""
        cfg = self.config
        if x.ndim != 4 or x.shape[1] != 1 or \
                x.shape[2] != cfg.input_height or x.shape[3] != cfg.input_width:
            raise ConfigError(
                f"input shape {x.shape} does not match configured "
                f"{cfg.input_height}x{cfg.input_width}")
        if cache is not None:
            cache["x"] = x
            cache["blocks"] = []
        out = x
        for i, blk in enumerate(cfg.conv_blocks):
            out = self._conv_block(out, i, blk, train_mode, cache)
        flat = out.reshape(out.shape[0], -1)
        if cache is not None:
            cache["conv_out_shape"] = out.shape
        acts = [flat]
        for i in range(3):
            z = acts[-1] @ self.params[f"fc{i + 1}_w"].T + \
                self.params[f"fc{i + 1}_b"]
            a = np.maximum(z, 0.0) if i < 2 else z
            if cache is not None:
                cache[f"fc{i + 1}_z"] = z
            acts.append(a)
        features = acts[3]
        hz = features @ self.params["head1_w"].T + self.params["head1_b"]
        ha = np.maximum(hz, 0.0)
        oz = ha @ self.params["head2_w"].T + self.params["head2_b"]
        preds = _sigmoid(oz)
        if cache is not None:
            cache["fc_acts"] = acts
            cache["head_z"] = hz
            cache["head_a"] = ha
            cache["preds"] = preds
        return features, preds

    def _conv_block(self, x: np.ndarray, index: int, blk: ConvBlockConfig,
                    train_mode: bool, cache: dict | None) -> np.ndarray:
        w = self.params[f"conv{index}_w"]
        b = self.params[f"conv{index}_b"]
        z = conv2d_same(x, w, b)
        a = np.maximum(z, 0.0)
        if train_mode and blk.dropout > 0.0:
            mask = dropout_mask(self._rng, a.shape, blk.dropout)
            d = a * mask
        else:
            mask = None
            d = a
        pooled, argmax = maxpool(d, blk.pool)
        if cache is not None:
            cache["blocks"].append({
                "x": x, "z": z, "mask": mask, "pre_pool": d,
                "argmax": argmax,
            })
        return pooled

    def backward_batch(self, cache: dict, targets: np.ndarray
                       ) -> dict[str, np.ndarray]:
        """Gradients of the mean squared error w.r.t. every parameter."""
        cfg = self.config
        preds = cache["preds"]
        batch = preds.shape[0]
        grads: dict[str, np.ndarray] = {}
        dpred = 2.0 * (preds - targets) / preds.size
        doz = dpred * preds * (1.0 - preds)
        ha = cache["head_a"]
        grads["head2_w"] = doz.T @ ha
        grads["head2_b"] = doz.sum(axis=0)
        dha = doz @ self.params["head2_w"]
        dhz = dha * (cache["head_z"] > 0.0)
        features = cache["fc_acts"][3]
        grads["head1_w"] = dhz.T @ features
        grads["head1_b"] = dhz.sum(axis=0)
        da = dhz @ self.params["head1_w"]
        for i in range(3, 0, -1):
            z = cache[f"fc{i}_z"]
            dz = da if i == 3 else da * (z > 0.0)
            grads[f"fc{i}_w"] = dz.T @ cache["fc_acts"][i - 1]
            grads[f"fc{i}_b"] = dz.sum(axis=0)
            da = dz @ self.params[f"fc{i}_w"]
        dout = da.reshape(cache["conv_out_shape"])
        for i in range(len(cfg.conv_blocks) - 1, -1, -1):
            blk = cfg.conv_blocks[i]
            state = cache["blocks"][i]
            dpre = maxpool_backward(dout, state["argmax"], blk.pool,
                                    state["pre_pool"].shape)
            if state["mask"] is not None:
                dpre = dpre * state["mask"]
            dz = dpre * (state["z"] > 0.0)
            dx, dw, db = conv2d_same_backward(state["x"],
                                              self.params[f"conv{i}_w"], dz)
            grads[f"conv{i}_w"] = dw
            grads[f"conv{i}_b"] = db
            dout = dx
        assert batch == targets.shape[0]
        return grads


def _sigmoid(z: np.ndarray) -> np.ndarray:
    clipped = np.clip(z, -SIGMOID_CLIP, SIGMOID_CLIP)
    return 1.0 / (1.0 + np.exp(-clipped))


def dropout_mask(rng: np.random.Generator, shape: tuple[int, ...],
                 rate: float) -> np.ndarray:
    """Inverted dropout mask: zeros with probability rate, else 1/(1-rate)."""
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def conv2d_same(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stride-1 cross correlation with zero padding that keeps H and W.

    x: (batch, in_ch, H, W); w: (out_ch, in_ch, kh, kw); b: (out_ch,).
    """
    kh, kw = w.shape[2], w.shape[3]
    pt, pl = (kh - 1) // 2, (kw - 1) // 2
    pb, pr = kh - 1 - pt, kw - 1 - pl
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw),
                                                       axis=(2, 3))
    out = np.einsum("ocuv,bchwuv->bohw", w, windows, optimize=True)
    return out + b[None, :, None, None]


def conv2d_same_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray
                         ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kh, kw = w.shape[2], w.shape[3]
    pt, pl = (kh - 1) // 2, (kw - 1) // 2
    pb, pr = kh - 1 - pt, kw - 1 - pl
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw),
                                                       axis=(2, 3))
    dw = np.einsum("bohw,bchwuv->ocuv", dy, windows, optimize=True)
    db = dy.sum(axis=(0, 2, 3))
    dxp = np.zeros_like(xp)
    h, wdt = x.shape[2], x.shape[3]
    for u in range(kh):
        for v in range(kw):
            dxp[:, :, u:u + h, v:v + wdt] += np.einsum(
                "oc,bohw->bchw", w[:, :, u, v], dy, optimize=True)
    dx = dxp[:, :, pt:pt + h, pl:pl + wdt]
    return dx, dw, db


def maxpool(x: np.ndarray, pool: tuple[int, int]
            ) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping max pooling; trailing rows/cols that do not fill a
    window are cropped.  Returns the pooled grid and the argmax index of
    each window (flat index inside the ph*pw window) for routing."""
    ph, pw = pool
    b, c, h, w = x.shape
    h2, w2 = h // ph, w // pw
    cropped = x[:, :, :h2 * ph, :w2 * pw]
    tiles = cropped.reshape(b, c, h2, ph, w2, pw).transpose(0, 1, 2, 4, 3, 5)
    flat = tiles.reshape(b, c, h2, w2, ph * pw)
    argmax = flat.argmax(axis=4)
    pooled = np.take_along_axis(flat, argmax[..., None], axis=4)[..., 0]
    return pooled, argmax


def maxpool_backward(dy: np.ndarray, argmax: np.ndarray,
                     pool: tuple[int, int],
                     input_shape: tuple[int, ...]) -> np.ndarray:
    ph, pw = pool
    b, c, h, w = input_shape
    h2, w2 = h // ph, w // pw
    flat = np.zeros((b, c, h2, w2, ph * pw))
    np.put_along_axis(flat, argmax[..., None], dy[..., None], axis=4)
    tiles = flat.reshape(b, c, h2, w2, ph, pw).transpose(0, 1, 2, 4, 3, 5)
    dx = np.zeros(input_shape)
    dx[:, :, :h2 * ph, :w2 * pw] = tiles.reshape(b, c, h2 * ph, w2 * pw)
    return dx


def _as_input(matrix) -> np.ndarray:
    cells = matrix.cells if isinstance(matrix, BundleMatrix) else np.asarray(matrix)
    return cells[None, None, :, :].astype(np.float64)


def forward(model: Model, matrix, train_mode: bool = False
            ) -> tuple[np.ndarray, np.ndarray]:
    """Single-matrix forward pass: (feature vector, label predictions)."""
    features, preds = model.forward_batch(_as_input(matrix), train_mode)
    return features[0], preds[0]


def loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ModelError("prediction and target shapes differ")
    return float(np.mean((predictions - targets) ** 2))


def _stack_dataset(model: Model, dataset) -> tuple[np.ndarray, np.ndarray]:
    if not dataset:
        raise TrainingError("empty training dataset")
    xs, ys = [], []
    for matrix, target in dataset:
        xs.append(_as_input(matrix)[0])
        t = np.asarray(target, dtype=np.float64)
        if t.shape != (model.config.label_count,):
            raise TrainingError(
                f"target shape {t.shape} does not match "
                f"{model.config.label_count} labels")
        if not np.all((t == 0.0) | (t == 1.0)):
            raise TrainingError("training targets must be 0 or 1")
        ys.append(t)
    return np.stack(xs), np.stack(ys)


def train(model: Model, dataset, config: ModelConfig | None = None
          ) -> tuple[Model, list[float]]:
    """Mini-batch SGD with momentum over shuffled epochs.

    Deterministic for a fixed config seed.  Returns the model (updated in
    place) and the per-epoch mean loss trace.  A non-finite loss aborts
    with the epoch it appeared in.
    """
    cfg = config or model.config
    xs, ys = _stack_dataset(model, dataset)
    rng = np.random.default_rng(cfg.seed)
    model.reseed(cfg.seed)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    trace: list[float] = []
    n = xs.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            cache: dict = {}
            _, preds = model.forward_batch(xs[idx], train_mode=True,
                                           cache=cache)
            batch_loss = loss(preds, ys[idx])
            if not np.isfinite(batch_loss):
                raise TrainingError(
                    f"training diverged at epoch {epoch}", epoch=epoch)
            total += batch_loss * len(idx)
            grads = model.backward_batch(cache, ys[idx])
            for name, grad in grads.items():
                velocity[name] = cfg.momentum * velocity[name] - \
                    cfg.learning_rate * grad
                model.params[name] += velocity[name]
        trace.append(total / n)
    return model, trace


def grad_check(model: Model, sample, epsilon: float = 1e-5,
               entries_per_group: int = 4) -> float:
    """Worst relative deviation between analytic and numeric gradients.

    Probes a few entries of every parameter group with central
    differences.  Dropout must be configured off; masks would make the
    two gradients incomparable.
    """
    if any(blk.dropout > 0.0 for blk in model.config.conv_blocks):
        raise GradCheckError("grad_check requires dropout rates of zero")
    matrix, target = sample
    x = _as_input(matrix)
    t = np.asarray(target, dtype=np.float64)[None, :]
    cache: dict = {}
    _, preds = model.forward_batch(x, train_mode=True, cache=cache)
    grads = model.backward_batch(cache, t)

    def loss_at() -> float:
        _, p = model.forward_batch(x, train_mode=False)
        return loss(p, t)

    worst = 0.0
    for name, param in model.params.items():
        flat = param.reshape(-1)
        count = min(entries_per_group, flat.size)
        probe = np.linspace(0, flat.size - 1, count).astype(int)
        for j in probe:
            keep = flat[j]
            flat[j] = keep + epsilon
            up = loss_at()
            flat[j] = keep - epsilon
            down = loss_at()
            flat[j] = keep
            numeric = (up - down) / (2.0 * epsilon)
            analytic = grads[name].reshape(-1)[j]
            denom = max(abs(numeric) + abs(analytic), 1e-8)
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst


def extend_labels(model: Model, new_label_count: int) -> Model:
    """Grow the label head.  Adding labels re-initializes the whole model
    (each round retrains from scratch); the same count is a no-op."""
    current = model.config.label_count
    if new_label_count < current:
        raise ConfigError(
            f"label count cannot shrink ({current} -> {new_label_count})")
    if new_label_count == current:
        return model
    return Model(replace(model.config, label_count=new_label_count))


def _config_to_dict(cfg: ModelConfig) -> dict:
    return {
        "input_height": cfg.input_height,
        "input_width": cfg.input_width,
        "conv_blocks": [
            {"out_channels": b.out_channels, "kernel": list(b.kernel),
             "pool": list(b.pool), "dropout": b.dropout}
            for b in cfg.conv_blocks],
        "fc_sizes": list(cfg.fc_sizes),
        "feature_dim": cfg.feature_dim,
        "head_hidden": cfg.head_hidden,
        "label_count": cfg.label_count,
        "seed": cfg.seed,
        "learning_rate": cfg.learning_rate,
        "momentum": cfg.momentum,
        "batch_size": cfg.batch_size,
        "epochs": cfg.epochs,
    }


def _config_from_dict(doc: dict) -> ModelConfig:
    return ModelConfig(
        input_height=doc["input_height"],
        input_width=doc["input_width"],
        conv_blocks=tuple(
            ConvBlockConfig(b["out_channels"], tuple(b["kernel"]),
                            tuple(b["pool"]), b["dropout"])
            for b in doc["conv_blocks"]),
        fc_sizes=tuple(doc["fc_sizes"]),
        feature_dim=doc["feature_dim"],
        head_hidden=doc["head_hidden"],
        label_count=doc["label_count"],
        seed=doc["seed"],
        learning_rate=doc["learning_rate"],
        momentum=doc["momentum"],
        batch_size=doc["batch_size"],
        epochs=doc["epochs"],
    )


def save_model(model: Model, path) -> None:
    """Checkpoint: magic, version, JSON header, little-endian f64 blob."""
    header = {
        "config": _config_to_dict(model.config),
        "params": [{"name": k, "shape": list(v.shape)}
                   for k, v in model.params.items()],
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode()
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HI", FORMAT_VERSION, len(header_bytes)))
    buf.write(header_bytes)
    for value in model.params.values():
        buf.write(value.astype("<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointError("not a model checkpoint (bad magic)")
    version, header_len = struct.unpack_from("<HI", blob, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    start = 4 + struct.calcsize("<HI")
    try:
        header = json.loads(blob[start:start + header_len])
    except ValueError as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    model = Model(_config_from_dict(header["config"]))
    offset = start + header_len
    for entry in header["params"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in model.params or model.params[name].shape != shape:
            raise CheckpointError(f"unexpected parameter {name} {shape}")
        size = int(np.prod(shape)) * 8
        chunk = blob[offset:offset + size]
        if len(chunk) != size:
            raise CheckpointError("checkpoint truncated")
        model.params[name] = np.frombuffer(chunk, dtype="<f8").reshape(
            shape).astype(np.float64)
        offset += size
    if offset != len(blob):
        raise CheckpointError("trailing bytes after parameter blob")
    return model
