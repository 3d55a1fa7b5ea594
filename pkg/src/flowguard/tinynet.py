"""Small convolutional networks from scratch on numpy.

Five layer kinds: Input, Conv (3x3), MaxPool (2x2, stride 2), Flatten,
Dense. Activations: relu, linear, softmax (final layer only). Conv padding
is 'valid' or 'same'; pooling truncates ('floor') or pads ('ceil') odd
edges. An optional side input is appended to the flattened feature vector,
so a scalar control signal can join the convolutional features.

Training is plain mini-batch backprop with MSE (optionally cross-entropy)
loss, Adam or SGD, early stopping on test loss, fully deterministic per
seed. Weights persist in the "FGNN" binary format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

ACTIVATIONS = ("relu", "linear", "softmax")


class ArchitectureError(ValueError):
    """Layer stack is inconsistent; carries the offending layer index."""

    def __init__(self, index: int, message: str):
        super().__init__(f"layer {index}: {message}")
        self.index = index


class WeightFormatError(ValueError):
    """Serialized weights are malformed or do not match the architecture."""


@dataclass(frozen=True)
class Input:
    shape: Tuple[int, ...]  # (h, w, c) or (n,)


@dataclass(frozen=True)
class Conv:
    filters: int
    padding: str = "valid"  # or "same"
    activation: str = "relu"


@dataclass(frozen=True)
class MaxPool:
    mode: str = "floor"  # or "ceil"


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Dense:
    units: int
    activation: str = "relu"


Layer = Union[Input, Conv, MaxPool, Flatten, Dense]


@dataclass(frozen=True)
class ArchSpec:
    """Ordered layer stack plus the width of the optional side input."""

    layers: Tuple[Layer, ...]
    side_input_dim: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        self.shapes()  # validate eagerly

    def shapes(self) -> List[Tuple[int, ...]]:
        """Output shape after every layer; raises ArchitectureError."""
        if not self.layers or not isinstance(self.layers[0], Input):
            raise ArchitectureError(0, "first layer must be Input")
        shape = tuple(self.layers[0].shape)
        if any(d < 1 for d in shape):
            raise ArchitectureError(0, f"bad input shape {shape}")
        out = [shape]
        for i, layer in enumerate(self.layers[1:], start=1):
            if isinstance(layer, Input):
                raise ArchitectureError(i, "Input must be the first layer only")
            if isinstance(layer, Conv):
                if len(shape) != 3:
                    raise ArchitectureError(i, f"Conv needs (h,w,c) input, got {shape}")
                if layer.padding not in ("valid", "same"):
                    raise ArchitectureError(i, f"bad padding {layer.padding!r}")
                if layer.activation not in ("relu", "linear"):
                    raise ArchitectureError(i, f"bad conv activation {layer.activation!r}")
                h, w, _ = shape
                if layer.padding == "valid":
                    h, w = h - 2, w - 2
                    if h < 1 or w < 1:
                        raise ArchitectureError(i, "input too small for valid 3x3 conv")
                shape = (h, w, layer.filters)
            elif isinstance(layer, MaxPool):
                if len(shape) != 3:
                    raise ArchitectureError(i, f"MaxPool needs (h,w,c) input, got {shape}")
                if layer.mode not in ("floor", "ceil"):
                    raise ArchitectureError(i, f"bad pool mode {layer.mode!r}")
                h, w, c = shape
                if layer.mode == "floor":
                    h, w = h // 2, w // 2
                else:
                    h, w = -(-h // 2), -(-w // 2)
                if h < 1 or w < 1:
                    raise ArchitectureError(i, "pooling collapsed the feature map")
                shape = (h, w, c)
            elif isinstance(layer, Flatten):
                n = 1
                for d in shape:
                    n *= d
                shape = (n + self.side_input_dim,)
            elif isinstance(layer, Dense):
                if len(shape) != 1:
                    raise ArchitectureError(i, f"Dense needs flat input, got {shape}")
                if layer.activation not in ACTIVATIONS:
                    raise ArchitectureError(i, f"bad activation {layer.activation!r}")
                if layer.activation == "softmax" and i != len(self.layers) - 1:
                    raise ArchitectureError(i, "softmax is only allowed on the final layer")
                shape = (layer.units,)
            else:
                raise ArchitectureError(i, f"unknown layer {layer!r}")
            out.append(shape)
        return out

    def layer_param_counts(self) -> List[int]:
        """Parameter count per layer (zero for Input/MaxPool/Flatten)."""
        counts = []
        shapes = self.shapes()
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Conv):
                c_in = shapes[i - 1][2]
                counts.append(9 * c_in * layer.filters + layer.filters)
            elif isinstance(layer, Dense):
                counts.append(shapes[i - 1][0] * layer.units + layer.units)
            else:
                counts.append(0)
        return counts

    @property
    def output_dim(self) -> int:
        return self.shapes()[-1][0]


@dataclass
class Network:
    spec: ArchSpec
    params: List[Optional[Tuple[np.ndarray, np.ndarray]]]  # (W, b) per layer

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for p in self.params if p is not None for w, b in [p])

    def copy(self) -> "Network":
        return Network(
            self.spec,
            [None if p is None else (p[0].copy(), p[1].copy()) for p in self.params],
        )


def build_network(spec: ArchSpec, seed: int = 0, dtype=np.float32) -> Network:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    shapes = spec.shapes()
    params: List[Optional[Tuple[np.ndarray, np.ndarray]]] = []
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            c_in = shapes[i - 1][2]
            fan_in, fan_out = 9 * c_in, 9 * layer.filters
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-lim, lim, (3, 3, c_in, layer.filters)).astype(dtype)
            params.append((w, np.zeros(layer.filters, dtype)))
        elif isinstance(layer, Dense):
            fan_in = shapes[i - 1][0]
            lim = np.sqrt(6.0 / (fan_in + layer.units))
            w = rng.uniform(-lim, lim, (fan_in, layer.units)).astype(dtype)
            params.append((w, np.zeros(layer.units, dtype)))
        else:
            params.append(None)
    return Network(spec, params)


# -- forward / backward --------------------------------------------------------


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _conv_patches(x: np.ndarray) -> np.ndarray:
    # (N,H,W,C) -> (N, H-2, W-2, 3, 3, C)
    win = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(1, 2))
    return win.transpose(0, 1, 2, 4, 5, 3)


def forward(
    net: Network,
    x: np.ndarray,
    side: Optional[np.ndarray] = None,
    want_cache: bool = False,
):
    """Batched forward pass; x has shape (N, *input_shape).

    Returns outputs (N, out_dim), or (outputs, cache) with want_cache.
    """
    spec = net.spec
    in_shape = spec.layers[0].shape
    x = np.asarray(x)
    if x.shape[1:] != in_shape:
        raise ValueError(f"input shape {x.shape[1:]} != {in_shape}")
    if spec.side_input_dim:
        if side is None or side.shape != (x.shape[0], spec.side_input_dim):
            raise ValueError(f"need side input of shape (N, {spec.side_input_dim})")
    cache: List[dict] = [{}]
    for i, layer in enumerate(spec.layers[1:], start=1):
        entry: dict = {}
        if isinstance(layer, Conv):
            w, b = net.params[i]
            xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0))) if layer.padding == "same" else x
            patches = _conv_patches(xp)
            n, oh, ow = patches.shape[:3]
            z = patches.reshape(n * oh * ow, -1) @ w.reshape(-1, w.shape[-1])
            z = z.reshape(n, oh, ow, -1) + b
            entry.update(patches=patches, z=z, x_shape=x.shape)
            x = np.maximum(z, 0.0) if layer.activation == "relu" else z
        elif isinstance(layer, MaxPool):
            n, h, wdt, c = x.shape
            if layer.mode == "ceil":
                xp = np.pad(
                    x,
                    ((0, 0), (0, h % 2), (0, wdt % 2), (0, 0)),
                    constant_values=-np.inf,
                )
            else:
                xp = x[:, : h // 2 * 2, : wdt // 2 * 2]
            ph, pw = xp.shape[1], xp.shape[2]
            win = (
                xp.reshape(n, ph // 2, 2, pw // 2, 2, c)
                .transpose(0, 1, 3, 2, 4, 5)
                .reshape(n, ph // 2, pw // 2, 4, c)
            )
            idx = win.argmax(axis=3)
            entry.update(idx=idx, x_shape=x.shape, padded_shape=xp.shape)
            x = np.take_along_axis(win, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
        elif isinstance(layer, Flatten):
            entry.update(x_shape=x.shape)
            x = x.reshape(x.shape[0], -1)
            if spec.side_input_dim:
                x = np.concatenate([x, side.astype(x.dtype)], axis=1)
        elif isinstance(layer, Dense):
            w, b = net.params[i]
            entry.update(x_in=x)
            z = x @ w + b
            entry.update(z=z)
            if layer.activation == "relu":
                x = np.maximum(z, 0.0)
            elif layer.activation == "softmax":
                x = _softmax(z)
            else:
                x = z
            entry.update(out=x)
        cache.append(entry)
    return (x, cache) if want_cache else x


def loss_and_grad(
    pred: np.ndarray,
    target: np.ndarray,
    kind: str = "mse",
    sample_weight: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """Batch-mean loss and its gradient with respect to pred."""
    if pred.shape != target.shape:
        raise ValueError(f"pred {pred.shape} != target {target.shape}")
    n, k = pred.shape
    w = np.ones(n, pred.dtype) if sample_weight is None else np.asarray(sample_weight)
    if kind == "mse":
        per = ((pred - target) ** 2).mean(axis=1)
        grad = 2.0 * (pred - target) / k * (w / n)[:, None]
    elif kind == "cross_entropy":
        p = np.clip(pred, 1e-12, None)
        per = -(target * np.log(p)).sum(axis=1)
        grad = -(target / p) * (w / n)[:, None]
    else:
        raise ValueError(f"unknown loss {kind!r}")
    return float((per * w).mean()), grad.astype(pred.dtype)


def loss(pred: np.ndarray, target: np.ndarray, kind: str = "mse") -> float:
    return loss_and_grad(np.atleast_2d(pred), np.atleast_2d(target), kind)[0]


def backward(
    net: Network,
    cache: List[dict],
    dout: np.ndarray,
    target: Optional[np.ndarray] = None,
    ce_shortcut_weight: Optional[np.ndarray] = None,
) -> List[Optional[Tuple[np.ndarray, np.ndarray]]]:
    """Gradients for every parameter tensor, shaped like net.params.

    dout is the loss gradient with respect to the network output. For
    softmax + cross-entropy, pass the target and per-sample weights instead
    through ce_shortcut_weight to use the numerically stable form.
    """
    spec = net.spec
    grads: List[Optional[Tuple[np.ndarray, np.ndarray]]] = [None] * len(spec.layers)
    d = dout
    for i in range(len(spec.layers) - 1, 0, -1):
        layer = spec.layers[i]
        entry = cache[i]
        if isinstance(layer, Dense):
            w, _ = net.params[i]
            if layer.activation == "relu":
                dz = d * (entry["z"] > 0)
            elif layer.activation == "softmax":
                s = entry["out"]
                if ce_shortcut_weight is not None:
                    n = s.shape[0]
                    dz = (s - target) * (ce_shortcut_weight / n)[:, None]
                    dz = dz.astype(s.dtype)
                else:
                    dz = s * (d - (d * s).sum(axis=1, keepdims=True))
            else:
                dz = d
            x_in = entry["x_in"]
            grads[i] = (x_in.T @ dz, dz.sum(axis=0))
            d = dz @ w.T
        elif isinstance(layer, Flatten):
            if spec.side_input_dim:
                d = d[:, : -spec.side_input_dim]
            d = d.reshape(entry["x_shape"])
        elif isinstance(layer, MaxPool):
            n, oh, ow, _, c = (
                entry["idx"].shape[0],
                entry["idx"].shape[1],
                entry["idx"].shape[2],
                4,
                entry["idx"].shape[3],
            )
            dwin = np.zeros((n, oh, ow, 4, c), d.dtype)
            np.put_along_axis(dwin, entry["idx"][:, :, :, None, :], d[:, :, :, None, :], axis=3)
            ph, pw = entry["padded_shape"][1], entry["padded_shape"][2]
            dpad = (
                dwin.reshape(n, oh, ow, 2, 2, c)
                .transpose(0, 1, 3, 2, 4, 5)
                .reshape(n, ph, pw, c)
            )
            h, wdt = entry["x_shape"][1], entry["x_shape"][2]
            if layer.mode == "ceil":
                d = dpad[:, :h, :wdt]
            else:
                d = np.zeros(entry["x_shape"], d.dtype)
                d[:, : ph, : pw] = dpad
        elif isinstance(layer, Conv):
            w, _ = net.params[i]
            dz = d * (entry["z"] > 0) if layer.activation == "relu" else d
            patches = entry["patches"]
            n, oh, ow = patches.shape[:3]
            dw = patches.reshape(n * oh * ow, -1).T @ dz.reshape(n * oh * ow, -1)
            grads[i] = (dw.reshape(w.shape), dz.sum(axis=(0, 1, 2)))
            xs = entry["x_shape"]
            if layer.padding == "same":
                dxp = np.zeros((xs[0], xs[1] + 2, xs[2] + 2, xs[3]), d.dtype)
            else:
                dxp = np.zeros(xs, d.dtype)
            for ki in range(3):
                for kj in range(3):
                    dxp[:, ki : ki + oh, kj : kj + ow, :] += dz @ w[ki, kj].T
            d = dxp[:, 1:-1, 1:-1, :] if layer.padding == "same" else dxp
    return grads


# -- training ------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "mse"
    optimizer: str = "adam"  # or "sgd"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    class_weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("hyperparameters must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.loss not in ("mse", "cross_entropy"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainReport:
    train_loss: List[float] = field(default_factory=list)
    test_loss: List[float] = field(default_factory=list)
    test_accuracy: List[float] = field(default_factory=list)
    epochs_run: int = 0
    best_epoch: int = 0
    stop_reason: str = ""


class _Adam:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.state: dict = {}

    def step(self, net: Network, grads) -> None:
        cfg = self.cfg
        self.t += 1
        b1c = 1.0 - cfg.beta1 ** self.t
        b2c = 1.0 - cfg.beta2 ** self.t
        for i, g in enumerate(grads):
            if g is None:
                continue
            w, b = net.params[i]
            for key, arr, grad in (("w", w, g[0]), ("b", b, g[1])):
                m, v = self.state.setdefault(
                    (i, key), (np.zeros_like(arr), np.zeros_like(arr))
                )
                m *= cfg.beta1
                m += (1.0 - cfg.beta1) * grad
                v *= cfg.beta2
                v += (1.0 - cfg.beta2) * grad * grad
                arr -= cfg.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + 1e-8)


class _SGD:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg

    def step(self, net: Network, grads) -> None:
        for i, g in enumerate(grads):
            if g is None:
                continue
            w, b = net.params[i]
            w -= self.cfg.learning_rate * g[0]
            b -= self.cfg.learning_rate * g[1]


def _unpack(data) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    if len(data) == 2:
        x, y = data
        return np.asarray(x), np.asarray(y), None
    x, y, side = data
    return np.asarray(x), np.asarray(y), None if side is None else np.asarray(side)


def _sample_weights(y: np.ndarray, class_weights) -> Optional[np.ndarray]:
    if class_weights is None:
        return None
    w = np.asarray(class_weights, np.float64)
    return w[np.argmax(y, axis=1)]


def train(
    net: Network,
    train_data,
    test_data,
    cfg: TrainConfig,
) -> Tuple[Network, TrainReport]:
    """Mini-batch training with early stopping on test loss.

    train_data/test_data are (X, Y) or (X, Y, side) arrays. Returns the
    best-test-loss network (a copy; the input network is left at its final
    state) and the per-epoch report.
    """
    x_tr, y_tr, s_tr = _unpack(train_data)
    x_te, y_te, s_te = _unpack(test_data)
    if len(x_tr) == 0 or len(x_te) == 0:
        raise ValueError("empty dataset")
    classification = net.spec.layers[-1].activation == "softmax"
    use_ce = cfg.loss == "cross_entropy" and classification
    rng = np.random.default_rng(cfg.seed)
    opt = _Adam(cfg) if cfg.optimizer == "adam" else _SGD(cfg)
    report = TrainReport()
    best = net.copy()
    best_loss = np.inf
    stale = 0
    for epoch in range(cfg.max_epochs):
        perm = rng.permutation(len(x_tr))
        total, seen = 0.0, 0
        for lo in range(0, len(perm), cfg.batch_size):
            sel = perm[lo : lo + cfg.batch_size]
            xb, yb = x_tr[sel], y_tr[sel]
            sb = None if s_tr is None else s_tr[sel]
            wb = _sample_weights(yb, cfg.class_weights)
            out, cache = forward(net, xb, sb, want_cache=True)
            batch_loss, dout = loss_and_grad(out, yb, cfg.loss, wb)
            if use_ce:
                cw = np.ones(len(xb)) if wb is None else wb
                grads = backward(net, cache, dout, target=yb, ce_shortcut_weight=cw)
            else:
                grads = backward(net, cache, dout)
            opt.step(net, grads)
            total += batch_loss * len(sel)
            seen += len(sel)
        report.train_loss.append(total / seen)
        te_out = forward(net, x_te, s_te)
        te_loss, _ = loss_and_grad(te_out, y_te, cfg.loss)
        report.test_loss.append(te_loss)
        if classification:
            acc = float(np.mean(np.argmax(te_out, 1) == np.argmax(y_te, 1)))
            report.test_accuracy.append(acc)
        report.epochs_run = epoch + 1
        if te_loss < best_loss:
            best_loss = te_loss
            best = net.copy()
            report.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                report.stop_reason = "early_stop"
                break
    if not report.stop_reason:
        report.stop_reason = "max_epochs"
    return best, report


def evaluate(net: Network, data) -> dict:
    """Overall accuracy, per-class accuracy, and mean loss on a labeled set.

    Accuracy is argmax agreement; numpy's argmax breaks ties toward the
    lowest index, matching the class order left < none < right.
    """
    x, y, side = _unpack(data)
    out = forward(net, x, side)
    pred = np.argmax(out, axis=1)
    truth = np.argmax(y, axis=1)
    per_class = []
    for c in range(y.shape[1]):
        mask = truth == c
        per_class.append(float(np.mean(pred[mask] == c)) if mask.any() else float("nan"))
    mloss, _ = loss_and_grad(out, y, "mse")
    return {
        "accuracy": float(np.mean(pred == truth)),
        "per_class": per_class,
        "loss": mloss,
        "count": int(len(x)),
    }


# -- weight persistence ("FGNN") ------------------------------------------------

_FGNN_MAGIC = b"FGNN"
_FGNN_VERSION = 1
_KIND_CODES = {Input: 0, Conv: 1, MaxPool: 2, Flatten: 3, Dense: 4}
_PAD_CODES = {"valid": 0, "same": 1}
_ACT_CODES = {"relu": 0, "linear": 1, "softmax": 2}
_PAD_NAMES = {v: k for k, v in _PAD_CODES.items()}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}
_POOL_CODES = {"floor": 0, "ceil": 1}
_POOL_NAMES = {v: k for k, v in _POOL_CODES.items()}


def _describe_layer(layer: Layer) -> bytes:
    if isinstance(layer, Input):
        return struct.pack(
            "<BB", 0, len(layer.shape)
        ) + b"".join(struct.pack("<H", d) for d in layer.shape)
    if isinstance(layer, Conv):
        return struct.pack(
            "<BHBB", 1, layer.filters, _PAD_CODES[layer.padding], _ACT_CODES[layer.activation]
        )
    if isinstance(layer, MaxPool):
        return struct.pack("<BB", 2, _POOL_CODES[layer.mode])
    if isinstance(layer, Flatten):
        return struct.pack("<B", 3)
    return struct.pack("<BHB", 4, layer.units, _ACT_CODES[layer.activation])


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        s = struct.Struct(fmt)
        if self.pos + s.size > len(self.data):
            raise WeightFormatError(f"truncated at byte {self.pos}")
        out = s.unpack_from(self.data, self.pos)
        self.pos += s.size
        return out


def _read_layer(r: _Reader) -> Layer:
    (kind,) = r.take("<B")
    if kind == 0:
        (nd,) = r.take("<B")
        return Input(tuple(r.take("<H")[0] for _ in range(nd)))
    if kind == 1:
        filters, pad, act = r.take("<HBB")
        if pad not in _PAD_NAMES or act not in _ACT_NAMES:
            raise WeightFormatError(f"bad conv descriptor at byte {r.pos}")
        return Conv(filters, _PAD_NAMES[pad], _ACT_NAMES[act])
    if kind == 2:
        (mode,) = r.take("<B")
        if mode not in _POOL_NAMES:
            raise WeightFormatError(f"bad pool descriptor at byte {r.pos}")
        return MaxPool(_POOL_NAMES[mode])
    if kind == 3:
        return Flatten()
    if kind == 4:
        units, act = r.take("<HB")
        if act not in _ACT_NAMES:
            raise WeightFormatError(f"bad dense descriptor at byte {r.pos}")
        return Dense(units, _ACT_NAMES[act])
    raise WeightFormatError(f"unknown layer kind {kind}")


def save_weights(net: Network) -> bytes:
    """Serialize architecture descriptor and float32 parameters."""
    spec = net.spec
    out = [struct.pack("<4sBHH", _FGNN_MAGIC, _FGNN_VERSION, len(spec.layers), spec.side_input_dim)]
    for layer in spec.layers:
        out.append(_describe_layer(layer))
    for p in net.params:
        if p is None:
            continue
        w, b = p
        out.append(np.ascontiguousarray(w, "<f4").tobytes())
        out.append(np.ascontiguousarray(b, "<f4").tobytes())
    return b"".join(out)


def load_weights(data: bytes, spec: Optional[ArchSpec] = None) -> Network:
    """Rebuild a network; validates against spec when one is given.

    Raises WeightFormatError on bad magic/version/truncation, and names the
    first mismatching layer when the descriptor disagrees with spec.
    """
    r = _Reader(data)
    magic, version, n_layers, side_dim = r.take("<4sBHH")
    if magic != _FGNN_MAGIC:
        raise WeightFormatError(f"bad magic {magic!r}")
    if version != _FGNN_VERSION:
        raise WeightFormatError(f"unsupported version {version}")
    layers = [_read_layer(r) for _ in range(n_layers)]
    try:
        found = ArchSpec(tuple(layers), side_dim)
    except ArchitectureError as e:
        raise WeightFormatError(f"descriptor is not a valid architecture: {e}") from None
    if spec is not None:
        if spec.side_input_dim != side_dim:
            raise WeightFormatError(
                f"side input dim {side_dim} != expected {spec.side_input_dim}"
            )
        if len(spec.layers) != n_layers:
            raise WeightFormatError(f"layer count {n_layers} != expected {len(spec.layers)}")
        for i, (a, b) in enumerate(zip(spec.layers, found.layers)):
            if a != b:
                raise WeightFormatError(f"layer {i} mismatch: file has {b}, expected {a}")
    expected = 4 * sum(found.layer_param_counts())
    if len(data) - r.pos != expected:
        raise WeightFormatError(
            f"parameter bytes {len(data) - r.pos} != expected {expected}"
        )
    net = build_network(found, seed=0)
    for i, p in enumerate(net.params):
        if p is None:
            continue
        w, b = p
        for arr in (w, b):
            nbytes = arr.size * 4
            if r.pos + nbytes > len(data):
                raise WeightFormatError(f"truncated at byte {r.pos} (layer {i})")
            vals = np.frombuffer(data, "<f4", count=arr.size, offset=r.pos)
            arr[...] = vals.reshape(arr.shape)
            r.pos += nbytes
    if r.pos != len(data):
        raise WeightFormatError(f"{len(data) - r.pos} trailing bytes after parameters")
    return net


# -- architecture presets --------------------------------------------------------


def preset_arch(name: str) -> ArchSpec:
    """Named reference architectures.

    base: the original stack on the full 30x40 field, 3-class head.
    base_regression: same trunk with a single linear output.
    base_regression_side: regression trunk with the desired-steer side input.
    final: the downscaled 15x20 stack with same padding and ceil pooling.
    """
    trunk_valid = (
        Input((30, 40, 2)),
        Conv(32, "valid"),
        MaxPool("floor"),
        Conv(8, "valid"),
        Conv(8, "valid"),
        MaxPool("floor"),
        Flatten(),
        Dense(16),
        Dense(16),
    )
    presets = {
        "base": ArchSpec(trunk_valid + (Dense(3, "softmax"),)),
        "base_regression": ArchSpec(trunk_valid + (Dense(1, "linear"),)),
        "base_regression_side": ArchSpec(trunk_valid + (Dense(1, "linear"),), side_input_dim=1),
        "final": ArchSpec(
            (
                Input((15, 20, 2)),
                Conv(32, "same"),
                MaxPool("ceil"),
                Conv(8, "same"),
                Conv(8, "same"),
                MaxPool("ceil"),
                Flatten(),
                Dense(32),
                Dense(16),
                Dense(3, "softmax"),
            )
        ),
    }
    try:
        return presets[name]
    except KeyError:
        raise KeyError(f"unknown architecture preset {name!r}; known: {sorted(presets)}") from None
