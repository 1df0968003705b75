"""Dense softmax-classifier core: exact forward/backward math in float64.

Weights are (out_dim, in_dim) matrices applied as x @ W.T + b. Hidden layers
use ReLU; the final layer is linear and softmax is applied only at the loss
and prediction boundary. The ReLU subgradient at exactly zero is taken as 0.

Initialization is He-uniform (limit sqrt(6 / fan_in)) from a seeded stream,
biases start at zero. Everything here is deterministic given the seed.

Checkpoint layout (little-endian):

    magic    4 bytes  b"FAUM"
    version  u16      1
    layers   u8
    per layer: in_dim u32, out_dim u32, activation u8 (0=none, 1=relu)
    per layer: W as float64 row-major (out_dim x in_dim), then b (out_dim)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from collections.abc import Sequence

import numpy as np

from .errors import DataError, DimensionError, DomainError, FormatError, NumericError
from .facs import N_EMOTIONS

ACT_NONE = "none"
ACT_RELU = "relu"
_ACT_CODES = {ACT_NONE: 0, ACT_RELU: 1}
_ACT_NAMES = {code: name for name, code in _ACT_CODES.items()}

Params = list[tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = ACT_RELU

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise DimensionError(f"layer dims must be >= 1, got {self.in_dim}->{self.out_dim}")
        if self.activation not in _ACT_CODES:
            raise DomainError(f"unknown activation {self.activation!r}")


def chain_specs(input_dim: int, hidden_dims: Sequence[int], n_classes: int = N_EMOTIONS) -> list[LayerSpec]:
    """Build the spec chain input -> hidden (ReLU) -> n_classes (linear)."""
    dims = [int(input_dim), *[int(d) for d in hidden_dims], int(n_classes)]
    specs = []
    for i in range(len(dims) - 1):
        act = ACT_RELU if i < len(dims) - 2 else ACT_NONE
        specs.append(LayerSpec(dims[i], dims[i + 1], act))
    return validate_specs(specs)


def validate_specs(specs: Sequence[LayerSpec]) -> list[LayerSpec]:
    """Check the dimension chain, the 7-way output, and the linear last layer."""
    specs = list(specs)
    if not specs:
        raise DimensionError("a network needs at least one layer")
    for a, b in zip(specs, specs[1:]):
        if a.out_dim != b.in_dim:
            raise DimensionError(
                f"layer chain broken: {a.out_dim} outputs feed {b.in_dim} inputs"
            )
    last = specs[-1]
    if last.out_dim != N_EMOTIONS:
        raise DimensionError(f"final layer must output {N_EMOTIONS} logits, got {last.out_dim}")
    if last.activation != ACT_NONE:
        raise DomainError("final layer must be linear; softmax is applied in the loss")
    return specs


def init_params(specs: Sequence[LayerSpec], seed: int) -> Params:
    rng = np.random.default_rng(int(seed) % 2**64)
    params: Params = []
    for spec in validate_specs(specs):
        limit = np.sqrt(6.0 / spec.in_dim)
        W = rng.uniform(-limit, limit, size=(spec.out_dim, spec.in_dim))
        b = np.zeros(spec.out_dim, dtype=np.float64)
        params.append((W, b))
    return params


def _check_input(specs: Sequence[LayerSpec], x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"inputs must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.shape[1] != specs[0].in_dim:
        raise DimensionError(
            f"input has {arr.shape[1]} features, network expects {specs[0].in_dim}"
        )
    return arr


def forward(params: Params, specs: Sequence[LayerSpec], x) -> np.ndarray:
    """Logits for a single feature vector or an (n, d) batch."""
    single = np.asarray(x).ndim == 1
    X = _check_input(specs, x)
    for (W, b), spec in zip(params, specs):
        X = X @ W.T + b
        if spec.activation == ACT_RELU:
            X = np.maximum(X, 0.0)
    return X[0] if single else X


def _forward_cache(params: Params, specs: Sequence[LayerSpec], X: np.ndarray):
    """Layer inputs and pre-activations needed by the backward pass."""
    inputs = [X]
    pres = []
    for (W, b), spec in zip(params, specs):
        z = inputs[-1] @ W.T + b
        pres.append(z)
        inputs.append(np.maximum(z, 0.0) if spec.activation == ACT_RELU else z)
    return inputs, pres


def softmax(logits) -> np.ndarray:
    """Max-subtraction stabilized softmax over the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NumericError("softmax received non-finite logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NumericError("log_softmax received non-finite logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(probs, y: int) -> float:
    """Negative log-likelihood -ln p[y] of one probability vector."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise DimensionError(f"cross_entropy expects one probability vector, got ndim={p.ndim}")
    y = int(y)
    if not 0 <= y < p.shape[0]:
        raise DomainError(f"label {y} outside 0..{p.shape[0] - 1}")
    return float(-np.log(p[y]))


def softmax_xent_grad(logits, y) -> np.ndarray:
    """Per-sample gradient of -ln p[y] w.r.t. the logits: softmax(z) - onehot(y)."""
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    probs = softmax(z)
    grad = probs.copy()
    grad[np.arange(z.shape[0]), np.asarray(y, dtype=np.int64).reshape(-1)] -= 1.0
    return grad.reshape(np.shape(logits))


def batch_loss(params: Params, specs: Sequence[LayerSpec], X, y, l2_weight: float = 0.0) -> float:
    """Mean cross-entropy over a batch plus the optional L2 weight penalty."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    logits = forward(params, specs, X)
    logp = log_softmax(logits)
    loss = float(-logp[np.arange(X.shape[0]), y].mean())
    if l2_weight > 0.0:
        loss += 0.5 * l2_weight * sum(float(np.sum(W * W)) for W, _ in params)
    return loss


def backward(
    params: Params,
    specs: Sequence[LayerSpec],
    X,
    y,
    l2_weight: float = 0.0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Exact gradients of the mean softmax cross-entropy w.r.t. every W and b."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise DataError("cannot compute gradients on an empty batch")
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise DimensionError(f"{X.shape[0]} inputs but {y.shape[0]} labels")
    inputs, pres = _forward_cache(params, specs, _check_input(specs, X))
    n = X.shape[0]
    delta = softmax(inputs[-1])
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params)  # type: ignore[list-item]
    for l in range(len(params) - 1, -1, -1):
        W, _ = params[l]
        dW = delta.T @ inputs[l]
        if l2_weight > 0.0:
            dW += l2_weight * W
        db = delta.sum(axis=0)
        grads[l] = (dW, db)
        if l > 0:
            delta = delta @ W
            if specs[l - 1].activation == ACT_RELU:
                delta = delta * (pres[l - 1] > 0.0)
    return grads


class SGD:
    """Plain stochastic gradient descent."""

    def __init__(self, params: Params, learning_rate: float):
        self.learning_rate = float(learning_rate)

    def step(self, params: Params, grads) -> None:
        for (W, b), (dW, db) in zip(params, grads):
            W -= self.learning_rate * dW
            b -= self.learning_rate * db


class Adam:
    """Adam with bias correction; state arrays match the parameter shapes."""

    def __init__(
        self,
        params: Params,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.learning_rate = float(learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        self.v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]

    def step(self, params: Params, grads) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for (W, b), (dW, db), (mW, mb), (vW, vb) in zip(params, grads, self.m, self.v):
            for target, grad, m, v in ((W, dW, mW, vW), (b, db, mb, vb)):
                m *= self.beta1
                m += (1.0 - self.beta1) * grad
                v *= self.beta2
                v += (1.0 - self.beta2) * grad * grad
                target -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)


OPTIMIZERS = {"sgd": SGD, "adam": Adam}


def make_optimizer(name: str, params: Params, learning_rate: float):
    try:
        cls = OPTIMIZERS[name]
    except KeyError:
        raise DomainError(f"unknown optimizer {name!r} (expected one of {sorted(OPTIMIZERS)})") from None
    if learning_rate < 0.0:
        raise DomainError(f"learning_rate must be >= 0, got {learning_rate}")
    return cls(params, learning_rate)


# --- checkpoints --------------------------------------------------------------

MAGIC = b"FAUM"
VERSION = 1
_HEADER = struct.Struct("<4sHB")
_LAYER = struct.Struct("<IIB")


def save_checkpoint(path: str | Path, specs: Sequence[LayerSpec], params: Params) -> None:
    specs = validate_specs(specs)
    if len(specs) != len(params):
        raise DimensionError(f"{len(specs)} specs but {len(params)} parameter sets")
    parts = [_HEADER.pack(MAGIC, VERSION, len(specs))]
    for spec in specs:
        parts.append(_LAYER.pack(spec.in_dim, spec.out_dim, _ACT_CODES[spec.activation]))
    for (W, b), spec in zip(params, specs):
        if W.shape != (spec.out_dim, spec.in_dim) or b.shape != (spec.out_dim,):
            raise DimensionError(f"parameter shapes {W.shape}/{b.shape} do not match {spec}")
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes(order="C"))
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes(order="C"))
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: str | Path) -> tuple[list[LayerSpec], Params]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}") from None
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n_layers = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n_layers < 1:
        raise FormatError(f"{path}: checkpoint declares no layers")
    offset = _HEADER.size
    specs: list[LayerSpec] = []
    for _ in range(n_layers):
        if len(blob) < offset + _LAYER.size:
            raise FormatError(f"{path}: truncated layer table")
        in_dim, out_dim, act_code = _LAYER.unpack_from(blob, offset)
        offset += _LAYER.size
        if act_code not in _ACT_NAMES:
            raise FormatError(f"{path}: unknown activation code {act_code}")
        if in_dim < 1 or out_dim < 1:
            raise FormatError(f"{path}: invalid layer dims {in_dim}->{out_dim}")
        specs.append(LayerSpec(in_dim, out_dim, _ACT_NAMES[act_code]))
    try:
        specs = validate_specs(specs)
    except (DimensionError, DomainError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    params: Params = []
    for spec in specs:
        w_bytes = 8 * spec.out_dim * spec.in_dim
        b_bytes = 8 * spec.out_dim
        if len(blob) < offset + w_bytes + b_bytes:
            raise FormatError(f"{path}: truncated parameter payload")
        W = np.frombuffer(blob, dtype="<f8", count=spec.out_dim * spec.in_dim, offset=offset)
        offset += w_bytes
        b = np.frombuffer(blob, dtype="<f8", count=spec.out_dim, offset=offset)
        offset += b_bytes
        params.append((W.reshape(spec.out_dim, spec.in_dim).copy(), b.copy()))
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} unexpected trailing bytes")
    return specs, params
