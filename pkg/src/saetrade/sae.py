"""Supervised autoencoder MLP with volatility-scaled Gaussian noise.

Layout (``autoencoder=True``)::

    x -> encoder hidden layers -> code (bottleneck) -> decoder hidden -> x_hat
    [code, x] -> classifier hidden layers -> scores

With ``autoencoder=False`` the encoder/decoder are dropped and the
classifier sees ``x`` alone, which is the plain MLP baseline.

Everything is float64 numpy; gradients are hand-derived and checked against
finite differences in the test suite.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

ACTIVATIONS = ("tanh", "swish", "linear")
OUTPUT_MODES = {"regression": 1, "binary": 2, "ternary": 3}
CLASS_ORDER = {"binary": (-1, 1), "ternary": (-1, 0, 1)}
OPTIMIZERS = ("sgd", "adam")
EPS = 1e-12
FORMAT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SAEConfig:
    """Architecture and training settings.

    Hidden widths of ``None`` resolve to the input width for the encoder and
    decoder, and to ``bottleneck + input`` for the classifier. The
    ``linear`` activation exists for testing.
    """

    input_dim: int
    bottleneck_fraction: float = 0.4
    encoder_layers: int = 1
    encoder_width: Optional[int] = None
    decoder_layers: int = 1
    decoder_width: Optional[int] = None
    classifier_layers: int = 1
    classifier_width: Optional[int] = None
    activation: str = "tanh"
    noise_rate: float = 0.0
    alpha: float = 0.5
    epochs: int = 50
    learning_rate: float = 0.01
    batch_size: int = 4
    optimizer: str = "sgd"
    momentum: float = 0.0
    seed: int = 0
    output_mode: str = "ternary"
    autoencoder: bool = True
    standardize: bool = True

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be at least 1")
        if not 0 < self.bottleneck_fraction <= 1:
            raise ValueError("bottleneck_fraction must lie in (0, 1]")
        for name in ("encoder_layers", "decoder_layers", "classifier_layers"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("encoder_width", "decoder_width", "classifier_width"):
            w = getattr(self, name)
            if w is not None and w < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if self.output_mode not in OUTPUT_MODES:
            raise ValueError(f"output_mode must be one of {tuple(OUTPUT_MODES)}")
        if self.noise_rate < 0:
            raise ValueError("noise_rate must be nonnegative")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")

    @property
    def bottleneck(self) -> int:
        return max(1, int(round(self.bottleneck_fraction * self.input_dim)))

    @property
    def n_outputs(self) -> int:
        return OUTPUT_MODES[self.output_mode]

    def layer_shapes(self) -> dict[str, list[tuple[int, int]]]:
        d, b = self.input_dim, self.bottleneck
        shapes: dict[str, list[tuple[int, int]]] = {"encoder": [], "decoder": [], "classifier": []}
        if self.autoencoder:
            sizes = [d] + [self.encoder_width or d] * self.encoder_layers + [b]
            shapes["encoder"] = list(zip(sizes[:-1], sizes[1:]))
            sizes = [b] + [self.decoder_width or d] * self.decoder_layers + [d]
            shapes["decoder"] = list(zip(sizes[:-1], sizes[1:]))
            head_in = b + d
        else:
            head_in = d
        sizes = [head_in] + [self.classifier_width or head_in] * self.classifier_layers + [self.n_outputs]
        shapes["classifier"] = list(zip(sizes[:-1], sizes[1:]))
        return shapes


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "swish":
        return z * _sigmoid(z)
    return z


def _act_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if kind == "swish":
        s = _sigmoid(z)
        return s + z * s * (1.0 - s)
    return np.ones_like(z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def swish(z):
    return _act(np.asarray(z, dtype=float), "swish")


@dataclass
class Forward:
    reconstruction: Optional[np.ndarray]
    scores: np.ndarray
    code: Optional[np.ndarray]
    # per-stack (inputs, pre-activations) kept for backprop
    cache: dict = field(default_factory=dict, repr=False)


@dataclass
class SAEModel:
    config: SAEConfig
    weights: dict[str, list[np.ndarray]]
    biases: dict[str, list[np.ndarray]]
    mean: np.ndarray
    scale: np.ndarray
    history: list[dict] = field(default_factory=list)

    @classmethod
    def initialize(cls, config: SAEConfig, rng: np.random.Generator) -> "SAEModel":
        """Glorot-uniform weights, zero biases, identity scaler."""
        weights, biases = {}, {}
        for stack, shapes in config.layer_shapes().items():
            weights[stack], biases[stack] = [], []
            for fan_in, fan_out in shapes:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                weights[stack].append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
                biases[stack].append(np.zeros(fan_out))
        d = config.input_dim
        return cls(config, weights, biases, np.zeros(d), np.ones(d))

    def parameters(self) -> list[np.ndarray]:
        out = []
        for stack in ("encoder", "decoder", "classifier"):
            for w, b in zip(self.weights[stack], self.biases[stack]):
                out.extend([w, b])
        return out

    def copy(self) -> "SAEModel":
        return SAEModel(
            self.config,
            {k: [w.copy() for w in v] for k, v in self.weights.items()},
            {k: [b.copy() for b in v] for k, v in self.biases.items()},
            self.mean.copy(),
            self.scale.copy(),
            [dict(h) for h in self.history],
        )

    # ------------------------------------------------------------------
    def _run_stack(self, stack: str, a: np.ndarray, final_act: bool):
        inputs, pre = [], []
        kind = self.config.activation
        layers = list(zip(self.weights[stack], self.biases[stack]))
        for i, (w, b) in enumerate(layers):
            inputs.append(a)
            z = a @ w + b
            pre.append(z)
            last = i == len(layers) - 1
            a = _act(z, kind) if (not last or final_act) else z
        return a, (inputs, pre)

    def forward_standardized(self, x: np.ndarray) -> Forward:
        """Forward pass on inputs that are already standardized."""
        cache = {}
        recon = code = None
        if self.config.autoencoder:
            code, cache["encoder"] = self._run_stack("encoder", x, final_act=True)
            recon, cache["decoder"] = self._run_stack("decoder", code, final_act=False)
            head_in = np.concatenate([code, x], axis=1)
        else:
            head_in = x
        logits, cache["classifier"] = self._run_stack("classifier", head_in, final_act=False)
        if self.config.output_mode == "regression":
            scores = logits
        else:
            scores = _softmax(logits)
        return Forward(recon, scores, code, cache)

    def transform(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ValueError(
                f"expected a matrix with {self.config.input_dim} columns, got shape {x.shape}"
            )
        return (x - self.mean) / self.scale

    def forward(self, features) -> Forward:
        return self.forward_standardized(self.transform(features))

    # ------------------------------------------------------------------
    def loss_and_grads(self, x_in: np.ndarray, x_clean: np.ndarray, y: np.ndarray):
        """Loss parts and parameter gradients (ordered like :meth:`parameters`).

        ``x_in`` is the (possibly noised) network input, ``x_clean`` the
        reconstruction target and ``y`` the encoded task target.
        """
        cfg = self.config
        out = self.forward_standardized(x_in)
        total, recon_part, task_part = loss(out, x_clean, y, cfg.alpha, cfg.output_mode, cfg.autoencoder)
        n = x_in.shape[0]
        alpha = cfg.alpha if cfg.autoencoder else 0.0

        # task gradient w.r.t. head output (logits for classification)
        if cfg.output_mode == "regression":
            g_out = (1 - alpha) * 2.0 * (out.scores - y.reshape(-1, 1)) / n
        else:
            onehot = np.zeros_like(out.scores)
            onehot[np.arange(n), y] = 1.0
            g_out = (1 - alpha) * (out.scores - onehot) / n

        grads = {}
        g_head_in = self._back_stack("classifier", g_out, False, grads, out.cache)
        if cfg.autoencoder:
            b = cfg.bottleneck
            g_recon = alpha * 2.0 * (out.reconstruction - x_clean) / x_clean.size
            g_code = self._back_stack("decoder", g_recon, False, grads, out.cache)
            g_code = g_code + g_head_in[:, :b]
            self._back_stack("encoder", g_code, True, grads, out.cache)
        flat = []
        for stack in ("encoder", "decoder", "classifier"):
            for gw, gb in grads.get(stack, []):
                flat.extend([gw, gb])
        return (total, recon_part, task_part), flat

    def _back_stack(self, stack, g, final_act, grads, cache):
        inputs, pre = cache[stack]
        kind = self.config.activation
        layer_grads = []
        for i in range(len(inputs) - 1, -1, -1):
            last = i == len(inputs) - 1
            if not last or final_act:
                g = g * _act_grad(pre[i], kind)
            layer_grads.append((inputs[i].T @ g, g.sum(axis=0)))
            g = g @ self.weights[stack][i].T
        grads[stack] = layer_grads[::-1]
        return g

    def predict(self, features) -> np.ndarray:
        """Regression values, or labels mapped from the class probabilities.

        Binary: +1 when P(+1) >= 0.5. Ternary: argmax over (-1, 0, +1),
        first maximum on ties.
        """
        x = np.asarray(features, dtype=float)
        if x.ndim == 2 and x.shape[0] == 0:
            return np.zeros(0, dtype=float if self.config.output_mode == "regression" else np.int64)
        scores = self.forward(x).scores
        return scores_to_predictions(scores, self.config.output_mode)

    # ------------------------------------------------------------------
    def save(self, path) -> None:
        lines = [f"SAEMODEL {FORMAT_VERSION}", json.dumps(asdict(self.config), sort_keys=True)]
        arrays = [("mean", self.mean), ("scale", self.scale)]
        for stack in ("encoder", "decoder", "classifier"):
            for i, (w, b) in enumerate(zip(self.weights[stack], self.biases[stack])):
                arrays += [(f"{stack}.W{i}", w), (f"{stack}.b{i}", b)]
        for name, arr in arrays:
            a2 = np.atleast_2d(arr)
            lines.append(f"{name} {arr.ndim} {a2.shape[0]} {a2.shape[1]}")
            lines.append(" ".join(float(v).hex() for v in arr.ravel(order="C")))
        lines.append("history " + json.dumps(self.history))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "SAEModel":
        lines = Path(path).read_text().splitlines()
        tag, version = lines[0].split()
        if tag != "SAEMODEL" or int(version) != FORMAT_VERSION:
            raise ValueError(f"unsupported model file header {lines[0]!r}")
        config = SAEConfig(**json.loads(lines[1]))
        arrays = {}
        i = 2
        while not lines[i].startswith("history "):
            name, ndim, rows, cols = lines[i].split()
            values = [float.fromhex(v) for v in lines[i + 1].split()] if lines[i + 1] else []
            arr = np.array(values, dtype=float).reshape(int(rows), int(cols))
            arrays[name] = arr if int(ndim) == 2 else arr.ravel()
            i += 2
        history = json.loads(lines[i][len("history "):])
        weights, biases = {}, {}
        for stack, shapes in config.layer_shapes().items():
            weights[stack] = [arrays[f"{stack}.W{k}"] for k in range(len(shapes))]
            biases[stack] = [arrays[f"{stack}.b{k}"] for k in range(len(shapes))]
        return cls(config, weights, biases, arrays["mean"], arrays["scale"], history)


def scores_to_predictions(scores: np.ndarray, mode: str) -> np.ndarray:
    if mode == "regression":
        return scores[:, 0].copy()
    if mode == "binary":
        return np.where(scores[:, 1] >= 0.5, 1, -1).astype(np.int64)
    order = np.array(CLASS_ORDER["ternary"])
    return order[np.argmax(scores, axis=1)]


def encode_targets(targets, mode: str) -> np.ndarray:
    """Map labels to class indices (or float targets for regression)."""
    y = np.asarray(targets)
    if mode == "regression":
        return y.astype(float).ravel()
    order = CLASS_ORDER[mode]
    y = y.astype(np.int64).ravel()
    if not np.all(np.isin(y, order)):
        raise ValueError(f"{mode} targets must be in {order}")
    return np.searchsorted(np.array(order), y)


def loss(output: Forward, x_clean: np.ndarray, targets: np.ndarray, alpha: float,
         mode: str, autoencoder: bool = True) -> tuple[float, float, float]:
    """Joint objective ``alpha * recon MSE + (1 - alpha) * task loss``.

    ``targets`` are real values for regression and class indices otherwise.
    Probabilities are clamped at 1e-12 before the log. Without an
    autoencoder the reconstruction part is 0 and the task loss carries full
    weight.
    """
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if mode == "regression":
        task = float(np.mean((output.scores[:, 0] - targets) ** 2))
    else:
        p = output.scores[np.arange(len(targets)), targets]
        task = float(-np.mean(np.log(np.maximum(p, EPS))))
    if not autoencoder:
        return task, 0.0, task
    recon = float(np.mean((output.reconstruction - x_clean) ** 2))
    return alpha * recon + (1 - alpha) * task, recon, task


def add_noise(features, rate: float, std, seed=None, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Add ``Normal(0, (rate * std[j])^2)`` noise to every column ``j``."""
    if rate < 0:
        raise ValueError("noise rate must be nonnegative")
    x = np.asarray(features, dtype=float)
    s = np.asarray(std, dtype=float)
    if x.ndim != 2 or s.shape != (x.shape[1],):
        raise ValueError("std must have one entry per feature column")
    if np.any(s < 0):
        raise ValueError("feature std must be nonnegative")
    if rate == 0:
        return x.copy()
    if rng is None:
        rng = np.random.default_rng(seed)
    return x + rng.standard_normal(x.shape) * (rate * s)


def train(config: SAEConfig, features, targets, init: Optional[SAEModel] = None) -> SAEModel:
    """Mini-batch SGD on the joint loss.

    Seeding: ``SeedSequence(config.seed)`` spawns ``epochs + 1`` children;
    child 0 initializes weights, child ``e + 1`` drives epoch ``e`` (batch
    shuffle, then noise draws). The scaler is fitted on ``features``.
    After each epoch the clean full-sample loss is appended to ``history``.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != config.input_dim:
        raise ValueError(f"features must have shape (n, {config.input_dim}), got {x.shape}")
    if len(x) < 1:
        raise ValueError("need at least one training row")
    y = encode_targets(targets, config.output_mode)
    if len(y) != len(x):
        raise ValueError(f"{len(x)} feature rows but {len(y)} targets")

    streams = np.random.SeedSequence(config.seed).spawn(config.epochs + 1)
    model = init.copy() if init is not None else SAEModel.initialize(config, np.random.default_rng(streams[0]))
    if config.standardize:
        model.mean = x.mean(axis=0)
        scale = x.std(axis=0)
        model.scale = np.where(scale > 0, scale, 1.0)
    xs = model.transform(x)
    noise_std = xs.std(axis=0)

    params = model.parameters()
    step = _sgd_step(config) if config.optimizer == "sgd" else _adam_step(config)
    n = len(xs)
    model.history = []
    for epoch in range(config.epochs):
        rng = np.random.default_rng(streams[epoch + 1])
        order = rng.permutation(n)
        noisy = add_noise(xs, config.noise_rate, noise_std, rng=rng)
        for bi, start in enumerate(range(0, n, config.batch_size)):
            rows = order[start:start + config.batch_size]
            (total, _, _), grads = model.loss_and_grads(noisy[rows], xs[rows], y[rows])
            if not np.isfinite(total):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}, batch {bi}")
            step(params, grads)
            if not all(np.all(np.isfinite(p)) for p in params):
                raise TrainingDivergedError(f"non-finite parameters at epoch {epoch}, batch {bi}")
        out = model.forward_standardized(xs)
        total, recon, task = loss(out, xs, y, config.alpha, config.output_mode, config.autoencoder)
        model.history.append({"epoch": epoch, "loss": total, "recon": recon, "task": task})
    logger.debug("trained %d epochs, final loss %.6f", config.epochs, model.history[-1]["loss"])
    return model


def _sgd_step(config: SAEConfig):
    velocity = None

    def step(params, grads):
        nonlocal velocity
        if velocity is None:
            velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, velocity):
            v *= config.momentum
            v -= config.learning_rate * g
            p += v

    return step


def _adam_step(config: SAEConfig, beta1=0.9, beta2=0.999, eps=1e-7):
    state = {"t": 0, "m": None, "v": None}

    def step(params, grads):
        if state["m"] is None:
            state["m"] = [np.zeros_like(p) for p in params]
            state["v"] = [np.zeros_like(p) for p in params]
        state["t"] += 1
        t = state["t"]
        lr = config.learning_rate * np.sqrt(1 - beta2 ** t) / (1 - beta1 ** t)
        for p, g, m, v in zip(params, grads, state["m"], state["v"]):
            m *= beta1
            m += (1 - beta1) * g
            v *= beta2
            v += (1 - beta2) * g * g
            p -= lr * m / (np.sqrt(v) + eps)

    return step


def with_overrides(config: SAEConfig, **kwargs) -> SAEConfig:
    return replace(config, **kwargs)
