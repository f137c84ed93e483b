"""Dense radiomics classifier: forward pass, backprop, Nadam training.

Seven weight layers (hidden widths 1024/512/256/128/64/32, then the
3-class softmax head), ReLU activations, inverted dropout after every
hidden layer, L2 penalty on the kernels, class-weighted cross entropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import artifacts
from ..errors import EmptyDataset, NonFiniteLoss, ShapeMismatch

PAPER_HIDDEN_WIDTHS = (1024, 512, 256, 128, 64, 32)
N_CLASSES = 3


@dataclass
class DenseConfig:
    hidden_widths: tuple = PAPER_HIDDEN_WIDTHS
    learning_rate: float = 1e-3
    batch_size: int = 128
    dropout: float = 0.2
    l2: float = 1e-4
    class_weights: tuple = (0.1, 0.3, 0.9)
    epochs: int = 50
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class DenseNetParams:
    weights: list
    biases: list
    dropout: float = 0.2
    l2: float = 1e-4
    class_weights: tuple = (0.1, 0.3, 0.9)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_widths(self) -> tuple:
        return tuple(w.shape[1] for w in self.weights)


def init_params(input_dim: int, config: DenseConfig, rng) -> DenseNetParams:
    """He-uniform initialization across the width chain."""
    widths = (input_dim,) + tuple(config.hidden_widths) + (N_CLASSES,)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenseNetParams(weights=weights, biases=biases, dropout=config.dropout,
                          l2=config.l2, class_weights=tuple(config.class_weights))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_with_cache(params: DenseNetParams, x: np.ndarray,
                        training: bool, rng):
    """Returns (probs, activations, dropout masks)."""
    a = x
    activations = [a]
    masks = []
    keep = 1.0 - params.dropout
    n_layers = len(params.weights)
    for i in range(n_layers - 1):
        z = a @ params.weights[i] + params.biases[i]
        a = np.maximum(z, 0.0)
        if training and params.dropout > 0.0:
            mask = (rng.random(a.shape) >= params.dropout) / keep
            a = a * mask
            masks.append(mask)
        else:
            masks.append(None)
        activations.append(a)
    logits = a @ params.weights[-1] + params.biases[-1]
    return _softmax(logits), activations, masks


def dense_forward(params: DenseNetParams, x: np.ndarray,
                  training: bool = False, rng=None) -> np.ndarray:
    """Class probabilities; deterministic when training is False."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != params.input_dim:
        raise ShapeMismatch(
            f"input width {x.shape[1]}, expected {params.input_dim}")
    if training and params.dropout > 0.0 and rng is None:
        raise ValueError("training-mode dropout requires an rng")
    probs, _, _ = _forward_with_cache(params, x, training, rng)
    return probs[0] if single else probs


def weighted_cross_entropy(params: DenseNetParams, x: np.ndarray,
                           y: np.ndarray) -> float:
    """Class-weighted mean cross entropy plus the L2 kernel penalty."""
    probs = dense_forward(params, x)
    w = np.asarray(params.class_weights)[y]
    picked = np.clip(probs[np.arange(len(y)), y], 1e-300, None)
    total_w = w.sum()
    data_term = float((w * -np.log(picked)).sum() / total_w) if total_w > 0 else 0.0
    l2_term = 0.5 * params.l2 * sum(float((wm ** 2).sum()) for wm in params.weights)
    return data_term + l2_term


def loss_and_grads(params: DenseNetParams, x: np.ndarray, y: np.ndarray,
                   training: bool = False, rng=None):
    """Loss plus gradients for every weight matrix and bias vector.

    The data term normalizes by the sum of sample class weights, so
    zero-weighted samples drop out of the optimization exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    w = np.asarray(params.class_weights, dtype=np.float64)[y]
    keep = w > 0.0
    if not keep.all():
        # zero-weighted samples contribute nothing; dropping them up front
        # makes training with them present or removed exactly identical
        x, y, w = x[keep], y[keep], w[keep]
    n = x.shape[0]
    if n == 0:
        loss = 0.5 * params.l2 * sum(float((wm ** 2).sum()) for wm in params.weights)
        grads_w = [params.l2 * wm for wm in params.weights]
        grads_b = [np.zeros_like(b) for b in params.biases]
        return loss, grads_w, grads_b
    probs, activations, masks = _forward_with_cache(params, x, training, rng)
    total_w = w.sum()
    picked = np.clip(probs[np.arange(n), y], 1e-300, None)
    data_term = float((w * -np.log(picked)).sum() / total_w) if total_w > 0 else 0.0
    loss = data_term + 0.5 * params.l2 * sum(float((wm ** 2).sum())
                                             for wm in params.weights)

    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    scale = (w / total_w)[:, None] if total_w > 0 else np.zeros((n, 1))
    delta = (probs - onehot) * scale

    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        grads_w[i] = activations[i].T @ delta + params.l2 * params.weights[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ params.weights[i].T
            if masks[i - 1] is not None:
                delta = delta * masks[i - 1]
            delta = delta * (activations[i] > 0.0)
    return loss, grads_w, grads_b


class NadamOptimizer:
    """Adam with Nesterov momentum (bias-corrected lookahead update)."""

    def __init__(self, shapes, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, tensors, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for i, (tensor, grad) in enumerate(zip(tensors, grads)):
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grad
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grad ** 2
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            update = (b1 * m_hat + (1.0 - b1) * grad / bc1) / (np.sqrt(v_hat) + self.eps)
            tensor -= self.lr * update


@dataclass
class TrainHistory:
    epoch_loss: list = field(default_factory=list)   # full-set weighted CE + L2
    initial_loss: float = float("nan")


def dense_train(x: np.ndarray, y: np.ndarray, config: DenseConfig) -> tuple:
    """Seeded Nadam training; returns (params, history)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyDataset("training requires at least one sample")
    rng = np.random.default_rng(config.seed)
    params = init_params(x.shape[1], config, rng)
    shapes = [w.shape for w in params.weights] + [b.shape for b in params.biases]
    optimizer = NadamOptimizer(shapes, lr=config.learning_rate,
                               beta1=config.beta1, beta2=config.beta2,
                               eps=config.eps)
    history = TrainHistory(initial_loss=weighted_cross_entropy(params, x, y))
    n = x.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            # canonical within-batch order keeps float summation reproducible
            batch = np.sort(order[start:start + config.batch_size])
            loss, grads_w, grads_b = loss_and_grads(
                params, x[batch], y[batch], training=True, rng=rng)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became {loss} at step {optimizer.t + 1}")
            optimizer.step(params.weights + params.biases, grads_w + grads_b)
        history.epoch_loss.append(weighted_cross_entropy(params, x, y))
    return params, history


def save_dense(path, params: DenseNetParams, meta: dict | None = None) -> str:
    doc = dict(meta or {})
    doc.update({
        "layer_widths": list(params.layer_widths),
        "input_dim": params.input_dim,
        "dropout": params.dropout,
        "l2": params.l2,
        "class_weights": list(params.class_weights),
        "activations": ["relu"] * (len(params.weights) - 1) + ["softmax"],
    })
    tensors = {}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        tensors[f"w{i}"] = w
        tensors[f"b{i}"] = b
    return artifacts.save_artifact(path, "dense_net", doc, tensors)


def load_dense(path) -> DenseNetParams:
    art = artifacts.load_artifact(path, expect_kind="dense_net")
    n_layers = len(art.meta["layer_widths"])
    weights = [art.tensors[f"w{i}"].astype(np.float64) for i in range(n_layers)]
    biases = [art.tensors[f"b{i}"].astype(np.float64) for i in range(n_layers)]
    return DenseNetParams(weights=weights, biases=biases,
                          dropout=float(art.meta["dropout"]),
                          l2=float(art.meta["l2"]),
                          class_weights=tuple(art.meta["class_weights"]))
