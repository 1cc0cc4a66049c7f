"""Encoder-decoder network mapping source-robot features into the target
robot's feature space.

A fully-connected funnel (encoder widths, a narrow code layer, mirrored
decoder widths) with ELU hidden activations and a linear output, trained by
Adam on mini-batch mean squared error over correspondence pairs.  The loss
optimized is MSE; the reported training loss is its square root, which has
the same minimizer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .correspond import CorrespondenceSet
from .errors import DimensionMismatch, EmptyCorrespondence, NonFiniteLoss

EDN_FORMAT = "xmorph-edn-v1"


@dataclass(frozen=True)
class EdnConfig:
    encoder_units: tuple[int, ...] = (1000, 500, 250)
    latent_dim: int = 125
    elu_alpha: float = 1.0
    learning_rate: float = 1e-4
    epochs: int = 1000
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent dim must be >= 1")
        if any(u < 1 for u in self.encoder_units):
            raise ValueError("encoder units must be positive")

    def layer_dims(self, source_dim: int, target_dim: int) -> list[int]:
        """Encoder funnel, code layer, mirrored decoder, target output."""
        return [source_dim, *self.encoder_units, self.latent_dim,
                *reversed(self.encoder_units), target_dim]


@dataclass
class EdnModel:
    """Trained projection: one (weight, bias) pair per affine layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: EdnConfig
    training_loss: float = float("nan")  # final full-set RMSE

    @property
    def source_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def target_dim(self) -> int:
        return self.weights[-1].shape[1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


def elu(z: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    return np.where(z > 0, z, alpha * np.expm1(z))


def elu_grad(z: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    return np.where(z > 0, 1.0, alpha * np.exp(z))


def init_edn(source_dim: int, target_dim: int, config: EdnConfig) -> EdnModel:
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims(source_dim, target_dim)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return EdnModel(weights=weights, biases=biases, config=config)


def _forward_trace(model: EdnModel, x: np.ndarray):
    """Activations and pre-activations per layer, for backprop."""
    alpha = model.config.elu_alpha
    last = len(model.weights) - 1
    h = x
    pre, acts = [], [h]
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if i == last else elu(z, alpha)
        acts.append(h)
    return pre, acts


def edn_forward(model: EdnModel, x: np.ndarray) -> np.ndarray:
    """Project source features to the target space; accepts a vector or a
    [n x source_dim] matrix."""
    single = np.asarray(x).ndim == 1
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.source_dim:
        raise DimensionMismatch(
            f"input dim {x.shape[1]} != model source dim {model.source_dim}")
    _, acts = _forward_trace(model, x)
    return acts[-1][0] if single else acts[-1]


def mse_loss_and_grads(model: EdnModel, x: np.ndarray, y: np.ndarray):
    """Batch MSE (mean over samples and output dims) and parameter grads."""
    alpha = model.config.elu_alpha
    last = len(model.weights) - 1
    pre, acts = _forward_trace(model, x)
    diff = acts[-1] - y
    loss = float(np.mean(diff ** 2))
    # d loss / d output
    delta = (2.0 / diff.size) * diff
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for i in range(last, -1, -1):
        if i != last:
            delta = delta * elu_grad(pre[i], alpha)
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.weights[i].T
    return loss, grads_w, grads_b


def full_rmse(model: EdnModel, x: np.ndarray, y: np.ndarray) -> float:
    pred = edn_forward(model, x)
    return float(np.sqrt(np.mean((pred - y) ** 2)))


class _Adam:
    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def _pair_matrices(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, CorrespondenceSet):
        return pairs.source_matrix(), pairs.target_matrix()
    x, y = pairs
    return np.atleast_2d(np.asarray(x, dtype=np.float64)), \
        np.atleast_2d(np.asarray(y, dtype=np.float64))


def train_edn(pairs, config: EdnConfig = EdnConfig()) -> EdnModel:
    """Train on correspondence pairs (or an (X, Y) matrix tuple).

    Adam (beta1=0.9, beta2=0.999, eps=1e-8) on mini-batch MSE for
    ``config.epochs`` epochs with seeded per-epoch shuffling; deterministic
    given the seed.  Divergence raises NonFiniteLoss with the epoch index.
    """
    x, y = _pair_matrices(pairs)
    if x.shape[0] == 0:
        raise EmptyCorrespondence("no correspondence pairs to train on")
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch("source and target pair counts differ")

    model = init_edn(x.shape[1], y.shape[1], config)
    params = model.parameters()
    opt = _Adam(params, lr=config.learning_rate)
    rng = np.random.default_rng(config.seed + 1)
    n = x.shape[0]
    batch = min(config.batch_size, n)

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            take = order[start:start + batch]
            loss, gw, gb = mse_loss_and_grads(model, x[take], y[take])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"training diverged at epoch {epoch}")
            grads = []
            for w, b in zip(gw, gb):
                grads.extend([w, b])
            opt.step(params, grads)
    model.training_loss = full_rmse(model, x, y)
    return model


def gradient_check(model: EdnModel, x: np.ndarray, y: np.ndarray,
                   h: float = 1e-5, jitter_seed: int = 0) -> float:
    """Max relative error between analytic gradients and central finite
    differences of the batch MSE.

    Inputs receive a small seeded jitter so no ELU pre-activation sits
    exactly at its kink.  Intended for tiny networks.
    """
    rng = np.random.default_rng(jitter_seed)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64)).copy()
    x += rng.uniform(1e-4, 2e-4, size=x.shape) * rng.choice([-1.0, 1.0], size=x.shape)
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))

    _, analytic_w, analytic_b = mse_loss_and_grads(model, x, y)
    analytic = []
    for w, b in zip(analytic_w, analytic_b):
        analytic.extend([w, b])

    worst = 0.0
    for p, g in zip(model.parameters(), analytic):
        flat = p.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up, _, _ = mse_loss_and_grads(model, x, y)
            flat[idx] = orig - h
            down, _, _ = mse_loss_and_grads(model, x, y)
            flat[idx] = orig
            fd = (up - down) / (2.0 * h)
            ga = g.ravel()[idx]
            if ga == 0.0 and fd == 0.0:
                continue
            worst = max(worst, abs(ga - fd) / max(abs(ga), abs(fd), 1e-12))
    return worst


def save_edn(model: EdnModel, path: str | Path) -> None:
    cfg = {
        "encoderUnits": list(model.config.encoder_units),
        "latentDim": model.config.latent_dim,
        "eluAlpha": model.config.elu_alpha,
        "learningRate": model.config.learning_rate,
        "epochs": model.config.epochs,
        "batchSize": model.config.batch_size,
        "seed": model.config.seed,
    }
    arrays = {}
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(Path(path), format=np.array(EDN_FORMAT),
             config=np.array(json.dumps(cfg)),
             n_layers=np.array(len(model.weights)),
             training_loss=np.array(model.training_loss), **arrays)


def load_edn(path: str | Path) -> EdnModel:
    with np.load(Path(path), allow_pickle=False) as blob:
        if str(blob["format"]) != EDN_FORMAT:
            raise DimensionMismatch(f"unsupported model format {blob['format']!r}")
        cfg = json.loads(str(blob["config"]))
        config = EdnConfig(
            encoder_units=tuple(cfg["encoderUnits"]), latent_dim=cfg["latentDim"],
            elu_alpha=cfg["eluAlpha"], learning_rate=cfg["learningRate"],
            epochs=cfg["epochs"], batch_size=cfg["batchSize"], seed=cfg["seed"])
        n_layers = int(blob["n_layers"])
        weights = [blob[f"w{i}"] for i in range(n_layers)]
        biases = [blob[f"b{i}"] for i in range(n_layers)]
        return EdnModel(weights=weights, biases=biases, config=config,
                        training_loss=float(blob["training_loss"]))
