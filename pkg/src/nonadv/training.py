"""Optimizers (SGD, Adam, RMSProp) and the training loops.

Training is deterministic under a fixed config: model init, shuffling and
the adversarial inner loop each draw from their own derived seed stream, so
the epsilon -> 0 limit of adversarial training consumes the shuffle stream
exactly like plain training.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, subrng, subseed
from .errors import ConfigurationError, ContractError, NumericalError
from .models import LinearModel, MlpModel, sigmoid


class Sgd:
    def __init__(self, learning_rate: float):
        self.lr = float(learning_rate)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    """Adam with the standard bias-corrected moment recurrences."""

    def __init__(self, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class RmsProp:
    """RMSProp: v <- rho*v + (1-rho)*g^2, step lr*g/(sqrt(v)+eps)."""

    def __init__(self, learning_rate: float, rho: float = 0.9, eps: float = 1e-8):
        self.lr = float(learning_rate)
        self.rho, self.eps = rho, eps
        self.v = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.v is None:
            self.v = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self.v):
            v *= self.rho
            v += (1 - self.rho) * g * g
            p -= self.lr * g / (np.sqrt(v) + self.eps)


_OPTIMIZERS = {"sgd": Sgd, "adam": Adam, "rmsprop": RmsProp}


def make_optimizer(name: str, learning_rate: float):
    try:
        return _OPTIMIZERS[name](learning_rate)
    except KeyError:
        raise ConfigurationError(f"unknown optimizer {name!r}") from None


@dataclass
class TrainConfig:
    """Model kind plus the optimization hyperparameters."""

    model_kind: str = "mlp"
    learning_rate: float = 1e-3
    epochs: int = 1000
    batch_size: int | None = 32
    l2_penalty: float = 0.0
    optimizer: str = "adam"
    hidden: tuple[int, ...] = (30, 30)
    seed: int = 0

    def __post_init__(self):
        if self.model_kind not in ("mlp", "linear_logistic"):
            raise ConfigurationError(f"unknown model kind {self.model_kind!r}")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be non-negative")
        if self.batch_size is not None and self.batch_size <= 0:
            raise ConfigurationError("batch_size must be positive or None")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ConfigurationError("l2_penalty must be non-negative")
        if self.optimizer not in _OPTIMIZERS:
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")

    @classmethod
    def for_kind(cls, model_kind: str, seed: int = 0, **overrides) -> "TrainConfig":
        """Pinned defaults per model kind."""
        if model_kind == "mlp":
            base = dict(model_kind="mlp", learning_rate=1e-3, epochs=1000,
                        batch_size=32, l2_penalty=0.0, optimizer="adam")
        elif model_kind == "linear_logistic":
            base = dict(model_kind="linear_logistic", learning_rate=0.1,
                        epochs=5000, batch_size=None, l2_penalty=1.0,
                        optimizer="sgd")
        else:
            raise ConfigurationError(f"unknown model kind {model_kind!r}")
        base["seed"] = seed
        base.update(overrides)
        return cls(**base)


@dataclass
class AdvTrainConfig:
    """Robust training: inner ascent in an l-inf ball around each batch."""

    base: TrainConfig = field(default_factory=TrainConfig)
    epsilon: float = 0.2
    inner_steps: int = 7
    inner_step_size: float | None = None  # defaults to epsilon / 4

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigurationError("epsilon must be non-negative")
        if self.inner_steps <= 0:
            raise ConfigurationError("inner_steps must be positive")

    @property
    def step_size(self) -> float:
        return self.epsilon / 4.0 if self.inner_step_size is None else self.inner_step_size


def _init_model(config: TrainConfig, k: int):
    if config.model_kind == "mlp":
        return MlpModel.initialize([k, *config.hidden, 2], seed=subseed(config.seed, 0))
    bound = 1.0 / np.sqrt(k)
    w = subrng(config.seed, 0).uniform(-bound, bound, size=k)
    return LinearModel(w, 0.0)


def _linear_loss_grads(model: LinearModel, X, y, penalty):
    n = X.shape[0]
    s = model.score(X)
    p = sigmoid(s)
    # mean binary CE, numerically via logaddexp
    ce = float(np.mean(np.logaddexp(0.0, s) - y * s))
    loss = ce + 0.5 * penalty * float(model.weights @ model.weights) / n
    d = (p - y) / n
    gw = X.T @ d + penalty * model.weights / n
    gb = float(d.sum())
    return loss, [gw, np.array([gb])]


def _mlp_loss_grads(model: MlpModel, X, y, penalty):
    n = X.shape[0]
    logits, pre = model.forward(X)
    # softmax CE over the two logits
    zmax = logits.max(axis=1, keepdims=True)
    logz = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
    ce = float(np.mean(logz - logits[np.arange(n), y]))
    P = np.exp(logits - logz[:, None])
    dZ = P.copy()
    dZ[np.arange(n), y] -= 1.0
    dZ /= n

    acts = [np.atleast_2d(X)]
    A = acts[0]
    for Z in pre:
        A = np.maximum(Z, 0.0)
        acts.append(A)
    grads_W, grads_b = [], []
    G = dZ
    for li in range(len(model.weights) - 1, -1, -1):
        grads_W.append(acts[li].T @ G + penalty * model.weights[li] / n)
        grads_b.append(G.sum(axis=0))
        if li > 0:
            G = (G @ model.weights[li].T) * (pre[li - 1] > 0)
    grads_W.reverse()
    grads_b.reverse()
    if penalty > 0:
        ce += 0.5 * penalty * sum(float((W * W).sum()) for W in model.weights) / n
    return ce, grads_W, grads_b


def _batches(n: int, batch_size: int | None, rng: np.random.Generator):
    if batch_size is None:
        yield np.arange(n)
        return
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _attack_batch(model, Xb, yb, epsilon, steps, step_size, rng):
    """Inner ascent: maximize CE of the true labels inside the l-inf ball."""
    delta = rng.uniform(-epsilon, epsilon, size=Xb.shape)
    for _ in range(steps):
        s = model.score(Xb + delta)
        coef = sigmoid(s) - yb
        g = np.asarray(coef)[:, None] * model.score_gradient(Xb + delta)
        delta = np.clip(delta + step_size * np.sign(g), -epsilon, epsilon)
    return Xb + delta


def _run_training(dataset: LabeledDataset, config: TrainConfig,
                  adv: AdvTrainConfig | None):
    model = _init_model(config, dataset.k)
    if config.epochs == 0:
        return model
    opt = make_optimizer(config.optimizer, config.learning_rate)
    shuffle_rng = subrng(config.seed, 1)
    attack_rng = subrng(config.seed, 2)
    X, y = dataset.X, dataset.y
    for _ in range(config.epochs):
        for rows in _batches(dataset.n, config.batch_size, shuffle_rng):
            Xb, yb = X[rows], y[rows]
            if adv is not None:
                Xb = _attack_batch(model, Xb, yb, adv.epsilon, adv.inner_steps,
                                   adv.step_size, attack_rng)
            if isinstance(model, LinearModel):
                loss, (gw, gb) = _linear_loss_grads(model, Xb, yb, config.l2_penalty)
                if not np.isfinite(loss):
                    raise NumericalError(f"training loss became {loss!r}")
                bias_holder = np.array([model.bias])
                opt.step([model.weights, bias_holder], [gw, gb])
                model.bias = float(bias_holder[0])
            else:
                loss, gW, gb = _mlp_loss_grads(model, Xb, yb, config.l2_penalty)
                if not np.isfinite(loss):
                    raise NumericalError(f"training loss became {loss!r}")
                opt.step(model.weights + model.biases, gW + gb)
    return model


def train(dataset: LabeledDataset, config: TrainConfig):
    """Train a model of the configured kind; deterministic under the seed."""
    if dataset.n == 0:
        raise ContractError("cannot train on an empty dataset")
    return _run_training(dataset, config, None)


def train_adversarial(dataset: LabeledDataset, config: AdvTrainConfig):
    """Min-max training; each batch is replaced by its inner-loop maximizer."""
    if dataset.n == 0:
        raise ContractError("cannot train on an empty dataset")
    return _run_training(dataset, config.base, config)


def accuracy(model, dataset: LabeledDataset) -> float:
    s = np.asarray(model.score(dataset.X))
    return float(np.mean((s > 0).astype(int) == dataset.y))
