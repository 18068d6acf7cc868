"""Scoring models with exact input gradients, plus ordinary least squares.

Both model kinds expose a scalar score whose sign decides the label
(label = 1 iff score > 0, strictly). For the linear model the score is
beta.x + bias; for the MLP it is the difference of the two output logits,
so sigmoid(score) equals the softmax probability of class 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericalError, ParseError

MODEL_FILE_VERSION = "nonadv-model v1"


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.shape else float(out)


@dataclass(frozen=True)
class Prediction:
    score: float
    probability: float
    label: int


class LinearModel:
    """Linear scorer; with the logistic link this is logistic regression."""

    kind = "linear"

    def __init__(self, weights: np.ndarray, bias: float = 0.0):
        self.weights = np.asarray(weights, dtype=float)
        if self.weights.ndim != 1:
            raise ContractError("weights must be a vector")
        self.bias = float(bias)

    @property
    def k(self) -> int:
        return self.weights.size

    def score(self, X: np.ndarray):
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def score_gradient(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return self.weights.copy()
        return np.broadcast_to(self.weights, X.shape).copy()


class MlpModel:
    """Fully connected ReLU network with two raw output logits.

    The ReLU subgradient at exactly zero is taken as zero, so input
    gradients are well defined everywhere.
    """

    kind = "mlp"

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ContractError("weights and biases must be non-empty and aligned")
        self.weights = [np.asarray(W, dtype=float) for W in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        if self.weights[-1].shape[1] != 2:
            raise ContractError("final layer must have 2 output logits")

    @classmethod
    def initialize(cls, layer_sizes: list[int], seed: int) -> "MlpModel":
        """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases)

    @property
    def k(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    def forward(self, X: np.ndarray):
        """Logits plus the per-layer pre-activations needed for backprop."""
        A = np.atleast_2d(np.asarray(X, dtype=float))
        pre = []
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            Z = A @ W + b
            pre.append(Z)
            A = np.maximum(Z, 0.0)
        logits = A @ self.weights[-1] + self.biases[-1]
        return logits, pre

    def logits(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def score(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        z = self.logits(X)
        s = z[:, 1] - z[:, 0]
        return float(s[0]) if X.ndim == 1 else s

    def score_gradient(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        _, pre = self.forward(X)
        # d(score)/d(logits) = (-1, +1); push back through the ReLU masks
        n = 1 if X.ndim == 1 else X.shape[0]
        G = np.tile(np.array([-1.0, 1.0]), (n, 1))
        G = G @ self.weights[-1].T
        for W, Z in zip(reversed(self.weights[:-1]), reversed(pre)):
            G = (G * (Z > 0)) @ W.T
        return G[0] if X.ndim == 1 else G


def predict(model, x: np.ndarray) -> Prediction:
    """Score, probability and strict-threshold label for one instance."""
    s = float(model.score(np.asarray(x, dtype=float)))
    return Prediction(score=s, probability=float(sigmoid(s)), label=int(s > 0))


_OBJECTIVES = ("score", "cross_entropy", "squared_score_error")


def input_gradient(model, x: np.ndarray, objective: str = "score",
                   target: float | None = None) -> np.ndarray:
    """Exact gradient of the chosen objective with respect to the input.

    Objectives:
      score               d(score)/dx
      cross_entropy       target is a class label in {0, 1}
      squared_score_error target is a score value; objective (score-target)^2
    """
    if objective not in _OBJECTIVES:
        raise ContractError(f"unknown objective {objective!r}")
    x = np.asarray(x, dtype=float)
    g = model.score_gradient(x)
    if objective == "score":
        return g
    if target is None:
        raise ContractError(f"objective {objective!r} requires a target")
    s = model.score(x)
    if objective == "cross_entropy":
        if int(target) not in (0, 1):
            raise ContractError("cross_entropy target must be 0 or 1")
        coef = sigmoid(s) - float(target)
    else:
        coef = 2.0 * (np.asarray(s) - float(target))
    if np.ndim(coef) == 0:
        return float(coef) * g
    return np.asarray(coef)[:, None] * g


def fit_ols(X: np.ndarray, y: np.ndarray,
            cond_limit: float = 1e12, ridge: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Least squares via Cholesky on the normal equations.

    A ridge of `ridge`*I is added when X^T X is ill conditioned (condition
    number above `cond_limit`) or not positive definite. Standard errors use
    the diagonal simplification se_i = sqrt(residual_var / sum_j X_ji^2).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ContractError("X must be (n, k) and y (n,) with matching n")
    n, k = X.shape
    XtX = X.T @ X
    Xty = X.T @ y
    cond = np.linalg.cond(XtX)
    if not np.isfinite(cond) or cond > cond_limit:
        XtX = XtX + ridge * np.eye(k)
    try:
        L = np.linalg.cholesky(XtX)
    except np.linalg.LinAlgError:
        XtX = XtX + ridge * np.eye(k)
        try:
            L = np.linalg.cholesky(XtX)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("normal equations are not positive definite") from exc
    beta = np.linalg.solve(L.T, np.linalg.solve(L, Xty))
    resid = y - X @ beta
    dof = n - k if n > k else n
    resid_var = float(resid @ resid) / dof
    col_ss = np.sum(X * X, axis=0)
    with np.errstate(divide="ignore"):
        se = np.sqrt(np.where(col_ss > 0, resid_var / np.where(col_ss > 0, col_ss, 1.0), np.inf))
    return beta, se


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_model(model, path: str) -> None:
    """Write a model as versioned, self-describing text (exact round trip)."""
    lines = [MODEL_FILE_VERSION, f"kind {model.kind}"]
    if isinstance(model, LinearModel):
        lines.append(f"k {model.k}")
        lines.append("bias " + _fmt(model.bias))
        lines.append("weights " + " ".join(_fmt(w) for w in model.weights))
    elif isinstance(model, MlpModel):
        lines.append("layers " + " ".join(str(s) for s in model.layer_sizes))
        for i, (W, b) in enumerate(zip(model.weights, model.biases)):
            lines.append(f"W{i} {W.shape[0]} {W.shape[1]}")
            for row in W:
                lines.append(" ".join(_fmt(v) for v in row))
            lines.append(f"b{i} {b.size}")
            lines.append(" ".join(_fmt(v) for v in b))
    else:
        raise ContractError(f"cannot serialize model of type {type(model).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str):
    """Read a model file written by `save_model`."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MODEL_FILE_VERSION:
        raise ParseError(f"{path}: not a {MODEL_FILE_VERSION} file")
    if len(lines) < 2 or not lines[1].startswith("kind "):
        raise ParseError(f"{path}: missing kind line")
    kind = lines[1].split(" ", 1)[1]
    try:
        if kind == "linear":
            k = int(lines[2].split()[1])
            bias = float(lines[3].split()[1])
            weights = np.array([float(v) for v in lines[4].split()[1:]])
            if weights.size != k:
                raise ParseError(f"{path}: expected {k} weights, found {weights.size}")
            return LinearModel(weights, bias)
        if kind == "mlp":
            sizes = [int(v) for v in lines[2].split()[1:]]
            weights, biases = [], []
            pos = 3
            for i in range(len(sizes) - 1):
                r, c = (int(v) for v in lines[pos].split()[1:])
                pos += 1
                W = np.array([[float(v) for v in lines[pos + j].split()] for j in range(r)])
                pos += r
                if W.shape != (r, c):
                    raise ParseError(f"{path}: layer {i} has wrong shape")
                bsize = int(lines[pos].split()[1])
                pos += 1
                b = np.array([float(v) for v in lines[pos].split()])
                pos += 1
                if b.size != bsize:
                    raise ParseError(f"{path}: layer {i} bias has wrong size")
                weights.append(W)
                biases.append(b)
            return MlpModel(weights, biases)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed model file: {exc}") from exc
    raise ParseError(f"{path}: unknown model kind {kind!r}")
