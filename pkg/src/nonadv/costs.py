"""Recourse cost functions and the discriminativeness-weighted variants.

Infinite per-coordinate weights mark coordinates that must not move. They
are carried as an explicit boolean mask, never as float infinities inside
gradient arithmetic, so downstream optimizers see clean zero gradients on
frozen coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError
from .models import sigmoid

COST_KINDS = ("l1", "l2", "weighted_quadratic")


@dataclass(frozen=True)
class PdiscParams:
    """Sharpness, prior odds and scaling of the discriminativeness score."""

    alpha: float = 1.0
    q: float = 1.0
    normalize_by_se: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        if self.q <= 0:
            raise ConfigurationError("q must be positive")


@dataclass
class CostFunction:
    """d(x, x') as a function of delta = x' - x.

    kind l1 and l2 are the plain norms; weighted_quadratic is
    delta^T diag(weights) delta with optional infinite entries (the
    `infinite` mask). Finite weights must be strictly positive.
    """

    kind: str
    weights: np.ndarray | None = None
    infinite: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ConfigurationError(f"unknown cost kind {self.kind!r}")
        if self.kind == "weighted_quadratic":
            if self.weights is None:
                raise ConfigurationError("weighted_quadratic needs weights")
            w = np.asarray(self.weights, dtype=float)
            inf_mask = np.isinf(w)
            if self.infinite is not None:
                inf_mask = inf_mask | np.asarray(self.infinite, dtype=bool)
            finite = np.where(inf_mask, 1.0, w)
            if np.any(~np.isfinite(finite)) or np.any(finite <= 0):
                raise ConfigurationError("finite weights must be positive")
            self.weights = finite
            self.infinite = inf_mask
        elif self.weights is not None or self.infinite is not None:
            raise ConfigurationError(f"cost kind {self.kind!r} takes no weights")

    @classmethod
    def l1(cls) -> "CostFunction":
        return cls("l1")

    @classmethod
    def l2(cls) -> "CostFunction":
        return cls("l2")

    @classmethod
    def weighted(cls, weights) -> "CostFunction":
        return cls("weighted_quadratic", weights=np.asarray(weights, dtype=float))

    def frozen_mask(self, k: int) -> np.ndarray:
        """Coordinates that carry infinite cost (must not move)."""
        if self.kind == "weighted_quadratic":
            return self.infinite.copy()
        return np.zeros(k, dtype=bool)


def evaluate_cost(cf: CostFunction, delta: np.ndarray) -> tuple[float, np.ndarray]:
    """Cost value and (sub)gradient at delta.

    The l1 subgradient at 0 is 0; the l2 gradient at the origin is 0. For
    weighted_quadratic, any movement on an infinite-weight coordinate makes
    the value +inf while the returned gradient stays finite (zero on the
    frozen coordinates), so optimizers can still use it.
    """
    delta = np.asarray(delta, dtype=float)
    if cf.kind == "l1":
        return float(np.abs(delta).sum()), np.sign(delta)
    if cf.kind == "l2":
        norm = float(np.linalg.norm(delta))
        grad = delta / norm if norm > 0 else np.zeros_like(delta)
        return norm, grad
    w = cf.weights
    frozen = cf.infinite
    grad = 2.0 * w * delta
    grad[frozen] = 0.0
    if np.any(delta[frozen] != 0.0):
        return math.inf, grad
    live = ~frozen
    return float(delta[live] @ (w[live] * delta[live])), grad


def evaluate_cost_batch(cf: CostFunction, deltas: np.ndarray) -> np.ndarray:
    """Cost values for a stack of deltas (no gradients)."""
    D = np.atleast_2d(np.asarray(deltas, dtype=float))
    if cf.kind == "l1":
        return np.abs(D).sum(axis=1)
    if cf.kind == "l2":
        return np.linalg.norm(D, axis=1)
    vals = (D * D * np.where(cf.infinite, 0.0, cf.weights)).sum(axis=1)
    moved = np.any(D[:, cf.infinite] != 0.0, axis=1)
    return np.where(moved, math.inf, vals)


def p_disc(beta_hat_i, se_i, params: PdiscParams = PdiscParams()):
    """Lower-bound posterior that a coordinate is discriminative.

    sigmoid(2*alpha*b - alpha^2 + log q), where b = |beta_hat|/se when
    normalize_by_se (b saturates to +inf for a nonzero coefficient with a
    zero standard error, matching the noiseless limit) else |beta_hat|.
    Scalar or vector inputs.
    """
    bh = np.abs(np.asarray(beta_hat_i, dtype=float))
    if params.normalize_by_se:
        se = np.asarray(se_i, dtype=float)
        if np.any(se < 0):
            raise ContractError("standard errors must be non-negative")
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(se > 0, bh / np.where(se > 0, se, 1.0),
                         np.where(bh > 0, np.inf, 0.0))
    else:
        b = bh
    arg = 2.0 * params.alpha * b - params.alpha ** 2 + math.log(params.q)
    out = np.where(np.isposinf(arg), 1.0, sigmoid(np.where(np.isposinf(arg), 0.0, arg)))
    return float(out) if out.ndim == 0 else out


def optimal_weights(beta_hat: np.ndarray, standard_errors: np.ndarray,
                    p, params: PdiscParams = PdiscParams()) -> np.ndarray:
    """Diagonal weights maximizing expected NADV_p, min-normalized to 1.

    p=1 concentrates on the single most plausibly discriminative coordinate
    (lowest index on ties); p=2 weighs |beta_hat|/p_disc; p=inf weighs
    |beta_hat|. Zero coefficients get the +inf sentinel for p in {2, inf}.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    standard_errors = np.asarray(standard_errors, dtype=float)
    if beta_hat.shape != standard_errors.shape or beta_hat.ndim != 1:
        raise ContractError("beta_hat and standard_errors must be equal-length vectors")
    if not np.any(beta_hat != 0):
        raise ContractError("all coefficients are zero; no direction to weigh")
    k = beta_hat.size
    pd = np.atleast_1d(p_disc(beta_hat, standard_errors, params))
    if p == 1:
        w = np.full(k, np.inf)
        w[int(np.argmax(pd))] = 1.0
        return w
    if p == 2:
        w = np.where(beta_hat != 0, np.abs(beta_hat) / pd, np.inf)
    elif p == math.inf:
        w = np.where(beta_hat != 0, np.abs(beta_hat), np.inf)
    else:
        raise ConfigurationError(f"p must be 1, 2 or inf, got {p!r}")
    finite = np.isfinite(w)
    w[finite] = w[finite] / w[finite].min()
    return w


BASELINE_KINDS = ("unit", "squared_gradient", "inverse_squared")


def baseline_weights(beta_hat: np.ndarray, kind: str) -> np.ndarray:
    """Reference weightings: unit, squared coefficients, inverse squared."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    if kind == "unit":
        return np.ones_like(beta_hat)
    if kind == "squared_gradient":
        return beta_hat ** 2
    if kind == "inverse_squared":
        with np.errstate(divide="ignore"):
            return np.where(beta_hat != 0, 1.0 / beta_hat ** 2, np.inf)
    raise ConfigurationError(f"unknown baseline weighting {kind!r}")


def gradient_coefficients(model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature coefficient surrogate for non-linear models.

    Mean absolute score gradient over the given instances, with the standard
    error of that mean (zero for exactly linear models, where the gradient
    is constant).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = np.abs(model.score_gradient(X))
    coef = G.mean(axis=0)
    se = G.std(axis=0) / np.sqrt(G.shape[0])
    return coef, se
