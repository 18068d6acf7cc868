"""Recourse and adversarial-example generators.

All six methods share the same contract: given an instance whose current
prediction differs from the target, search for a delta such that the model
label at x + delta equals the target. `converged` reports whether the label
actually flipped at the returned point; x_prime is x + delta bitwise.

Coordinates with infinite cost weight are frozen: gradient methods zero
their gradient there and the discrete search never proposes actions on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .costs import CostFunction, evaluate_cost, evaluate_cost_batch
from .errors import ConfigurationError, ContractError
from .models import predict, sigmoid
from .training import Adam, RmsProp

METHODS = ("scfe", "dice", "ar", "cw", "deepfool", "pgd")

# pinned per-method defaults: (learning_rate, max_iterations)
_METHOD_DEFAULTS = {
    "scfe": (0.1, 100),
    "dice": (0.1, 100),
    "ar": (0.0, 0),
    "cw": (0.01, 1000),
    "deepfool": (0.0, 50),
    "pgd": (0.1, 10),
}


@dataclass
class GeneratorConfig:
    """Hyperparameters for one generation method.

    `feature_ranges` holds observed per-feature training minima and maxima
    (k, 2); the box clamp of cw and the action grid of ar need it.
    `actionable` masks features the discrete search may act on (None means
    all).
    """

    method: str
    learning_rate: float = 0.1
    max_iterations: int = 100
    lam: float = 0.1
    target_score: float = 0.0
    cw_c: float = 1.0
    deepfool_overshoot: float = 0.02
    pgd_epsilon: float = 2.0
    dice_num_cfs: int = 2
    dice_diversity_weight: float = 0.5
    dice_init_scale: float = 1e-3
    ar_grid_bins: int = 10
    ar_max_features: int = 2
    seed: int = 0
    feature_ranges: np.ndarray | None = None
    actionable: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be non-negative")
        if self.dice_num_cfs < 1:
            raise ConfigurationError("dice_num_cfs must be at least 1")
        if self.ar_grid_bins < 2:
            raise ConfigurationError("ar_grid_bins must be at least 2")
        if self.ar_max_features < 1:
            raise ConfigurationError("ar_max_features must be at least 1")
        if self.pgd_epsilon <= 0:
            raise ConfigurationError("pgd_epsilon must be positive")
        if self.feature_ranges is not None:
            fr = np.asarray(self.feature_ranges, dtype=float)
            if fr.ndim != 2 or fr.shape[1] != 2 or np.any(fr[:, 0] > fr[:, 1]):
                raise ConfigurationError("feature_ranges must be (k, 2) with lo <= hi")
            self.feature_ranges = fr

    @classmethod
    def defaults(cls, method: str, **overrides) -> "GeneratorConfig":
        if method not in _METHOD_DEFAULTS:
            raise ConfigurationError(f"unknown method {method!r}")
        lr, iters = _METHOD_DEFAULTS[method]
        cfg = cls(method=method, learning_rate=lr or 0.1, max_iterations=iters)
        return replace(cfg, **overrides) if overrides else cfg


@dataclass
class RecourseOutput:
    x: np.ndarray
    delta: np.ndarray
    x_prime: np.ndarray
    converged: bool
    iterations_used: int
    cost_value: float
    method: str


def _output(method, x, delta, converged, iterations, cf=None):
    x_prime = x + delta
    if cf is not None:
        cost_value, _ = evaluate_cost(cf, delta)
    else:
        cost_value = float(np.linalg.norm(delta))
    return RecourseOutput(x=x, delta=delta, x_prime=x_prime, converged=converged,
                          iterations_used=iterations, cost_value=cost_value,
                          method=method)


def _check_factual(model, x, target):
    if predict(model, x).label == target:
        raise ContractError("factual already carries the target label")


def _frozen(cf: CostFunction | None, k: int) -> np.ndarray:
    if cf is None:
        return np.zeros(k, dtype=bool)
    return cf.frozen_mask(k)


def scfe(model, x: np.ndarray, target_score: float, cf: CostFunction,
         config: GeneratorConfig) -> RecourseOutput:
    """Score-targeting counterfactual search (Adam on the squared residual).

    Minimizes (score(x') - target_score)^2 + lam * d(x, x') for the full
    iteration budget and returns the final iterate; `converged` says whether
    the model label flipped relative to the factual.
    """
    x = np.asarray(x, dtype=float)
    source = predict(model, x).label
    target = 1 - source
    frozen = _frozen(cf, x.size)
    delta = np.zeros_like(x)
    opt = Adam(config.learning_rate)
    used = 0
    for t in range(config.max_iterations):
        s = float(model.score(x + delta))
        g = 2.0 * (s - target_score) * model.score_gradient(x + delta)
        g = g + config.lam * evaluate_cost(cf, delta)[1]
        g[frozen] = 0.0
        prev = delta.copy()
        opt.step([delta], [g])
        used = t + 1
        if not np.all(np.isfinite(delta)):
            delta = prev
            break
    converged = predict(model, x + delta).label == target
    return _output("scfe", x, delta, converged, used, cf)


def dice(model, x: np.ndarray, target: int, cf: CostFunction,
         config: GeneratorConfig) -> tuple[list[RecourseOutput], int]:
    """Joint diverse counterfactual search (RMSProp).

    Optimizes num_cfs candidates on the shared objective
    sum_j [(score_j - target_score)^2 + lam * d(x, x'_j)] minus
    diversity_weight times the mean pairwise candidate distance. Returns all
    candidates and the index of the one sampled for evaluation.
    """
    x = np.asarray(x, dtype=float)
    _check_factual(model, x, target)
    frozen = _frozen(cf, x.size)
    rng = np.random.default_rng(config.seed)
    m = config.dice_num_cfs
    deltas = np.zeros((m, x.size))
    for j in range(1, m):
        init = rng.normal(0.0, config.dice_init_scale, size=x.size)
        init[frozen] = 0.0
        deltas[j] = init
    sampled = int(rng.integers(m))

    npairs = m * (m - 1) // 2
    opt = RmsProp(config.learning_rate)
    used = 0
    for t in range(config.max_iterations):
        grads = np.zeros_like(deltas)
        for j in range(m):
            s = float(model.score(x + deltas[j]))
            g = 2.0 * (s - config.target_score) * model.score_gradient(x + deltas[j])
            grads[j] = g + config.lam * evaluate_cost(cf, deltas[j])[1]
        if npairs:
            scale = config.dice_diversity_weight / npairs
            for a in range(m):
                for b in range(a + 1, m):
                    _, g = evaluate_cost(cf, deltas[a] - deltas[b])
                    grads[a] -= scale * g
                    grads[b] += scale * g
        grads[:, frozen] = 0.0
        prev = deltas.copy()
        opt.step([deltas], [grads])
        used = t + 1
        if not np.all(np.isfinite(deltas)):
            deltas = prev
            break

    outputs = []
    for j in range(m):
        converged = predict(model, x + deltas[j]).label == target
        outputs.append(_output("dice", x, deltas[j], converged, used, cf))
    return outputs, sampled


def ar_discrete(model, x: np.ndarray, cf: CostFunction,
                config: GeneratorConfig) -> RecourseOutput:
    """Exhaustive grid search over low-cost feature actions.

    Each actionable, finite-cost feature is discretized into grid_bins values
    spanning its observed training range; actions change at most
    ar_max_features features at once. The minimum-cost action that flips the
    label wins; ties break toward the earlier enumeration (feature index,
    then bin index).
    """
    x = np.asarray(x, dtype=float)
    if config.feature_ranges is None:
        raise ConfigurationError("ar needs feature_ranges (observed training min/max)")
    if config.ar_max_features > 2:
        raise ConfigurationError("ar supports at most 2 simultaneously changed features")
    k = x.size
    act = np.ones(k, dtype=bool) if config.actionable is None \
        else np.asarray(config.actionable, dtype=bool)
    act = act & ~_frozen(cf, k)
    live = np.flatnonzero(act)
    if live.size == 0:
        raise ContractError("no actionable feature to search over")
    source = predict(model, x).label
    target = 1 - source

    grids = {int(i): np.linspace(config.feature_ranges[i, 0],
                                 config.feature_ranges[i, 1],
                                 config.ar_grid_bins) for i in live}
    candidates = []
    for i in live:
        for v in grids[int(i)]:
            d = np.zeros(k)
            d[i] = v - x[i]
            candidates.append(d)
    if config.ar_max_features >= 2:
        for ai in range(live.size):
            for bi in range(ai + 1, live.size):
                i, j = int(live[ai]), int(live[bi])
                for vi in grids[i]:
                    for vj in grids[j]:
                        d = np.zeros(k)
                        d[i] = vi - x[i]
                        d[j] = vj - x[j]
                        candidates.append(d)
    D = np.array(candidates)
    labels = (np.asarray(model.score(x + D)) > 0).astype(int)
    flipped = labels == target
    if not flipped.any():
        return _output("ar", x, np.zeros(k), False, len(candidates), cf)
    costs = evaluate_cost_batch(cf, D)
    idx_flipped = np.flatnonzero(flipped)
    best = idx_flipped[np.argmin(costs[idx_flipped])]  # argmin takes the first tie
    return _output("ar", x, D[best], True, len(candidates), cf)


def cw(model, x: np.ndarray, target: int, cf: CostFunction,
       config: GeneratorConfig) -> RecourseOutput:
    """Penalty-form attack: minimize c * hinge(score) + d(x, x').

    The hinge is non-positive exactly when the label matches the target (up
    to the boundary point itself). Iterates are clamped per feature to the
    observed training box when ranges are configured; the best (lowest-cost)
    flipped iterate is returned, else the final one.
    """
    x = np.asarray(x, dtype=float)
    _check_factual(model, x, target)
    frozen = _frozen(cf, x.size)
    sign = 1.0 if target == 1 else -1.0
    delta = np.zeros_like(x)
    opt = Adam(config.learning_rate)
    best_delta, best_cost = None, math.inf
    used = 0
    for t in range(config.max_iterations):
        s = float(model.score(x + delta))
        # hinge max(0, -sign*s): zero gradient once the target side is reached
        if sign * s < 0:
            g = -sign * config.cw_c * model.score_gradient(x + delta)
        else:
            g = np.zeros_like(x)
        cost_value, cost_grad = evaluate_cost(cf, delta)
        g = g + cost_grad
        g[frozen] = 0.0
        prev = delta.copy()
        opt.step([delta], [g])
        if config.feature_ranges is not None:
            delta = np.clip(x + delta, config.feature_ranges[:, 0],
                            config.feature_ranges[:, 1]) - x
        used = t + 1
        if not np.all(np.isfinite(delta)):
            delta = prev
            break
        if predict(model, x + delta).label == target:
            c_now = evaluate_cost(cf, delta)[0]
            if c_now < best_cost:
                best_cost, best_delta = c_now, delta.copy()
    if best_delta is not None:
        return _output("cw", x, best_delta, True, used, cf)
    converged = predict(model, x + delta).label == target
    return _output("cw", x, delta, converged, used, cf)


def deepfool(model, x: np.ndarray, target: int,
             config: GeneratorConfig) -> RecourseOutput:
    """Iterative linearized boundary projection with a final overshoot.

    Each step moves |score| / ||grad||^2 along the score gradient toward the
    target side; the accumulated delta is scaled by (1 + overshoot) at the
    end. Converged means the label flipped at the overshot point.
    """
    x = np.asarray(x, dtype=float)
    _check_factual(model, x, target)
    sign = 1.0 if target == 1 else -1.0
    delta = np.zeros_like(x)
    used = 0
    aborted = False
    for t in range(config.max_iterations):
        xt = x + delta
        if predict(model, xt).label == target:
            break
        s = float(model.score(xt))
        g = model.score_gradient(xt)
        gnorm2 = float(g @ g)
        if gnorm2 == 0.0:
            aborted = True  # dead gradient; cannot make progress
            break
        step = (abs(s) / gnorm2) * sign * g
        if float(np.linalg.norm(step)) < 1e-15:
            break
        delta = delta + step
        used = t + 1
        if not np.all(np.isfinite(delta)):
            delta = delta - step
            aborted = True
            break
    delta = (1.0 + config.deepfool_overshoot) * delta
    converged = (not aborted) and predict(model, x + delta).label == target
    return _output("deepfool", x, delta, converged, used, cf=None)


def pgd(model, x: np.ndarray, target: int, cf: CostFunction,
        config: GeneratorConfig) -> RecourseOutput:
    """Projected sign-gradient ascent inside an l-inf ball.

    Ascends cross-entropy against the source label minus lam times the cost,
    with step size learning_rate, projecting delta onto the epsilon ball
    after every step.
    """
    x = np.asarray(x, dtype=float)
    _check_factual(model, x, target)
    source = 1 - target
    frozen = _frozen(cf, x.size)
    eps = config.pgd_epsilon
    delta = np.zeros_like(x)
    used = 0
    for t in range(config.max_iterations):
        s = float(model.score(x + delta))
        coef = float(sigmoid(s)) - source
        g = coef * model.score_gradient(x + delta)
        g = g - config.lam * evaluate_cost(cf, delta)[1]
        g[frozen] = 0.0
        delta = np.clip(delta + config.learning_rate * np.sign(g), -eps, eps)
        used = t + 1
    converged = predict(model, x + delta).label == target
    return _output("pgd", x, delta, converged, used, cf)


def generate(model, x: np.ndarray, target: int, cf: CostFunction,
             config: GeneratorConfig) -> RecourseOutput:
    """Uniform front end: dispatch on config.method, one output per factual.

    For dice this returns the sampled candidate (the full list is available
    from `dice` directly).
    """
    if config.method == "scfe":
        return scfe(model, x, config.target_score, cf, config)
    if config.method == "dice":
        outputs, sampled = dice(model, x, target, cf, config)
        return outputs[sampled]
    if config.method == "ar":
        return ar_discrete(model, x, cf, config)
    if config.method == "cw":
        return cw(model, x, target, cf, config)
    if config.method == "deepfool":
        return deepfool(model, x, target, config)
    if config.method == "pgd":
        return pgd(model, x, target, cf, config)
    raise ConfigurationError(f"unknown method {config.method!r}")
