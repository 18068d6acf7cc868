"""Closed-form recourse on linear models and the weighting guarantee check.

`analytical_recourse` solves min delta^T S delta subject to
beta.(x + delta) + bias = target_score, giving delta = c * S^-1 beta with
c = (target_score - score(x)) / (beta^T S^-1 beta). Coordinates with the
infinite weight sentinel contribute nothing to S^-1 beta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .costs import PdiscParams, optimal_weights
from .data import SyntheticSpec, generate_synthetic, subrng
from .errors import ConfigurationError, ContractError
from .models import fit_ols

_NADV_P = (1, 2, math.inf)


@dataclass(frozen=True)
class NadvConfig:
    """Discriminative coordinate set and the norm order p."""

    disc_indices: tuple[int, ...]
    p: float = 2

    def __post_init__(self):
        if self.p not in _NADV_P:
            raise ConfigurationError(f"p must be 1, 2 or inf, got {self.p!r}")
        if len(self.disc_indices) == 0:
            raise ConfigurationError("disc_indices must be non-empty")


def nadv(delta: np.ndarray, config: NadvConfig) -> float:
    """Non-adversarialness score: sum_i in F_disc |delta_i| / ||delta||_p.

    A zero delta is degenerate; the function warns and returns 0. For p=1
    the denominator is assembled as inside-mass plus outside-mass, which
    keeps the unit upper bound and the support characterization (score 1
    exactly when delta moves only inside F_disc) exact in floating point.
    """
    delta = np.asarray(delta, dtype=float)
    disc = np.asarray(config.disc_indices, dtype=int)
    num = float(np.abs(delta[disc]).sum())
    if config.p == 1:
        mask = np.zeros(delta.size, dtype=bool)
        mask[disc] = True
        denom = num + float(np.abs(delta[~mask]).sum())
    else:
        denom = float(np.linalg.norm(delta, ord=config.p))
    if denom == 0.0:
        warnings.warn("nadv of a zero delta is degenerate; returning 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    return num / denom


def analytical_recourse(beta_hat: np.ndarray, bias: float, x: np.ndarray,
                        target_score: float, weights: np.ndarray) -> np.ndarray:
    """Minimum weighted-quadratic-cost delta reaching the target score exactly.

    `weights` is the diagonal of S; +inf entries freeze their coordinates.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.asarray(weights, dtype=float)
    if beta_hat.shape != x.shape or beta_hat.shape != w.shape:
        raise ContractError("beta_hat, x and weights must have the same shape")
    if np.any(w[np.isfinite(w)] <= 0):
        raise ContractError("finite weights must be positive")
    live = np.isfinite(w)
    sinv_beta = np.zeros_like(beta_hat)
    sinv_beta[live] = beta_hat[live] / w[live]
    denom = float(beta_hat @ sinv_beta)
    if denom == 0.0:
        raise ContractError(
            "beta^T S^-1 beta is zero; no finite-weight coordinate carries signal")
    score = float(beta_hat @ x) + bias
    c = (target_score - score) / denom
    return c * sinv_beta


@dataclass
class TheoremReport:
    """Monte-Carlo means of NADV_p under the competing weightings."""

    p: float
    trials: int
    num_random_weightings: int
    seed: int
    mean_nadv_optimal: float
    mean_nadv_identity: float
    mean_nadv_random: np.ndarray

    def random_percentile(self, q: float) -> float:
        return float(np.percentile(self.mean_nadv_random, q))


def verify_theorem(spec: SyntheticSpec, p, params: PdiscParams,
                    trials: int, num_random_weightings: int,
                    seed: int = 0) -> TheoremReport:
    """Monte-Carlo check that the derived weights maximize expected NADV_p.

    Each trial redraws the synthetic data (coefficients and noise), fits OLS
    on the latent response, places the factual at -2 * beta / ||beta|| and
    compares the analytic recourse under the fitted optimal weights against
    the identity weighting and a shared panel of log-uniform random diagonal
    weightings. NADV is scored against the true discriminative set.
    """
    if trials <= 0 or num_random_weightings < 0:
        raise ConfigurationError("trials must be positive and weightings non-negative")
    rng = subrng(seed, 0)
    rand_weights = 10.0 ** rng.uniform(-2.0, 2.0, size=(num_random_weightings, spec.k))
    trial_seeds = subrng(seed, 1).integers(0, 2**62, size=trials)

    ncfg = NadvConfig(tuple(spec.disc_indices), p)
    acc_opt = 0.0
    acc_id = 0.0
    acc_rand = np.zeros(num_random_weightings)
    identity = np.ones(spec.k)
    for t in range(trials):
        ds, beta_true = generate_synthetic(replace(spec, seed=int(trial_seeds[t])))
        beta_hat, se = fit_ols(ds.X, ds.latent)
        x = -2.0 * beta_true / np.linalg.norm(beta_true)
        w_opt = optimal_weights(beta_hat, se, p, params)
        acc_opt += nadv(analytical_recourse(beta_hat, 0.0, x, 0.0, w_opt), ncfg)
        acc_id += nadv(analytical_recourse(beta_hat, 0.0, x, 0.0, identity), ncfg)
        for j in range(num_random_weightings):
            d = analytical_recourse(beta_hat, 0.0, x, 0.0, rand_weights[j])
            acc_rand[j] += nadv(d, ncfg)
    return TheoremReport(
        p=p, trials=trials, num_random_weightings=num_random_weightings,
        seed=seed,
        mean_nadv_optimal=acc_opt / trials,
        mean_nadv_identity=acc_id / trials,
        mean_nadv_random=acc_rand / trials if trials else acc_rand)
