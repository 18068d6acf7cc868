"""Ground-truth label oracles.

The kNN oracle measures Euclidean distance on the discriminative features
only; distance ties break toward the lower expert row index (stable sort),
and k is kept odd so majority votes cannot tie.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import ConfigurationError, ContractError


@dataclass
class KnnOracle:
    points: np.ndarray        # expert rows restricted to the disc features
    labels: np.ndarray
    disc_indices: np.ndarray  # columns of the full feature space to project on
    k: int = 5

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.disc_indices = np.asarray(self.disc_indices, dtype=int)
        if self.points.ndim != 2 or self.points.shape[0] != self.labels.shape[0]:
            raise ContractError("points and labels must align")
        if self.points.shape[1] != self.disc_indices.size:
            raise ContractError("points width must equal the disc projection")
        if self.k % 2 == 0:
            raise ConfigurationError(
                f"k={self.k} is even and majority votes could tie; use {self.k - 1} or {self.k + 1}")
        if self.k <= 0 or self.k > self.points.shape[0]:
            raise ConfigurationError(
                f"k={self.k} must lie in [1, {self.points.shape[0]}]")

    def query(self, x: np.ndarray) -> int:
        return int(self.query_many(np.asarray(x, dtype=float)[None, :])[0])

    def query_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        proj = X[:, self.disc_indices]
        d2 = ((proj[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
        # stable argsort keeps the lower expert index first on exact ties
        order = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
        votes = self.labels[order].sum(axis=1)
        return (votes * 2 > self.k).astype(int)


@dataclass
class LinearOracle:
    """Thresholded true linear process: label 1 iff beta.x + bias > 0.

    `sigma` records the process noise level; queries themselves are
    deterministic (the noise is frozen out at evaluation time).
    """

    weights: np.ndarray
    bias: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)

    def query(self, x: np.ndarray) -> int:
        return int(float(np.asarray(x, dtype=float) @ self.weights + self.bias) > 0)

    def query_many(self, X: np.ndarray) -> np.ndarray:
        s = np.atleast_2d(np.asarray(X, dtype=float)) @ self.weights + self.bias
        return (s > 0).astype(int)


def build_knn_oracle(expert: LabeledDataset, k: int = 5,
                     disc_indices=None) -> KnnOracle:
    """kNN oracle over an expert split the model never trains on."""
    if disc_indices is None:
        disc_indices = expert.schema.disc_indices()
    disc_indices = np.asarray(disc_indices, dtype=int)
    if disc_indices.size == 0:
        raise ConfigurationError("no discriminative features to build the oracle on")
    return KnnOracle(expert.X[:, disc_indices], expert.y, disc_indices, k=k)


def oracle_query(oracle, x: np.ndarray) -> int:
    """Ground-truth label for one instance."""
    return oracle.query(x)
