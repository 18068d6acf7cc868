"""Datasets, feature schemas, synthetic generation and preprocessing.

Feature matrices are float64 throughout. Categorical features are stored as
ordinals (index into the declared category list) until `preprocess` expands
them to indicator columns, so X stays a real matrix end to end.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError, ParseError

KIND_CONTINUOUS = "continuous"
KIND_CATEGORICAL = "categorical"
KIND_INDICATOR = "indicator"  # one-hot column produced by preprocess

_VALID_KINDS = (KIND_CONTINUOUS, KIND_CATEGORICAL, KIND_INDICATOR)


def subseed(seed: int, tag: int) -> int:
    """Derive an independent child seed from (seed, tag), deterministically."""
    ss = np.random.SeedSequence(seed, spawn_key=(tag,))
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2**63))


def subrng(seed: int, tag: int) -> np.random.Generator:
    """Generator seeded from an independent child stream of (seed, tag)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag,)))


@dataclass(frozen=True)
class FeatureSchema:
    """Column names, kinds and per-feature flags.

    `categories` maps each categorical feature name to its declared levels,
    in the order used for ordinal storage and one-hot expansion. `groups`
    holds, for indicator columns, the name of the categorical feature they
    encode (None for ordinary columns).
    """

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    actionable: tuple[bool, ...]
    discriminative: tuple[bool, ...]
    categories: dict[str, tuple[str, ...]] = field(default_factory=dict)
    groups: tuple[str | None, ...] = ()

    def __post_init__(self):
        n = len(self.names)
        if n == 0:
            raise ConfigurationError("schema has no features")
        if len(set(self.names)) != n:
            raise ConfigurationError("schema feature names are not unique")
        for attr in ("kinds", "actionable", "discriminative"):
            if len(getattr(self, attr)) != n:
                raise ConfigurationError(f"schema field {attr} has wrong length")
        for kind in self.kinds:
            if kind not in _VALID_KINDS:
                raise ConfigurationError(f"unknown feature kind {kind!r}")
        for name, kind in zip(self.names, self.kinds):
            if kind == KIND_CATEGORICAL:
                levels = self.categories.get(name, ())
                if len(levels) < 2:
                    raise ConfigurationError(
                        f"categorical feature {name!r} needs at least 2 levels")
        if not self.groups:
            object.__setattr__(self, "groups", (None,) * n)
        elif len(self.groups) != n:
            raise ConfigurationError("schema field groups has wrong length")

    @property
    def k(self) -> int:
        return len(self.names)

    def disc_indices(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.discriminative))

    def actionable_mask(self) -> np.ndarray:
        return np.asarray(self.actionable, dtype=bool)

    @classmethod
    def continuous(cls, names, actionable=None, discriminative=None):
        """All-continuous schema with optional flag sequences."""
        names = tuple(names)
        k = len(names)
        act = tuple(bool(a) for a in actionable) if actionable is not None else (True,) * k
        dis = tuple(bool(d) for d in discriminative) if discriminative is not None else (False,) * k
        return cls(names, (KIND_CONTINUOUS,) * k, act, dis)


@dataclass
class LabeledDataset:
    """Feature matrix with binary labels.

    `latent` carries the pre-threshold response for synthetic data (needed to
    study estimator noise analytically); None for real datasets.
    """

    X: np.ndarray
    y: np.ndarray
    schema: FeatureSchema
    latent: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2:
            raise ContractError("X must be a 2-d matrix")
        if self.X.shape[0] != self.y.shape[0]:
            raise ContractError("X and y row counts differ")
        if self.X.shape[1] != self.schema.k:
            raise ContractError("X column count does not match the schema")
        if not np.all(np.isfinite(self.X)):
            raise ContractError("X contains non-finite values")
        if self.y.size and not np.isin(self.y, (0, 1)).all():
            raise ContractError("labels must be 0 or 1")
        if self.latent is not None:
            self.latent = np.asarray(self.latent, dtype=float)
            if self.latent.shape != self.y.shape:
                raise ContractError("latent response shape does not match y")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=int)
        latent = self.latent[idx] if self.latent is not None else None
        return LabeledDataset(self.X[idx], self.y[idx], self.schema, latent)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic linear-process generator."""

    n: int
    k: int
    disc_indices: tuple[int, ...]
    alpha: float = 1.0
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "disc_indices", tuple(int(i) for i in self.disc_indices))
        if self.n <= 0 or self.k <= 0:
            raise ConfigurationError("n and k must be positive")
        d = self.disc_indices
        if not d:
            raise ConfigurationError("disc_indices must be non-empty")
        if len(set(d)) != len(d):
            raise ConfigurationError("disc_indices contains duplicates")
        if min(d) < 0 or max(d) >= self.k:
            raise ConfigurationError("disc_indices out of range")
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be non-negative")


def generate_synthetic(spec: SyntheticSpec) -> tuple[LabeledDataset, np.ndarray]:
    """Draw features, coefficients and labels from the linear process.

    Coefficients are zero off the discriminative set; on it the magnitudes are
    uniform in [alpha, 2*alpha] with random signs. Labels threshold the latent
    response beta.x + noise at zero. Returns the dataset and the true beta.
    """
    rng = np.random.default_rng(spec.seed)
    disc = np.asarray(spec.disc_indices, dtype=int)
    beta = np.zeros(spec.k)
    mags = rng.uniform(spec.alpha, 2.0 * spec.alpha, size=disc.size)
    signs = rng.choice(np.array([-1.0, 1.0]), size=disc.size)
    beta[disc] = mags * signs
    X = rng.standard_normal((spec.n, spec.k))
    noise = rng.normal(0.0, spec.sigma, size=spec.n) if spec.sigma > 0 else np.zeros(spec.n)
    latent = X @ beta + noise
    y = (latent > 0).astype(int)
    disc_flags = np.zeros(spec.k, dtype=bool)
    disc_flags[disc] = True
    schema = FeatureSchema.continuous(
        [f"f{i}" for i in range(spec.k)], discriminative=disc_flags.tolist())
    return LabeledDataset(X, y, schema, latent=latent), beta


def load_csv(path: str, schema: FeatureSchema, label_column: str) -> LabeledDataset:
    """Parse a CSV file against the schema.

    Continuous cells parse as floats, categorical cells must be declared
    levels (stored as ordinals). The label column must take exactly two
    distinct raw values; the lexicographically larger one maps to 1. Leading
    lines starting with '#' (the version header) are skipped.
    """
    offset = 1  # 1-based data row numbering starts after the header
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
            while header and header[0].startswith("#"):
                offset += 1
                header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = list(reader)
    col_of = {name: i for i, name in enumerate(header)}
    for name in schema.names:
        if name not in col_of:
            raise ParseError(f"{path}: missing feature column {name!r}")
    if label_column not in col_of:
        raise ParseError(f"{path}: missing label column {label_column!r}")

    n, k = len(rows), schema.k
    X = np.zeros((n, k))
    raw_labels = []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {r + 1 + offset} has {len(row)} cells, expected {len(header)}")
        for j, name in enumerate(schema.names):
            cell = row[col_of[name]]
            if schema.kinds[j] == KIND_CATEGORICAL:
                levels = schema.categories[name]
                if cell not in levels:
                    raise ParseError(
                        f"{path}: row {r + 1 + offset}, column {name!r}: unknown level {cell!r}")
                X[r, j] = float(levels.index(cell))
            else:
                try:
                    X[r, j] = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {r + 1 + offset}, column {name!r}: not a number: {cell!r}") from None
        raw_labels.append(row[col_of[label_column]])

    distinct = sorted(set(raw_labels))
    if len(distinct) != 2:
        raise ParseError(
            f"{path}: label column {label_column!r} has {len(distinct)} distinct values, expected 2")
    positive = distinct[1]
    y = np.array([1 if v == positive else 0 for v in raw_labels], dtype=int)
    return LabeledDataset(X, y, schema)


@dataclass
class StandardizeTransform:
    """Column-wise affine map fitted by `preprocess`.

    Indicator columns carry mean 0 / scale 1 so the inverse restores exactly
    the raw continuous values.
    """

    mean: np.ndarray
    scale: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        if np.any(self.scale <= 0):
            raise ContractError("scales must be positive")

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def invert(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.scale + self.mean


def preprocess(dataset: LabeledDataset,
               fit_rows: np.ndarray) -> tuple[LabeledDataset, StandardizeTransform]:
    """Standardize continuous columns and one-hot encode categorical ones.

    Statistics come from `fit_rows` only. Indicator columns inherit the
    parent's actionable and discriminative flags and record the parent name
    in `groups`.
    """
    fit_rows = np.asarray(fit_rows, dtype=int)
    if fit_rows.size == 0:
        raise ContractError("fit_rows is empty")
    if fit_rows.min() < 0 or fit_rows.max() >= dataset.n:
        raise ContractError("fit_rows out of range")
    schema = dataset.schema

    cols, names, kinds, act, dis, groups = [], [], [], [], [], []
    means, scales = [], []
    fit_X = dataset.X[fit_rows]
    for j, name in enumerate(schema.names):
        if schema.kinds[j] == KIND_CATEGORICAL:
            levels = schema.categories[name]
            ordinals = dataset.X[:, j].astype(int)
            for li, level in enumerate(levels):
                cols.append((ordinals == li).astype(float))
                names.append(f"{name}={level}")
                kinds.append(KIND_INDICATOR)
                act.append(schema.actionable[j])
                dis.append(schema.discriminative[j])
                groups.append(name)
                means.append(0.0)
                scales.append(1.0)
        else:
            mu = float(fit_X[:, j].mean())
            sd = float(fit_X[:, j].std())
            if sd == 0.0:
                raise ConfigurationError(
                    f"feature {name!r} has zero variance on the fit rows")
            cols.append((dataset.X[:, j] - mu) / sd)
            names.append(name)
            kinds.append(schema.kinds[j])
            act.append(schema.actionable[j])
            dis.append(schema.discriminative[j])
            groups.append(None)
            means.append(mu)
            scales.append(sd)

    new_schema = FeatureSchema(
        tuple(names), tuple(kinds), tuple(act), tuple(dis), groups=tuple(groups))
    transform = StandardizeTransform(np.array(means), np.array(scales), new_schema)
    encoded = LabeledDataset(np.column_stack(cols), dataset.y, new_schema,
                             latent=dataset.latent)
    return encoded, transform


def split_indices(n: int, fractions: tuple[float, float, float],
                  seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic three-way row partition (expert, train, test)."""
    f = np.asarray(fractions, dtype=float)
    if f.shape != (3,) or np.any(f <= 0):
        raise ConfigurationError("fractions must be three positive numbers")
    if abs(f.sum() - 1.0) > 1e-9:
        raise ConfigurationError(f"fractions sum to {f.sum():.12g}, expected 1")
    n_expert = int(round(f[0] * n))
    n_train = int(round(f[1] * n))
    n_test = n - n_expert - n_train
    if min(n_expert, n_train, n_test) <= 0:
        raise ConfigurationError(
            f"split sizes ({n_expert}, {n_train}, {n_test}) must all be positive")
    perm = np.random.default_rng(seed).permutation(n)
    return (perm[:n_expert],
            perm[n_expert:n_expert + n_train],
            perm[n_expert + n_train:])


def split_three_way(dataset: LabeledDataset, fractions: tuple[float, float, float],
                    seed: int) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Split into expert, train and test subsets."""
    e, tr, te = split_indices(dataset.n, fractions, seed)
    return dataset.subset(e), dataset.subset(tr), dataset.subset(te)


def flip_labels(dataset: LabeledDataset, fraction: float, seed: int) -> LabeledDataset:
    """Flip exactly round(fraction*n) labels, rows chosen uniformly."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigurationError("flip fraction must lie in [0, 1]")
    m = int(round(fraction * dataset.n))
    y = dataset.y.copy()
    if m > 0:
        rows = np.random.default_rng(seed).choice(dataset.n, size=m, replace=False)
        y[rows] = 1 - y[rows]
    return LabeledDataset(dataset.X.copy(), y, dataset.schema, latent=dataset.latent)
