"""Run configuration and schema files.

Both use flat INI-style sections of key=value pairs (stdlib configparser).
Unknown sections or keys are errors naming the offending entry, so typos
fail fast instead of silently running with defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
import math

from .data import FeatureSchema, KIND_CATEGORICAL, KIND_CONTINUOUS
from .errors import ConfigurationError

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _bool(raw: str, where: str) -> bool:
    v = raw.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigurationError(f"{where}: expected a boolean, got {raw!r}")


def _int(raw: str, where: str) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ConfigurationError(f"{where}: expected an integer, got {raw!r}") from None


def _float(raw: str, where: str) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise ConfigurationError(f"{where}: expected a number, got {raw!r}") from None


def _int_tuple(raw: str, where: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in raw.split(",") if v.strip() != "")
    except ValueError:
        raise ConfigurationError(f"{where}: expected comma-separated integers, got {raw!r}") from None


def _str_tuple(raw: str, where: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in raw.split(",") if v.strip() != "")


def _norm_p(raw: str, where: str):
    v = raw.strip().lower()
    if v in ("inf", "infinity"):
        return math.inf
    p = _float(raw, where)
    if p in (1.0, 2.0):
        return int(p)
    if p == math.inf:
        return math.inf
    raise ConfigurationError(f"{where}: p must be 1, 2 or inf, got {raw!r}")


@dataclass
class DatasetConfig:
    kind: str = "synthetic"
    n: int = 1000
    k: int = 10
    disc_indices: tuple[int, ...] = (0, 1, 2)
    alpha: float = 1.0
    sigma: float = 0.0
    path: str = ""
    schema: str = ""
    label: str = ""


@dataclass
class SplitConfig:
    expert: float = 0.2
    train: float = 0.6
    test: float = 0.2

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.expert, self.train, self.test)


@dataclass
class ModelConfig:
    kind: str = "mlp"
    learning_rate: float | None = None
    epochs: int | None = None
    batch_size: int | None = None  # None means the per-kind default
    full_batch: bool = False
    l2_penalty: float | None = None
    optimizer: str | None = None
    hidden: tuple[int, ...] = (30, 30)
    adv_epsilon: float = 0.2
    adv_inner_steps: int = 7
    adv_inner_step_size: float | None = None


@dataclass
class OracleConfig:
    kind: str = "knn"
    k: int = 5


@dataclass
class GeneratorSection:
    method: str = "scfe"
    methods: tuple[str, ...] = ()
    learning_rate: float | None = None
    max_iterations: int | None = None
    lam: float | None = None
    target_score: float | None = None
    cw_c: float | None = None
    deepfool_overshoot: float | None = None
    pgd_epsilon: float | None = None
    dice_num_cfs: int | None = None
    dice_diversity_weight: float | None = None
    ar_grid_bins: int | None = None


@dataclass
class CostSection:
    kind: str = "l2"
    weights: str = "unit"
    p: float = 2
    alpha: float = 1.0
    q: float = 1.0
    normalize_by_se: bool = True


@dataclass
class EvaluationConfig:
    r_max: int = 5
    max_factuals: int = 100
    flip_fraction: float = 0.25


@dataclass
class TheoremConfig:
    trials: int = 500
    random_weightings: int = 100
    p: float = 2


@dataclass
class OutputConfig:
    dir: str = "out"


@dataclass
class RunConfig:
    seed: int = 0
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    generator: GeneratorSection = field(default_factory=GeneratorSection)
    cost: CostSection = field(default_factory=CostSection)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    theorem: TheoremConfig = field(default_factory=TheoremConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def echo(self) -> tuple[str, ...]:
        """Resolved section.key=value lines, sorted, for report embedding."""
        lines = [f"run.seed={self.seed}"]
        for sec_name in ("dataset", "split", "model", "oracle", "generator",
                         "cost", "evaluation", "theorem", "output"):
            sec = getattr(self, sec_name)
            for f in fields(sec):
                v = getattr(sec, f.name)
                if isinstance(v, tuple):
                    v = ",".join(str(e) for e in v)
                lines.append(f"{sec_name}.{f.name}={v}")
        return tuple(sorted(lines))


# section -> key -> (converter tag, target attribute)
_CONVERTERS = {
    "str": lambda raw, where: raw.strip(),
    "int": _int,
    "float": _float,
    "bool": _bool,
    "int_tuple": _int_tuple,
    "str_tuple": _str_tuple,
    "p": _norm_p,
}

_REGISTRY: dict[str, dict[str, str]] = {
    "run": {"seed": "int"},
    "dataset": {"kind": "str", "n": "int", "k": "int", "disc_indices": "int_tuple",
                "alpha": "float", "sigma": "float", "path": "str", "schema": "str",
                "label": "str"},
    "split": {"expert": "float", "train": "float", "test": "float"},
    "model": {"kind": "str", "learning_rate": "float", "epochs": "int",
              "batch_size": "int", "full_batch": "bool", "l2_penalty": "float",
              "optimizer": "str", "hidden": "int_tuple", "adv_epsilon": "float",
              "adv_inner_steps": "int", "adv_inner_step_size": "float"},
    "oracle": {"kind": "str", "k": "int"},
    "generator": {"method": "str", "methods": "str_tuple", "learning_rate": "float",
                  "max_iterations": "int", "lam": "float", "target_score": "float",
                  "cw_c": "float", "deepfool_overshoot": "float",
                  "pgd_epsilon": "float", "dice_num_cfs": "int",
                  "dice_diversity_weight": "float", "ar_grid_bins": "int"},
    "cost": {"kind": "str", "weights": "str", "p": "p", "alpha": "float",
             "q": "float", "normalize_by_se": "bool"},
    "evaluation": {"r_max": "int", "max_factuals": "int", "flip_fraction": "float"},
    "theorem": {"trials": "int", "random_weightings": "int", "p": "p"},
    "output": {"dir": "str"},
}


def _read_ini(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case as written
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return parser


def parse_run_config(path: str, seed_override: int | None = None) -> RunConfig:
    """Load and validate a run config; unknown keys are errors."""
    parser = _read_ini(path)
    cfg = RunConfig()
    for section in parser.sections():
        if section not in _REGISTRY:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        known = _REGISTRY[section]
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigurationError(f"{path}: unknown key {section}.{key}")
            where = f"{path}: {section}.{key}"
            value = _CONVERTERS[known[key]](raw, where)
            if section == "run":
                cfg.seed = value
            else:
                setattr(getattr(cfg, section), key, value)
    if seed_override is not None:
        cfg.seed = int(seed_override)
    _validate(cfg, path)
    return cfg


def _validate(cfg: RunConfig, path: str) -> None:
    ds = cfg.dataset
    if ds.kind not in ("synthetic", "csv"):
        raise ConfigurationError(f"{path}: dataset.kind must be synthetic or csv")
    if ds.kind == "csv":
        for key in ("path", "schema", "label"):
            if not getattr(ds, key):
                raise ConfigurationError(f"{path}: dataset.{key} is required for csv datasets")
    if cfg.model.kind not in ("mlp", "linear_logistic"):
        raise ConfigurationError(f"{path}: model.kind must be mlp or linear_logistic")
    if cfg.oracle.kind not in ("knn", "linear"):
        raise ConfigurationError(f"{path}: oracle.kind must be knn or linear")
    if cfg.oracle.kind == "linear" and ds.kind != "synthetic":
        raise ConfigurationError(f"{path}: the linear oracle needs a synthetic dataset")
    if cfg.cost.kind not in ("l1", "l2", "weighted_quadratic"):
        raise ConfigurationError(f"{path}: cost.kind must be l1, l2 or weighted_quadratic")
    valid_w = ("unit", "squared_gradient", "inverse_squared", "nadv_optimal")
    if cfg.cost.weights not in valid_w:
        raise ConfigurationError(
            f"{path}: cost.weights must be one of {', '.join(valid_w)}")
    from .generators import METHODS
    if cfg.generator.method not in METHODS:
        raise ConfigurationError(f"{path}: generator.method must be one of {', '.join(METHODS)}")
    for m in cfg.generator.methods:
        if m not in METHODS:
            raise ConfigurationError(f"{path}: generator.methods contains unknown method {m!r}")
    if cfg.evaluation.r_max < 0:
        raise ConfigurationError(f"{path}: evaluation.r_max must be non-negative")
    if not 0 <= cfg.evaluation.flip_fraction <= 1:
        raise ConfigurationError(f"{path}: evaluation.flip_fraction must lie in [0, 1]")


def parse_schema(path: str) -> FeatureSchema:
    """Read a feature schema file.

    One [feature:NAME] section per column, in order. Keys: kind
    (continuous|categorical), categories (comma list, categorical only),
    actionable (default true), discriminative (default false).
    """
    parser = _read_ini(path)
    names, kinds, act, dis = [], [], [], []
    categories: dict[str, tuple[str, ...]] = {}
    for section in parser.sections():
        if not section.startswith("feature:"):
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        name = section[len("feature:"):].strip()
        if not name:
            raise ConfigurationError(f"{path}: empty feature name in [{section}]")
        entries = dict(parser.items(section))
        kind = entries.pop("kind", KIND_CONTINUOUS).strip()
        if kind not in (KIND_CONTINUOUS, KIND_CATEGORICAL):
            raise ConfigurationError(
                f"{path}: {name}: kind must be continuous or categorical")
        if kind == KIND_CATEGORICAL:
            raw = entries.pop("categories", "")
            levels = _str_tuple(raw, f"{path}: {name}.categories")
            if len(levels) < 2:
                raise ConfigurationError(
                    f"{path}: {name}: categorical features need at least 2 categories")
            categories[name] = levels
        elif "categories" in entries:
            raise ConfigurationError(f"{path}: {name}: continuous features take no categories")
        a = _bool(entries.pop("actionable", "true"), f"{path}: {name}.actionable")
        d = _bool(entries.pop("discriminative", "false"), f"{path}: {name}.discriminative")
        if entries:
            stray = next(iter(entries))
            raise ConfigurationError(f"{path}: unknown key {name}.{stray}")
        names.append(name)
        kinds.append(kind)
        act.append(a)
        dis.append(d)
    if not names:
        raise ConfigurationError(f"{path}: schema declares no features")
    return FeatureSchema(tuple(names), tuple(kinds), tuple(act), tuple(dis),
                         categories=categories)


def write_schema(schema: FeatureSchema, path: str) -> None:
    """Write a schema file that `parse_schema` reads back identically."""
    lines = ["; nonadv-schema v1"]
    for j, name in enumerate(schema.names):
        lines.append(f"[feature:{name}]")
        lines.append(f"kind = {schema.kinds[j]}")
        if schema.kinds[j] == KIND_CATEGORICAL:
            lines.append("categories = " + ",".join(schema.categories[name]))
        lines.append(f"actionable = {'true' if schema.actionable[j] else 'false'}")
        lines.append(f"discriminative = {'true' if schema.discriminative[j] else 'false'}")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
