"""Retry protocol, aggregation and the experiment runner.

The retry protocol resubmits x + 1.1^r * delta for r = 0..r_max and checks
the model and the oracle at every step. "Flipped" always means "equals the
favorable target label". A factual whose generator output did not converge
is excluded from the summary statistics but counted explicitly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig, parse_schema
from .costs import (CostFunction, PdiscParams, baseline_weights,
                    gradient_coefficients, optimal_weights)
from .data import (LabeledDataset, SyntheticSpec, flip_labels, generate_synthetic,
                   load_csv, preprocess, split_indices, subseed)
from .errors import ConfigurationError, ContractError
from .generators import METHODS, GeneratorConfig, RecourseOutput, generate
from .lineartheory import TheoremReport, verify_theorem
from .models import LinearModel, predict
from .oracle import LinearOracle, build_knn_oracle
from .training import AdvTrainConfig, TrainConfig, train, train_adversarial

RETRY_GROWTH = 1.1

EXPERIMENT_KINDS = ("method_comparison", "cost_comparison", "accuracy",
                    "adv_training", "theorem")

# seed stream tags for the pipeline stages
_TAG_DATA, _TAG_SPLIT, _TAG_TRAIN, _TAG_GEN, _TAG_FLIP = 11, 12, 13, 14, 15


@dataclass
class RetryTrace:
    """Per-factual outcome of the retry protocol."""

    index: int
    target: int
    model_flipped: np.ndarray
    oracle_flipped: np.ndarray
    first_nonadv_r: int | None
    oracle_queries: int


def retry_trace(model, oracle, x: np.ndarray, delta: np.ndarray, r_max: int,
                target: int | None = None, index: int = -1) -> RetryTrace:
    """Run the scaled-resubmission protocol for one factual.

    x'_r = x + 1.1^r * delta exactly; the oracle is queried at every r, so
    oracle_queries = r_max + 1 regardless of when (or whether) the recourse
    becomes non-adversarial.
    """
    if r_max < 0:
        raise ContractError("r_max must be non-negative")
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if x.shape != delta.shape:
        raise ContractError("x and delta must have the same shape")
    if target is None:
        target = 1 - predict(model, x).label
    model_flipped = np.zeros(r_max + 1, dtype=bool)
    oracle_flipped = np.zeros(r_max + 1, dtype=bool)
    first = None
    for r in range(r_max + 1):
        x_r = x + (RETRY_GROWTH ** r) * delta
        model_flipped[r] = predict(model, x_r).label == target
        oracle_flipped[r] = oracle.query(x_r) == target
        if first is None and model_flipped[r] and oracle_flipped[r]:
            first = r
    return RetryTrace(index=index, target=int(target),
                      model_flipped=model_flipped, oracle_flipped=oracle_flipped,
                      first_nonadv_r=first, oracle_queries=r_max + 1)


@dataclass
class AggregateReport:
    """Summary of one method/cost arm.

    Shares, retry means and cost means are over converged outputs only
    (non-converged ones are counted in n_excluded); validity_r0 is over all
    outputs. Failed traces (never non-adversarial within r_max) enter
    mean_retries as r_max + 1.
    """

    r_max: int
    shares: np.ndarray
    mean_retries: float
    validity_r0: float
    mean_l1: float
    mean_l2: float
    n_total: int
    n_converged: int
    n_excluded: int
    oracle_queries: int


def aggregate(traces: list[RetryTrace],
              outputs: list[RecourseOutput] | None = None,
              r_max: int | None = None) -> AggregateReport:
    """Collapse traces into share curves and means.

    `outputs` (parallel to `traces`) supplies convergence flags and deltas;
    without it every trace counts as converged and the cost means are nan.
    """
    if outputs is not None and len(outputs) != len(traces):
        raise ContractError("traces and outputs must be parallel lists")
    if r_max is None:
        r_max = traces[0].oracle_queries - 1 if traces else 0
    n_total = len(traces)
    if outputs is None:
        keep = list(range(n_total))
    else:
        keep = [i for i, o in enumerate(outputs) if o.converged]
    n_conv = len(keep)

    shares = np.zeros(r_max + 1)
    retries = []
    for i in keep:
        tr = traces[i]
        if tr.first_nonadv_r is not None:
            shares[tr.first_nonadv_r:] += 1.0
            retries.append(tr.first_nonadv_r)
        else:
            retries.append(r_max + 1)
    if n_conv:
        shares /= n_conv
    mean_retries = float(np.mean(retries)) if retries else math.nan

    validity_r0 = (float(np.mean([t.model_flipped[0] for t in traces]))
                   if traces else math.nan)
    if outputs is not None and keep:
        mean_l1 = float(np.mean([np.abs(outputs[i].delta).sum() for i in keep]))
        mean_l2 = float(np.mean([np.linalg.norm(outputs[i].delta) for i in keep]))
    else:
        mean_l1 = mean_l2 = math.nan
    return AggregateReport(
        r_max=r_max, shares=shares, mean_retries=mean_retries,
        validity_r0=validity_r0, mean_l1=mean_l1, mean_l2=mean_l2,
        n_total=n_total, n_converged=n_conv, n_excluded=n_total - n_conv,
        oracle_queries=sum(t.oracle_queries for t in traces))


@dataclass
class ReportRow:
    method: str
    cost: str
    arm: str
    aggregate: AggregateReport


@dataclass
class ExperimentReport:
    kind: str
    seed: int
    r_max: int
    config_echo: tuple[str, ...]
    rows: list[ReportRow]
    theorem: TheoremReport | None = None


@dataclass
class Prepared:
    """Everything the generation stage needs, derived from one config."""

    train_set: LabeledDataset
    test_set: LabeledDataset
    expert_set: LabeledDataset
    oracle: object
    feature_ranges: np.ndarray
    actionable: np.ndarray
    true_beta: np.ndarray | None


def synthetic_spec_from(cfg: RunConfig) -> SyntheticSpec:
    ds = cfg.dataset
    if ds.kind != "synthetic":
        raise ConfigurationError("this run needs a synthetic dataset section")
    return SyntheticSpec(n=ds.n, k=ds.k, disc_indices=ds.disc_indices,
                         alpha=ds.alpha, sigma=ds.sigma,
                         seed=subseed(cfg.seed, _TAG_DATA))


def prepare(cfg: RunConfig) -> Prepared:
    """Dataset -> split -> (encode) -> oracle -> oracle-labeled train split."""
    true_beta = None
    if cfg.dataset.kind == "synthetic":
        dataset, true_beta = generate_synthetic(synthetic_spec_from(cfg))
    else:
        schema = parse_schema(cfg.dataset.schema)
        dataset = load_csv(cfg.dataset.path, schema, cfg.dataset.label)
    e_idx, tr_idx, te_idx = split_indices(dataset.n, cfg.split.fractions,
                                          subseed(cfg.seed, _TAG_SPLIT))
    if cfg.dataset.kind == "csv":
        # synthetic features are already standardized by construction
        dataset, _ = preprocess(dataset, tr_idx)
    expert, train_set, test_set = (dataset.subset(e_idx), dataset.subset(tr_idx),
                                   dataset.subset(te_idx))
    if cfg.oracle.kind == "linear":
        oracle = LinearOracle(true_beta, 0.0, cfg.dataset.sigma)
    else:
        oracle = build_knn_oracle(expert, k=cfg.oracle.k)
    # ground truth labels the model's training rows (the expert split is
    # reserved for the oracle itself)
    train_set = LabeledDataset(train_set.X, oracle.query_many(train_set.X),
                               train_set.schema, latent=train_set.latent)
    ranges = np.column_stack([train_set.X.min(axis=0), train_set.X.max(axis=0)])
    return Prepared(train_set=train_set, test_set=test_set, expert_set=expert,
                    oracle=oracle, feature_ranges=ranges,
                    actionable=dataset.schema.actionable_mask(),
                    true_beta=true_beta)


def build_train_config(cfg: RunConfig) -> TrainConfig:
    m = cfg.model
    overrides = {}
    if m.learning_rate is not None:
        overrides["learning_rate"] = m.learning_rate
    if m.epochs is not None:
        overrides["epochs"] = m.epochs
    if m.full_batch:
        overrides["batch_size"] = None
    elif m.batch_size is not None:
        overrides["batch_size"] = m.batch_size
    if m.l2_penalty is not None:
        overrides["l2_penalty"] = m.l2_penalty
    if m.optimizer is not None:
        overrides["optimizer"] = m.optimizer
    overrides["hidden"] = tuple(m.hidden)
    return TrainConfig.for_kind(m.kind, seed=subseed(cfg.seed, _TAG_TRAIN), **overrides)


def build_generator_config(cfg: RunConfig, method: str, prep: Prepared) -> GeneratorConfig:
    g = cfg.generator
    overrides = {"seed": subseed(cfg.seed, _TAG_GEN),
                 "feature_ranges": prep.feature_ranges,
                 "actionable": prep.actionable}
    for name in ("learning_rate", "max_iterations", "lam", "target_score",
                 "cw_c", "deepfool_overshoot", "pgd_epsilon", "dice_num_cfs",
                 "dice_diversity_weight", "ar_grid_bins"):
        v = getattr(g, name)
        if v is not None:
            overrides[name] = v
    return GeneratorConfig.defaults(method, **overrides)


def build_cost(cfg: RunConfig, model, reference_X: np.ndarray,
               scheme: str | None = None) -> CostFunction:
    """Cost function per config; weighted schemes derive weights from the model.

    Linear models contribute their coefficients directly (standard error 0);
    other models use the mean absolute score gradient over `reference_X`.
    """
    kind = cfg.cost.kind
    if scheme is None:
        if kind == "l1":
            return CostFunction.l1()
        if kind == "l2":
            return CostFunction.l2()
        scheme = cfg.cost.weights
    if isinstance(model, LinearModel):
        coef, se = model.weights, np.zeros(model.k)
    else:
        coef, se = gradient_coefficients(model, reference_X)
    if scheme == "nadv_optimal":
        params = PdiscParams(alpha=cfg.cost.alpha, q=cfg.cost.q,
                             normalize_by_se=cfg.cost.normalize_by_se)
        w = optimal_weights(coef, se, cfg.cost.p, params)
    else:
        w = baseline_weights(coef, scheme)
    return CostFunction.weighted(w)


def unfavorable_factuals(model, test_set: LabeledDataset, limit: int) -> np.ndarray:
    """Test rows currently scored on the unfavorable side (label 0)."""
    scores = np.asarray(model.score(test_set.X))
    rows = np.flatnonzero(scores <= 0)
    return rows[:limit] if limit > 0 else rows


def evaluate_method(model, oracle, test_set: LabeledDataset, gen_cfg: GeneratorConfig,
                    cost_fn: CostFunction, r_max: int,
                    rows: np.ndarray) -> tuple[AggregateReport, list[RecourseOutput]]:
    """Generate recourse and trace retries for the given factual rows."""
    outputs, traces = [], []
    for i in rows:
        x = test_set.X[int(i)]
        per_factual = replace(gen_cfg, seed=subseed(gen_cfg.seed, int(i)))
        out = generate(model, x, 1, cost_fn, per_factual)
        outputs.append(out)
        traces.append(retry_trace(model, oracle, x, out.delta, r_max,
                                  target=1, index=int(i)))
    return aggregate(traces, outputs, r_max), outputs


_COST_CAPABLE = ("scfe", "dice", "cw", "pgd")
_DEFAULT_METHODS = {
    "method_comparison": METHODS,
    "cost_comparison": _COST_CAPABLE,
    "accuracy": ("deepfool",),
    "adv_training": ("pgd",),
}


def _methods_for(kind: str, cfg: RunConfig) -> tuple[str, ...]:
    if cfg.generator.methods:
        return cfg.generator.methods
    return _DEFAULT_METHODS[kind]


def run_experiment(kind: str, cfg: RunConfig, outdir: str | None = None) -> ExperimentReport:
    """Run one experiment kind end to end; optionally write its report files."""
    if kind == "evaluate":
        report = _run_rows(kind, cfg, (cfg.generator.method,))
    elif kind in ("method_comparison", "cost_comparison"):
        report = _run_rows(kind, cfg, _methods_for(kind, cfg))
    elif kind == "accuracy":
        report = _run_accuracy(cfg)
    elif kind == "adv_training":
        report = _run_adv_training(cfg)
    elif kind == "theorem":
        report = _run_theorem(cfg)
    else:
        raise ConfigurationError(f"unknown experiment kind {kind!r}")
    if outdir is not None:
        write_report(report, outdir)
    return report


def _run_rows(kind: str, cfg: RunConfig, methods: tuple[str, ...]) -> ExperimentReport:
    prep = prepare(cfg)
    model = train(prep.train_set, build_train_config(cfg))
    rows = unfavorable_factuals(model, prep.test_set, cfg.evaluation.max_factuals)
    r_max = cfg.evaluation.r_max
    out_rows = []
    if kind == "cost_comparison":
        schemes = ("unit", "squared_gradient", "inverse_squared", "nadv_optimal")
        for scheme in schemes:
            cost_fn = build_cost(cfg, model, prep.test_set.X, scheme=scheme)
            for method in methods:
                agg, _ = evaluate_method(model, prep.oracle, prep.test_set,
                                         build_generator_config(cfg, method, prep),
                                         cost_fn, r_max, rows)
                out_rows.append(ReportRow(method, scheme, "-", agg))
    else:
        cost_fn = build_cost(cfg, model, prep.test_set.X)
        cost_label = cfg.cost.kind if cfg.cost.kind != "weighted_quadratic" \
            else cfg.cost.weights
        for method in methods:
            agg, _ = evaluate_method(model, prep.oracle, prep.test_set,
                                     build_generator_config(cfg, method, prep),
                                     cost_fn, r_max, rows)
            out_rows.append(ReportRow(method, cost_label, "-", agg))
    return ExperimentReport(kind=kind, seed=cfg.seed, r_max=r_max,
                            config_echo=cfg.echo(), rows=out_rows)


def _run_two_arms(kind: str, cfg: RunConfig, models: dict[str, object],
                  prep: Prepared) -> ExperimentReport:
    r_max = cfg.evaluation.r_max
    out_rows = []
    for arm, model in models.items():
        rows = unfavorable_factuals(model, prep.test_set, cfg.evaluation.max_factuals)
        cost_fn = build_cost(cfg, model, prep.test_set.X)
        cost_label = cfg.cost.kind if cfg.cost.kind != "weighted_quadratic" \
            else cfg.cost.weights
        for method in _methods_for(kind, cfg):
            agg, _ = evaluate_method(model, prep.oracle, prep.test_set,
                                     build_generator_config(cfg, method, prep),
                                     cost_fn, r_max, rows)
            out_rows.append(ReportRow(method, cost_label, arm, agg))
    return ExperimentReport(kind=kind, seed=cfg.seed, r_max=r_max,
                            config_echo=cfg.echo(), rows=out_rows)


def _run_accuracy(cfg: RunConfig) -> ExperimentReport:
    """Clean versus label-noise arm: same seeds, flipped training labels."""
    prep = prepare(cfg)
    tc = build_train_config(cfg)
    noisy = flip_labels(prep.train_set, cfg.evaluation.flip_fraction,
                        subseed(cfg.seed, _TAG_FLIP))
    models = {"clean": train(prep.train_set, tc), "flipped": train(noisy, tc)}
    return _run_two_arms("accuracy", cfg, models, prep)


def _run_adv_training(cfg: RunConfig) -> ExperimentReport:
    """Plain versus robust arm under the same training seed."""
    prep = prepare(cfg)
    tc = build_train_config(cfg)
    adv = AdvTrainConfig(base=tc, epsilon=cfg.model.adv_epsilon,
                         inner_steps=cfg.model.adv_inner_steps,
                         inner_step_size=cfg.model.adv_inner_step_size)
    models = {"plain": train(prep.train_set, tc),
              "robust": train_adversarial(prep.train_set, adv)}
    return _run_two_arms("adv_training", cfg, models, prep)


def _run_theorem(cfg: RunConfig) -> ExperimentReport:
    spec = synthetic_spec_from(cfg)
    params = PdiscParams(alpha=cfg.cost.alpha, q=cfg.cost.q,
                         normalize_by_se=cfg.cost.normalize_by_se)
    report = verify_theorem(spec, cfg.theorem.p, params, cfg.theorem.trials,
                             cfg.theorem.random_weightings,
                             seed=subseed(cfg.seed, _TAG_GEN))
    return ExperimentReport(kind="theorem", seed=cfg.seed,
                            r_max=cfg.evaluation.r_max, config_echo=cfg.echo(),
                            rows=[], theorem=report)


# ---------------------------------------------------------------------------
# report files: newline-delimited records plus a companion CSV

REPORT_VERSION = "nonadv-report v1"

_ROW_FIELDS = ("share", "validity_r0", "mean_retries", "mean_l1", "mean_l2")


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_records(report: ExperimentReport) -> str:
    lines = [REPORT_VERSION, f"kind {report.kind}", f"seed {report.seed}",
             f"rmax {report.r_max}"]
    for line in report.config_echo:
        lines.append(f"config {line}")
    for row in report.rows:
        a = row.aggregate
        for r in range(a.r_max + 1):
            parts = [f"method={row.method}", f"cost={row.cost}", f"arm={row.arm}",
                     f"r={r}", f"share={repr(float(a.shares[r]))}",
                     f"validity_r0={repr(a.validity_r0)}",
                     f"mean_retries={repr(a.mean_retries)}",
                     f"mean_l1={repr(a.mean_l1)}", f"mean_l2={repr(a.mean_l2)}",
                     f"n_total={a.n_total}", f"n_converged={a.n_converged}",
                     f"n_excluded={a.n_excluded}", f"oracle_queries={a.oracle_queries}"]
            lines.append("row " + " ".join(parts))
    if report.theorem is not None:
        t = report.theorem
        lines.append(
            "theorem " + " ".join([
                f"p={t.p}", f"trials={t.trials}",
                f"weightings={t.num_random_weightings}",
                f"optimal={repr(t.mean_nadv_optimal)}",
                f"identity={repr(t.mean_nadv_identity)}"]))
        for j, v in enumerate(t.mean_nadv_random):
            lines.append(f"theorem_random {j} {repr(float(v))}")
    return "\n".join(lines) + "\n"


def render_csv(report: ExperimentReport) -> str:
    if report.theorem is not None:
        lines = ["weighting,mean_nadv",
                 f"optimal,{repr(report.theorem.mean_nadv_optimal)}",
                 f"identity,{repr(report.theorem.mean_nadv_identity)}"]
        for j, v in enumerate(report.theorem.mean_nadv_random):
            lines.append(f"random_{j},{repr(float(v))}")
        return "\n".join(lines) + "\n"
    header = ("method,cost,arm,r,share,validity_r0,mean_retries,mean_l1,"
              "mean_l2,n_total,n_converged,n_excluded,oracle_queries")
    lines = [header]
    for row in report.rows:
        a = row.aggregate
        for r in range(a.r_max + 1):
            lines.append(",".join([
                row.method, row.cost, row.arm, str(r),
                repr(float(a.shares[r])), repr(a.validity_r0),
                repr(a.mean_retries), repr(a.mean_l1), repr(a.mean_l2),
                str(a.n_total), str(a.n_converged), str(a.n_excluded),
                str(a.oracle_queries)]))
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport, outdir: str) -> list[str]:
    """Write the records file and the companion CSV; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    records = os.path.join(outdir, f"{report.kind}_records.txt")
    table = os.path.join(outdir, f"{report.kind}_table.csv")
    with open(records, "w") as fh:
        fh.write(render_records(report))
    with open(table, "w") as fh:
        fh.write(render_csv(report))
    return [records, table]
