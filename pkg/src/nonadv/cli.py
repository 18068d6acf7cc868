"""Command line entry points.

Every subcommand reads one INI run config. The effective seed is resolved
in this order: --seed flag, NONADV_SEED environment variable, [run] seed in
the config, then 0. All outputs are plain text written without timestamps,
so reruns with the same config and seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import evaluation, plots
from .config import RunConfig, parse_run_config, write_schema
from .data import generate_synthetic, subseed
from .errors import NonadvError
from .evaluation import EXPERIMENT_KINDS, run_experiment
from .generators import generate
from .models import load_model, save_model
from .training import AdvTrainConfig, train, train_adversarial, accuracy

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _resolve_seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("NONADV_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise NonadvError(f"NONADV_SEED must be an integer, got {env!r}")
    return None


def _load_config(args) -> RunConfig:
    return parse_run_config(args.config, seed_override=_resolve_seed(args))


def _outdir(args, cfg: RunConfig) -> str:
    path = args.out if args.out else cfg.output.dir
    os.makedirs(path, exist_ok=True)
    return path


def _cmd_synth(args) -> int:
    cfg = _load_config(args)
    spec = evaluation.synthetic_spec_from(cfg)
    dataset, beta = generate_synthetic(spec)
    outdir = _outdir(args, cfg)
    names = dataset.schema.names
    csv_path = os.path.join(outdir, "dataset.csv")
    with open(csv_path, "w") as fh:
        fh.write("# nonadv-dataset v1\n")
        fh.write(",".join(list(names) + ["label"]) + "\n")
        for i in range(dataset.n):
            cells = [repr(float(v)) for v in dataset.X[i]]
            cells.append(str(int(dataset.y[i])))
            fh.write(",".join(cells) + "\n")
    schema_path = os.path.join(outdir, "schema.cfg")
    write_schema(dataset.schema, schema_path)
    truth_path = os.path.join(outdir, "truth.txt")
    with open(truth_path, "w") as fh:
        fh.write("# nonadv-truth v1\n")
        for name, b in zip(names, beta):
            fh.write(f"beta {name} {repr(float(b))}\n")
    print(f"wrote {csv_path}, {schema_path}, {truth_path}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    prep = evaluation.prepare(cfg)
    tc = evaluation.build_train_config(cfg)
    if args.adversarial:
        adv = AdvTrainConfig(base=tc, epsilon=cfg.model.adv_epsilon,
                             inner_steps=cfg.model.adv_inner_steps,
                             inner_step_size=cfg.model.adv_inner_step_size)
        model = train_adversarial(prep.train_set, adv)
    else:
        model = train(prep.train_set, tc)
    outdir = _outdir(args, cfg)
    path = os.path.join(outdir, "model.txt")
    save_model(model, path)
    acc = accuracy(model, prep.test_set)
    print(f"wrote {path} (test accuracy {acc:.4f})")
    return EXIT_OK


def _cmd_generate(args) -> int:
    cfg = _load_config(args)
    prep = evaluation.prepare(cfg)
    if args.model:
        model = load_model(args.model)
    else:
        model = train(prep.train_set, evaluation.build_train_config(cfg))
    rows = evaluation.unfavorable_factuals(model, prep.test_set,
                                           cfg.evaluation.max_factuals)
    gen_cfg = evaluation.build_generator_config(cfg, cfg.generator.method, prep)
    cost_fn = evaluation.build_cost(cfg, model, prep.test_set.X)
    outdir = _outdir(args, cfg)
    path = os.path.join(outdir, "recourse.csv")
    names = prep.test_set.schema.names
    header = ["index", "converged", "iterations_used", "cost_value"]
    header += [f"delta_{n}" for n in names]
    with open(path, "w") as fh:
        fh.write("# nonadv-recourse v1\n")
        fh.write(",".join(header) + "\n")
        for i in rows:
            per_factual = replace(gen_cfg, seed=subseed(gen_cfg.seed, int(i)))
            out = generate(model, prep.test_set.X[int(i)], 1, cost_fn, per_factual)
            cells = [str(int(i)), str(int(out.converged)),
                     str(out.iterations_used), repr(float(out.cost_value))]
            cells += [repr(float(d)) for d in out.delta]
            fh.write(",".join(cells) + "\n")
    print(f"wrote {path} ({len(rows)} factuals, method {cfg.generator.method})")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    report = run_experiment("evaluate", cfg, outdir=_outdir(args, cfg))
    _print_report_summary(report)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(args.kind, cfg, outdir=_outdir(args, cfg))
    _print_report_summary(report)
    return EXIT_OK


def _cmd_verify_theorem(args) -> int:
    cfg = _load_config(args)
    updates = {}
    if args.p is not None:
        updates["p"] = float(args.p) if args.p == "inf" else int(args.p)
    if args.trials is not None:
        updates["trials"] = args.trials
    if updates:
        cfg = replace(cfg, theorem=replace(cfg.theorem, **updates))
    report = run_experiment("theorem", cfg, outdir=_outdir(args, cfg))
    t = report.theorem
    p95 = t.random_percentile(95.0)
    print(f"mean nadv, optimal weights:  {t.mean_nadv_optimal:.6f}")
    print(f"mean nadv, identity weights: {t.mean_nadv_identity:.6f}")
    print(f"mean nadv, random weights (p95 of {t.num_random_weightings}): {p95:.6f}")
    holds = (t.mean_nadv_optimal >= t.mean_nadv_identity
             and t.mean_nadv_optimal >= p95)
    print("claim holds" if holds else "claim violated")
    return EXIT_OK if holds else EXIT_ERROR


def _cmd_plot(args) -> int:
    out = args.out if args.out else os.path.dirname(args.records) or "."
    os.makedirs(out, exist_ok=True)
    written = plots.render_plots(args.records, out)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _print_report_summary(report) -> None:
    for row in report.rows:
        a = row.aggregate
        share0 = float(a.shares[0]) if len(a.shares) else float("nan")
        print(f"{report.kind} method={row.method} cost={row.cost} arm={row.arm} "
              f"share_r0={share0:.4f} mean_retries={a.mean_retries:.4f} "
              f"converged={a.n_converged}/{a.n_total}")
    if report.theorem is not None:
        t = report.theorem
        print(f"theorem optimal={t.mean_nadv_optimal:.6f} "
              f"identity={t.mean_nadv_identity:.6f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonadv",
        description="Recourse generation and non-adversarial evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_flag=False):
        p.add_argument("--config", required=True, help="INI run config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None,
                       help="output directory (default: [output] dir)")
        if model_flag:
            p.add_argument("--model", default=None,
                           help="load a saved model instead of training")

    common(sub.add_parser("synth", help="write a synthetic dataset to disk"))
    p_train = sub.add_parser("train", help="train a model on the configured data")
    common(p_train)
    p_train.add_argument("--adversarial", action="store_true",
                         help="use projected-gradient adversarial training")
    common(sub.add_parser("generate", help="write recourse deltas for test factuals"),
           model_flag=True)
    common(sub.add_parser("evaluate",
                          help="run the retry protocol for one method"))
    p_exp = sub.add_parser("experiment", help="run a named experiment")
    common(p_exp)
    p_exp.add_argument("--kind", required=True, choices=EXPERIMENT_KINDS)
    p_thm = sub.add_parser("verify-theorem",
                           help="Monte Carlo check of the optimal-weights claim")
    common(p_thm)
    p_thm.add_argument("--p", choices=["1", "2", "inf"], default=None,
                       help="override the nadv norm order")
    p_thm.add_argument("--trials", type=int, default=None,
                       help="override the Monte Carlo trial count")
    p_plot = sub.add_parser("plot", help="render SVG charts from a records file")
    p_plot.add_argument("--records", required=True, help="records file to plot")
    p_plot.add_argument("--out", default=None, help="output directory")
    return parser


_HANDLERS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
    "verify-theorem": _cmd_verify_theorem,
    "plot": _cmd_plot,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except NonadvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
