"""Whole-library acceptance checklist.

Each test asserts one behavioral guarantee end to end and prints a single
`[A..] <name>: PASS (<figures>)` line on success, so `pytest -rA` shows the
full checklist in its summary. Every check also asserts its own wall-clock
budget, making runtime regressions fail loudly.
"""

import math
import time

import numpy as np

from nonadv.config import (CostSection, DatasetConfig, EvaluationConfig,
                           GeneratorSection, ModelConfig, OracleConfig,
                           RunConfig, TheoremConfig)
from nonadv.costs import CostFunction, PdiscParams
from nonadv.data import SyntheticSpec
from nonadv.evaluation import (RETRY_GROWTH, build_cost, build_generator_config,
                               build_train_config, evaluate_method, prepare,
                               retry_trace, run_experiment, unfavorable_factuals)
from nonadv.generators import METHODS, GeneratorConfig, scfe
from nonadv.lineartheory import (NadvConfig, analytical_recourse, nadv,
                                 verify_theorem)
from nonadv.models import LinearModel, MlpModel, input_gradient, predict
from nonadv.oracle import LinearOracle
from nonadv.training import train


def _finish(tag: str, budget: float, started: float, detail: str) -> None:
    elapsed = time.perf_counter() - started
    assert elapsed < budget, f"{tag} took {elapsed:.1f}s, budget {budget:.0f}s"
    print(f"{tag}: PASS ({detail}, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# A1: exact input gradients against a finite-difference probe


def _objective_value(model, x, objective, target):
    s = float(model.score(x))
    if objective == "score":
        return s
    if objective == "cross_entropy":
        return math.log1p(math.exp(-s)) if target == 1 else math.log1p(math.exp(s))
    return (s - target) ** 2


def _central_difference(model, x, objective, target, step=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        hi, lo = x.copy(), x.copy()
        hi[i] += step
        lo[i] -= step
        g[i] = (_objective_value(model, hi, objective, target)
                - _objective_value(model, lo, objective, target)) / (2.0 * step)
    return g


def test_a01_input_gradients_match_central_differences():
    started = time.perf_counter()
    rng = np.random.default_rng(20260814)
    worst = 0.0
    for i in range(100):
        k = int(rng.integers(2, 9))
        hidden = [int(rng.integers(3, 21)) for _ in range(1 + int(rng.integers(0, 2)))]
        model = MlpModel.initialize([k, *hidden, 2], seed=int(rng.integers(0, 2**31)))
        x = rng.normal(size=k)
        objective = ("score", "cross_entropy", "squared_score_error")[i % 3]
        if objective == "cross_entropy":
            target = i % 2
        elif objective == "squared_score_error":
            target = float(rng.normal())
        else:
            target = None
        g = input_gradient(model, x, objective, target=target)
        fd = _central_difference(model, x, objective, target)
        rel = float(np.linalg.norm(g - fd)) / max(float(np.linalg.norm(fd)), 1e-10)
        worst = max(worst, rel)
        assert rel < 1e-4, f"pair {i}: relative error {rel:.2e}"
    _finish("[A1] input gradients vs central differences", 10.0, started,
            f"100 pairs, max rel err {worst:.2e}")


# ---------------------------------------------------------------------------
# A2: the closed-form recourse hits its target score exactly


def test_a02_closed_form_recourse_postcondition():
    started = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(1000):
        k = int(rng.integers(2, 21))
        beta = rng.normal(size=k) * (10.0 ** rng.uniform(-1.0, 1.0))
        zero = rng.random(k) < 0.3
        keep = int(rng.integers(0, k))
        zero[keep] = False
        beta[zero] = 0.0
        w = 10.0 ** rng.uniform(-2.0, 2.0, size=k)
        w[zero] = math.inf  # sentinel entries on the zeroed coefficients
        if i % 4 == 0:
            # sometimes freeze a live coordinate as well
            others = np.flatnonzero(~zero & (np.arange(k) != keep))
            if others.size:
                w[int(others[0])] = math.inf
        x = 3.0 * rng.normal(size=k)
        bias = float(rng.normal())
        target = float(2.0 * rng.normal())
        delta = analytical_recourse(beta, bias, x, target, w)
        assert np.all(delta[np.isinf(w)] == 0.0)
        resid = abs(float(beta @ (x + delta)) + bias - target)
        worst = max(worst, resid)
        assert resid <= 1e-9, f"instance {i}: residual {resid:.2e}"
    _finish("[A2] closed-form recourse postcondition", 5.0, started,
            f"1000 instances, max residual {worst:.1e}")


# ---------------------------------------------------------------------------
# A3: the iterative score-targeting search recovers the closed-form answer


def test_a03_iterative_search_matches_closed_form_on_linear_models():
    started = time.perf_counter()
    rng = np.random.default_rng(20260814)
    cos_min, ratio_lo, ratio_hi = 1.0, math.inf, 0.0
    for _ in range(50):
        k = int(rng.integers(4, 16))
        beta = rng.normal(size=k)
        bias = 0.5 * float(rng.normal())
        x = rng.normal(size=k)
        h0 = -float(rng.uniform(2.0, 4.0))
        s0 = float(beta @ x) + bias
        x = x + ((h0 - s0) / float(beta @ beta)) * beta  # start at score h0
        model = LinearModel(weights=beta, bias=bias)
        cfg = GeneratorConfig.defaults("scfe", learning_rate=0.005,
                                       max_iterations=6000, target_score=1.0)
        out = scfe(model, x, 1.0, CostFunction.l2(), cfg)
        assert out.converged
        star = analytical_recourse(beta, bias, x, 1.0, np.ones(k))
        cos = float(out.delta @ star) / float(np.linalg.norm(out.delta)
                                              * np.linalg.norm(star))
        ratio = float(np.linalg.norm(out.delta) / np.linalg.norm(star))
        cos_min = min(cos_min, cos)
        ratio_lo, ratio_hi = min(ratio_lo, ratio), max(ratio_hi, ratio)
        assert cos > 0.99
        assert 0.9 <= ratio <= 1.1
    _finish("[A3] iterative search vs closed form", 30.0, started,
            f"50/50 converged, min cos {cos_min:.5f}, "
            f"norm ratio [{ratio_lo:.4f}, {ratio_hi:.4f}]")


# ---------------------------------------------------------------------------
# A4: fitted optimal weights maximize the expected score in Monte-Carlo


def test_a04_fitted_optimal_weighting_dominates():
    started = time.perf_counter()
    # sigma is set so the fitted-coefficient standard error is about 1/3,
    # putting the signal-to-noise ratio of unit coefficients near 3
    spec = SyntheticSpec(n=200, k=10, disc_indices=(0, 1, 2), alpha=1.0,
                         sigma=math.sqrt(200.0) / 3.0, seed=0)
    params = PdiscParams(alpha=4.0, q=3.0 / 7.0, normalize_by_se=True)
    rep = verify_theorem(spec, 2, params, trials=500,
                         num_random_weightings=100, seed=0)
    p95 = rep.random_percentile(95.0)
    assert rep.mean_nadv_optimal >= rep.mean_nadv_identity
    assert rep.mean_nadv_optimal >= p95
    _finish("[A4] fitted optimal weighting dominates", 120.0, started,
            f"optimal {rep.mean_nadv_optimal:.4f} >= identity "
            f"{rep.mean_nadv_identity:.4f} and >= random p95 {p95:.4f}")


# ---------------------------------------------------------------------------
# A5: range, support characterization and scale invariance of the score


def test_a05_nonadversarialness_score_properties():
    started = time.perf_counter()
    rng = np.random.default_rng(11)
    for i in range(10000):
        k = int(rng.integers(3, 13))
        m = int(rng.integers(1, k))  # keep at least one outside coordinate
        disc = tuple(sorted(int(j) for j in rng.choice(k, size=m, replace=False)))
        cfg = NadvConfig(disc_indices=disc, p=1)
        delta = rng.normal(size=k) * (10.0 ** rng.uniform(-2.0, 2.0))

        v = nadv(delta, cfg)
        assert 0.0 <= v <= 1.0
        outside = np.setdiff1d(np.arange(k), np.asarray(disc))
        assert (v == 1.0) == bool(np.all(delta[outside] == 0.0))

        inside = np.zeros(k)
        inside[list(disc)] = delta[list(disc)]
        if m >= 2 and i % 5 == 0:
            inside[disc[0]] = 0.0  # support strictly inside the set still counts
        assert nadv(inside, cfg) == 1.0

        leaked = inside.copy()
        leaked[int(outside[0])] = 1.0
        assert nadv(leaked, cfg) < 1.0

        c = 10.0 ** rng.uniform(-3.0, 3.0)
        assert math.isclose(nadv(c * delta, cfg), v, rel_tol=1e-9)
    _finish("[A5] score range, support and scale invariance", 5.0, started,
            "10000 deltas")


# ---------------------------------------------------------------------------
# A6: every generation method flips the model on its first submission


def _benchmark_config(seed=0):
    return RunConfig(
        seed=seed,
        dataset=DatasetConfig(kind="synthetic", n=3000, k=8, disc_indices=(0, 1, 2)),
        model=ModelConfig(kind="mlp", epochs=300),
        oracle=OracleConfig(kind="knn", k=5),
        cost=CostSection(kind="l2"),
        evaluation=EvaluationConfig(r_max=5, max_factuals=200),
    )


def test_a06_every_generator_flips_the_model_at_first_submission():
    started = time.perf_counter()
    cfg = _benchmark_config()
    prep = prepare(cfg)
    model = train(prep.train_set, build_train_config(cfg))
    rows = unfavorable_factuals(model, prep.test_set, cfg.evaluation.max_factuals)
    assert rows.size == 200
    details = []
    for method in METHODS:
        gen_cfg = build_generator_config(cfg, method, prep)
        cost_fn = build_cost(cfg, model, prep.test_set.X)
        _, outputs = evaluate_method(model, prep.oracle, prep.test_set, gen_cfg,
                                     cost_fn, cfg.evaluation.r_max, rows)
        conv = [o for o in outputs if o.converged]
        assert conv, f"{method} produced no converged recourse"
        flips = float(np.mean([predict(model, o.x_prime).label == 1 for o in conv]))
        details.append(f"{method} {flips:.2f}@{len(conv)}")
        assert flips >= 0.9, f"{method}: first-submission flip rate {flips:.3f}"
    _finish("[A6] first-submission flips for all six generators", 180.0, started,
            ", ".join(details))


# ---------------------------------------------------------------------------
# A7: the retry schedule is bit-exact and monotone for linear models


def test_a07_retry_points_bit_exact_and_linear_monotonicity():
    started = time.perf_counter()
    rng = np.random.default_rng(5)
    for _ in range(50):
        k = int(rng.integers(2, 11))
        model = LinearModel(weights=rng.normal(size=k), bias=float(rng.normal()))
        oracle = LinearOracle(rng.normal(size=k))
        x = rng.normal(size=k)
        delta = rng.normal(size=k)
        a = retry_trace(model, oracle, x, delta, r_max=5)
        b = retry_trace(model, oracle, x, delta, r_max=5)
        assert np.array_equal(a.model_flipped, b.model_flipped)
        assert np.array_equal(a.oracle_flipped, b.oracle_flipped)
        assert a.first_nonadv_r == b.first_nonadv_r
        assert a.oracle_queries == 6
        assert (x + (RETRY_GROWTH ** 0) * delta).tobytes() == (x + delta).tobytes()
        for r in range(6):
            x_r = x + (RETRY_GROWTH ** r) * delta
            assert (x + (RETRY_GROWTH ** r) * delta).tobytes() == x_r.tobytes()
            assert a.model_flipped[r] == (predict(model, x_r).label == a.target)

    violations = 0
    for _ in range(1000):
        k = int(rng.integers(2, 11))
        scale = 10.0 ** rng.uniform(-1.0, 1.0)
        model = LinearModel(weights=scale * rng.normal(size=k),
                            bias=float(rng.normal()))
        oracle = LinearOracle(rng.normal(size=k))
        x = rng.normal(size=k)
        delta = rng.normal(size=k) * (10.0 ** rng.uniform(-1.0, 1.0))
        tr = retry_trace(model, oracle, x, delta, r_max=8)
        if np.any(np.diff(tr.model_flipped.astype(int)) < 0):
            violations += 1
    assert violations == 0
    _finish("[A7] retry protocol exactness", 10.0, started,
            "50 traces bit-identical, 0/1000 monotonicity violations")


# ---------------------------------------------------------------------------
# A8: cleaner training labels never need more retries (directional)


def test_a08_clean_models_retry_no_more_than_label_noise_models():
    started = time.perf_counter()
    wins, clean_means, flipped_means = 0, [], []
    for s in range(10):
        cfg = RunConfig(
            seed=s,
            dataset=DatasetConfig(kind="synthetic", n=1000, k=10,
                                  disc_indices=(0, 1, 2)),
            model=ModelConfig(kind="linear_logistic", epochs=400),
            oracle=OracleConfig(kind="linear"),
            evaluation=EvaluationConfig(r_max=5, max_factuals=100,
                                        flip_fraction=0.25),
        )
        rep = run_experiment("accuracy", cfg)
        by_arm = {row.arm: row.aggregate for row in rep.rows}
        clean_means.append(by_arm["clean"].mean_retries)
        flipped_means.append(by_arm["flipped"].mean_retries)
        wins += by_arm["clean"].mean_retries <= by_arm["flipped"].mean_retries
    assert wins >= 8, f"clean model won only {wins}/10 seeds"
    _finish("[A8] cleaner labels retry no more", 300.0, started,
            f"{wins}/10 seeds, mean retries {np.mean(clean_means):.3f} clean"
            f" vs {np.mean(flipped_means):.3f} flipped")


# ---------------------------------------------------------------------------
# A9: robust training keeps the first-submission success share (directional)


def test_a09_robust_training_keeps_first_submission_share():
    started = time.perf_counter()
    wins, pairs = 0, []
    for s in range(10):
        cfg = RunConfig(
            seed=s,
            dataset=DatasetConfig(kind="synthetic", n=1000, k=8,
                                  disc_indices=(0, 1, 2)),
            model=ModelConfig(kind="mlp", epochs=150),
            oracle=OracleConfig(kind="linear"),
            evaluation=EvaluationConfig(r_max=5, max_factuals=80),
        )
        rep = run_experiment("adv_training", cfg)
        by_arm = {row.arm: row.aggregate for row in rep.rows}
        robust, plain = by_arm["robust"].shares[0], by_arm["plain"].shares[0]
        pairs.append((robust, plain))
        wins += robust >= plain
    assert wins >= 7, f"robust arm won only {wins}/10 seeds"
    _finish("[A9] robust training keeps first-submission share", 600.0, started,
            f"{wins}/10 seeds, mean share {np.mean([p[0] for p in pairs]):.3f}"
            f" robust vs {np.mean([p[1] for p in pairs]):.3f} plain")


# ---------------------------------------------------------------------------
# A10: the cost-minimizing search is cheaper than the fixed-ball attack


def test_a10_score_targeting_search_is_cheaper_than_fixed_ball_attack():
    started = time.perf_counter()
    wins, scfe_means, pgd_means = 0, [], []
    for s in range(10):
        cfg = RunConfig(
            seed=s,
            dataset=DatasetConfig(kind="synthetic", n=2000, k=8,
                                  disc_indices=(0, 1, 2)),
            model=ModelConfig(kind="mlp", epochs=300),
            oracle=OracleConfig(kind="knn", k=5),
            generator=GeneratorSection(methods=("scfe", "pgd")),
            cost=CostSection(kind="l2"),
            evaluation=EvaluationConfig(r_max=5, max_factuals=100),
        )
        rep = run_experiment("method_comparison", cfg)
        by_method = {row.method: row.aggregate for row in rep.rows}
        scfe_means.append(by_method["scfe"].mean_l1)
        pgd_means.append(by_method["pgd"].mean_l1)
        wins += by_method["scfe"].mean_l1 <= by_method["pgd"].mean_l1
    assert wins >= 8, f"scfe was cheaper in only {wins}/10 seeds"
    _finish("[A10] targeted search beats fixed-ball attack on L1 cost", 300.0,
            started, f"{wins}/10 seeds, mean L1 {np.mean(scfe_means):.3f} scfe"
            f" vs {np.mean(pgd_means):.3f} pgd")


# ---------------------------------------------------------------------------
# A11: rerunning any experiment kind reproduces its report files byte for byte


def _report_bytes(outdir, kind):
    rec = (outdir / f"{kind}_records.txt").read_bytes()
    table = (outdir / f"{kind}_table.csv").read_bytes()
    return rec, table


def test_a11_every_experiment_kind_reruns_byte_identical(tmp_path):
    started = time.perf_counter()
    small = dict(
        dataset=DatasetConfig(kind="synthetic", n=300, k=5, disc_indices=(0, 1)),
        model=ModelConfig(kind="mlp", epochs=40),
        oracle=OracleConfig(kind="knn", k=5),
        evaluation=EvaluationConfig(r_max=4, max_factuals=8),
        theorem=TheoremConfig(trials=8, random_weightings=5),
    )
    kinds = ("evaluate", "cost_comparison", "accuracy", "adv_training", "theorem")
    for kind in kinds:
        cfg = RunConfig(seed=2, **small)
        dir_a, dir_b = tmp_path / f"{kind}_a", tmp_path / f"{kind}_b"
        run_experiment(kind, cfg, str(dir_a))
        run_experiment(kind, cfg, str(dir_b))
        assert _report_bytes(dir_a, kind) == _report_bytes(dir_b, kind), kind

    # the six-method comparison reruns at full benchmark scale
    dir_a, dir_b = tmp_path / "big_a", tmp_path / "big_b"
    run_experiment("method_comparison", _benchmark_config(), str(dir_a))
    run_experiment("method_comparison", _benchmark_config(), str(dir_b))
    assert (_report_bytes(dir_a, "method_comparison")
            == _report_bytes(dir_b, "method_comparison"))
    _finish("[A11] reruns are byte-identical", 180.0, started,
            "6 experiment kinds checked")
