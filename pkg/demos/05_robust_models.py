#!/usr/bin/env python3
"""How model quality shows up in the retry protocol.

Two controlled comparisons on the same synthetic process:

  accuracy      the same architecture trained on clean labels versus labels
                with a quarter flipped. A worse fit means recourse lands on
                the wrong side of the truth more often, so more retries.

  adv_training  a plain network versus one trained against an l-inf
                adversary. Robust training smooths the boundary, which tends
                to help the first submission rather than hurt it.

    python3 demos/05_robust_models.py
"""

from nonadv.config import (DatasetConfig, EvaluationConfig, ModelConfig,
                           OracleConfig, RunConfig)
from nonadv.evaluation import run_experiment


def arms(kind, cfg):
    report = run_experiment(kind, cfg)
    return {row.arm: row.aggregate for row in report.rows}


print("clean vs 25%-flipped training labels (logistic, deepfool recourse)")
for seed in range(3):
    cfg = RunConfig(
        seed=seed,
        dataset=DatasetConfig(kind="synthetic", n=1000, k=10,
                              disc_indices=(0, 1, 2)),
        model=ModelConfig(kind="linear_logistic", epochs=400),
        oracle=OracleConfig(kind="linear"),
        evaluation=EvaluationConfig(r_max=5, max_factuals=100,
                                    flip_fraction=0.25),
    )
    by = arms("accuracy", cfg)
    print(f"  seed {seed}: mean retries {by['clean'].mean_retries:.3f} clean"
          f" vs {by['flipped'].mean_retries:.3f} flipped")

print("\nplain vs adversarially trained mlp (pgd recourse, share at r=0)")
for seed in range(3):
    cfg = RunConfig(
        seed=seed,
        dataset=DatasetConfig(kind="synthetic", n=1000, k=8,
                              disc_indices=(0, 1, 2)),
        model=ModelConfig(kind="mlp", epochs=150),
        oracle=OracleConfig(kind="linear"),
        evaluation=EvaluationConfig(r_max=5, max_factuals=80),
    )
    by = arms("adv_training", cfg)
    print(f"  seed {seed}: share {by['plain'].shares[0]:.3f} plain"
          f" vs {by['robust'].shares[0]:.3f} robust")
