"""Recourse generation with a non-adversarial evaluation protocol.

The package trains small classifiers, generates counterfactual recourse with
six standard methods, and measures whether the recourse also flips a held-out
ground-truth oracle, directly and under multiplicative retries.
"""

from .config import RunConfig, parse_run_config, parse_schema, write_schema
from .costs import (CostFunction, PdiscParams, baseline_weights,
                    gradient_coefficients, optimal_weights, p_disc)
from .data import (FeatureSchema, LabeledDataset, StandardizeTransform,
                   SyntheticSpec, flip_labels, generate_synthetic, load_csv,
                   preprocess, split_indices, split_three_way, subrng, subseed)
from .errors import (ConfigurationError, ContractError, NonadvError,
                     NumericalError, ParseError)
from .evaluation import (AggregateReport, ExperimentReport, RetryTrace,
                         aggregate, retry_trace, run_experiment, write_report)
from .generators import (METHODS, GeneratorConfig, RecourseOutput, ar_discrete,
                         cw, deepfool, dice, generate, pgd, scfe)
from .lineartheory import (NadvConfig, TheoremReport, analytical_recourse,
                           nadv, verify_theorem)
from .models import (LinearModel, MlpModel, Prediction, fit_ols, input_gradient,
                     load_model, predict, save_model, sigmoid)
from .oracle import KnnOracle, LinearOracle, build_knn_oracle, oracle_query
from .training import (AdvTrainConfig, TrainConfig, accuracy, train,
                       train_adversarial)

__version__ = "0.1.0"

__all__ = [
    "AdvTrainConfig", "AggregateReport", "ConfigurationError", "ContractError",
    "CostFunction", "ExperimentReport", "FeatureSchema", "GeneratorConfig",
    "KnnOracle", "LabeledDataset", "LinearModel", "LinearOracle", "METHODS",
    "MlpModel", "NadvConfig", "NonadvError", "NumericalError", "ParseError",
    "PdiscParams", "Prediction", "RecourseOutput", "RetryTrace", "RunConfig",
    "StandardizeTransform", "SyntheticSpec", "TheoremReport", "TrainConfig",
    "accuracy", "aggregate", "analytical_recourse", "ar_discrete",
    "baseline_weights", "build_knn_oracle", "cw", "deepfool", "dice",
    "fit_ols", "flip_labels", "generate", "generate_synthetic",
    "gradient_coefficients", "input_gradient", "load_csv", "load_model",
    "nadv", "optimal_weights", "oracle_query", "p_disc", "parse_run_config",
    "parse_schema", "pgd", "predict", "preprocess", "retry_trace",
    "run_experiment", "save_model", "scfe", "sigmoid", "split_indices",
    "split_three_way", "subrng", "subseed", "train", "train_adversarial",
    "verify_theorem", "write_report", "write_schema",
]
