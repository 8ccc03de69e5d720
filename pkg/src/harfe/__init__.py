"""Sparse additive random-feature regression by hard-thresholding pursuit."""

from .data import Dataset, Normalizer, load_csv, mse, rel_error, split
from .diagnostics import coherence, convergence_fit, kappa_1s, rip_constant_bruteforce
from .features import FeatureMap, SparseRandomFeatures, evaluate_features, sample_feature_map
from .model import HARFERegressor, HarfeModel, load_model, predict, save_model, variable_importance
from .solver import (FitReport, SolverConfig, SparseCoefficients, gradient_step, hard_threshold, harfe_fit,
                     ridge_restricted_solve)
from .synthetic import SyntheticSpec, evaluate_target, generate_dataset

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FeatureMap",
    "FitReport",
    "HARFERegressor",
    "HarfeModel",
    "Normalizer",
    "SolverConfig",
    "SparseCoefficients",
    "SparseRandomFeatures",
    "SyntheticSpec",
    "coherence",
    "convergence_fit",
    "evaluate_features",
    "evaluate_target",
    "generate_dataset",
    "gradient_step",
    "hard_threshold",
    "harfe_fit",
    "kappa_1s",
    "load_csv",
    "load_model",
    "mse",
    "predict",
    "rel_error",
    "ridge_restricted_solve",
    "rip_constant_bruteforce",
    "sample_feature_map",
    "save_model",
    "split",
    "variable_importance",
]
