"""Competing dilated shapelet transform for time series classification."""

from .classifier import RidgeModel, fit_classifier, fit_scaler, loocv_errors
from .dataset import LabeledDataset, from_tokens, load_ucr_tsv, stratified_kfold, write_ucr_tsv
from .errors import ConfigError, CastorError, DataError, NumericError
from .io import export_json, load_model, save_model
from .params import CastorConfig, CastorParams, ShapeletBank, fit_params, num_exponents
from .pipeline import CastorClassifier, RunReport, ablate, bench, evaluate
from .profile import DilatedShapelet, distance_profile, extract_dilated_subsequence
from .synthetic import generate_synthetic, make_synthetic
from .transform import FeatureMatrix, transform

__version__ = "0.1.0"

__all__ = [
    "CastorClassifier",
    "CastorConfig",
    "CastorError",
    "CastorParams",
    "ConfigError",
    "DataError",
    "DilatedShapelet",
    "FeatureMatrix",
    "LabeledDataset",
    "NumericError",
    "RidgeModel",
    "RunReport",
    "ShapeletBank",
    "ablate",
    "bench",
    "distance_profile",
    "evaluate",
    "export_json",
    "extract_dilated_subsequence",
    "fit_classifier",
    "fit_params",
    "fit_scaler",
    "from_tokens",
    "generate_synthetic",
    "load_model",
    "load_ucr_tsv",
    "loocv_errors",
    "make_synthetic",
    "num_exponents",
    "save_model",
    "stratified_kfold",
    "transform",
    "write_ucr_tsv",
]
