"""Low-cost driving-style recognition toolkit.

Sensor ingestion and fusion, a calibrated synthetic drive simulator, a small
feedforward neural classifier, nonparametric statistics, an experiment
harness, and a streaming alert engine, all sharing one register data model.
"""

from .records import (
    ACC7,
    ClassScheme,
    Dataset,
    DrivingStyle,
    FeatureSet,
    FEATURE_SETS,
    FULL10,
    GYRO4,
    GYRO7,
    NormalizationStats,
    Register,
    apply_normalization,
    apply_scheme,
    extract_features,
    fit_normalization,
    validate_register,
)

__version__ = "0.1.0"

__all__ = [
    "ACC7",
    "ClassScheme",
    "Dataset",
    "DrivingStyle",
    "FeatureSet",
    "FEATURE_SETS",
    "FULL10",
    "GYRO4",
    "GYRO7",
    "NormalizationStats",
    "Register",
    "apply_normalization",
    "apply_scheme",
    "extract_features",
    "fit_normalization",
    "validate_register",
    "__version__",
]
