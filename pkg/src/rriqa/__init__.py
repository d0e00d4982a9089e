"""Reduced-reference color image quality assessment toolkit.

A compact statistical summary (48 scalars for the default six-band
configuration) is extracted from a reference color image; distorted
images are scored against it without access to the full reference, and
predictions can be validated against human opinion scores.
"""

from .color import ColorImage, ColorSpace, decode_image, load_image
from .errors import (
    ConfigurationError,
    ContractError,
    ConvergenceError,
    DatasetError,
    DecodeError,
    DegenerateFitError,
    DomainError,
    EstimationError,
    RriqaError,
)
from .metric import (
    DistanceKind,
    FeatureSet,
    QualityResult,
    decode_features,
    encode_features,
    extract_features,
    score,
)
from .mggd import MggdParams
from .pyramid import PyramidConfig, SubbandSet
from .validation import (
    EvalConfig,
    EvaluationReport,
    LabeledSample,
    LogisticFit,
    evaluate,
    fit_logistic,
    load_dataset,
    plcc,
    srcc,
)

__version__ = "0.1.0"

__all__ = [
    "ColorImage", "ColorSpace", "decode_image", "load_image",
    "RriqaError", "DomainError", "ConvergenceError", "ContractError",
    "ConfigurationError", "EstimationError", "DecodeError", "DatasetError",
    "DegenerateFitError",
    "DistanceKind", "FeatureSet", "QualityResult",
    "extract_features", "score", "encode_features", "decode_features",
    "MggdParams", "PyramidConfig", "SubbandSet",
    "EvalConfig", "EvaluationReport", "LabeledSample", "LogisticFit",
    "evaluate", "fit_logistic", "load_dataset", "plcc", "srcc",
]
