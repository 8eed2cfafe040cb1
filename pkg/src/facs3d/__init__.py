"""3D facial action unit recognition from landmark distance features."""

from .au_rules import RuleConfig, label_dataset, label_record, property_satisfied
from .evaluation import evaluate_mlp, evaluate_svm, kfold_split, render_report
from .features import (
    AUS,
    DEFAULT_PROPERTIES,
    Direction,
    DistanceProperty,
    FeatureRecord,
    displacement_features,
    euclidean_distance,
    extract_dataset,
    frame_distances,
)
from .landmark_io import (
    LandmarkFormatError,
    LandmarkFrame,
    LandmarkSequence,
    Point3,
    parse_sequence,
    select_points,
    serialize_sequence,
)
from .mlp import MlpConfig, MlpModel, train_mlp
from .svm import KernelSpec, SvmModel, kernel_eval, predict_svm, train_svm
from .synthgen import GenConfig, generate_dataset, generate_sequence, neutral_template

__version__ = "0.1.0"

__all__ = [
    "RuleConfig",
    "label_dataset",
    "label_record",
    "property_satisfied",
    "evaluate_mlp",
    "evaluate_svm",
    "kfold_split",
    "render_report",
    "AUS",
    "DEFAULT_PROPERTIES",
    "Direction",
    "DistanceProperty",
    "FeatureRecord",
    "displacement_features",
    "euclidean_distance",
    "extract_dataset",
    "frame_distances",
    "LandmarkFormatError",
    "LandmarkFrame",
    "LandmarkSequence",
    "Point3",
    "parse_sequence",
    "select_points",
    "serialize_sequence",
    "MlpConfig",
    "MlpModel",
    "train_mlp",
    "KernelSpec",
    "SvmModel",
    "kernel_eval",
    "predict_svm",
    "train_svm",
    "GenConfig",
    "generate_dataset",
    "generate_sequence",
    "neutral_template",
]
