"""Membership-inference auditing of machine unlearning."""

from .attackfeat import Defense, FeatureMethod
from .data import EncodedDataset, SubsetHandle
from .experiment import ExperimentConfig, ResultRecord, run_experiment
from .learners import HyperParams, ModelKind
from .metrics import MetricsReport

__version__ = "0.1.0"

__all__ = [
    "Defense", "FeatureMethod", "EncodedDataset", "SubsetHandle",
    "ExperimentConfig", "ResultRecord", "run_experiment",
    "HyperParams", "ModelKind", "MetricsReport",
]
