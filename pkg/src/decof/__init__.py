"""Generated-video detection from the temporal consistency of frozen
image-encoder features."""

__version__ = "0.1.0"

from .features import FeatureSequence
from .verifier import (
    GENERATED,
    REAL,
    VerifierConfig,
    VerifierParams,
    init_params,
    predict,
    softmax_cross_entropy,
    verifier_backward,
    verifier_forward,
)
from .training import TrainConfig, sgd_momentum_step, train_verifier
from .gradcheck import finite_difference_grad
from .metrics import ScoredItem, accuracy, aggregate_frames, average_precision

__all__ = [
    "FeatureSequence",
    "GENERATED",
    "REAL",
    "ScoredItem",
    "TrainConfig",
    "VerifierConfig",
    "VerifierParams",
    "accuracy",
    "aggregate_frames",
    "average_precision",
    "finite_difference_grad",
    "init_params",
    "predict",
    "sgd_momentum_step",
    "softmax_cross_entropy",
    "train_verifier",
    "verifier_backward",
    "verifier_forward",
]
