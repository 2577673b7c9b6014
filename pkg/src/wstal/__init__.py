"""Weakly-supervised temporal action localization.

Trains per-modality attention/classification models from video-level labels
only, detects action intervals by thresholding the fused attention, and
evaluates with mAP at temporal-IoU thresholds.
"""

__version__ = "0.1.0"

from .adam import AdamState, adam_apply, init_adam
from .inference import (
    DEFAULT_ATTENTION_THRESHOLDS,
    Detection,
    InferenceConfig,
    SegmentProposal,
    detect,
)
from .localizer import TwoStreamLocalizer
from .metrics import DEFAULT_IOU_THRESHOLDS, EvalResult, average_precision, evaluate, tiou
from .model import (
    ForwardCache,
    Gradients,
    LossReport,
    LossWeights,
    StreamModel,
    attention,
    attention_targets,
    backward,
    forward_loss,
    init_stream_model,
    pool,
    video_probs,
)
from .synthetic import SyntheticSpec, generate_synthetic
from .training import (
    TrainConfig,
    TrainingVideo,
    load_checkpoint,
    load_training_videos,
    save_checkpoint,
    train_stream,
)

__all__ = [
    "AdamState",
    "adam_apply",
    "init_adam",
    "DEFAULT_ATTENTION_THRESHOLDS",
    "DEFAULT_IOU_THRESHOLDS",
    "Detection",
    "InferenceConfig",
    "SegmentProposal",
    "detect",
    "TwoStreamLocalizer",
    "EvalResult",
    "average_precision",
    "evaluate",
    "tiou",
    "ForwardCache",
    "Gradients",
    "LossReport",
    "LossWeights",
    "StreamModel",
    "attention",
    "attention_targets",
    "backward",
    "forward_loss",
    "init_stream_model",
    "pool",
    "video_probs",
    "SyntheticSpec",
    "generate_synthetic",
    "TrainConfig",
    "TrainingVideo",
    "load_checkpoint",
    "load_training_videos",
    "save_checkpoint",
    "train_stream",
]
