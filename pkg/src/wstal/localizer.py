"""Scikit-learn style facade over the two-stream training and detection."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .inference import DEFAULT_ATTENTION_THRESHOLDS, InferenceConfig, detect
from .model import LossWeights, attention, pool, video_probs
from .training import MODALITY_BRANCH, TrainConfig, TrainingVideo, train_stream
from .validation import check_features, check_label_set


class TwoStreamLocalizer(BaseEstimator):
    """Weakly-supervised temporal action localizer.

    ``fit`` takes per-video feature dicts and video-level label sets only
    (no interval annotations) and trains one attention/classification model
    per modality. ``predict`` returns scored interval detections per video.

    Parameters mirror the training and inference defaults: loss weights
    ``alpha`` (background), ``beta`` (attention guide), ``gamma``
    (clustering), ``sparsity`` (mean-L1 attention penalty, off by default),
    Gaussian target smoothing ``sigma``, and the detection thresholds.

    X is a sequence of ``{modality: (T, d) array}`` dicts; y is a sequence
    of iterables of integer class ids in 1..C (0 is reserved for the
    background and never appears as a label).
    """

    def __init__(
        self,
        epochs: int = 100,
        alpha: float = 0.1,
        beta: float = 0.1,
        gamma: float = 0.1,
        sparsity: float = 0.0,
        sigma: float = 2.0,
        hidden_dim: int = 256,
        lr: float = 1e-4,
        seed: int = 0,
        class_prob_threshold: float = 0.1,
        attention_thresholds: tuple | None = None,
        nms_iou: float = 0.5,
        theta: float = 0.5,
        segment_seconds: float = 1.0,
    ):
        self.epochs = epochs
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.sparsity = sparsity
        self.sigma = sigma
        self.hidden_dim = hidden_dim
        self.lr = lr
        self.seed = seed
        self.class_prob_threshold = class_prob_threshold
        self.attention_thresholds = attention_thresholds
        self.nms_iou = nms_iou
        self.theta = theta
        self.segment_seconds = segment_seconds

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            seed=self.seed,
            weights=LossWeights(alpha=self.alpha, beta=self.beta,
                                gamma=self.gamma, sparsity=self.sparsity),
            sigma=self.sigma,
            lr=self.lr,
            hidden_dim=self.hidden_dim,
        )

    def _inference_config(self) -> InferenceConfig:
        taus = self.attention_thresholds
        return InferenceConfig(
            class_prob_threshold=self.class_prob_threshold,
            attention_thresholds=DEFAULT_ATTENTION_THRESHOLDS if taus is None else taus,
            nms_iou=self.nms_iou,
            theta=self.theta,
            segment_seconds=self.segment_seconds,
        )

    def _check_videos(self, X) -> list[dict]:
        videos = []
        modalities = None
        for i, entry in enumerate(X):
            if not isinstance(entry, dict) or not entry:
                raise ValueError(f"X[{i}] must be a non-empty dict of modality arrays")
            keys = tuple(sorted(entry))
            if any(k not in MODALITY_BRANCH for k in keys):
                raise ValueError(f"X[{i}] has unknown modalities {keys}")
            if modalities is None:
                modalities = keys
            elif keys != modalities:
                raise ValueError(f"X[{i}] modalities {keys} differ from {modalities}")
            videos.append({k: check_features(v, name=f"X[{i}][{k!r}]")
                           for k, v in entry.items()})
        if not videos:
            raise ValueError("X is empty")
        return videos

    def fit(self, X, y):
        """Train one stream per modality from video-level labels."""
        videos = self._check_videos(X)
        if len(videos) != len(y):
            raise ValueError(f"X has {len(videos)} videos but y has {len(y)} label sets")
        n_classes = max(max(int(c) for c in labels) for labels in y)
        label_sets = [check_label_set(labels, n_classes) for labels in y]

        records = [
            TrainingVideo(video_id=f"video_{i:05d}", label_ids=label_sets[i],
                          features=videos[i])
            for i in range(len(videos))
        ]
        config = self._train_config()
        self.models_ = {}
        self.traces_ = {}
        for modality in sorted(videos[0]):
            model, _, trace = train_stream(records, modality, n_classes, config)
            self.models_[modality] = model
            self.traces_[modality] = trace
        self.n_classes_ = n_classes
        self.classes_ = np.arange(1, n_classes + 1)
        self.feature_dim_ = {m: model.feature_dim for m, model in self.models_.items()}
        return self

    def _check_fitted(self):
        if not hasattr(self, "models_"):
            raise NotFittedError("fit must be called before predict")

    def predict(self, X) -> list:
        """Detection lists (class, interval, score), one list per video."""
        self._check_fitted()
        videos = self._check_videos(X)
        config = self._inference_config()
        out = []
        for entry in videos:
            models = {m: self.models_[m] for m in entry}
            out.append(detect(models, entry, config))
        return out

    def predict_proba(self, X) -> np.ndarray:
        """Stream-averaged video-level class probabilities, (n_videos, C+1)."""
        self._check_fitted()
        videos = self._check_videos(X)
        rows = []
        for entry in videos:
            probs = []
            for modality in sorted(entry):
                model = self.models_[modality]
                lam = attention(model, entry[modality])
                probs.append(video_probs(model, pool(entry[modality], lam)))
            rows.append(np.mean(probs, axis=0))
        return np.asarray(rows)
