"""Training orchestration: one video per step, one independent model per stream.

Checkpoint layout (all little-endian): magic ``WSAL``, uint32 format version,
uint32 d, h, C, the parameter tensors as float64 in declared order (w1, b1,
w2, b2, classifier, u_fg, u_bg), then the Adam state: uint64 step count,
float64 lr/beta1/beta2/epsilon, first-moment tensors, second-moment tensors.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adam import AdamState, adam_apply, init_adam
from .data import load_features
from .model import (
    PARAM_FIELDS,
    Gradients,
    LossWeights,
    StreamModel,
    backward,
    forward_loss,
    init_stream_model,
)
from .numerics import seed_sequence

CHECKPOINT_MAGIC = b"WSAL"
CHECKPOINT_VERSION = 1
MODALITY_BRANCH = {"rgb": 0, "flow": 1}

TRACE_COLUMNS = ("epoch", "l_fg", "l_bg", "l_guide", "l_cluster", "l_sparse", "total")


class TrainingError(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    sigma: float = 2.0
    lr: float = 1e-4
    hidden_dim: int = 256
    checkpoint_every: int = 0  # 0 = final checkpoint only

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")


@dataclass(frozen=True)
class TrainingVideo:
    """In-memory view of one video: id, label ids, per-modality features."""

    video_id: str
    label_ids: tuple[int, ...]
    features: dict


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    fg: float
    bg: float
    guide: float
    cluster: float
    sparsity: float
    total: float


def load_training_videos(dataset, modalities=("rgb", "flow")) -> list[TrainingVideo]:
    """Materialize manifest videos into memory for repeated epochs."""
    videos = []
    for rec in dataset.videos:
        feats = {}
        for modality in modalities:
            if modality not in rec.feature_paths:
                raise TrainingError(
                    f"video {rec.video_id} has no features for modality {modality!r}"
                )
            feats[modality] = load_features(rec.feature_paths[modality])
        videos.append(TrainingVideo(rec.video_id, rec.label_ids, feats))
    return videos


def train_stream(
    videos: list[TrainingVideo],
    modality: str,
    num_classes: int,
    config: TrainConfig,
    checkpoint_dir=None,
) -> tuple[StreamModel, AdamState, list[EpochStats]]:
    """Train one modality stream; deterministic given the config seed.

    Video order is reshuffled every epoch from a seeded generator derived
    from (seed, modality), so the two streams can train independently, in
    any order, and still reproduce bit-identically.
    """
    config.validate()
    if modality not in MODALITY_BRANCH:
        raise TrainingError(f"unknown modality {modality!r}, expected one of {sorted(MODALITY_BRANCH)}")
    if not videos:
        raise TrainingError("no training videos")
    for v in videos:
        if modality not in v.features:
            raise TrainingError(f"video {v.video_id} has no features for modality {modality!r}")

    feature_dim = videos[0].features[modality].shape[1]
    for v in videos:
        if v.features[modality].shape[1] != feature_dim:
            raise TrainingError(
                f"video {v.video_id} feature dim {v.features[modality].shape[1]} "
                f"differs from {feature_dim}"
            )

    branch = MODALITY_BRANCH[modality]
    init_rng = np.random.default_rng(seed_sequence(config.seed, branch, 0))
    shuffle_rng = np.random.default_rng(seed_sequence(config.seed, branch, 1))

    model = init_stream_model(feature_dim, num_classes, config.hidden_dim, init_rng)
    state = init_adam(model, lr=config.lr)

    trace: list[EpochStats] = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(videos))
        sums = np.zeros(6)
        for idx in order:
            video = videos[idx]
            report, cache = forward_loss(
                model, video.features[modality], video.label_ids,
                config.weights, config.sigma,
            )
            if not np.isfinite(report.total):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} on video {video.video_id} "
                    f"({modality} stream): {report}"
                )
            grads = backward(model, video.features[modality], video.label_ids,
                             config.weights, cache)
            adam_apply(state, model, grads)
            sums += (report.fg, report.bg, report.guide, report.cluster,
                     report.sparsity, report.total)
        means = sums / len(videos)
        trace.append(EpochStats(epoch, *(float(v) for v in means)))
        if checkpoint_dir and config.checkpoint_every and epoch % config.checkpoint_every == 0:
            save_checkpoint(Path(checkpoint_dir) / f"{modality}_epoch{epoch:05d}.ckpt",
                            model, state)
    return model, state, trace


def write_trace_csv(path, trace: list[EpochStats]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace:
            writer.writerow([row.epoch, repr(row.fg), repr(row.bg), repr(row.guide),
                             repr(row.cluster), repr(row.sparsity), repr(row.total)])


def save_checkpoint(path, model: StreamModel, state: AdamState) -> None:
    d, h, c = model.feature_dim, model.hidden_dim, model.num_classes
    parts = [CHECKPOINT_MAGIC, struct.pack("<IIII", CHECKPOINT_VERSION, d, h, c)]
    for p in model.params():
        parts.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    parts.append(struct.pack("<Qdddd", state.step_count, state.lr,
                             state.beta1, state.beta2, state.epsilon))
    for grads in (state.m, state.v):
        for p in grads.params():
            parts.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def _param_shapes(d: int, h: int, c: int):
    return {
        "w1": (h, d), "b1": (h,), "w2": (h,), "b2": (1,),
        "classifier": (c + 1, d), "u_fg": (d,), "u_bg": (d,),
    }


def load_checkpoint(path, expected_dim: int | None = None) -> tuple[StreamModel, AdamState]:
    """Read a checkpoint; ``load(save(m))`` is bit-identical to ``m``."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(
            f"{path}: bad checkpoint magic {raw[:4]!r}, expected {CHECKPOINT_MAGIC!r}"
        )
    if len(raw) < 20:
        raise CheckpointError(f"{path}: truncated checkpoint header")
    version, d, h, c = struct.unpack_from("<IIII", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )
    if expected_dim is not None and d != expected_dim:
        raise CheckpointError(
            f"{path}: checkpoint feature dim {d} does not match expected dim {expected_dim}"
        )
    shapes = _param_shapes(d, h, c)
    n_params = sum(int(np.prod(s)) for s in shapes.values())
    expected = 20 + 8 * n_params + 40 + 16 * n_params
    if len(raw) != expected:
        raise CheckpointError(f"{path}: expected {expected} bytes, got {len(raw)}")

    offset = 20

    def take() -> dict:
        nonlocal offset
        arrays = {}
        for name in PARAM_FIELDS:
            shape = shapes[name]
            count = int(np.prod(shape))
            arrays[name] = (
                np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
                .astype(np.float64).reshape(shape)
            )
            offset += 8 * count
        return arrays

    model = StreamModel(**take())
    step_count, lr, beta1, beta2, epsilon = struct.unpack_from("<Qdddd", raw, offset)
    offset += 40
    m = Gradients(**take())
    v = Gradients(**take())
    for p in (*model.params(), *m.params(), *v.params()):
        if not np.all(np.isfinite(p)):
            raise CheckpointError(f"{path}: checkpoint contains non-finite values")
    state = AdamState(m=m, v=v, step_count=step_count, lr=lr,
                      beta1=beta1, beta2=beta2, epsilon=epsilon)
    return model, state
