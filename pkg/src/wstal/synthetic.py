"""Synthetic benchmark generator: planted foreground blocks in noise.

Every video is background frames drawn around a background cluster center
with 1-2 action classes planted as non-overlapping blocks drawn around the
class centers. Centers are fixed random unit directions scaled by a
separation factor; each modality gets its own centers and its own noise, so
the two streams carry independent evidence. Output is fully determined by
the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import save_manifest, save_segments_json, write_features
from .numerics import seed_sequence

MODALITIES = ("rgb", "flow")

# Blocks are separated by at least this many background segments so planted
# intervals never merge into one attention run.
MIN_GAP = 4


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 5
    feature_dim: int = 32
    train_videos: int = 40
    test_videos: int = 10
    min_segments: int = 60
    max_segments: int = 90
    min_blocks: int = 1
    max_blocks: int = 2
    min_block_len: int = 8
    max_block_len: int = 16
    separation: float = 5.0
    noise: float = 1.0
    segment_seconds: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.num_classes < 1 or self.feature_dim < 1:
            raise ValueError("num_classes and feature_dim must be >= 1")
        if self.train_videos < 1 or self.test_videos < 0:
            raise ValueError("need at least one training video")
        if not (1 <= self.min_blocks <= self.max_blocks):
            raise ValueError("block count range invalid")
        if not (1 <= self.min_block_len <= self.max_block_len):
            raise ValueError("block length range invalid")
        if not (1 <= self.min_segments <= self.max_segments):
            raise ValueError("segment count range invalid")
        if self.separation <= 0:
            raise ValueError("separation must be > 0")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if self.segment_seconds <= 0:
            raise ValueError("segment_seconds must be > 0")
        # Keep >= 20% of every video background, with gaps between blocks.
        worst = (self.max_blocks * self.max_block_len
                 + MIN_GAP * (self.max_blocks - 1))
        budget = int(0.8 * self.min_segments)
        if worst > budget:
            raise ValueError(
                f"foreground blocks exceed the video budget: up to {worst} segments "
                f"of blocks but only {budget} available in a {self.min_segments}-segment "
                "video with 20% background reserved"
            )


@dataclass(frozen=True)
class SyntheticDataset:
    out_dir: Path
    train_manifest: Path
    test_manifest: Path
    ground_truth: Path  # test videos
    train_ground_truth: Path


def _cluster_centers(spec: SyntheticSpec, rng: np.random.Generator) -> dict:
    centers = {}
    for modality in MODALITIES:
        dirs = rng.standard_normal((spec.num_classes + 1, spec.feature_dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        centers[modality] = spec.separation * dirs  # row 0 = background
    return centers


def _plant_blocks(spec: SyntheticSpec, rng: np.random.Generator):
    """Pick segment count, classes, and non-overlapping block intervals."""
    n_segments = int(rng.integers(spec.min_segments, spec.max_segments + 1))
    n_blocks = int(rng.integers(spec.min_blocks, spec.max_blocks + 1))
    lengths = rng.integers(spec.min_block_len, spec.max_block_len + 1, size=n_blocks)

    n_classes_here = int(rng.integers(1, min(2, n_blocks) + 1))
    chosen = 1 + rng.choice(spec.num_classes, size=n_classes_here, replace=False)
    # Every chosen class gets at least one block.
    assignment = list(chosen) + [int(rng.choice(chosen)) for _ in range(n_blocks - n_classes_here)]
    assignment = [assignment[i] for i in rng.permutation(n_blocks)]

    # Distribute the free segments among the n_blocks + 1 gaps (inner gaps
    # keep a minimum width).
    free = n_segments - int(lengths.sum()) - MIN_GAP * (n_blocks - 1)
    gaps = rng.multinomial(free, np.full(n_blocks + 1, 1.0 / (n_blocks + 1)))
    blocks = []
    cursor = 0
    for i in range(n_blocks):
        cursor += int(gaps[i]) + (MIN_GAP if i > 0 else 0)
        start = cursor
        end = start + int(lengths[i]) - 1
        blocks.append((start, end, int(assignment[i])))
        cursor = end + 1
    return n_segments, blocks, sorted(set(int(c) for c in chosen))


def generate_synthetic(spec: SyntheticSpec, out_dir) -> SyntheticDataset:
    """Write manifests, WSF1 features, and ground truth under ``out_dir``."""
    spec.validate()
    out_dir = Path(out_dir)
    feature_dir = out_dir / "features"
    feature_dir.mkdir(parents=True, exist_ok=True)

    centers = _cluster_centers(spec, np.random.default_rng(seed_sequence(spec.seed, 0)))
    class_names = [f"action_{c:02d}" for c in range(1, spec.num_classes + 1)]

    paths = {}
    for split_idx, (split, count) in enumerate((("train", spec.train_videos),
                                                ("test", spec.test_videos))):
        rng = np.random.default_rng(seed_sequence(spec.seed, 1 + split_idx))
        entries = []
        truth = {}
        for v in range(count):
            vid = f"{split}_{v:03d}"
            n_segments, blocks, label_ids = _plant_blocks(spec, rng)
            frame_class = np.zeros(n_segments, dtype=int)
            for start, end, cls in blocks:
                frame_class[start:end + 1] = cls

            feature_files = {}
            for modality in MODALITIES:
                base = centers[modality][frame_class]
                feats = base + spec.noise * rng.standard_normal((n_segments, spec.feature_dim))
                rel = f"features/{vid}_{modality}.wsf1"
                write_features(out_dir / rel, feats)
                feature_files[modality] = rel

            entries.append({
                "id": vid,
                "labels": [class_names[c - 1] for c in label_ids],
                "features": feature_files,
                "segment_seconds": spec.segment_seconds,
            })
            truth[vid] = [
                {
                    "label": class_names[cls - 1],
                    "segment": [start * spec.segment_seconds,
                                (end + 1) * spec.segment_seconds],
                }
                for start, end, cls in blocks
            ]
        manifest_path = out_dir / f"{split}_manifest.json"
        save_manifest(manifest_path, class_names, entries)
        truth_path = out_dir / ("ground_truth.json" if split == "test"
                                else "train_ground_truth.json")
        save_segments_json(truth_path, truth)
        paths[split] = (manifest_path, truth_path)

    return SyntheticDataset(
        out_dir=out_dir,
        train_manifest=paths["train"][0],
        test_manifest=paths["test"][0],
        ground_truth=paths["test"][1],
        train_ground_truth=paths["train"][1],
    )
