"""Dataset manifests, the WSF1 binary feature format, and JSON file I/O.

WSF1 layout (all little-endian): magic ``WSF1``, T as uint32, d as uint32,
then T*d float32 values row-major. A valid file is exactly 12 + 4*T*d bytes.

Manifest JSON::

    {
      "classes": ["name1", ...],            # ids 1..C in order; 0 = background
      "videos": [
        {"id": "...", "labels": ["name1"],
         "features": {"rgb": "rel/path.wsf1", "flow": "rel/path.wsf1"},
         "segment_seconds": 1.0},
        ...
      ]
    }

Ground-truth JSON maps video id to a list of ``{"label", "segment": [start_sec,
end_sec]}``; detection JSON adds a ``"score"`` field per entry.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FEATURE_MAGIC = b"WSF1"
_HEADER = struct.Struct("<4sII")


class FeatureFileError(ValueError):
    """Base for malformed feature files."""


class BadMagicError(FeatureFileError):
    pass


class TruncatedFileError(FeatureFileError):
    pass


class NonFiniteValueError(FeatureFileError):
    pass


class EmptySequenceError(FeatureFileError):
    pass


class ManifestError(ValueError):
    pass


def write_features(path, features) -> None:
    """Write a (T, d) array as a WSF1 file (values stored as float32)."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise EmptySequenceError(f"features must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError("refusing to write non-finite feature values")
    payload = arr.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, arr.shape[0], arr.shape[1]))
        fh.write(payload)


def load_features(path) -> np.ndarray:
    """Read a WSF1 file into a (T, d) float64 array."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFileError(
            f"{path}: file too short for header, expected >= {_HEADER.size} bytes, got {len(raw)}"
        )
    magic, n_segments, dim = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if n_segments == 0 or dim == 0:
        raise EmptySequenceError(f"{path}: empty feature sequence (T={n_segments}, d={dim})")
    expected = _HEADER.size + 4 * n_segments * dim
    if len(raw) != expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, got {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(f"{path}: feature values contain NaN or Inf")
    return values.astype(np.float64).reshape(n_segments, dim)


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    label_names: tuple[str, ...]
    label_ids: tuple[int, ...]
    feature_paths: dict
    segment_seconds: float


@dataclass(frozen=True)
class Dataset:
    class_names: tuple[str, ...]  # index i holds the name of class id i+1
    videos: tuple[VideoRecord, ...]
    root: Path

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def class_id(self, name: str) -> int:
        return self.class_names.index(name) + 1


def load_manifest(path) -> Dataset:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot read manifest: {exc}") from exc
    classes = doc.get("classes")
    if not isinstance(classes, list) or not classes:
        raise ManifestError(f"{path}: manifest needs a non-empty 'classes' list")
    if len(set(classes)) != len(classes):
        raise ManifestError(f"{path}: duplicate class names")
    name_to_id = {name: i + 1 for i, name in enumerate(classes)}

    videos = []
    seen_ids = set()
    for entry in doc.get("videos", []):
        vid = entry.get("id")
        if not vid or vid in seen_ids:
            raise ManifestError(f"{path}: missing or duplicate video id {vid!r}")
        seen_ids.add(vid)
        labels = entry.get("labels") or []
        if not labels:
            raise ManifestError(f"{path}: video {vid} has no labels")
        for name in labels:
            if name not in name_to_id:
                raise ManifestError(f"{path}: video {vid} label {name!r} not in class list")
        seconds = float(entry.get("segment_seconds", 1.0))
        if seconds <= 0:
            raise ManifestError(f"{path}: video {vid} segment_seconds must be > 0")
        feature_paths = {}
        for modality, rel in (entry.get("features") or {}).items():
            fpath = path.parent / rel
            if not fpath.exists():
                raise ManifestError(f"{path}: video {vid} feature file missing: {fpath}")
            feature_paths[modality] = fpath
        if not feature_paths:
            raise ManifestError(f"{path}: video {vid} lists no feature files")
        videos.append(VideoRecord(
            video_id=vid,
            label_names=tuple(labels),
            label_ids=tuple(sorted(name_to_id[n] for n in labels)),
            feature_paths=feature_paths,
            segment_seconds=seconds,
        ))
    return Dataset(class_names=tuple(classes), videos=tuple(videos), root=path.parent)


def save_manifest(path, class_names, video_entries) -> None:
    """Write a manifest; ``video_entries`` are plain dicts in the schema above."""
    doc = {"classes": list(class_names), "videos": list(video_entries)}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_segments_json(path) -> dict:
    """Read a ground-truth or detection JSON into {video_id: [entry, ...]}."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: expected a JSON object keyed by video id")
    for vid, entries in doc.items():
        for entry in entries:
            seg = entry.get("segment")
            if (
                "label" not in entry
                or not isinstance(seg, list)
                or len(seg) != 2
                or not float(seg[0]) < float(seg[1])
            ):
                raise ManifestError(
                    f"{path}: video {vid}: entries need a label and an increasing "
                    f"[start_sec, end_sec] segment, got {entry!r}"
                )
    return doc


def save_segments_json(path, by_video: dict) -> None:
    Path(path).write_text(json.dumps(by_video, indent=2, sort_keys=True) + "\n")
