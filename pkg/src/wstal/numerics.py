"""Small dense-math toolkit shared by the rest of the package.

Everything here is pure, 64-bit, and deterministic: identical inputs give
bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product with an explicit dimension check."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix is {m.shape[0]}x{m.shape[1]}, "
            f"vector has length {v.shape[0] if v.ndim == 1 else v.shape}"
        )
    return m @ v


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shift-invariant softmax along `axis`."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def sigmoid(x):
    """Numerically stable logistic function; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    e = np.exp(arr[~pos])
    out[~pos] = e / (1.0 + e)
    return float(out) if out.ndim == 0 else out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class GaussianKernel:
    """Truncated, renormalized Gaussian in units of segment indices.

    ``sigma == 0`` degenerates to the identity kernel (radius 0, weight 1),
    which turns :func:`smooth` into a passthrough.
    """

    sigma: float
    radius: int
    weights: np.ndarray


def gaussian_kernel(sigma: float) -> GaussianKernel:
    """Build a kernel truncated at radius ceil(3*sigma), renormalized to sum 1."""
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError(f"sigma must be finite and >= 0, got {sigma}")
    if sigma == 0:
        return GaussianKernel(sigma=0.0, radius=0, weights=np.array([1.0]))
    radius = int(np.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-0.5 * (offsets / sigma) ** 2)
    weights /= weights.sum()
    return GaussianKernel(sigma=float(sigma), radius=radius, weights=weights)


def _reflect_indices(length: int, radius: int) -> np.ndarray:
    # Mirror padding about the boundary samples (edge value not repeated):
    # [a b c d] padded by 2 on the left reads [c b | a b c d].
    idx = np.arange(-radius, length + radius)
    if length == 1:
        return np.zeros_like(idx)
    period = 2 * (length - 1)
    idx = np.mod(idx, period)
    return np.where(idx >= length, period - idx, idx)


def smooth(signal: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    """1-d convolution with reflect padding; preserves constant signals exactly."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.shape[0] == 0:
        raise ValueError(f"expected a non-empty 1-d signal, got shape {signal.shape}")
    if kernel.radius == 0:
        return signal.copy()
    padded = signal[_reflect_indices(signal.shape[0], kernel.radius)]
    return np.convolve(padded, kernel.weights, mode="valid")


def seed_sequence(seed: int, *branch: int) -> np.random.SeedSequence:
    """Splittable seeding: one root seed, deterministic integer branch keys."""
    return np.random.SeedSequence([int(seed), *map(int, branch)])


def make_rng(seed: int, *branch: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *branch))
