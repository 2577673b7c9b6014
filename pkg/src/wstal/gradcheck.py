"""Central finite-difference verification of the analytic gradients.

The checker perturbs every parameter coordinate of randomly drawn small
models/videos and compares (f(p+eps) - f(p-eps)) / (2 eps) against
``backward``. The guide targets are computed once per instance and held
fixed during perturbation, matching their constant treatment in the
analytic gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    PARAM_FIELDS,
    Gradients,
    LossWeights,
    StreamModel,
    attention_targets,
    backward,
    forward_loss,
    init_stream_model,
    zeros_like_model,
)
from .numerics import make_rng

DEFAULT_WEIGHTS = LossWeights(alpha=0.1, beta=0.1, gamma=0.1, sparsity=0.05)


@dataclass(frozen=True)
class TrialResult:
    trial: int
    max_rel_error: float
    worst_param: str


def random_instance(rng: np.random.Generator, max_segments=16, max_dim=8,
                    max_classes=4, max_hidden=6):
    """Draw a small random model, feature sequence, and label set."""
    n_segments = int(rng.integers(2, max_segments + 1))
    dim = int(rng.integers(2, max_dim + 1))
    n_classes = int(rng.integers(1, max_classes + 1))
    hidden = int(rng.integers(2, max_hidden + 1))
    model = init_stream_model(dim, n_classes, hidden, rng, scale=0.5)
    features = rng.standard_normal((n_segments, dim))
    n_labels = int(rng.integers(1, n_classes + 1))
    labels = tuple(sorted(1 + rng.choice(n_classes, size=n_labels, replace=False)))
    return model, features, labels


def finite_difference_gradients(
    model: StreamModel,
    features: np.ndarray,
    labels,
    weights: LossWeights,
    sigma: float,
    eps: float = 1e-5,
) -> Gradients:
    targets = attention_targets(model, features, labels, sigma)
    grads = zeros_like_model(model)
    for name in PARAM_FIELDS:
        param = getattr(model, name)
        grad = getattr(grads, name)
        flat_p = param.reshape(-1)
        flat_g = grad.reshape(-1)
        for i in range(flat_p.shape[0]):
            original = flat_p[i]
            flat_p[i] = original + eps
            hi, _ = forward_loss(model, features, labels, weights, sigma,
                                 guide_targets=targets)
            flat_p[i] = original - eps
            lo, _ = forward_loss(model, features, labels, weights, sigma,
                                 guide_targets=targets)
            flat_p[i] = original
            flat_g[i] = (hi.total - lo.total) / (2.0 * eps)
    return grads


def max_relative_error(analytic: Gradients, numeric: Gradients,
                       floor: float = 1e-8) -> tuple[float, str]:
    """Max of |a - n| / (|a| + |n|), skipping coordinates below the floor."""
    worst = 0.0
    worst_name = "none"
    for name in PARAM_FIELDS:
        a = getattr(analytic, name).reshape(-1)
        n = getattr(numeric, name).reshape(-1)
        scale = np.abs(a) + np.abs(n)
        keep = scale >= floor
        if not np.any(keep):
            continue
        rel = np.abs(a[keep] - n[keep]) / scale[keep]
        local = float(rel.max())
        if local > worst:
            worst = local
            worst_name = name
    return worst, worst_name


def run_gradient_check(
    seed: int = 0,
    trials: int = 20,
    weights: LossWeights = DEFAULT_WEIGHTS,
    sigma: float = 2.0,
    eps: float = 1e-5,
    tolerance: float = 1e-5,
    inject_error: float = 0.0,
) -> tuple[list[TrialResult], bool]:
    """Run the suite; returns per-trial results and the overall pass flag.

    ``inject_error`` adds a constant to one analytic gradient coordinate, a
    hook for verifying that the checker actually fails on wrong gradients.
    """
    results = []
    for trial in range(trials):
        rng = make_rng(seed, trial)
        model, features, labels = random_instance(rng)
        targets = attention_targets(model, features, labels, sigma)
        _, cache = forward_loss(model, features, labels, weights, sigma,
                                guide_targets=targets)
        analytic = backward(model, features, labels, weights, cache)
        if inject_error:
            analytic.w1.reshape(-1)[0] += inject_error
        numeric = finite_difference_gradients(model, features, labels, weights,
                                              sigma, eps=eps)
        err, worst = max_relative_error(analytic, numeric)
        results.append(TrialResult(trial=trial, max_rel_error=err, worst_param=worst))
    passed = all(r.max_rel_error <= tolerance for r in results)
    return results, passed
