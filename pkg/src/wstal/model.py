"""One modality's learnable model and its training losses.

The model has three parts sharing a frame feature space of dimension d:

* a two-layer attention MLP (hidden ReLU, sigmoid output) producing a
  per-segment foreground weight ``lambda_t`` in [0, 1];
* a bias-free (C+1)-way linear classifier whose row 0 scores the background
  class, applied to attention-pooled video features and, per frame, to
  produce temporal class activations;
* a pair of direction vectors (u_fg, u_bg) whose two-way softmax separates
  the foreground-pooled feature from the background-pooled one.

Training combines four weighted losses per video (foreground cross-entropy,
background cross-entropy, a self-guided L1 pull of the attention toward
smoothed frame-level class activations, the fg/bg clustering loss) plus an
optional mean-L1 attention sparsity penalty. ``backward`` returns exact
analytic gradients of the weighted total for every parameter; the guide
targets are treated as constants, so no gradient flows into the classifier
through them.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .numerics import gaussian_kernel, relu, sigmoid, smooth, softmax
from .validation import check_features, check_label_set, check_vector

PARAM_FIELDS = ("w1", "b1", "w2", "b2", "classifier", "u_fg", "u_bg")


@dataclass
class StreamModel:
    """All learnable parameters for one modality stream."""

    w1: np.ndarray  # (h, d) attention hidden layer
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h,) attention output layer
    b2: np.ndarray  # (1,)
    classifier: np.ndarray  # (C+1, d); row 0 scores background, no bias
    u_fg: np.ndarray  # (d,)
    u_bg: np.ndarray  # (d,)

    @property
    def feature_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def num_classes(self) -> int:
        return self.classifier.shape[0] - 1

    def params(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in PARAM_FIELDS)

    def copy(self) -> "StreamModel":
        return StreamModel(*(p.copy() for p in self.params()))


def init_stream_model(
    feature_dim: int,
    num_classes: int,
    hidden_dim: int,
    rng: np.random.Generator,
    scale: float = 0.01,
) -> StreamModel:
    """Zero-mean normal init for weight matrices and the cluster directions.

    Biases start at zero. u_fg and u_bg are drawn rather than zeroed because
    identical cluster directions sit at a saddle of the clustering loss.
    """
    if feature_dim < 1 or num_classes < 1 or hidden_dim < 1:
        raise ValueError("feature_dim, num_classes and hidden_dim must be >= 1")
    return StreamModel(
        w1=scale * rng.standard_normal((hidden_dim, feature_dim)),
        b1=np.zeros(hidden_dim),
        w2=scale * rng.standard_normal(hidden_dim),
        b2=np.zeros(1),
        classifier=scale * rng.standard_normal((num_classes + 1, feature_dim)),
        u_fg=scale * rng.standard_normal(feature_dim),
        u_bg=scale * rng.standard_normal(feature_dim),
    )


@dataclass
class Gradients:
    """Gradient arrays, one per StreamModel parameter, same shapes."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    classifier: np.ndarray
    u_fg: np.ndarray
    u_bg: np.ndarray

    def params(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in PARAM_FIELDS)


def zeros_like_model(model: StreamModel) -> Gradients:
    return Gradients(*(np.zeros_like(p) for p in model.params()))


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights of the secondary loss terms.

    ``sparsity`` defaults to 0; it exists to reproduce the mean-L1 attention
    penalty used by earlier attention-pooling systems and its failure mode.
    """

    alpha: float = 0.1
    beta: float = 0.1
    gamma: float = 0.1
    sparsity: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"loss weight {f.name} must be finite and >= 0, got {v}")


@dataclass
class LossReport:
    fg: float
    bg: float
    guide: float
    cluster: float
    sparsity: float
    total: float


@dataclass
class ForwardCache:
    """Every intermediate the backward pass needs."""

    features: np.ndarray  # (T, d)
    labels: tuple[int, ...]
    pre_hidden: np.ndarray  # (T, h) before ReLU
    hidden: np.ndarray  # (T, h)
    lam: np.ndarray  # (T,)
    x_fg: np.ndarray  # (d,)
    x_bg: np.ndarray  # (d,)
    p_fg: np.ndarray  # (C+1,)
    p_bg: np.ndarray  # (C+1,)
    frame_logits: np.ndarray  # (T, C+1)
    target_fg: np.ndarray  # (T,)
    target_bg: np.ndarray  # (T,)
    z_fg: float
    z_bg: float


def attention(model: StreamModel, features: np.ndarray) -> np.ndarray:
    """Per-segment attention: sigmoid(w2 . relu(w1 x_t + b1) + b2)."""
    features = check_features(features)
    if features.shape[1] != model.feature_dim:
        raise ValueError(
            f"feature dim {features.shape[1]} does not match model dim {model.feature_dim}"
        )
    hidden = relu(features @ model.w1.T + model.b1)
    return sigmoid(hidden @ model.w2 + model.b2[0])


def pool(features: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted average pooling: (1/T) sum_t weights_t x_t."""
    features = check_features(features)
    weights = check_vector(weights, length=features.shape[0], name="weights")
    return (weights[:, None] * features).sum(axis=0) / features.shape[0]


def video_probs(model: StreamModel, pooled: np.ndarray) -> np.ndarray:
    """Class probabilities of a pooled video feature under the shared classifier."""
    pooled = check_vector(pooled, length=model.feature_dim, name="pooled")
    return softmax(model.classifier @ pooled)


def frame_class_probs(model: StreamModel, features: np.ndarray) -> np.ndarray:
    """Frame-level softmax over the classifier logits, (T, C+1).

    Unlike the video-level probabilities these are not modulated by the
    bottom-up attention.
    """
    features = check_features(features)
    return softmax(features @ model.classifier.T, axis=1)


def attention_targets(
    model: StreamModel,
    features: np.ndarray,
    labels,
    sigma: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed top-down attention targets from the frame class activations.

    target_fg is the per-frame max activation over the labels present in the
    video; target_bg is the total non-background activation (1 - q_t[0]).
    Both are Gaussian-smoothed along time. Callers treat these as constants:
    no gradient is propagated through them.
    """
    labels = check_label_set(labels, model.num_classes)
    q = frame_class_probs(model, features)
    kernel = gaussian_kernel(sigma)
    target_fg = smooth(q[:, list(labels)].max(axis=1), kernel)
    target_bg = smooth(1.0 - q[:, 0], kernel)
    return target_fg, target_bg


def loss_fg(p_fg: np.ndarray, labels, num_classes: int | None = None) -> float:
    """Mean cross-entropy of the foreground probabilities over the video labels."""
    p_fg = np.asarray(p_fg, dtype=np.float64)
    labels = check_label_set(labels, num_classes if num_classes is not None else p_fg.shape[0] - 1)
    return float(np.mean([-np.log(p_fg[y]) for y in labels]))


def loss_bg(p_bg: np.ndarray) -> float:
    """Cross-entropy pinning the background-pooled feature to class 0."""
    return float(-np.log(np.asarray(p_bg, dtype=np.float64)[0]))


def loss_guide(lam: np.ndarray, target_fg: np.ndarray, target_bg: np.ndarray) -> float:
    """Mean L1 distance of the attention to both smoothed targets."""
    lam = check_vector(lam, name="lam")
    target_fg = check_vector(target_fg, length=lam.shape[0], name="target_fg")
    target_bg = check_vector(target_bg, length=lam.shape[0], name="target_bg")
    return float(np.mean(np.abs(lam - target_fg) + np.abs(lam - target_bg)))


def _cluster_probs(model: StreamModel, x_fg: np.ndarray, x_bg: np.ndarray) -> tuple[float, float]:
    z_fg = sigmoid(float((model.u_fg - model.u_bg) @ x_fg))
    z_bg = sigmoid(float((model.u_bg - model.u_fg) @ x_bg))
    return z_fg, z_bg


def loss_cluster(model: StreamModel, x_fg: np.ndarray, x_bg: np.ndarray) -> float:
    """Two-way softmax loss pushing the pooled fg/bg features apart."""
    z_fg, z_bg = _cluster_probs(model, x_fg, x_bg)
    return float(-np.log(z_fg) - np.log(z_bg))


def loss_sparsity(lam: np.ndarray) -> float:
    """Mean L1 of the attention values."""
    return float(np.mean(np.asarray(lam, dtype=np.float64)))


def forward_loss(
    model: StreamModel,
    features: np.ndarray,
    labels,
    weights: LossWeights,
    sigma: float,
    guide_targets: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[LossReport, ForwardCache]:
    """Full forward pass for one video; returns the loss report and cache.

    ``guide_targets`` overrides the self-computed attention targets; finite
    difference checks use it to hold the targets constant while parameters
    are perturbed, matching their constant treatment in ``backward``.
    """
    features = check_features(features)
    if features.shape[1] != model.feature_dim:
        raise ValueError(
            f"feature dim {features.shape[1]} does not match model dim {model.feature_dim}"
        )
    labels = check_label_set(labels, model.num_classes)
    T = features.shape[0]

    pre_hidden = features @ model.w1.T + model.b1
    hidden = relu(pre_hidden)
    lam = sigmoid(hidden @ model.w2 + model.b2[0])

    x_fg = (lam[:, None] * features).sum(axis=0) / T
    x_bg = ((1.0 - lam)[:, None] * features).sum(axis=0) / T
    p_fg = softmax(model.classifier @ x_fg)
    p_bg = softmax(model.classifier @ x_bg)

    frame_logits = features @ model.classifier.T
    if guide_targets is None:
        q = softmax(frame_logits, axis=1)
        kernel = gaussian_kernel(sigma)
        target_fg = smooth(q[:, list(labels)].max(axis=1), kernel)
        target_bg = smooth(1.0 - q[:, 0], kernel)
    else:
        target_fg = check_vector(guide_targets[0], length=T, name="target_fg")
        target_bg = check_vector(guide_targets[1], length=T, name="target_bg")

    z_fg, z_bg = _cluster_probs(model, x_fg, x_bg)

    with np.errstate(divide="ignore"):  # log(0) = -inf is a legitimate saturated loss
        l_fg = float(np.mean([-np.log(p_fg[y]) for y in labels]))
        l_bg = float(-np.log(p_bg[0]))
        l_cluster = float(-np.log(z_fg) - np.log(z_bg))
    l_guide = float(np.mean(np.abs(lam - target_fg) + np.abs(lam - target_bg)))
    l_sparse = float(np.mean(lam))
    # Zero-weighted terms contribute exactly 0 even when the raw term is
    # infinite (otherwise 0 * inf would poison the total with NaN).
    total = l_fg
    for weight, term in ((weights.alpha, l_bg), (weights.beta, l_guide),
                         (weights.gamma, l_cluster), (weights.sparsity, l_sparse)):
        if weight:
            total += weight * term

    report = LossReport(fg=l_fg, bg=l_bg, guide=l_guide, cluster=l_cluster,
                        sparsity=l_sparse, total=total)
    cache = ForwardCache(
        features=features, labels=labels, pre_hidden=pre_hidden, hidden=hidden,
        lam=lam, x_fg=x_fg, x_bg=x_bg, p_fg=p_fg, p_bg=p_bg,
        frame_logits=frame_logits, target_fg=target_fg, target_bg=target_bg,
        z_fg=z_fg, z_bg=z_bg,
    )
    return report, cache


def backward(
    model: StreamModel,
    features: np.ndarray,
    labels,
    weights: LossWeights,
    cache: ForwardCache,
) -> Gradients:
    """Exact gradient of the weighted total loss for every parameter.

    The guide targets in the cache are constants. The subgradient of |x| at
    x == 0 is taken as 0.
    """
    features = check_features(features)
    labels = check_label_set(labels, model.num_classes)
    T = features.shape[0]
    if cache.lam.shape[0] != T or cache.features.shape != features.shape:
        raise ValueError(
            f"stale cache: cached {cache.features.shape} segments vs input {features.shape}"
        )
    if cache.p_fg.shape[0] != model.num_classes + 1:
        raise ValueError(
            f"stale cache: {cache.p_fg.shape[0]} classes cached, "
            f"model has {model.num_classes + 1}"
        )

    # Classifier: softmax cross-entropy gradients from both pooled features.
    label_mean = np.zeros(model.num_classes + 1)
    label_mean[list(labels)] = 1.0 / len(labels)
    g_fg = cache.p_fg - label_mean
    bg_onehot = np.zeros(model.num_classes + 1)
    bg_onehot[0] = 1.0
    g_bg = weights.alpha * (cache.p_bg - bg_onehot)
    d_classifier = np.outer(g_fg, cache.x_fg) + np.outer(g_bg, cache.x_bg)

    # Cluster parameters and their pull on the pooled features.
    u_diff = model.u_fg - model.u_bg
    c_fg = -(1.0 - cache.z_fg)  # d(-log sigmoid(a))/da
    c_bg = -(1.0 - cache.z_bg)
    d_u_fg = weights.gamma * (c_fg * cache.x_fg - c_bg * cache.x_bg)
    d_u_bg = weights.gamma * (-c_fg * cache.x_fg + c_bg * cache.x_bg)

    d_x_fg = model.classifier.T @ g_fg + weights.gamma * c_fg * u_diff
    d_x_bg = model.classifier.T @ g_bg + weights.gamma * c_bg * (-u_diff)

    # Attention: pooling routes, the guide L1 terms, and the sparsity mean.
    d_lam = (features @ (d_x_fg - d_x_bg)) / T
    d_lam += (weights.beta / T) * (
        np.sign(cache.lam - cache.target_fg) + np.sign(cache.lam - cache.target_bg)
    )
    d_lam += weights.sparsity / T

    d_score = d_lam * cache.lam * (1.0 - cache.lam)
    d_b2 = np.array([d_score.sum()])
    d_w2 = cache.hidden.T @ d_score
    d_hidden = d_score[:, None] * model.w2[None, :]
    d_pre = d_hidden * (cache.pre_hidden > 0)
    d_b1 = d_pre.sum(axis=0)
    d_w1 = d_pre.T @ features

    return Gradients(w1=d_w1, b1=d_b1, w2=d_w2, b2=d_b2,
                     classifier=d_classifier, u_fg=d_u_fg, u_bg=d_u_bg)
