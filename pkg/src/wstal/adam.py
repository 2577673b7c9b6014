"""Adam optimizer applied per-video-step to a StreamModel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PARAM_FIELDS, Gradients, StreamModel, zeros_like_model


@dataclass
class AdamState:
    """Moment accumulators (shapes mirror the model) plus hyperparameters."""

    m: Gradients
    v: Gradients
    step_count: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(
    model: StreamModel,
    lr: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    return AdamState(m=zeros_like_model(model), v=zeros_like_model(model),
                     step_count=0, lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)


def adam_apply(state: AdamState, model: StreamModel, grads: Gradients) -> None:
    """One bias-corrected Adam update, in place on model and state.

    Rejects non-finite or mis-shaped gradients before touching anything, so a
    failed call leaves model and state unchanged.
    """
    for name in PARAM_FIELDS:
        g = getattr(grads, name)
        p = getattr(model, name)
        if g.shape != p.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter {name} {p.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient for parameter {name}")

    state.step_count += 1
    t = state.step_count
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t
    for name in PARAM_FIELDS:
        g = getattr(grads, name)
        m = getattr(state.m, name)
        v = getattr(state.v, name)
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        update = (m / bias1) / (np.sqrt(v / bias2) + state.epsilon)
        getattr(model, name)[...] -= state.lr * update
