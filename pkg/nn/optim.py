from dataclasses import dataclass, replace

import numpy as np

from core.exceptions import ShapeMismatch
from .scorer import ScorerParams


@dataclass(frozen=True, eq=False)
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = None
    v: np.ndarray = None
    step: int = 0


def init_adam(p, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
    zeros = np.zeros(p.size)
    return AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, m=zeros, v=zeros.copy())


def adam_step(state, p, grads):
    """One bias-corrected Adam ascent step.

    `grads` is the gradient of the maximized objective (a ScorerParams or a
    flat vector). Returns the new state and parameters; inputs are untouched.
    """
    g = grads.flat() if isinstance(grads, ScorerParams) else np.asarray(grads, dtype=float)
    theta = p.flat()
    if g.shape != theta.shape or state.m is None or state.m.shape != theta.shape:
        raise ShapeMismatch(f"Adam expects {theta.size} gradient entries, got {g.shape}")

    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g ** 2
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    theta = theta + state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, step=step), ScorerParams.from_flat(p.layer_sizes, theta)
