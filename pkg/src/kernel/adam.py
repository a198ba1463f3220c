# Adam adaptive moment estimation
#   m(t) = b1 * m(t-1) + (1 - b1) * g
#   v(t) = b2 * v(t-1) + (1 - b2) * g**2
#   m'(t) = m(t) / (1 - b1**t),  v'(t) = v(t) / (1 - b2**t)
#   theta(t) = theta(t-1) - lr * m'(t) / (sqrt(v'(t)) + eps)
from dataclasses import dataclass, field

import numpy as np

from src.kernel.param_set import ParamSet


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: ParamSet, lr=0.001):
        state = cls(lr=lr)
        for name in params.names():
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        return state


def adam_step(params: ParamSet, state: AdamState, names=None):
    """Update in place from the populated gradients, then zero them."""
    state.step += 1
    correction1 = 1 - state.beta1 ** state.step
    correction2 = 1 - state.beta2 ** state.step
    for name in names if names is not None else params.names():
        g = params.grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        state.m[name] = state.beta1 * state.m[name] + (1 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1 - state.beta2) * g ** 2
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        params.params[name] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    params.zero_grad()
    return params
