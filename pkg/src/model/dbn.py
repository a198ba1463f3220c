"""
Per-channel stacked encoders, one two-layer stack for every feature channel.

Every stack maps its channel's T-vector to H1 then H2 units with an affine map
h = W v + b, and reconstructs with the transpose v' = W^T h + b_star. Training
minimises the L1 reconstruction error layer by layer. The D stacks of a model
are stored as stacked arrays inside the model's ParamSet so that both the
pre-training and the supervised phase update the same memory.
"""
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.special import expit

from src.custom_exception import DimensionError
from src.kernel.adam import AdamState, adam_step
from src.kernel.param_set import ParamSet

LINEAR = 'linear'
SIGMOID = 'sigmoid'

LAYER_NAMES = [
    ('dbn.w1', 'dbn.b1', 'dbn.b1_star'),
    ('dbn.w2', 'dbn.b2', 'dbn.b2_star'),
]


@dataclass
class RbmLayer:
    W: np.ndarray
    b: np.ndarray
    b_star: np.ndarray
    activation: str = LINEAR

    @property
    def in_dim(self):
        return self.W.shape[-1]

    @property
    def out_dim(self):
        return self.W.shape[-2]


@dataclass
class DbnStack:
    layers: List[RbmLayer]
    channel_index: int

    def encode(self, v):
        h = v
        for layer in self.layers:
            h = rbm_forward(layer, h)
        return h


def rbm_forward(layer: RbmLayer, v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != layer.in_dim:
        raise DimensionError(f"RBM input has {v.shape[-1]} values, layer expects {layer.in_dim}")
    h = np.einsum('...oi,...i->...o', layer.W, v) + layer.b
    if layer.activation == SIGMOID:
        h = expit(h)
    return h


def rbm_reconstruct(layer: RbmLayer, h):
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != layer.out_dim:
        raise DimensionError(f"RBM hidden vector has {h.shape[-1]} values, layer has {layer.out_dim} units")
    return np.einsum('...oi,...o->...i', layer.W, h) + layer.b_star


def reconstruction_loss(v, v_next):
    v = np.asarray(v, dtype=np.float64)
    v_next = np.asarray(v_next, dtype=np.float64)
    if v.shape != v_next.shape:
        raise DimensionError(f"cannot compare vectors of shapes {v.shape} and {v_next.shape}")
    return np.abs(v - v_next).sum(axis=-1)


def reconstruction_grads(layer: RbmLayer, v):
    """
    Per-channel L1 loss of reconstruct(forward(v)) and its gradients, for v of
    shape (D, in) against layer arrays of shape (D, out, in).
    """
    h = rbm_forward(layer, v)
    v_next = rbm_reconstruct(layer, h)
    s = np.sign(v_next - v)
    dh = np.einsum('doi,di->do', layer.W, s)
    da = dh * h * (1 - h) if layer.activation == SIGMOID else dh
    dW = np.einsum('do,di->doi', h, s) + np.einsum('do,di->doi', da, v)
    return np.abs(v_next - v).sum(axis=-1), dW, da, s


class DbnBank(Sequence):
    """The D channel stacks of one model, backed by stacked ParamSet arrays."""

    def __init__(self, params: ParamSet, activation=LINEAR):
        self.params = params
        self.activation = activation

    @staticmethod
    def add_params(params: ParamSet, n_channels, n_windows, hidden1, hidden2, rng):
        for (w, b, b_star), (n_in, n_out) in zip(LAYER_NAMES, [(n_windows, hidden1), (hidden1, hidden2)]):
            bound = np.sqrt(1.0 / n_in)
            params.add(w, rng.uniform(-bound, bound, size=(n_channels, n_out, n_in)))
            params.add(b, np.zeros((n_channels, n_out)))
            params.add(b_star, np.zeros((n_channels, n_in)))

    def layer(self, index) -> RbmLayer:
        w, b, b_star = LAYER_NAMES[index]
        return RbmLayer(self.params[w], self.params[b], self.params[b_star], self.activation)

    def __len__(self):
        return self.params['dbn.w1'].shape[0]

    def __getitem__(self, channel):
        if isinstance(channel, slice):
            return [self[i] for i in range(len(self))[channel]]
        layers = []
        for w, b, b_star in LAYER_NAMES:
            layers.append(RbmLayer(self.params[w][channel], self.params[b][channel],
                                   self.params[b_star][channel], self.activation))
        return DbnStack(layers=layers, channel_index=channel)

    def forward(self, v):
        """(N, D, T) -> (N, D, H2)"""
        if v.ndim != 3 or v.shape[1:] != (len(self), self.params['dbn.w1'].shape[2]):
            raise DimensionError(f"DBN expects (N, {len(self)}, {self.params['dbn.w1'].shape[2]}) input, "
                                 f"got {v.shape}")
        h1 = rbm_forward(self.layer(0), v)
        h2 = rbm_forward(self.layer(1), h1)
        return h2, (v, h1, h2)

    def backward(self, dh2, cache):
        v, h1, h2 = cache
        grads = {}
        inputs = [v, h1]
        outputs = [h1, h2]
        dout = dh2
        for index in (1, 0):
            w, b, b_star = LAYER_NAMES[index]
            layer = self.layer(index)
            da = dout * outputs[index] * (1 - outputs[index]) if self.activation == SIGMOID else dout
            grads[w] = np.einsum('ndo,ndi->doi', da, inputs[index])
            grads[b] = da.sum(axis=0)
            grads[b_star] = np.zeros_like(layer.b_star)
            dout = np.einsum('doi,ndo->ndi', layer.W, da)
        return dout, grads


def dbn_encode(stacks, matrix):
    """(D, T) feature matrix -> (D, H2) code, row i encoded by stack i only."""
    values = np.asarray(getattr(matrix, 'values', matrix), dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != len(stacks):
        raise DimensionError(f"{len(stacks)} stacks cannot encode a matrix of shape {values.shape}")
    return np.stack([stacks[i].encode(values[i]) for i in range(len(stacks))])


def self_supervised_train(bank: DbnBank, data, epochs=3, lr=0.001, seed=0):
    """
    Layer-wise reconstruction training on (N, D, T) channel vectors with
    per-sample Adam steps. Takes no labels. Returns the epoch-mean loss per
    layer, averaged over samples and channels.
    """
    data = np.asarray(data, dtype=np.float64)
    rng = np.random.default_rng(seed)
    history = []
    layer_input = data
    for index, names in enumerate(LAYER_NAMES):
        w, b, b_star = names
        state = AdamState.for_params(bank.params, lr=lr)
        layer_history = []
        for epoch in range(epochs):
            order = rng.permutation(len(layer_input))
            total = 0.0
            for n in order:
                loss, dW, db, db_star = reconstruction_grads(bank.layer(index), layer_input[n])
                total += float(loss.mean())
                bank.params.accumulate(w, dW)
                bank.params.accumulate(b, db)
                bank.params.accumulate(b_star, db_star)
                adam_step(bank.params, state, names=list(names))
            layer_history.append(total / max(len(order), 1))
            logging.debug(f"self_supervised_train: layer {index + 1} epoch {epoch + 1} "
                          f"loss {layer_history[-1]:.6f}")
        history.append(layer_history)
        layer_input = rbm_forward(bank.layer(index), layer_input)
    return history
