import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.special import softmax

from src.custom_exception import DimensionError, EmptyTrainingSetError, TrainingDivergedError
from src.kernel.adam import AdamState, adam_step
from src.kernel.layers import (AvgPool, BatchNorm, DepthwiseConv, Elu, Linear, SeparableConv,
                               SoftmaxCrossEntropy, check_finite)
from src.kernel.param_set import ParamSet
from src.kernel.prob_pair import ProbPair
from src.model.dbn import DbnBank, self_supervised_train
from src.model.hyper_params import FIRST_POOL, HyperParams

TRAIN = 'train'
EVAL = 'eval'
ARCHITECTURE_FIELDS = ('n_channels', 'n_windows', 'hidden1', 'hidden2', 'filters', 'n_classes', 'dbn_activation')


def init_params(hp: HyperParams, rng) -> ParamSet:
    """Weights uniform in +-sqrt(1/fan_in), biases zero, batch-norm scale 1 and shift 0."""
    params = ParamSet()
    DbnBank.add_params(params, hp.n_channels, hp.n_windows, hp.hidden1, hp.hidden2, rng)

    def uniform(fan_in, shape):
        bound = np.sqrt(1.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape)

    f = hp.filters
    params.add('depthwise', uniform(hp.n_channels, (f, hp.n_channels, 1)))
    params.add('bn1.gamma', np.ones(f))
    params.add('bn1.beta', np.zeros(f))
    params.add('sep_depth', uniform(hp.kernel_size, (f, 1, hp.kernel_size)))
    params.add('sep_point', uniform(f, (f, f)))
    params.add('bn2.gamma', np.ones(f))
    params.add('bn2.beta', np.zeros(f))
    params.add('linear_w', uniform(hp.flatten_dim, (hp.n_classes, hp.flatten_dim)))
    params.add('linear_b', np.zeros(hp.n_classes))
    for bn in ('bn1', 'bn2'):
        params.add_buffer(f'{bn}.running_mean', np.zeros(f))
        params.add_buffer(f'{bn}.running_var', np.ones(f))
    return params


@dataclass
class TrainingResult:
    losses: List[float] = field(default_factory=list)
    epochs: int = 0
    converged: bool = False
    pretrain_losses: List[List[float]] = field(default_factory=list)

    @property
    def final_loss(self):
        return self.losses[-1] if self.losses else float('nan')


class Tnanet:
    """
    DBN encode -> depthwise conv -> BN -> ELU -> avg pool(4) -> separable conv
    -> BN -> ELU -> avg pool(P) -> flatten -> linear -> softmax.
    """

    def __init__(self, hp: HyperParams, params: ParamSet = None, seed=0):
        self.hp = hp.validate()
        self.params = params if params is not None else init_params(hp, np.random.default_rng(seed))
        self.dbn = DbnBank(self.params, hp.dbn_activation)

    def __stage(self, name, fn, *args):
        try:
            out, cache = fn(*args)
        except DimensionError as e:
            raise DimensionError(f"stage '{name}': {e}")
        return check_finite(name, out), cache

    @staticmethod
    def __as_batch(values):
        values = np.asarray(getattr(values, 'values', values), dtype=np.float64)
        return values[None] if values.ndim == 2 else values

    def forward(self, matrices, train=True):
        """
        (N, D, T) or (D, T) -> logits (N, 2) and the cache for backward. The
        cache also records the per-sample shape after every stage.
        """
        hp = self.hp
        p = self.params
        v = self.__as_batch(matrices)
        if v.ndim != 3 or v.shape[1:] != (hp.n_channels, hp.n_windows):
            raise DimensionError(f"stage 'input': expected ({hp.n_channels}, {hp.n_windows}) "
                                 f"matrices, got {v.shape[1:]}")
        n = v.shape[0]
        shapes = OrderedDict()
        code, dbn_cache = self.__stage('dbn', self.dbn.forward, v)
        shapes['dbn'] = code.shape[1:]
        x = code[:, None, :, :]
        x, dw_cache = self.__stage('depthwise', DepthwiseConv.forward, x, p['depthwise'])
        shapes['depthwise'] = x.shape[1:]
        x, bn1_cache = BatchNorm.forward(x, p['bn1.gamma'], p['bn1.beta'], p['bn1.running_mean'],
                                         p['bn1.running_var'], train=train, channel_axis=1)
        x, elu1_cache = Elu.forward(x)
        x, pool1_cache = self.__stage('pool1', AvgPool.forward, x, FIRST_POOL)
        shapes['pool1'] = x.shape[1:]
        x, sep_cache = self.__stage('separable', SeparableConv.forward, x, p['sep_depth'], p['sep_point'])
        shapes['separable'] = x.shape[1:]
        x, bn2_cache = BatchNorm.forward(x, p['bn2.gamma'], p['bn2.beta'], p['bn2.running_mean'],
                                         p['bn2.running_var'], train=train, channel_axis=1)
        x, elu2_cache = Elu.forward(x)
        x, pool2_cache = self.__stage('pool2', AvgPool.forward, x, hp.pool2)
        shapes['pool2'] = x.shape[1:]
        flat = x.reshape(n, -1)
        shapes['flatten'] = flat.shape[1:]
        logits, linear_cache = self.__stage('linear', Linear.forward, flat, p['linear_w'], p['linear_b'])
        shapes['linear'] = logits.shape[1:]
        cache = dict(dbn=dbn_cache, depthwise=dw_cache, bn1=bn1_cache, elu1=elu1_cache, pool1=pool1_cache,
                     separable=sep_cache, bn2=bn2_cache, elu2=elu2_cache, pool2=pool2_cache,
                     pooled_shape=x.shape, linear=linear_cache, shapes=shapes)
        return logits, cache

    def backward(self, dlogits, cache):
        grads = {}
        dflat, grads['linear_w'], grads['linear_b'] = Linear.backward(dlogits, cache['linear'])
        dx = dflat.reshape(cache['pooled_shape'])
        dx = AvgPool.backward(dx, cache['pool2'])
        dx = Elu.backward(dx, cache['elu2'])
        dx, grads['bn2.gamma'], grads['bn2.beta'] = BatchNorm.backward(dx, cache['bn2'])
        dx, grads['sep_depth'], grads['sep_point'] = SeparableConv.backward(dx, cache['separable'])
        dx = AvgPool.backward(dx, cache['pool1'])
        dx = Elu.backward(dx, cache['elu1'])
        dx, grads['bn1.gamma'], grads['bn1.beta'] = BatchNorm.backward(dx, cache['bn1'])
        dcode, grads['depthwise'] = DepthwiseConv.backward(dx, cache['depthwise'])
        _, dbn_grads = self.dbn.backward(dcode[:, 0], cache['dbn'])
        grads.update(dbn_grads)
        return grads

    def commit_running_stats(self, cache):
        for bn in ('bn1', 'bn2'):
            mean, var = BatchNorm.running_update(self.params[f'{bn}.running_mean'],
                                                 self.params[f'{bn}.running_var'], cache[bn])
            self.params.set_buffer(f'{bn}.running_mean', mean)
            self.params.set_buffer(f'{bn}.running_var', var)

    def loss_and_grads(self, matrices, labels, train=True):
        logits, cache = self.forward(matrices, train=train)
        loss, ce_cache = SoftmaxCrossEntropy.forward(logits, labels)
        return loss, self.backward(SoftmaxCrossEntropy.backward(ce_cache), cache), cache

    def predict_proba(self, matrices):
        """Eval-mode probabilities, (N, 2)."""
        logits, _ = self.forward(matrices, train=False)
        return softmax(logits, axis=1)

    def pretrain(self, matrices, seed=0):
        return self_supervised_train(self.dbn, self.__as_batch(matrices), epochs=self.hp.self_supervised_epochs,
                                     lr=self.hp.lr, seed=seed)

    def fit(self, matrices, labels):
        """Full-batch Adam on the mean cross-entropy with a patience stop."""
        hp = self.hp
        v = self.__as_batch(matrices) if len(matrices) else np.empty((0,))
        labels = np.asarray(labels, dtype=int)
        if len(v) == 0 or len(labels) == 0:
            raise EmptyTrainingSetError("supervised training needs at least one sample")
        if len(v) != len(labels):
            raise DimensionError(f"{len(v)} samples but {len(labels)} labels")
        state = AdamState.for_params(self.params, lr=hp.lr)
        result = TrainingResult()
        stale = 0
        for epoch in range(hp.max_epochs):
            loss, grads, cache = self.loss_and_grads(v, labels, train=True)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss {loss} at epoch {epoch + 1} "
                                            f"(previous {result.losses[-1] if result.losses else 'n/a'})")
            self.params.set_grads(grads)
            adam_step(self.params, state)
            self.commit_running_stats(cache)
            if result.losses and result.losses[-1] - loss < hp.min_delta:
                stale += 1
            else:
                stale = 0
            result.losses.append(loss)
            result.epochs = epoch + 1
            if stale >= hp.patience:
                result.converged = True
                break
        logging.debug(f"{self.__class__.__name__}: {result.epochs} epochs, loss "
                      f"{result.losses[0]:.6f} -> {result.final_loss:.6f}")
        return result


def forward(model: Tnanet, matrix, mode=EVAL):
    """Single-sample forward, returns (logits[2], ProbPair)."""
    logits, _ = model.forward(matrix, train=mode == TRAIN)
    return logits[0], ProbPair.from_array(softmax(logits[0]))


def stage_shapes(model: Tnanet, matrix, mode=EVAL):
    _, cache = model.forward(matrix, train=mode == TRAIN)
    return cache['shapes']


def predict_label(p: ProbPair):
    return p.predict_label()


def supervised_train(model: Tnanet, train_set, hp: HyperParams = None) -> TrainingResult:
    """train_set is a list of (matrix, given_label)."""
    if hp is not None:
        changed = [name for name in ARCHITECTURE_FIELDS if getattr(hp, name) != getattr(model.hp, name)]
        if changed:
            raise DimensionError(f"hyper-parameters change the model architecture: {', '.join(changed)}")
        model.hp = hp.validate()
    if not train_set:
        raise EmptyTrainingSetError("supervised training needs at least one sample")
    matrices = np.stack([np.asarray(getattr(m, 'values', m), dtype=np.float64) for m, _ in train_set])
    labels = [label for _, label in train_set]
    return model.fit(matrices, labels)


def feature_importance(model: Tnanet):
    """Mean absolute depthwise weight per channel, highest first, ties by channel index."""
    scores = np.abs(model.params['depthwise'][:, :, 0]).mean(axis=0)
    names = model.hp.channel_names()
    order = sorted(range(len(scores)), key=lambda d: (-scores[d], d))
    return [(names[d], float(scores[d])) for d in order]
