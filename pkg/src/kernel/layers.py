"""
Layers of the classifier as static forward/backward pairs over float64 numpy
arrays. Every forward returns (out, cache) and every backward takes
(dout, cache) and returns the gradients in the order of the forward inputs.

Batched shapes used by the model (N = batch):

    DepthwiseConv   (N, 1, D, L) x (F, D, 1)          -> (N, F, 1, L)
    SeparableConv   (N, F, 1, L) x (F, 1, K) x (F, F)  -> (N, F, 1, L)
    BatchNorm       any, normalised per `channel_axis`
    Elu             any
    AvgPool         (..., L) -> (..., L // pool)
    Linear          (N, M) x (C, M) x (C,)            -> (N, C)
"""
import numpy as np
from dataclasses import dataclass, field
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import logsumexp, softmax

from src.custom_exception import DimensionError, NonFiniteError
from src.kernel.prob_pair import ProbPair

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def check_finite(stage, array):
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"Non-finite values after {stage}")
    return array


def same_padding(kernel_size):
    return (kernel_size - 1) // 2, kernel_size // 2


class DepthwiseConv:

    @staticmethod
    def forward(x, w):
        if x.ndim != 4 or x.shape[1] != 1:
            raise DimensionError(f"depthwise conv expects (N, 1, D, L) input, got {x.shape}")
        if w.ndim != 3 or w.shape[1] != x.shape[2] or w.shape[2] != 1:
            raise DimensionError(f"depthwise conv weights {w.shape} do not span {x.shape[2]} channels")
        out = np.einsum('fd,ndl->nfl', w[:, :, 0], x[:, 0])[:, :, None, :]
        return out, (x, w)

    @staticmethod
    def backward(dout, cache):
        x, w = cache
        g = dout[:, :, 0, :]
        dw = np.einsum('nfl,ndl->fd', g, x[:, 0])[:, :, None]
        dx = np.einsum('fd,nfl->ndl', w[:, :, 0], g)[:, None]
        return dx, dw


class SeparableConv:
    """
    Zero pad the time axis by ((K-1)//2, K//2), one K-tap cross-correlation per
    channel, then a 1x1 pointwise mix across channels. Output length equals input.
    """

    @staticmethod
    def forward(x, depth_w, point_w):
        if x.ndim != 4 or x.shape[2] != 1:
            raise DimensionError(f"separable conv expects (N, F, 1, L) input, got {x.shape}")
        channels = x.shape[1]
        if point_w.ndim != 2 or point_w.shape[0] != point_w.shape[1]:
            raise DimensionError(f"pointwise weights must be square, got {point_w.shape}")
        if point_w.shape[1] != channels or depth_w.shape[0] != channels or depth_w.shape[1] != 1:
            raise DimensionError(f"separable conv weights {depth_w.shape}/{point_w.shape} "
                                 f"do not match {channels} channels")
        kernel_size = depth_w.shape[2]
        left, right = same_padding(kernel_size)
        xp = np.pad(x, ((0, 0), (0, 0), (0, 0), (left, right)))
        windows = sliding_window_view(xp, kernel_size, axis=-1)
        y = np.einsum('ncltk,ck->nclt', windows, depth_w[:, 0, :])
        out = np.einsum('oc,nclt->nolt', point_w, y)
        return out, (x.shape, windows, y, depth_w, point_w, left)

    @staticmethod
    def backward(dout, cache):
        x_shape, windows, y, depth_w, point_w, left = cache
        kernel_size = depth_w.shape[2]
        length = x_shape[-1]
        d_point = np.einsum('nolt,nclt->oc', dout, y)
        dy = np.einsum('oc,nolt->nclt', point_w, dout)
        d_depth = np.einsum('ncltk,nclt->ck', windows, dy)[:, None, :]
        dxp = np.zeros(x_shape[:-1] + (length + kernel_size - 1,))
        for k in range(kernel_size):
            dxp[..., k:k + length] += dy * depth_w[:, 0, k][None, :, None, None]
        dx = dxp[..., left:left + length]
        return dx, d_depth, d_point


@dataclass
class BatchNormState:
    """Affine batch-norm parameters together with the running statistics."""
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray = None
    running_var: np.ndarray = None
    momentum: float = BN_MOMENTUM
    eps: float = BN_EPS
    batches_seen: int = field(default=0)

    @classmethod
    def create(cls, channels):
        return cls(np.ones(channels), np.zeros(channels), np.zeros(channels), np.ones(channels))


class BatchNorm:

    @staticmethod
    def __reduce_axes(x, channel_axis):
        return tuple(a for a in range(x.ndim) if a != channel_axis)

    @staticmethod
    def __broadcast(v, x, channel_axis):
        shape = [1] * x.ndim
        shape[channel_axis] = -1
        return v.reshape(shape)

    @staticmethod
    def forward(x, gamma, beta, running_mean, running_var, train=True, channel_axis=1, eps=BN_EPS):
        """
        Train mode normalises with batch statistics and returns them in the cache
        (see `running_update`), eval mode uses the running statistics. Running
        statistics are never modified here.
        """
        axes = BatchNorm.__reduce_axes(x, channel_axis)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
        else:
            mean, var = running_mean, running_var
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = (x - BatchNorm.__broadcast(mean, x, channel_axis)) * BatchNorm.__broadcast(inv_std, x, channel_axis)
        out = BatchNorm.__broadcast(gamma, x, channel_axis) * x_hat + BatchNorm.__broadcast(beta, x, channel_axis)
        count = x.size // x.shape[channel_axis]
        return out, (x_hat, gamma, inv_std, train, channel_axis, mean, var, count)

    @staticmethod
    def backward(dout, cache):
        x_hat, gamma, inv_std, train, channel_axis, _, _, count = cache
        axes = BatchNorm.__reduce_axes(dout, channel_axis)
        d_gamma = np.sum(dout * x_hat, axis=axes)
        d_beta = np.sum(dout, axis=axes)
        d_xhat = dout * BatchNorm.__broadcast(gamma, dout, channel_axis)
        scale = BatchNorm.__broadcast(inv_std, dout, channel_axis)
        if not train:
            return d_xhat * scale, d_gamma, d_beta
        sum_dxhat = BatchNorm.__broadcast(np.sum(d_xhat, axis=axes), dout, channel_axis)
        sum_dxhat_xhat = BatchNorm.__broadcast(np.sum(d_xhat * x_hat, axis=axes), dout, channel_axis)
        dx = scale / count * (count * d_xhat - sum_dxhat - x_hat * sum_dxhat_xhat)
        return dx, d_gamma, d_beta

    @staticmethod
    def running_update(running_mean, running_var, cache, momentum=BN_MOMENTUM):
        """New running statistics from a train-mode cache, variance unbiased."""
        _, _, _, train, _, mean, var, count = cache
        if not train:
            return running_mean, running_var
        unbiased = var * count / (count - 1) if count > 1 else var
        new_mean = (1 - momentum) * running_mean + momentum * mean
        new_var = (1 - momentum) * running_var + momentum * unbiased
        return new_mean, new_var


class Elu:

    @staticmethod
    def forward(x):
        out = np.where(x >= 0, x, np.expm1(np.minimum(x, 0.0)))
        return out, x

    @staticmethod
    def backward(dout, cache):
        x = cache
        return dout * np.where(x >= 0, 1.0, np.exp(np.minimum(x, 0.0)))


class AvgPool:

    @staticmethod
    def forward(x, pool):
        if pool < 1:
            raise DimensionError(f"pool size must be >= 1, got {pool}")
        length = x.shape[-1]
        n_out = length // pool
        if n_out == 0:
            raise DimensionError(f"pool size {pool} is larger than the time axis {length}")
        trimmed = x[..., :n_out * pool]
        out = trimmed.reshape(x.shape[:-1] + (n_out, pool)).mean(axis=-1)
        return out, (x.shape, pool)

    @staticmethod
    def backward(dout, cache):
        x_shape, pool = cache
        dx = np.zeros(x_shape)
        n_out = dout.shape[-1]
        dx[..., :n_out * pool] = np.repeat(dout / pool, pool, axis=-1)
        return dx


class Linear:

    @staticmethod
    def forward(x, w, b):
        if x.shape[-1] != w.shape[1] or b.shape[0] != w.shape[0]:
            raise DimensionError(f"linear layer {w.shape} cannot take input {x.shape}")
        return x @ w.T + b, (x, w)

    @staticmethod
    def backward(dout, cache):
        x, w = cache
        return dout @ w, dout.T @ x, dout.sum(axis=0)


class SoftmaxCrossEntropy:

    @staticmethod
    def forward(logits, labels):
        """Mean of -z[y] + logsumexp(z) over the batch."""
        labels = np.asarray(labels, dtype=int)
        rows = np.arange(logits.shape[0])
        losses = logsumexp(logits, axis=1) - logits[rows, labels]
        return float(losses.mean()), (logits, labels)

    @staticmethod
    def backward(cache):
        logits, labels = cache
        d = softmax(logits, axis=1)
        d[np.arange(logits.shape[0]), labels] -= 1.0
        return d / logits.shape[0]


def depthwise_conv2d(x, weights):
    """(1, D, L) x (F, D, 1) -> (F, 1, L)"""
    out, _ = DepthwiseConv.forward(np.asarray(x, dtype=np.float64)[None], np.asarray(weights, dtype=np.float64))
    return out[0]


def separable_conv2d(x, depth_weights, point_weights):
    """(F, 1, L) -> (F, 1, L)"""
    out, _ = SeparableConv.forward(np.asarray(x, dtype=np.float64)[None],
                                   np.asarray(depth_weights, dtype=np.float64),
                                   np.asarray(point_weights, dtype=np.float64))
    return out[0]


def batch_norm(x, state: BatchNormState, train=True, channel_axis=0):
    x = np.asarray(x, dtype=np.float64)
    if train and x.size == 0:
        raise DimensionError("batch norm in train mode needs a non-empty batch")
    out, cache = BatchNorm.forward(x, state.gamma, state.beta, state.running_mean, state.running_var,
                                   train=train, channel_axis=channel_axis, eps=state.eps)
    if train:
        state.running_mean, state.running_var = BatchNorm.running_update(
            state.running_mean, state.running_var, cache, state.momentum)
        state.batches_seen += 1
    return out


def elu(x):
    return Elu.forward(np.asarray(x, dtype=np.float64))[0]


def avg_pool2d(x, pool):
    return AvgPool.forward(np.asarray(x, dtype=np.float64), pool)[0]


def linear_softmax(x, weights, bias) -> ProbPair:
    logits, _ = Linear.forward(np.asarray(x, dtype=np.float64)[None], np.asarray(weights, dtype=np.float64),
                               np.asarray(bias, dtype=np.float64))
    return ProbPair.from_array(softmax(logits[0]))


def cross_entropy_loss(logits, given_label):
    loss, _ = SoftmaxCrossEntropy.forward(np.asarray(logits, dtype=np.float64)[None], [given_label])
    return loss


def cross_entropy_grad(logits, given_label):
    """softmax(z) - onehot(y) for one sample."""
    _, cache = SoftmaxCrossEntropy.forward(np.asarray(logits, dtype=np.float64)[None], [given_label])
    return SoftmaxCrossEntropy.backward(cache)[0]
