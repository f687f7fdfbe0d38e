# Licensed under the BSD 3-Clause License.

from typing import Optional, Tuple

import numpy as np

from skelgnn.autodiff.tensor import (
    Parameter,
    Tensor,
    _record,
    add,
    as_tensor,
    mean,
    mul,
    power,
    reshape,
    sub,
)
from skelgnn.errors import (
    BatchTooSmall,
    InvalidProbability,
    KernelTooLarge,
    ShapeMismatch,
)

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


class BNState:
    """Learnable affine (gamma, beta) and running statistics of one batch
    normalization layer.

    The feature axis is the flattened trailing shape, e.g. (nodes, channels);
    every leading axis counts as batch.
    """

    def __init__(
        self,
        feature_shape: Tuple[int, ...],
        name: str = "bn",
        eps: float = BN_EPS,
        momentum: float = BN_MOMENTUM,
    ):
        self.feature_shape = tuple(int(n) for n in feature_shape)
        self.eps = eps
        self.momentum = momentum
        self.gamma = Parameter(np.ones(self.feature_shape), name=f"{name}.gamma")
        self.beta = Parameter(np.zeros(self.feature_shape), name=f"{name}.beta")
        self.running_mean = np.zeros(self.feature_shape)
        self.running_var = np.ones(self.feature_shape)

    @property
    def num_features(self) -> int:
        return int(np.prod(self.feature_shape))

    def parameters(self):
        return [self.gamma, self.beta]


def batch_norm(
    x: Tensor,
    state: BNState,
    training: bool,
    eps: Optional[float] = None,
    momentum: Optional[float] = None,
) -> Tensor:
    """Per-feature normalization over the batch.

    Training mode normalizes with the biased batch variance and moves the
    running statistics towards the batch mean and the unbiased batch variance;
    eval mode normalizes with the running statistics.
    """
    x = as_tensor(x)
    eps = state.eps if eps is None else eps
    momentum = state.momentum if momentum is None else momentum
    k = len(state.feature_shape)
    if tuple(x.shape[x.ndim - k :]) != state.feature_shape or x.ndim <= k:
        raise ShapeMismatch(
            f"batch_norm: input {x.shape} does not end with {state.feature_shape}"
        )
    shape = x.shape
    flat = reshape(x, (-1, state.num_features))
    gamma = reshape(state.gamma, (1, state.num_features))
    beta = reshape(state.beta, (1, state.num_features))
    if training:
        m = flat.shape[0]
        if m < 2:
            raise BatchTooSmall(f"batch_norm needs at least 2 rows, got {m}")
        mu = mean(flat, axis=0, keepdims=True)
        centered = sub(flat, mu)
        var = mean(mul(centered, centered), axis=0, keepdims=True)
        xhat = mul(centered, power(add(var, eps), -0.5))
        batch_var = var.data.reshape(state.feature_shape)
        state.running_mean = (1.0 - momentum) * state.running_mean + momentum * (
            mu.data.reshape(state.feature_shape)
        )
        state.running_var = (1.0 - momentum) * state.running_var + momentum * (
            batch_var * m / (m - 1)
        )
    else:
        mu = state.running_mean.reshape(1, -1)
        inv_std = 1.0 / np.sqrt(state.running_var.reshape(1, -1) + eps)
        xhat = mul(sub(flat, mu), inv_std)
    return reshape(add(mul(xhat, gamma), beta), shape)


def dropout(
    x: Tensor, p: float, training: bool, rng: Optional[np.random.Generator]
) -> Tensor:
    """Inverted dropout: survivors are scaled by 1 / (1 - p) at train time."""
    if not (0.0 <= p < 1.0):
        raise InvalidProbability(f"dropout probability must be in [0, 1), got {p}")
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.shape) >= p).astype(np.float64) / (1.0 - p)
    return mul(x, keep)


def conv1d_temporal(
    x: Tensor, kernel: Tensor, stride: int = 1, dilation: int = 1
) -> Tensor:
    """Convolution along the frame axis, independently per node.

    x is [C x T x N] or batched [B x C x T x N], kernel is [C_out x C x F] with
    F odd. Both ends get dilation * (F - 1) / 2 zero frames, so the output has
    ceil(T / stride) frames.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    batched = x.ndim == 4
    if x.ndim not in (3, 4) or kernel.ndim != 3:
        raise ShapeMismatch(
            f"conv1d_temporal: input {x.shape} or kernel {kernel.shape} has wrong rank"
        )
    xd = x.data if batched else x.data[None]
    b, c, t, n = xd.shape
    c_out, c_in, f = kernel.shape
    if c_in != c:
        raise ShapeMismatch(f"kernel expects {c_in} channels, input has {c}")
    if f % 2 == 0:
        raise ShapeMismatch(f"kernel width must be odd, got {f}")
    assert stride >= 1 and dilation >= 1
    span = dilation * (f - 1) + 1
    if span > t:
        raise KernelTooLarge(f"receptive field {span} exceeds {t} frames")
    pad = dilation * (f - 1) // 2
    t_out = -(-t // stride)
    xpad = np.pad(xd, ((0, 0), (0, 0), (pad, pad), (0, 0)))

    def _taps(i):
        start = i * dilation
        return slice(start, start + stride * (t_out - 1) + 1, stride)

    out = np.zeros((b, c_out, t_out, n))
    for i in range(f):
        out += np.einsum("oc,bctn->botn", kernel.data[:, :, i], xpad[:, :, _taps(i)])

    def _backward(g):
        if not batched:
            g = g[None]
        gk = gx = None
        if kernel.requires_grad:
            gk = np.stack(
                [
                    np.einsum("botn,bctn->oc", g, xpad[:, :, _taps(i)])
                    for i in range(f)
                ],
                axis=-1,
            )
        if x.requires_grad:
            gpad = np.zeros_like(xpad)
            for i in range(f):
                gpad[:, :, _taps(i)] += np.einsum(
                    "oc,botn->bctn", kernel.data[:, :, i], g
                )
            gx = gpad[:, :, pad : pad + t]
            if not batched:
                gx = gx[0]
        return gx, gk

    return _record(out if batched else out[0], (x, kernel), _backward, "conv1d")
