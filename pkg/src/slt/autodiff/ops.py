"""Neural-network operators with exact backward rules."""

from __future__ import annotations

import itertools
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from ..rng import SplitMix64
from .tensor import Tensor, make_result

# upper bound on elements of one im2col chunk (64 MB in f32)
_COLS_BUDGET = 1 << 24


def _triple(v) -> tuple[int, int, int]:
    if isinstance(v, int):
        return (v, v, v)
    t = tuple(int(i) for i in v)
    if len(t) != 3:
        raise ShapeError(f"expected 3 values, got {v!r}")
    return t  # type: ignore[return-value]


# -- softmax family ------------------------------------------------------------


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return make_result(y, (x,), _backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse

    def _backward(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return make_result(out, (x,), _backward, "log_softmax")


# -- normalisation -------------------------------------------------------------


def _standardize(x: np.ndarray, axes: tuple[int, ...], eps: float):
    mu = x.mean(axis=axes, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=axes, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / np.sqrt(var + eps)
        xhat = xc * inv
    return xhat, inv


def _standardize_backward(dxhat, xhat, inv, axes):
    return inv * (
        dxhat
        - dxhat.mean(axis=axes, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=axes, keepdims=True)
    )


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then scale by ``gain`` and shift by ``bias``."""
    n = x.shape[-1]
    if gain.shape != (n,) or bias.shape != (n,):
        raise ShapeError(f"layer_norm: gain/bias must have shape ({n},)")
    xhat, inv = _standardize(x.data, (-1,), eps)
    out = xhat * gain.data + bias.data

    def _backward(g):
        dxhat = g * gain.data
        gx = _standardize_backward(dxhat, xhat, inv, (-1,))
        flat_g = g.reshape(-1, n)
        return gx, (flat_g * xhat.reshape(-1, n)).sum(axis=0), flat_g.sum(axis=0)

    return make_result(out.astype(x.dtype, copy=False), (x, gain, bias), _backward, "layer_norm")


def _channel_affine_norm(x: Tensor, gain: Tensor, bias: Tensor, grouped: np.ndarray,
                         axes: tuple[int, ...], eps: float, op: str) -> Tensor:
    c = x.shape[1]
    if gain.shape != (c,) or bias.shape != (c,):
        raise ShapeError(f"{op}: gain/bias must have shape ({c},)")
    xhat_g, inv = _standardize(grouped, axes, eps)
    xhat = xhat_g.reshape(x.shape)
    bshape = (1, c) + (1,) * (x.ndim - 2)
    out = xhat * gain.data.reshape(bshape) + bias.data.reshape(bshape)
    other = (0,) + tuple(range(2, x.ndim))

    def _backward(g):
        dxhat = (g * gain.data.reshape(bshape)).reshape(grouped.shape)
        gx = _standardize_backward(dxhat, xhat_g, inv, axes).reshape(x.shape)
        return gx, (g * xhat).sum(axis=other), g.sum(axis=other)

    return make_result(out.astype(x.dtype, copy=False), (x, gain, bias), _backward, op)


def group_norm(x: Tensor, gain: Tensor, bias: Tensor, groups: int = 1, eps: float = 1e-5) -> Tensor:
    """Per-sample normalisation over (channels in group, spatial positions).

    ``groups == channels`` gives instance normalisation; ``groups == 1``
    normalises each sample over all channels and positions.
    """
    n, c = x.shape[:2]
    if c % groups:
        raise ShapeError(f"group_norm: {c} channels not divisible into {groups} groups")
    grouped = x.data.reshape((n, groups, c // groups) + x.shape[2:])
    axes = tuple(range(2, grouped.ndim))
    return _channel_affine_norm(x, gain, bias, grouped, axes, eps, "group_norm")


def batch_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-channel normalisation with statistics over the batch and positions.

    With a single sample this reduces to instance statistics.
    """
    axes = (0,) + tuple(range(2, x.ndim))
    return _channel_affine_norm(x, gain, bias, x.data, axes, eps, "batch_norm")


# -- 3D convolution and pooling ---------------------------------------------------


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def conv3d(x: Tensor, kernels: Tensor, stride=1, padding=0) -> Tensor:
    """Valid cross-correlation of a zero-padded (N,)C,D,H,W input.

    ``kernels`` has shape (C_out, C_in, kd, kh, kw). Lowered to chunked
    im2col matrix products along the output depth axis.
    """
    single = x.ndim == 4
    xd = x.data[None] if single else x.data
    if xd.ndim != 5 or kernels.ndim != 5:
        raise ShapeError(f"conv3d: expected (N,)C,D,H,W input and 5-D kernels, got {x.shape}, {kernels.shape}")
    n, c, d, h, w = xd.shape
    o, ck, kd, kh, kw = kernels.shape
    if ck != c:
        raise ShapeError(f"conv3d: input has {c} channels, kernels expect {ck}")
    sd, sh, sw = _triple(stride)
    pd, ph, pw = _triple(padding)
    if kd > d + 2 * pd or kh > h + 2 * ph or kw > w + 2 * pw:
        raise ShapeError(f"conv3d: kernel {(kd, kh, kw)} larger than padded input {(d + 2 * pd, h + 2 * ph, w + 2 * pw)}")
    do, ho, wo = conv_output_size(d, kd, sd, pd), conv_output_size(h, kh, sh, ph), conv_output_size(w, kw, sw, pw)
    xp = np.pad(xd, ((0, 0), (0, 0), (pd, pd), (ph, ph), (pw, pw))) if pd or ph or pw else xd
    win = sliding_window_view(xp, (kd, kh, kw), axis=(2, 3, 4))[:, :, ::sd, ::sh, ::sw]
    kvol = c * kd * kh * kw
    wmat = kernels.data.reshape(o, kvol)
    step = max(1, _COLS_BUDGET // max(1, n * ho * wo * kvol))

    def cols(d0, d1):
        block = win[:, :, d0:d1]
        return block.transpose(0, 2, 3, 4, 1, 5, 6, 7).reshape(-1, kvol)

    out = np.empty((n, o, do, ho, wo), dtype=np.result_type(xd, kernels.data))
    for d0 in range(0, do, step):
        d1 = min(do, d0 + step)
        res = cols(d0, d1) @ wmat.T
        out[:, :, d0:d1] = res.reshape(n, d1 - d0, ho, wo, o).transpose(0, 4, 1, 2, 3)

    def _backward(g):
        g5 = g[None] if single else g
        gx = np.zeros(xp.shape, dtype=xd.dtype) if x.requires_grad else None
        gw = np.zeros_like(wmat) if kernels.requires_grad else None
        for d0 in range(0, do, step):
            d1 = min(do, d0 + step)
            dd = d1 - d0
            gmat = g5[:, :, d0:d1].transpose(0, 2, 3, 4, 1).reshape(-1, o)
            if gw is not None:
                gw += gmat.T @ cols(d0, d1)
            if gx is not None:
                dcols = (gmat @ wmat).reshape(n, dd, ho, wo, c, kd, kh, kw)
                dct = dcols.transpose(0, 4, 5, 6, 7, 1, 2, 3)
                for a, b, e in itertools.product(range(kd), range(kh), range(kw)):
                    z0 = a + sd * d0
                    gx[:, :, z0:z0 + sd * (dd - 1) + 1:sd,
                       b:b + sh * (ho - 1) + 1:sh,
                       e:e + sw * (wo - 1) + 1:sw] += dct[:, :, a, b, e]
        if gx is not None:
            gx = gx[:, :, pd:pd + d, ph:ph + h, pw:pw + w]
            if single:
                gx = gx[0]
        return gx, (gw.reshape(kernels.shape) if gw is not None else None)

    return make_result(out[0] if single else out, (x, kernels), _backward, "conv3d")


def max_pool3d(x: Tensor, kernel=3, stride=2, padding=1) -> Tensor:
    """Max over (N,)C,D,H,W windows with -inf padding; ties route to the first offset."""
    single = x.ndim == 4
    xd = x.data[None] if single else x.data
    n, c, d, h, w = xd.shape
    kd, kh, kw = _triple(kernel)
    sd, sh, sw = _triple(stride)
    pd, ph, pw = _triple(padding)
    if kd > d + 2 * pd or kh > h + 2 * ph or kw > w + 2 * pw:
        raise ShapeError(f"max_pool3d: window larger than padded input {xd.shape}")
    if pd >= kd or ph >= kh or pw >= kw:
        raise ShapeError("max_pool3d: padding must be smaller than the window")
    do, ho, wo = conv_output_size(d, kd, sd, pd), conv_output_size(h, kh, sh, ph), conv_output_size(w, kw, sw, pw)
    xp = np.pad(xd, ((0, 0), (0, 0), (pd, pd), (ph, ph), (pw, pw)), constant_values=-np.inf)
    offsets = list(itertools.product(range(kd), range(kh), range(kw)))

    def window(arr, a, b, e):
        return arr[:, :, a:a + sd * (do - 1) + 1:sd, b:b + sh * (ho - 1) + 1:sh, e:e + sw * (wo - 1) + 1:sw]

    out = window(xp, *offsets[0]).copy()
    for off in offsets[1:]:
        np.maximum(out, window(xp, *off), out=out)

    def _backward(g):
        g5 = g[None] if single else g
        gx = np.zeros(xp.shape, dtype=xd.dtype)
        taken = np.zeros(out.shape, dtype=bool)
        for off in offsets:
            hit = (window(xp, *off) == out) & ~taken
            window(gx, *off)[...] += np.where(hit, g5, 0)
            taken |= hit
        gx = gx[:, :, pd:pd + d, ph:ph + h, pw:pw + w]
        return (gx[0] if single else gx,)

    return make_result(out[0] if single else out, (x,), _backward, "max_pool3d")


def global_avg_pool3d(x: Tensor) -> Tensor:
    """Mean over all D*H*W positions: (N,C,D,H,W) -> (N,C)."""
    if x.ndim != 5:
        raise ShapeError(f"global_avg_pool3d: expected 5-D input, got {x.shape}")
    count = math.prod(x.shape[2:])
    out = x.data.mean(axis=(2, 3, 4))

    def _backward(g):
        return (np.broadcast_to(g[:, :, None, None, None] / count, x.shape).copy(),)

    return make_result(out.astype(x.dtype, copy=False), (x,), _backward, "global_avg_pool3d")


# -- lookup and regularisation ------------------------------------------------------


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Rows of ``table`` selected by integer ``ids`` (any shape)."""
    ids = np.asarray(ids, dtype=np.int64)
    v, dim = table.shape
    if ids.size and (ids.min() < 0 or ids.max() >= v):
        raise ShapeError(f"embedding: ids out of range [0, {v})")
    out = table.data[ids]

    def _backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, dim))
        return (gt,)

    return make_result(out, (table,), _backward, "embedding")


def dropout(x: Tensor, p: float, rng: SplitMix64 | None, training: bool = True) -> Tensor:
    if not training or p <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / x.dtype.type(1.0 - p)
    return make_result(x.data * keep, (x,), lambda g: (g * keep,), "dropout")
