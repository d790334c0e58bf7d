"""Plain numpy 1-D layers used by the reference architecture and its witnesses.

``cconv_forward`` and ``constrained_real_forward`` are deliberately separate
code paths: the first multiplies complex taps with ``cmul``; the second builds
the interleaved real kernel out of ``[[a, -b], [b, a]]`` blocks and runs an
ordinary real convolution. Agreement between them is the equivalence witness.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cnum import cmul_arrays


class ShapeError(ValueError):
    pass


def _out_len(T: int, k: int, stride: int) -> int:
    if T < k:
        raise ShapeError(f"sequence length {T} is shorter than kernel size {k}")
    return (T - k) // stride + 1


def init_std(in_ch: int, k: int) -> float:
    """Per-real-coordinate std: variance ``1 / (in_ch * k)``."""
    return 1.0 / np.sqrt(in_ch * k)


@dataclass
class ComplexConv1d:
    weight: np.ndarray  # complex [out, in, k]
    bias: np.ndarray  # complex [out]
    stride: int = 1

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=complex)
        self.bias = np.asarray(self.bias, dtype=complex)
        if self.weight.ndim != 3 or self.weight.shape[2] % 2 == 0:
            raise ShapeError("complex kernel must be [out, in, k] with odd k")
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeError("bias must have one entry per output channel")

    @classmethod
    def random(cls, rng, in_ch: int, out_ch: int, k: int = 5, stride: int = 1, bias: bool = True):
        s = init_std(in_ch, k)
        w = s * (rng.standard_normal((out_ch, in_ch, k)) + 1j * rng.standard_normal((out_ch, in_ch, k)))
        b = np.zeros(out_ch, dtype=complex)
        if bias:
            b = s * (rng.standard_normal(out_ch) + 1j * rng.standard_normal(out_ch))
        return cls(w, b, stride)

    @property
    def n_params(self) -> int:
        o, c, k = self.weight.shape
        return 2 * (o * c * k + o)

    def taps(self):
        return self.weight.real.copy(), self.weight.imag.copy()


@dataclass
class RealConv1d:
    weight: np.ndarray  # [out, in, k]
    bias: np.ndarray  # [out]
    stride: int = 1

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weight.ndim != 3 or self.weight.shape[2] % 2 == 0:
            raise ShapeError("real kernel must be [out, in, k] with odd k")

    @property
    def n_params(self) -> int:
        o, c, k = self.weight.shape
        return o * c * k + o


@dataclass
class Head:
    """Two dense layers: ``fc`` (hidden, ReLU) then ``head`` (logits)."""

    fc_weight: np.ndarray  # [hidden, in]
    fc_bias: np.ndarray
    weight: np.ndarray  # [classes, hidden]
    bias: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.weight.shape[0]


def cconv_forward(layer: ComplexConv1d, x: np.ndarray) -> np.ndarray:
    """Valid-mode complex convolution of ``x: [in_ch, T]`` (or ``[B, in_ch, T]``)."""
    x = np.asarray(x, dtype=complex)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    O, C, k = layer.weight.shape
    if x.shape[1] != C:
        raise ShapeError(f"expected {C} input channels, got {x.shape[1]}")
    s = layer.stride
    Tp = _out_len(x.shape[2], k, s)
    span = s * (Tp - 1) + 1
    yr = np.zeros((x.shape[0], O, Tp))
    yi = np.zeros_like(yr)
    for j in range(k):
        xj = x[:, :, j:j + span:s]  # [B, C, T']
        w = layer.weight[:, :, j]  # [O, C]
        pr, pi = cmul_arrays(w.real[None, :, :, None], w.imag[None, :, :, None],
                             xj.real[:, None], xj.imag[:, None])
        yr += pr.sum(axis=2)
        yi += pi.sum(axis=2)
    y = yr + 1j * yi + layer.bias[None, :, None]
    return y[0] if squeeze else y


def stack_channels(z: np.ndarray) -> np.ndarray:
    """Complex ``[..., C, T]`` to real ``[..., 2C, T]`` in ``(re1, im1, re2, im2, ...)`` order."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-2] + (2 * z.shape[-2], z.shape[-1]))
    out[..., 0::2, :] = z.real
    out[..., 1::2, :] = z.imag
    return out


def unstack_channels(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-2] % 2:
        raise ShapeError("interleaved layout needs an even channel count")
    return x[..., 0::2, :] + 1j * x[..., 1::2, :]


def constrained_kernel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Real ``[2O, 2C, k]`` kernel whose 2x2 tap blocks are ``[[a, -b], [b, a]]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 3:
        raise ShapeError("taps a and b must both be [out, in, k]")
    O, C, k = a.shape
    W = np.zeros((2 * O, 2 * C, k))
    W[0::2, 0::2] = a
    W[0::2, 1::2] = -b
    W[1::2, 0::2] = b
    W[1::2, 1::2] = a
    return W


def real_conv(x: np.ndarray, weight: np.ndarray, bias=None, stride: int = 1) -> np.ndarray:
    """Valid-mode real cross-correlation of ``x: [(B,) C, T]`` with ``weight: [O, C, k]``."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    O, C, k = weight.shape
    if x.shape[1] != C:
        raise ShapeError(f"expected {C} input channels, got {x.shape[1]}")
    Tp = _out_len(x.shape[2], k, stride)
    span = stride * (Tp - 1) + 1
    y = np.zeros((x.shape[0], O, Tp))
    for j in range(k):
        y += np.einsum("oc,bct->bot", weight[:, :, j], x[:, :, j:j + span:stride])
    if bias is not None:
        y += np.asarray(bias, dtype=float)[None, :, None]
    return y[0] if squeeze else y


def constrained_real_forward(taps, x_stacked: np.ndarray, bias=None, stride: int = 1) -> np.ndarray:
    """Stacked-real convolution with kernel taps restricted to the ``aI + bJ`` subspace.

    ``taps`` is ``(a, b)``, each ``[out, in, k]``; ``x_stacked`` uses the
    interleaved ``(re, im)`` channel layout. ``bias`` may be complex ``[out]``.
    """
    a, b = taps
    W = constrained_kernel(a, b)
    if np.shape(x_stacked)[-2] != W.shape[1]:
        raise ShapeError(f"layout mismatch: expected {W.shape[1]} stacked channels, got {np.shape(x_stacked)[-2]}")
    rb = None
    if bias is not None:
        bias = np.asarray(bias, dtype=complex)
        rb = np.empty(2 * bias.size)
        rb[0::2], rb[1::2] = bias.real, bias.imag
    return real_conv(x_stacked, W, rb, stride)


def real_conv_forward(layer: RealConv1d, x: np.ndarray) -> np.ndarray:
    return real_conv(x, layer.weight, layer.bias, layer.stride)


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] < 1:
        raise ShapeError("cannot pool an empty sequence")
    return x.mean(axis=-1)


def complex_features(pooled: np.ndarray) -> np.ndarray:
    """``[..., C]`` complex to ``[..., 2C]`` real: all real parts then all imaginary parts."""
    pooled = np.asarray(pooled)
    return np.concatenate([pooled.real, pooled.imag], axis=-1)


def head_forward(head: Head, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features)
    if np.iscomplexobj(features):
        features = complex_features(features)
    if features.shape[-1] != head.fc_weight.shape[1]:
        raise ShapeError(f"head expects {head.fc_weight.shape[1]} features, got {features.shape[-1]}")
    h = np.maximum(features @ head.fc_weight.T + head.fc_bias, 0.0)
    return h @ head.weight.T + head.bias
