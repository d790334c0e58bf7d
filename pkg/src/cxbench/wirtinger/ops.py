"""Primitive operations recorded on a :class:`Tape`.

Every primitive works on real arrays. Complex layers and activations are
expressed through real coordinates, with their local Jacobians written out
explicitly.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tape import CVar, ContractError, Var


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _tape(*vs):
    for v in vs:
        if isinstance(v, Var):
            return v.tape
    raise ContractError("no tape among operands")


def add(a: Var, b: Var) -> Var:
    sa, sb = a.shape, b.shape
    return Var(a.tape, a.value + b.value, (a, b),
               lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a: Var, b: Var) -> Var:
    sa, sb = a.shape, b.shape
    return Var(a.tape, a.value - b.value, (a, b),
               lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    return Var(a.tape, av * bv, (a, b),
               lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def scale(a: Var, c: float) -> Var:
    return Var(a.tape, c * a.value, (a,), lambda g: (c * g,))


def reshape(a: Var, shape) -> Var:
    old = a.shape
    return Var(a.tape, a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def sum_all(a: Var) -> Var:
    shape = a.shape
    return Var(a.tape, np.asarray(a.value.sum()), (a,),
               lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a: Var, axis: int) -> Var:
    shape = a.shape
    n = shape[axis]

    def vjp(g):
        return (np.broadcast_to(np.expand_dims(g, axis) / n, shape).copy(),)

    return Var(a.tape, a.value.mean(axis=axis), (a,), vjp)


def concat(parts: list, axis: int) -> Var:
    sizes = [p.shape[axis] for p in parts]
    cuts = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, cuts, axis=axis))

    return Var(parts[0].tape, np.concatenate([p.value for p in parts], axis=axis),
               tuple(parts), vjp)


def relu(a: Var) -> Var:
    mask = a.value > 0
    return Var(a.tape, np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def linear(x: Var, w: Var) -> Var:
    """``x @ w.T`` with ``x: [B, D]`` and ``w: [H, D]``."""
    xv, wv = x.value, w.value
    return Var(x.tape, xv @ wv.T, (x, w), lambda g: (g @ wv, g.T @ xv))


def bias_channels(x: Var, b: Var) -> Var:
    """Add a per-channel bias ``b: [C]`` to ``x: [B, C, T]``."""
    return Var(x.tape, x.value + b.value[None, :, None], (x, b),
               lambda g: (g, g.sum(axis=(0, 2))))


def _patches(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    """``[B, C, T] -> [B*T', C*k]`` valid-mode windows."""
    B, C, T = x.shape
    if T < k:
        raise ValueError(f"sequence length {T} shorter than kernel {k}")
    win = sliding_window_view(x, k, axis=2)[:, :, ::stride, :]
    Tp = win.shape[2]
    return np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(B * Tp, C * k), Tp


def _fold(dp: np.ndarray, B: int, C: int, T: int, Tp: int, k: int, stride: int) -> np.ndarray:
    dp = dp.reshape(B, Tp, C, k)
    dx = np.zeros((B, C, T))
    span = stride * (Tp - 1) + 1
    for j in range(k):
        dx[:, :, j:j + span:stride] += dp[:, :, :, j].transpose(0, 2, 1)
    return dx


def conv_valid(x: np.ndarray, w: np.ndarray, stride: int = 1) -> np.ndarray:
    """Plain numpy valid-mode 1-D cross-correlation, ``[B,C,T] x [O,C,k]``."""
    B, C, T = x.shape
    O, Cw, k = w.shape
    if Cw != C:
        raise ValueError(f"channel mismatch: input {C}, kernel {Cw}")
    P, Tp = _patches(x, k, stride)
    return (P @ w.reshape(O, C * k).T).reshape(B, Tp, O).transpose(0, 2, 1)


def _is_input(v: Var) -> bool:
    """A constant leaf (data): no gradient needs to flow into it."""
    return v.slot is None and not v.parents


def conv1d(x: Var, w: Var, stride: int = 1) -> Var:
    xv, wv = x.value, w.value
    B, C, T = xv.shape
    O, Cw, k = wv.shape
    if Cw != C:
        raise ValueError(f"channel mismatch: input {C}, kernel {Cw}")
    P, Tp = _patches(xv, k, stride)
    W2 = wv.reshape(O, C * k)
    out = (P @ W2.T).reshape(B, Tp, O).transpose(0, 2, 1)

    def vjp(g):
        G = g.transpose(0, 2, 1).reshape(B * Tp, O)
        dW = (G.T @ P).reshape(O, C, k)
        dx = None if _is_input(x) else _fold(G @ W2, B, C, T, Tp, k, stride)
        return dx, dW

    return Var(x.tape, out, (x, w), vjp)


def cconv1d(x: CVar, w: CVar, stride: int = 1) -> CVar:
    """Complex valid-mode convolution; each tap is the product ``(ax - by) + i(ay + bx)``.

    ``x`` is ``[B, C, T]`` complex, ``w`` is ``[O, C, k]`` complex. The two
    outputs share one node so the backward pass sees the full 2x2 coupling.
    """
    xr, xi, wr, wi = x.re.value, x.im.value, w.re.value, w.im.value
    B, C, T = xr.shape
    O, Cw, k = wr.shape
    if Cw != C:
        raise ValueError(f"channel mismatch: input {C}, kernel {Cw}")
    Pr, Tp = _patches(xr, k, stride)
    Pi, _ = _patches(xi, k, stride)
    Wr, Wi = wr.reshape(O, C * k), wi.reshape(O, C * k)
    # (a + ib)(x + iy) per tap, summed over taps and input channels
    yr = Pr @ Wr.T - Pi @ Wi.T
    yi = Pr @ Wi.T + Pi @ Wr.T
    tape = x.re.tape
    stacked = np.stack([yr, yi])  # [2, B*T', O]
    node = Var(tape, stacked, (x.re, x.im, w.re, w.im), None)

    def vjp(g):
        gr, gi = g[0], g[1]
        dWr = gr.T @ Pr + gi.T @ Pi
        dWi = gi.T @ Pr - gr.T @ Pi
        dxr = dxi = None
        if not (_is_input(x.re) and _is_input(x.im)):
            dxr = _fold(gr @ Wr + gi @ Wi, B, C, T, Tp, k, stride)
            dxi = _fold(gi @ Wr - gr @ Wi, B, C, T, Tp, k, stride)
        return dxr, dxi, dWr.reshape(O, C, k), dWi.reshape(O, C, k)

    node.vjp = vjp
    return CVar(_pick(node, 0, B, Tp, O), _pick(node, 1, B, Tp, O))


def _pick(node: Var, comp: int, B: int, Tp: int, O: int) -> Var:
    def vjp(g):
        full = np.zeros_like(node.value)
        full[comp] = g.transpose(0, 2, 1).reshape(B * Tp, O)
        return (full,)

    val = node.value[comp].reshape(B, Tp, O).transpose(0, 2, 1)
    return Var(node.tape, val, (node,), vjp)


def complex_map(fn, z: CVar, bias: Var | None = None) -> CVar:
    """Elementwise complex map with an explicit real 2x2 Jacobian.

    ``fn(x, y, b)`` returns ``(u, v, ux, uy, vx, vy, ub, vb)``; ``b`` is the
    per-channel bias broadcast over ``[B, C, T]`` (or ``None``).
    """
    x, y = z.re.value, z.im.value
    b = None if bias is None else bias.value[None, :, None]
    u, v, ux, uy, vx, vy, ub, vb = fn(x, y, b)
    tape = z.re.tape
    parents = (z.re, z.im) if bias is None else (z.re, z.im, bias)
    node = Var(tape, np.stack([u, v]), parents, None)

    def vjp(g):
        gu, gv = g[0], g[1]
        grads = [gu * ux + gv * vx, gu * uy + gv * vy]
        if bias is not None:
            grads.append((gu * ub + gv * vb).sum(axis=(0, 2)))
        return tuple(grads)

    node.vjp = vjp
    return CVar(_take(node, 0), _take(node, 1))


def _take(node: Var, comp: int) -> Var:
    def vjp(g):
        full = np.zeros_like(node.value)
        full[comp] = g
        return (full,)

    return Var(node.tape, node.value[comp], (node,), vjp)


def softmax_cross_entropy(logits: Var, labels: np.ndarray) -> Var:
    """Mean over the batch of ``-log softmax(logits)[label]``; scalar node."""
    z = logits.value
    labels = np.asarray(labels)
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    n = z.shape[0]
    loss = np.mean(lse - z[np.arange(n), labels])

    def vjp(g):
        p = np.exp(z - lse[:, None])
        p[np.arange(n), labels] -= 1.0
        return (g * p / n,)

    return Var(logits.tape, np.asarray(loss), (logits,), vjp)
