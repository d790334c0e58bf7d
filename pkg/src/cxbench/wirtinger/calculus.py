"""Wirtinger derivatives from real partials, and the finite-difference oracle."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..cnum import Cplx


class FlaggedSampleError(ValueError):
    """Evaluation point sits inside the guard band of a non-differentiable locus."""


@dataclass(frozen=True)
class WirtingerPair:
    d_z: Cplx
    d_zbar: Cplx

    @classmethod
    def from_partials(cls, f_x: complex, f_y: complex) -> "WirtingerPair":
        return cls(Cplx.of(0.5 * (f_x - 1j * f_y)), Cplx.of(0.5 * (f_x + 1j * f_y)))


def wirtinger_pair(
    f: Callable[[complex], complex],
    z,
    h: float = 1e-6,
    kink_distance: Callable[[complex], float] | None = None,
    guard: float = 1e-3,
) -> WirtingerPair:
    """Numerical ``(df/dz, df/dzbar)`` from central differences along x and y.

    ``kink_distance`` (optional) reports how far ``z`` is from the points where
    ``f`` is not real-differentiable; closer than ``guard`` raises
    :class:`FlaggedSampleError`.
    """
    z = complex(z)
    if kink_distance is not None and kink_distance(z) < guard:
        raise FlaggedSampleError(f"{z} is within {guard} of a non-differentiable locus")
    f_x = (complex(f(z + h)) - complex(f(z - h))) / (2 * h)
    f_y = (complex(f(z + 1j * h)) - complex(f(z - 1j * h))) / (2 * h)
    return WirtingerPair.from_partials(f_x, f_y)


def wirtinger_from_jacobian(ux, uy, vx, vy):
    """Vectorized ``(df/dz, df/dzbar)`` from the real Jacobian of ``f = u + iv``."""
    f_x = ux + 1j * vx
    f_y = uy + 1j * vy
    return 0.5 * (f_x - 1j * f_y), 0.5 * (f_x + 1j * f_y)


def numeric_gradient(loss_fn: Callable[[np.ndarray], float], values: np.ndarray, h: float) -> np.ndarray:
    theta = np.array(values, dtype=float)
    out = np.empty_like(theta)
    for i in range(theta.size):
        keep = theta[i]
        theta[i] = keep + h
        lp = loss_fn(theta)
        theta[i] = keep - h
        lm = loss_fn(theta)
        theta[i] = keep
        out[i] = (lp - lm) / (2 * h)
    return out


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def finite_diff_check(model, batch, h: float = 1e-4) -> float:
    """Max relative error of backprop gradients against central differences.

    ``model`` needs ``params`` (a ParamStore), ``loss_and_grad(x, y)`` and
    ``loss_at(values, x, y)``. ``batch`` is ``(x, y)``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x, y = batch
    _, analytic = model.loss_and_grad(x, y)
    numeric = numeric_gradient(lambda th: model.loss_at(th, x, y), model.params.values, h)
    return max_relative_error(analytic, numeric)
