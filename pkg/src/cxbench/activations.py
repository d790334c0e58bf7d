"""Complex activations, their real Jacobians, and holomorphy/equivariance diagnostics.

Each activation is a map ``sigma(x + iy) = u + iv``. ``jacobian`` returns the
values together with the four real partials (plus the partials with respect
to the ModReLU bias). At kinks the inactive-side limit is used, as for real
ReLU at zero.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np

from .cnum import Cplx
from .wirtinger.calculus import FlaggedSampleError

COMPLEX_ACTIVATIONS = ("crelu", "zrelu", "modrelu", "cardioid", "siglog", "ctanh")
ACTIVATIONS = COMPLEX_ACTIVATIONS + ("real_relu",)
PHASE_EQUIVARIANT = frozenset({"modrelu", "siglog"})

CTANH_CLAMP = 1e6
KINK_GUARD = 1e-3
GRID_STEP = 0.05
BOUND_THRESHOLD = 10.0
# with b = 0 modrelu is the identity off the origin, so the scan uses a gated bias
MODRELU_SCAN_BIAS = -0.5


class ClampWarning(RuntimeWarning):
    """ComplexTanh output was clamped near a pole."""


def check_id(act: str) -> str:
    if act not in ACTIVATIONS:
        raise ValueError(f"unknown activation {act!r}; expected one of {ACTIVATIONS}")
    return act


def _zeros(x):
    return np.zeros_like(x)


def _crelu(x, y, b):
    mx, my = (x > 0).astype(float), (y > 0).astype(float)
    z = _zeros(x)
    return x * mx, y * my, mx, z, z, my, z, z


def _zrelu(x, y, b):
    # value keeps the closed quadrant; derivative uses the open one (inactive-side limit)
    keep = (x >= 0) & (y >= 0)
    m = ((x > 0) & (y > 0)).astype(float)
    z = _zeros(x)
    return np.where(keep, x, 0.0), np.where(keep, y, 0.0), m, z, z, m, z, z


def _modrelu(x, y, b):
    b = 0.0 if b is None else b
    r = np.hypot(x, y)
    s = r + b
    on = (s > 0) & (r > 0)
    rs = np.where(on, r, 1.0)
    c, sn = x / rs, y / rs
    r3 = rs ** 3
    bb = b + _zeros(x)
    u = np.where(on, s * c, 0.0)
    v = np.where(on, s * sn, 0.0)
    ux = np.where(on, 1 + bb * y * y / r3, 0.0)
    uy = np.where(on, -bb * x * y / r3, 0.0)
    vy = np.where(on, 1 + bb * x * x / r3, 0.0)
    ub = np.where(on, c, 0.0)
    vb = np.where(on, sn, 0.0)
    return u, v, ux, uy, uy.copy(), vy, ub, vb


def _cardioid(x, y, b):
    r = np.hypot(x, y)
    nz = r > 0
    rs = np.where(nz, r, 1.0)
    c = np.where(nz, x / rs, 1.0)  # cos(arg 0) = 1
    r3 = rs ** 3
    u = 0.5 * (1 + c) * x
    v = 0.5 * (1 + c) * y
    ux = np.where(nz, 0.5 * (1 + 2 * x / rs - x ** 3 / r3), 1.0)
    uy = np.where(nz, -0.5 * x * x * y / r3, 0.0)
    vx = np.where(nz, 0.5 * y ** 3 / r3, 0.0)
    vy = np.where(nz, 0.5 * (1 + x / rs - x * y * y / r3), 1.0)
    z = _zeros(x)
    return u, v, ux, uy, vx, vy, z, z


def _siglog(x, y, b):
    r = np.hypot(x, y)
    d = 1 + r
    rs = np.where(r > 0, r, 1.0)
    k = np.where(r > 0, 1.0 / (rs * d * d), 0.0)
    u, v = x / d, y / d
    ux = 1 / d - x * x * k
    uy = -x * y * k
    vy = 1 / d - y * y * k
    z = _zeros(x)
    return u, v, ux, uy, uy.copy(), vy, z, z


def ctanh_values(x, y):
    """``tanh(x + iy)`` through ``(tanh x + i tan y) / (1 + i tanh x tan y)``.

    Returns ``(u, v, clamped)``; magnitudes above ``CTANH_CLAMP`` are scaled
    down to it and marked in ``clamped``.
    """
    a = np.tanh(x)
    t = np.tan(y)
    with np.errstate(over="ignore", invalid="ignore"):
        den = 1 + (a * t) ** 2
        u = a * (1 + t * t) / den
        v = t * (1 - a * a) / den
        # a*t overflow: the limit is 1/a on the real axis
        u = np.where(np.isfinite(u), u, 1 / np.where(a == 0, 1.0, a))
        v = np.where(np.isfinite(v), v, 0.0)
    mag = np.hypot(u, v)
    clamped = mag > CTANH_CLAMP
    if np.any(clamped):
        f = np.where(clamped, CTANH_CLAMP / np.where(clamped, mag, 1.0), 1.0)
        u, v = u * f, v * f
    return u, v, clamped


def _ctanh(x, y, b):
    u, v, clamped = ctanh_values(x, y)
    if np.any(clamped):
        warnings.warn(f"ctanh clamped {int(np.sum(clamped))} value(s) near a pole", ClampWarning)
    # holomorphic: f' = 1 - f^2, and the Jacobian follows Cauchy-Riemann
    dr = 1 - (u * u - v * v)
    di = -2 * u * v
    z = _zeros(x)
    return u, v, dr, -di, di, dr, z, z


_JAC = {
    "crelu": _crelu,
    "real_relu": _crelu,
    "zrelu": _zrelu,
    "modrelu": _modrelu,
    "cardioid": _cardioid,
    "siglog": _siglog,
    "ctanh": _ctanh,
}


def jacobian(act: str, x, y, b=None):
    """``(u, v, du/dx, du/dy, dv/dx, dv/dy, du/db, dv/db)`` elementwise."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _JAC[check_id(act)](x, y, b)


def evaluate(act: str, z, bias=None) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = jacobian(act, z.real, z.imag, bias)
    return out[0] + 1j * out[1]


def apply(act: str, z, bias: float | None = None):
    """Apply an activation to a ``Cplx``, a Python complex, or a complex array."""
    check_id(act)
    if act == "modrelu":
        bias = 0.0 if bias is None else bias
    elif bias is not None:
        raise ValueError(f"bias is only meaningful for modrelu, got one for {act!r}")
    if isinstance(z, Cplx):
        return Cplx.of(complex(evaluate(act, complex(z), bias)))
    out = evaluate(act, z, bias)
    return out if isinstance(z, np.ndarray) else complex(out)


def kink_distance(act: str, z, bias: float = 0.0):
    """Distance from ``z`` to the set where ``act`` is not real-differentiable."""
    z = np.asarray(z, dtype=complex)
    x, y, r = z.real, z.imag, np.abs(z)
    act = check_id(act)
    if act in ("crelu", "zrelu", "real_relu"):
        return np.minimum(np.abs(x), np.abs(y))
    if act == "modrelu":
        return np.minimum(r, np.abs(r + bias))
    if act in ("cardioid", "siglog"):
        return r
    # ctanh: poles at i*pi*(n + 1/2)
    n = np.round(y / np.pi - 0.5)
    return np.hypot(x, y - np.pi * (n + 0.5))


def cr_residual(act: str, z, bias: float = 0.0, h: float = 1e-6, guard: float = KINK_GUARD):
    """``|d sigma / d zbar|`` by central differences along x and y.

    Scalar input on (or within ``guard`` of) a kink raises
    :class:`FlaggedSampleError`; array input returns NaN at those points.
    """
    b = bias if act == "modrelu" else None
    zz = np.asarray(z, dtype=complex)
    flagged = kink_distance(act, zz, bias) < guard
    if zz.ndim == 0 and flagged:
        raise FlaggedSampleError(f"{complex(zz)} is within {guard} of a kink of {act}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        f_x = (evaluate(act, zz + h, b) - evaluate(act, zz - h, b)) / (2 * h)
        f_y = (evaluate(act, zz + 1j * h, b) - evaluate(act, zz - 1j * h, b)) / (2 * h)
    res = np.abs(0.5 * (f_x + 1j * f_y))
    if zz.ndim == 0:
        return float(res)
    return np.where(flagged, np.nan, res)


def phase_equivariance_defect(act: str, z, phi: float, bias: float | None = None):
    """``|sigma(e^{i phi} z) - e^{i phi} sigma(z)|``."""
    b = (0.0 if bias is None else bias) if act == "modrelu" else None
    rot = np.exp(1j * phi)
    zz = np.asarray(complex(z) if isinstance(z, Cplx) else z, dtype=complex)
    d = np.abs(evaluate(act, rot * zz, b) - rot * evaluate(act, zz, b))
    return float(d) if d.ndim == 0 else d


def scan_grid(step: float = GRID_STEP, extent: float = 3.0) -> np.ndarray:
    n = int(round(2 * extent / step)) + 1
    axis = np.linspace(-extent, extent, n)
    return axis[None, :] + 1j * axis[:, None]


@dataclass(frozen=True)
class TrilemmaReport:
    activation: str
    grad_norm_mean: float
    grad_norm_std: float
    cr_median: float
    cr_p95: float
    max_abs: float
    bounded_on_grid: bool

    def row(self) -> dict:
        return {
            "activation": self.activation,
            "grad_norm_mean": f"{self.grad_norm_mean:.6g}",
            "grad_norm_std": f"{self.grad_norm_std:.6g}",
            "cr_median": f"{self.cr_median:.6g}",
            "cr_p95": f"{self.cr_p95:.6g}",
            "max_abs": f"{self.max_abs:.6g}",
            "bounded": str(self.bounded_on_grid).lower(),
        }


TRILEMMA_FIELDS = ("activation", "grad_norm_mean", "grad_norm_std", "cr_median", "cr_p95", "max_abs", "bounded")


def init_grad_norms(act: str, init_seeds, width: int = 16, batch: int = 64) -> np.ndarray:
    """Total gradient norm of the reference complex model at initialization."""
    from .families import FamilySpec, build
    from .rfgen import RfCondition, make_dataset

    data = make_dataset(RfCondition(task="mixed", seed=0), n_per_class=(batch, 8, 8)).train
    x, y = data.x[:batch], data.y[:batch]
    norms = []
    for s in init_seeds:
        model = build(FamilySpec("complex", activation=act, width=width),
                      n_classes=data.n_classes, in_channels=x.shape[1], seed=int(s))
        _, g = model.loss_and_grad(x, y)
        norms.append(np.linalg.norm(g))
    return np.asarray(norms)


def trilemma_scan(act: str, grid: np.ndarray | None = None, init_seeds=(0, 1, 2, 3, 4)) -> TrilemmaReport:
    grid = scan_grid() if grid is None else np.asarray(grid)
    if grid.ndim != 2 or min(grid.shape) < 64:
        raise ValueError("trilemma grid must be at least 64x64")
    bias = MODRELU_SCAN_BIAS if act == "modrelu" else None
    res = cr_residual(act, grid, bias or 0.0)
    res = res[np.isfinite(res)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        max_abs = float(np.max(np.abs(evaluate(act, grid, bias))))
    g = init_grad_norms(act, init_seeds) if len(init_seeds) else np.array([np.nan])
    return TrilemmaReport(
        activation=act,
        grad_norm_mean=float(np.mean(g)),
        grad_norm_std=float(np.std(g)),
        cr_median=float(np.median(res)),
        cr_p95=float(np.percentile(res, 95)),
        max_abs=max_abs,
        bounded_on_grid=bool(max_abs <= BOUND_THRESHOLD),
    )


def trilemma_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TRILEMMA_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()
