"""Complex scalars, the 2x2 real embedding of complex multiplication, rotations.

Conventions used everywhere in the package:

* channel order is ``(re, im)``;
* ``J = [[0, -1], [1, 0]]`` so that ``as_real_matrix(a + ib) = a*I + b*J``;
* ``arg`` lives in ``(-pi, pi]`` (two-argument arctangent, with ``-pi`` folded
  onto ``+pi`` so signed zeros do not leak through).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Cplx:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError(f"non-finite complex scalar ({self.re}, {self.im})")

    @classmethod
    def of(cls, z: complex) -> "Cplx":
        z = complex(z)
        return cls(z.real, z.imag)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)

    @property
    def arg(self) -> float:
        return float(angle(complex(self)))

    def conj(self) -> "Cplx":
        return Cplx(self.re, -self.im)

    def vec(self) -> np.ndarray:
        return np.array([self.re, self.im])


@dataclass(frozen=True)
class RealMat2:
    """Row-major 2x2 real matrix ``[[p, q], [r, s]]``."""

    p: float
    q: float
    r: float
    s: float

    @classmethod
    def from_array(cls, a) -> "RealMat2":
        a = np.asarray(a, dtype=float)
        if a.shape != (2, 2):
            raise ValueError(f"expected a 2x2 array, got shape {a.shape}")
        return cls(*(float(v) for v in a.ravel()))

    def as_array(self) -> np.ndarray:
        return np.array([[self.p, self.q], [self.r, self.s]])

    def __matmul__(self, other):
        if isinstance(other, RealMat2):
            return RealMat2.from_array(self.as_array() @ other.as_array())
        return self.as_array() @ np.asarray(other, dtype=float)

    def __add__(self, other: "RealMat2") -> "RealMat2":
        return RealMat2.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "RealMat2") -> "RealMat2":
        return RealMat2.from_array(self.as_array() - other.as_array())

    def scale(self, c: float) -> "RealMat2":
        return RealMat2.from_array(c * self.as_array())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.as_array())))


I = RealMat2(1.0, 0.0, 0.0, 1.0)
J = RealMat2(0.0, -1.0, 1.0, 0.0)


def angle(z):
    """``arg z`` in ``(-pi, pi]`` for scalars or arrays; ``arg 0 = 0``."""
    th = np.arctan2(np.imag(z), np.real(z))
    return np.where(th <= -np.pi, th + 2 * np.pi, th)


def cmul(w: Cplx, z: Cplx) -> Cplx:
    return Cplx(w.re * z.re - w.im * z.im, w.re * z.im + w.im * z.re)


def cmul_arrays(a_re, a_im, b_re, b_im):
    """Elementwise ``(a_re + i a_im)(b_re + i b_im)`` on real coordinate arrays."""
    return a_re * b_re - a_im * b_im, a_re * b_im + a_im * b_re


def as_real_matrix(w: Cplx) -> RealMat2:
    return RealMat2(w.re, -w.im, w.im, w.re)


def rotation(phi: float) -> RealMat2:
    c, s = math.cos(phi), math.sin(phi)
    return RealMat2(c, -s, s, c)


def nearest_complex_scalar(W: RealMat2) -> tuple[float, float]:
    """Orthogonal projection of ``W`` onto span{I, J}: ``a = (p+s)/2, b = (r-q)/2``."""
    return (W.p + W.s) / 2.0, (W.r - W.q) / 2.0


def commutes_with_rotations(W: RealMat2, tol: float) -> bool:
    """True iff ``W`` commutes with the rotation generator ``J`` to within ``tol``.

    Commuting with ``J`` is the infinitesimal form of ``W R_phi = R_phi W`` for
    every ``phi``, and holds exactly when ``W = a I + b J``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return (W @ J - J @ W).max_abs() <= tol
