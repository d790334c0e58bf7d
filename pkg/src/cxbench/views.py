"""Coordinate views: fixed transforms of complex ``[..., C, T]`` data into model inputs."""
from __future__ import annotations

import numpy as np

VIEWS = ("complex_native", "cartesian", "polar", "phase_only", "magnitude_only")
CHANNEL_MULTIPLIER = {"complex_native": 1, "cartesian": 2, "polar": 3, "phase_only": 2, "magnitude_only": 1}


def check_view(view: str) -> str:
    if view not in VIEWS:
        raise ValueError(f"unknown view {view!r}; expected one of {VIEWS}")
    return view


def unit_phasor(z: np.ndarray):
    """``(cos theta, sin theta)``; the phase of exactly 0 is taken as 0, i.e. ``(1, 0)``."""
    r = np.abs(z)
    nz = r > 0
    rs = np.where(nz, r, 1.0)
    return np.where(nz, z.real / rs, 1.0), np.where(nz, z.imag / rs, 0.0)


def _interleave(parts) -> np.ndarray:
    m = len(parts)
    first = parts[0]
    out = np.empty(first.shape[:-2] + (m * first.shape[-2], first.shape[-1]))
    for i, p in enumerate(parts):
        out[..., i::m, :] = p
    return out


def apply_view(view: str, z) -> np.ndarray:
    """Per complex channel: cartesian ``(x, y)``, polar ``(|z|, cos, sin)``,
    phase_only ``(cos, sin)``, magnitude_only ``|z|``; complex_native is the identity.
    """
    z = np.asarray(z, dtype=complex)
    view = check_view(view)
    if view == "complex_native":
        return z.copy()
    if view == "magnitude_only":
        return np.abs(z)
    if view == "cartesian":
        return _interleave([z.real, z.imag])
    c, s = unit_phasor(z)
    if view == "phase_only":
        return _interleave([c, s])
    return _interleave([np.abs(z), c, s])


def output_channels(view: str, complex_channels: int) -> int:
    return CHANNEL_MULTIPLIER[check_view(view)] * complex_channels
