"""Synthetic IQ modulation tasks: symbol-rate constellations under AWGN.

Per sequence: i.i.d. symbols (unit mean constellation power) -> AWGN ->
normalization -> optional carrier-phase rotation. There is no pulse shaping,
frequency offset or multipath.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .data import DegenerateInputError, Splits, make_splits, stratified

PSK = ("BPSK", "QPSK", "8PSK")
QAM = ("QAM16", "QAM32", "QAM64")
MIXED = ("BPSK", "QPSK", "8PSK", "QAM16", "QAM64")
SNR_GRID = (-10.0, -6.0, -2.0, 2.0, 6.0, 10.0, 14.0, 18.0)
FIXED_PHI = math.pi / 3

# task -> (classes, snr_db, normalization, rotation)
TASKS = {
    "psk_only": (PSK, 10.0, "unit_power", "none"),
    "qam_only": (QAM, 10.0, "unit_power", "none"),
    "mixed": (MIXED, 10.0, "unit_power", "none"),
    "low_snr_psk": (PSK, -6.0, "unit_power", "none"),
    "high_snr_psk": (PSK, 18.0, "unit_power", "none"),
    "unit_mag_mixed": (MIXED, 10.0, "unit_magnitude", "none"),
    "fixed_rotation_psk": (PSK, 10.0, "unit_power", "fixed"),
    "rotation_aug_psk": (PSK, 10.0, "unit_power", "random_per_sample"),
    "awgn_replication": (PSK, SNR_GRID, "unit_power", "none"),
}
STRESS_TASKS = tuple(t for t in TASKS if t != "awgn_replication")


def _psk(m: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(m) / m)


def _square_qam(side: int) -> np.ndarray:
    lv = np.arange(-(side - 1), side, 2, dtype=float)
    return (lv[None, :] + 1j * lv[:, None]).ravel()


def _cross_qam32() -> np.ndarray:
    pts = _square_qam(6)
    return pts[~((np.abs(pts.real) == 5) & (np.abs(pts.imag) == 5))]


def _unit_power(points: np.ndarray) -> np.ndarray:
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


CONSTELLATIONS = {
    "BPSK": _psk(2),
    "QPSK": _psk(4),
    "8PSK": _psk(8),
    "QAM16": _unit_power(_square_qam(4)),
    "QAM32": _unit_power(_cross_qam32()),
    "QAM64": _unit_power(_square_qam(8)),
}


@dataclass
class RfCondition:
    task: str
    snr_db: float | tuple | None = None
    normalization: str | None = None
    rotation: str | None = None
    phi: float = FIXED_PHI
    T: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown RF task {self.task!r}; expected one of {tuple(TASKS)}")
        classes, snr, norm, rot = TASKS[self.task]
        self.snr_db = snr if self.snr_db is None else self.snr_db
        self.normalization = norm if self.normalization is None else self.normalization
        self.rotation = rot if self.rotation is None else self.rotation
        if self.normalization not in ("unit_power", "unit_magnitude"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.rotation not in ("none", "fixed", "random_per_sample"):
            raise ValueError(f"unknown rotation mode {self.rotation!r}")
        for s in np.atleast_1d(self.snr_db):
            if not -10.0 <= float(s) <= 18.0:
                raise ValueError(f"snr {s} dB outside [-10, 18]")
        if isinstance(self.snr_db, list):
            self.snr_db = tuple(self.snr_db)

    @property
    def classes(self) -> tuple:
        return TASKS[self.task][0]

    def echo(self) -> dict:
        d = asdict(self)
        d["classes"] = list(self.classes)
        return d


def gen_symbols(modulation: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. uniform constellation points (M-PSK point m is ``exp(2 pi i m / M)``)."""
    pts = CONSTELLATIONS[modulation]
    return pts[rng.integers(0, len(pts), size=n)]


def add_awgn(x: np.ndarray, snr_db, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise of total variance ``10**(-snr_db/10)``.

    ``snr_db`` may be an array broadcastable against ``x``.
    """
    var = 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)
    s = np.sqrt(var / 2)
    noise = s * (rng.standard_normal(np.shape(x)) + 1j * rng.standard_normal(np.shape(x)))
    return np.asarray(x) + noise


def normalize(x: np.ndarray, mode: str) -> np.ndarray:
    """Per sequence (last axis): unit mean power, or unit magnitude per sample."""
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    if np.any(np.all(mag == 0, axis=-1)):
        raise DegenerateInputError("cannot normalize an all-zero sequence")
    if mode == "unit_power":
        return x / np.sqrt(np.mean(mag ** 2, axis=-1, keepdims=True))
    if mode == "unit_magnitude":
        return np.where(mag > 0, x / np.where(mag > 0, mag, 1.0), 0.0)
    raise ValueError(f"unknown normalization {mode!r}")


def rotate(x: np.ndarray, phi) -> np.ndarray:
    """``x_t <- exp(i phi) x_t``; ``phi`` may be an array broadcast over leading axes."""
    phi = np.asarray(phi, dtype=float)
    return np.asarray(x) * np.exp(1j * phi)


def _split(cond: RfCondition, n_per_class: int, rng: np.random.Generator, rotation: str):
    classes = cond.classes
    snrs = np.atleast_1d(np.asarray(cond.snr_db, dtype=float))
    xs, ys, ss = [], [], []
    for label, mod in enumerate(classes):
        sym = gen_symbols(mod, n_per_class * cond.T, rng).reshape(n_per_class, 1, cond.T)
        snr = np.resize(snrs, n_per_class)  # equal count per SNR level when divisible
        noisy = add_awgn(sym, snr[:, None, None], rng)
        xs.append(normalize(noisy, cond.normalization))
        ys.append(np.full(n_per_class, label))
        ss.append(snr)
    x, y, snr = np.concatenate(xs), np.concatenate(ys), np.concatenate(ss)
    if rotation == "fixed":
        x = rotate(x, cond.phi)
    elif rotation == "random":
        x = rotate(x, rng.uniform(0, 2 * np.pi, size=(len(x), 1, 1)))
    return x, y, {"snr_db": snr}


def make_dataset(cond: RfCondition, n_per_class=(256, 64, 64)) -> Splits:
    """Class-balanced train/val/test splits, deterministic in ``cond.seed``.

    ``fixed`` rotation hits val/test only (train stays unrotated);
    ``random_per_sample`` rotates each training sequence by a fresh uniform
    angle and evaluates on the same fixed rotation as the ``fixed`` task.
    """
    counts = stratified(n_per_class)
    # rotation tasks draw the same symbols and noise as psk_only for a given seed
    base = "psk_only" if cond.task in ("fixed_rotation_psk", "rotation_aug_psk") else cond.task
    streams = np.random.SeedSequence([int(cond.seed), list(TASKS).index(base)]).spawn(3)
    train_rot = {"none": "none", "fixed": "none", "random_per_sample": "random"}[cond.rotation]
    eval_rot = "none" if cond.rotation == "none" else "fixed"
    parts = {}
    for name, n, ss, rot in zip(("train", "val", "test"), counts, streams, (train_rot, eval_rot, eval_rot)):
        parts[name] = _split(cond, n, np.random.default_rng(ss), rot)
    header = {"domain": "rf", "condition": cond.echo()}
    return make_splits(parts, cond.classes, header)
