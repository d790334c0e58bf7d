"""Synthetic analytic-signal EEG tasks, 4 channels x 64 samples, 4 classes.

Signals are built directly as ``envelope * exp(i * phase)``. Each task puts
its label on one axis (phase lag, amplitude burst, or phase-amplitude
coupling) and randomizes the other axis independently of the class.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .data import Splits, make_splits, stratified

CHANNELS = 4
T = 64
LAGS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
TASKS = ("phase_locking", "amplitude_event", "pac", "reference_shift", "reference_aug")
BASE_TASK = {"reference_shift": "phase_locking", "reference_aug": "phase_locking"}


@dataclass
class EegConfig:
    task: str = "phase_locking"
    T: int = T
    carrier: tuple = (0.15, 0.25)  # cycles per sample, phase-locking carrier band
    lag_jitter: float = 0.15  # rad, per-sample lag jitter (std)
    phase_walk: float = 0.05  # rad, std of the per-sample phase random walk
    burst_gain: float = 4.0  # burst peak adds this multiple of the baseline envelope
    burst_width: tuple = (3.0, 6.0)  # samples (Gaussian std)
    slow: tuple = (0.025, 0.04)  # cycles per sample, PAC slow band
    fast: tuple = (0.2, 0.3)
    coupling: float = 0.8
    shift: float = math.pi / 3
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown EEG task {self.task!r}; expected one of {TASKS}")
        for name in ("carrier", "burst_width", "slow", "fast"):
            setattr(self, name, tuple(getattr(self, name)))

    @property
    def classes(self) -> tuple:
        base = BASE_TASK.get(self.task, self.task)
        if base == "phase_locking":
            return ("lag_0", "lag_pi/2", "lag_pi", "lag_3pi/2")
        if base == "amplitude_event":
            return tuple(f"burst_ch{c}" for c in range(CHANNELS))
        return ("offset_0", "offset_pi/2", "offset_pi", "offset_3pi/2")


@dataclass
class EegSample:
    channels: np.ndarray  # complex [4, T]
    label: int
    task: str


def _walk(rng, sigma: float, n: int) -> np.ndarray:
    return np.cumsum(rng.normal(0.0, sigma, n)) if sigma > 0 else np.zeros(n)


def _envelope(rng, n: int) -> np.ndarray:
    """Smooth positive envelope around a random level, class-independent."""
    t = np.arange(n)
    a = rng.uniform(0.5, 1.5)
    f = rng.uniform(0.005, 0.03)
    return a * (1 + 0.3 * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)))


def _oscillation(rng, band, sigma: float, n: int) -> np.ndarray:
    t = np.arange(n)
    return 2 * np.pi * rng.uniform(*band) * t + rng.uniform(0, 2 * np.pi) + _walk(rng, sigma, n)


def gen_phase_locking(label: int, rng: np.random.Generator, cfg: EegConfig | None = None) -> EegSample:
    """Channel 1 follows channel 0's phase with a class lag; channels 2-3 are free."""
    cfg = cfg or EegConfig()
    n = cfg.T
    theta0 = _oscillation(rng, cfg.carrier, cfg.phase_walk, n)
    jitter = rng.normal(0.0, cfg.lag_jitter, n) if cfg.lag_jitter > 0 else 0.0
    phases = [theta0, theta0 + LAGS[label] + jitter]
    phases += [_oscillation(rng, cfg.carrier, cfg.phase_walk, n) for _ in range(CHANNELS - 2)]
    z = np.stack([_envelope(rng, n) * np.exp(1j * p) for p in phases])
    return EegSample(z, label, "phase_locking")


def gen_amplitude_event(label: int, rng: np.random.Generator, cfg: EegConfig | None = None) -> EegSample:
    """Channel ``label`` carries a Gaussian amplitude burst at a random time."""
    cfg = cfg or EegConfig()
    n = cfg.T
    t = np.arange(n)
    env = np.stack([_envelope(rng, n) for _ in range(CHANNELS)])
    t0 = rng.uniform(0.2 * n, 0.8 * n)
    w = rng.uniform(*cfg.burst_width)
    env[label] = env[label] * (1 + cfg.burst_gain * np.exp(-0.5 * ((t - t0) / w) ** 2))
    phases = np.stack([_oscillation(rng, cfg.carrier, cfg.phase_walk, n) for _ in range(CHANNELS)])
    return EegSample(env * np.exp(1j * phases), label, "amplitude_event")


def gen_pac(label: int, rng: np.random.Generator, cfg: EegConfig | None = None) -> EegSample:
    """Fast channel 1 envelope ``A0 (1 + c cos(theta_slow + offset))``, offset set by the class.

    Slow phase start is uniform, so neither channel's amplitude nor phase alone
    depends on the offset.
    """
    cfg = cfg or EegConfig()
    n = cfg.T
    slow = _oscillation(rng, cfg.slow, cfg.phase_walk, n)
    fast = _oscillation(rng, cfg.fast, cfg.phase_walk, n)
    a0 = rng.uniform(0.5, 1.5)
    env_fast = a0 * (1 + cfg.coupling * np.cos(slow + LAGS[label]))
    z = [_envelope(rng, n) * np.exp(1j * slow), env_fast * np.exp(1j * fast)]
    z += [_envelope(rng, n) * np.exp(1j * _oscillation(rng, cfg.carrier, cfg.phase_walk, n))
          for _ in range(CHANNELS - 2)]
    return EegSample(np.stack(z), label, "pac")


GENERATORS = {"phase_locking": gen_phase_locking, "amplitude_event": gen_amplitude_event, "pac": gen_pac}


def reference_shift(sample, phi: float):
    """Common-mode rotation of all channels by ``exp(i phi)``."""
    if isinstance(sample, EegSample):
        return EegSample(sample.channels * np.exp(1j * phi), sample.label, sample.task)
    return np.asarray(sample) * np.exp(1j * phi)


def reference_aug(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform common-mode rotation per sample of ``x: [N, C, T]``."""
    return x * np.exp(1j * rng.uniform(0, 2 * np.pi, size=(len(x), 1, 1)))


def _split(cfg: EegConfig, n: int, rng: np.random.Generator, phase: str):
    gen = GENERATORS[BASE_TASK.get(cfg.task, cfg.task)]
    xs, ys = [], []
    for label in range(4):
        for _ in range(n):
            xs.append(gen(label, rng, cfg).channels)
            ys.append(label)
    x = np.stack(xs)
    if phase == "fixed":
        x = reference_shift(x, cfg.shift)
    elif phase == "random":
        x = reference_aug(x, rng)
    return x, np.asarray(ys), {}


def make_eeg_dataset(cfg: EegConfig, n_per_class=(128, 64, 64)) -> Splits:
    """``reference_shift`` rotates val/test by ``cfg.shift``; ``reference_aug``
    additionally rotates each training sample by a random phase."""
    counts = stratified(n_per_class)
    base = BASE_TASK.get(cfg.task, cfg.task)
    streams = np.random.SeedSequence([int(cfg.seed), 11, TASKS.index(base)]).spawn(3)
    train_phase = "random" if cfg.task == "reference_aug" else "none"
    eval_phase = "fixed" if cfg.task in BASE_TASK else "none"
    parts = {}
    for name, n, ss, ph in zip(("train", "val", "test"), counts, streams, (train_phase, eval_phase, eval_phase)):
        parts[name] = _split(cfg, n, np.random.default_rng(ss), ph)
    echo = asdict(cfg)
    return make_splits(parts, cfg.classes, {"domain": "eeg", "condition": echo})
