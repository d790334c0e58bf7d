"""1-D wavefunction tasks on a periodic grid (hbar = m = 1).

Momentum: Gaussian packets ``A(x) exp(i k x + i phi0)`` whose label is the
momentum class; the envelope and ``phi0`` are drawn independently of it.

Potential inverse: a packet with ``phi0 = 0`` is propagated for a few Strang
split-step steps under one of five potential families; the label is the
family. Because the initial global phase is pinned, a global phase shift at
test time is an unseen nuisance for coordinate-dependent models.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Splits, make_splits, stratified

L = 8.0
N_GRID = 96
KAPPA = 1.0
MOMENTA = (-3 * KAPPA, -KAPPA, KAPPA, 3 * KAPPA)
POTENTIALS = ("free", "harmonic", "linear_ramp", "square_barrier", "double_well")
TASKS = ("momentum", "potential_inverse", "global_shift", "global_aug")
STABILITY = 0.5  # max allowed dt * max|V|


class ConfigError(ValueError):
    pass


def grid(n: int = N_GRID):
    x = np.linspace(-L, L, n, endpoint=False)
    return x, 2 * L / n


@dataclass
class Wavefunction:
    psi: np.ndarray
    dx: float
    label: int = -1

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.dx))


def _normalized(psi: np.ndarray, dx: float) -> np.ndarray:
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * dx)


def gen_wavepacket(k_class: int, rng: np.random.Generator, n: int = N_GRID, phi0=None) -> Wavefunction:
    """Packet with random center in [-4, 4] and width in [0.8, 1.6]; ``phi0`` uniform unless given."""
    if k_class not in range(len(MOMENTA)):
        raise ValueError(f"momentum class must be in 0..{len(MOMENTA) - 1}")
    x, dx = grid(n)
    c = rng.uniform(-4, 4)
    w = rng.uniform(0.8, 1.6)
    if phi0 is None:
        phi0 = rng.uniform(0, 2 * np.pi)
    k = MOMENTA[k_class]
    psi = np.exp(-((x - c) ** 2) / (4 * w ** 2)) * np.exp(1j * (k * x + phi0))
    return Wavefunction(_normalized(psi, dx), dx, k_class)


def potential(family: str, x: np.ndarray, strength: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Real potential scaled so its max on the domain is ``strength`` (zero for ``free``)."""
    u = x / L
    if family == "free":
        return np.zeros_like(x)
    if family == "harmonic":
        v = u ** 2
    elif family == "linear_ramp":
        v = (u + 1) / 2
    elif family == "square_barrier":
        c = rng.uniform(-2, 2) if rng is not None else 0.0
        w = rng.uniform(0.5, 1.5) if rng is not None else 1.0
        v = (np.abs(x - c) < w).astype(float)
    elif family == "double_well":
        v = ((x / 4) ** 2 - 1) ** 2
    else:
        raise ValueError(f"unknown potential family {family!r}")
    return strength * v / np.max(np.abs(v))


def split_step_evolve(psi: Wavefunction, V: np.ndarray, dt: float, steps: int) -> Wavefunction:
    """Strang splitting: half potential kick, full kinetic drift in k-space, half kick."""
    V = np.asarray(V, dtype=float)
    if dt * np.max(np.abs(V), initial=0.0) > STABILITY:
        raise ConfigError(f"dt*max|V| = {dt * np.max(np.abs(V)):.3g} exceeds {STABILITY}")
    n = psi.psi.size
    k = 2 * np.pi * np.fft.fftfreq(n, d=psi.dx)
    half = np.exp(-0.5j * V * dt)
    kin = np.exp(-0.5j * k ** 2 * dt)
    out = psi.psi.astype(complex)
    for _ in range(int(steps)):
        out = half * np.fft.ifft(kin * np.fft.fft(half * out))
    return Wavefunction(out, psi.dx, psi.label)


def global_phase(psi, phi: float):
    if isinstance(psi, Wavefunction):
        return Wavefunction(psi.psi * np.exp(1j * phi), psi.dx, psi.label)
    return np.asarray(psi) * np.exp(1j * phi)


@dataclass
class QuantumConfig:
    task: str = "momentum"
    n_grid: int = N_GRID
    dt: float = 0.08
    steps: int = 8
    v_max: float = 6.0
    shift: float = math.pi
    noise: float = 0.0
    seed: int = 0
    potentials: tuple = field(default=POTENTIALS)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown quantum task {self.task!r}; expected one of {TASKS}")
        if self.dt * self.v_max > STABILITY:
            raise ConfigError(f"dt*v_max = {self.dt * self.v_max:.3g} exceeds {STABILITY}")
        self.potentials = tuple(self.potentials)

    @property
    def classes(self) -> tuple:
        if self.task == "momentum":
            return tuple(f"k={k:+g}" for k in MOMENTA)
        return self.potentials


def _evolved(cfg: QuantumConfig, label: int, rng: np.random.Generator) -> np.ndarray:
    x, dx = grid(cfg.n_grid)
    c = rng.uniform(-4, 4)
    w = rng.uniform(0.8, 1.6)
    k0 = rng.uniform(-1, 1)
    psi = np.exp(-((x - c) ** 2) / (4 * w ** 2) + 1j * k0 * x)
    wf = Wavefunction(_normalized(psi, dx), dx, label)
    V = potential(cfg.potentials[label], x, rng.uniform(0.5, 1.0) * cfg.v_max, rng)
    return split_step_evolve(wf, V, cfg.dt, cfg.steps).psi


def _split(cfg: QuantumConfig, n: int, rng: np.random.Generator, phase: str):
    xs, ys = [], []
    for label in range(len(cfg.classes)):
        for _ in range(n):
            if cfg.task == "momentum":
                xs.append(gen_wavepacket(label, rng, cfg.n_grid).psi)
            else:
                xs.append(_evolved(cfg, label, rng))
            ys.append(label)
    x = np.stack(xs)[:, None, :]
    if cfg.noise > 0:
        x = x + cfg.noise * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)) / math.sqrt(2)
    if phase == "fixed":
        x = global_phase(x, cfg.shift)
    elif phase == "random":
        x = x * np.exp(1j * rng.uniform(0, 2 * np.pi, size=(len(x), 1, 1)))
    return x, np.asarray(ys), {}


def make_quantum_dataset(cfg: QuantumConfig, n_per_class=(128, 64, 64)) -> Splits:
    """``global_shift`` rotates val/test by ``cfg.shift``; ``global_aug`` also
    rotates each training sample by a fresh uniform phase. Both are built on
    the potential-inverse task."""
    counts = stratified(n_per_class)
    # the phase-stress tasks reuse the potential-inverse samples for the same seed
    base = 0 if cfg.task == "momentum" else 1
    streams = np.random.SeedSequence([int(cfg.seed), 7, base]).spawn(3)
    train_phase = "random" if cfg.task == "global_aug" else "none"
    eval_phase = "fixed" if cfg.task in ("global_shift", "global_aug") else "none"
    parts = {}
    for name, n, ss, ph in zip(("train", "val", "test"), counts, streams, (train_phase, eval_phase, eval_phase)):
        parts[name] = _split(cfg, n, np.random.default_rng(ss), ph)
    echo = asdict(cfg)
    echo["potentials"] = list(cfg.potentials)
    return make_splits(parts, cfg.classes, {"domain": "quantum", "condition": echo})
