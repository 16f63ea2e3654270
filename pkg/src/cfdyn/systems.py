"""Synthetic ground-truth systems, their simulators and CSV ingestion of measurements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neural import DivergenceError
from .signal import Signal, read_csv


@dataclass(frozen=True)
class DoubleMassSpec:
    """Two superposed cosines: ``1.28 cos(2 pi 0.115 t - 7.7) + 0.677 cos(2 pi 0.57 t) - 0.009``."""

    amplitudes: tuple = (1.28, 0.677)
    frequencies_hz: tuple = (0.115, 0.57)
    phase: float = -7.7
    offset: float = -0.009
    dt: float = 0.1
    duration: float = 100.0

    def __post_init__(self):
        if not (self.dt > 0 and self.duration > 0):
            raise ValueError("dt and duration must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def gen_double_mass(spec: DoubleMassSpec = DoubleMassSpec()) -> Signal:
    t = np.arange(spec.n_steps) * spec.dt
    (a1, a2), (f1, f2) = spec.amplitudes, spec.frequencies_hz
    x = a1 * np.cos(2 * np.pi * f1 * t + spec.phase) + a2 * np.cos(2 * np.pi * f2 * t) + spec.offset
    return Signal(x, 1.0 / spec.dt)


@dataclass(frozen=True)
class VdpSpec:
    """Forced Van-der-Pol oscillator (truth) and its unforced simplification (simulator).

    Truth: ``x' = y, y' = -x + a (1 - x^2) y + b u, u' = v, v' = -omega^2 u``.
    Simulator: the first two equations with damping ``a_tilde`` and no forcing.
    """

    a: float = 5.0
    b: float = 80.0
    a_tilde: float = 3.81
    omega: float = 11.15
    dt: float = 0.05
    duration: float = 50.0
    initial_state: tuple = (1.0, 0.0, 1.0, 0.0)

    def __post_init__(self):
        if not (self.dt > 0 and self.duration > 0):
            raise ValueError("dt and duration must be positive")
        if len(self.initial_state) != 4:
            raise ValueError("initial_state must have four entries (x, y, u, v)")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def vdp_truth_rhs(state, a, b, omega):
    x, y, u, v = state
    return np.array([y, -x + a * (1 - x * x) * y + b * u, v, -omega * omega * u])


def vdp_sim_rhs(state, a_tilde):
    x, y = state
    return np.array([y, -x + a_tilde * (1 - x * x) * y])


def rk4(rhs, state0, dt: float, n_steps: int) -> np.ndarray:
    """Classic fourth-order Runge-Kutta; returns the ``(n_steps, dim)`` trajectory including ``state0``."""
    out = np.empty((n_steps, len(state0)))
    s = np.asarray(state0, dtype=float)
    out[0] = s
    for i in range(1, n_steps):
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * dt * k1)
        k3 = rhs(s + 0.5 * dt * k2)
        k4 = rhs(s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(s)):
            raise DivergenceError(f"integration diverged at step {i}", i)
        out[i] = s
    return out


def vdp_truth_states(spec: VdpSpec = VdpSpec()) -> np.ndarray:
    return rk4(lambda s: vdp_truth_rhs(s, spec.a, spec.b, spec.omega), spec.initial_state, spec.dt, spec.n_steps)


def gen_vdp_truth(spec: VdpSpec = VdpSpec()) -> Signal:
    """Observed position of the forced oscillator."""
    return Signal(vdp_truth_states(spec)[:, 0], 1.0 / spec.dt)


def gen_vdp_sim(spec: VdpSpec = VdpSpec()) -> Signal:
    """Observed position of the unforced oscillator started from the same ``(x, y)``."""
    traj = rk4(lambda s: vdp_sim_rhs(s, spec.a_tilde), spec.initial_state[:2], spec.dt, spec.n_steps)
    return Signal(traj[:, 0], 1.0 / spec.dt)


def load_measurements(path) -> Signal:
    return read_csv(path)
