"""Decimation by an integer ratio, linear-interpolation upsampling and Nyquist checks."""

from __future__ import annotations

import numpy as np

from .signal import Signal, SignalError


def _check_ratio(k: int):
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise SignalError(f"resampling ratio must be an integer >= 1, got {k!r}")


def downsample_array(x: np.ndarray, k: int) -> np.ndarray:
    _check_ratio(k)
    return np.asarray(x)[..., ::k]


def upsample_array(x: np.ndarray, k: int) -> np.ndarray:
    """Linear interpolation so that ``out[..., k*i] == x[..., i]``; length ``k*(N-1)+1``."""
    _check_ratio(k)
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise SignalError("upsampling needs at least two samples")
    if k == 1:
        return x.copy()
    frac = np.arange(k) / k
    seg = x[..., :-1, None] * (1 - frac) + x[..., 1:, None] * frac
    return np.concatenate([seg.reshape(x.shape[:-1] + ((n - 1) * k,)), x[..., -1:]], axis=-1)


def downsample(y: Signal, k: int) -> Signal:
    """Keep samples ``0, k, 2k, ...``; the sample rate drops by ``k``."""
    return Signal(downsample_array(y.samples, k), y.sample_rate_hz / k, y.start_time_s)


def upsample(y: Signal, k: int) -> Signal:
    return Signal(upsample_array(y.samples, k), y.sample_rate_hz * k, y.start_time_s)


def check_nyquist(cutoff_hz: float, sample_rate_hz: float, k: int) -> bool:
    """True iff the cutoff stays below the Nyquist frequency after decimating by ``k``."""
    if cutoff_hz <= 0 or sample_rate_hz <= 0 or k < 1:
        raise SignalError("check_nyquist expects positive inputs")
    return cutoff_hz < sample_rate_hz / (2 * k)
