"""Magnitude spectra, cutoff suggestions and complementary-pair plausibility checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .filters import ComplementaryPair, combine_array, filtfilt_array
from .signal import Signal, SignalError, rmse

DEFAULT_PROMINENCE = 0.05


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrum:
    frequencies_hz: np.ndarray
    magnitudes: np.ndarray
    source_length: int

    def peak_frequency(self) -> float:
        return float(self.frequencies_hz[np.argmax(self.magnitudes)])


def fft(x: np.ndarray) -> np.ndarray:
    """Complex DFT along the last axis, ``X[m] = sum_n x[n] exp(-2j pi m n / N)``."""
    return np.fft.fft(x, axis=-1)


def magnitude_spectrum(y: Signal) -> Spectrum:
    """One-sided ``|DFT| / N`` of the mean-removed signal (rectangular window).

    Multi-channel input is reduced by the root-sum-square over channels. A
    sinusoid of amplitude ``A`` on an exact bin shows up with height ``A/2``.
    """
    n = y.n_steps
    if n < 2:
        raise SpectrumError("spectrum needs at least two samples")
    x = y.samples - y.samples.mean(axis=1, keepdims=True)
    mags = np.abs(fft(x)[:, : n // 2 + 1]) / n
    mags = np.sqrt(np.sum(mags**2, axis=0))
    freqs = np.arange(n // 2 + 1) * y.sample_rate_hz / n
    return Spectrum(freqs, mags, n)


def suggest_cutoff(spec: Spectrum, n_bands: int = 2, prominence: float = DEFAULT_PROMINENCE) -> float:
    """Geometric mean of the two most prominent spectral peaks.

    Raises when fewer than two peaks clear ``prominence * max(magnitude)``;
    pick the cutoff by hand in that case.
    """
    if n_bands != 2:
        raise SpectrumError("only two-band splits are supported")
    mags = spec.magnitudes
    if mags.max() <= 0:
        raise SpectrumError("flat spectrum; choose a cutoff manually")
    padded = np.concatenate([[0.0], mags, [0.0]])
    idx, props = find_peaks(padded, prominence=prominence * mags.max())
    idx = idx - 1
    if len(idx) < 2:
        raise SpectrumError(f"found {len(idx)} spectral peak(s), need 2; choose a cutoff manually")
    top = idx[np.argsort(props["prominences"])[::-1][:2]]
    f1, f2 = sorted(spec.frequencies_hz[top])
    if f1 <= 0:
        raise SpectrumError("a dominant peak sits at DC; choose a cutoff manually")
    return float(np.sqrt(f1 * f2))


def plausibility_check(pair: ComplementaryPair, measurements: Signal, simulator: Signal, zero_phase=None) -> float:
    """RMSE between ``H(measurements) + L(simulator)`` and the measurements.

    Small values mean the simulator is trustworthy below the cutoff. By
    default the fusion matches the pair: perfect pairs use the joint
    complementary recurrence seeded with the measurements (the structure the
    hybrid model trains through), shared-cutoff pairs use zero-phase legs,
    whose squared magnitudes sum to one.
    """
    if measurements.samples.shape != simulator.samples.shape:
        raise SignalError("measurements and simulator must have equal shapes")
    if zero_phase is None:
        zero_phase = not pair.perfect
    if zero_phase:
        fused = filtfilt_array(pair.high, measurements.samples) + filtfilt_array(pair.low, simulator.samples)
    else:
        fused = combine_array(pair, measurements.samples, simulator.samples, init_values=measurements.samples)
    return rmse(measurements.with_samples(fused), measurements)
