"""Uniformly sampled multi-channel time series, noise injection and error metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# numpy's PCG64 bit generator + ziggurat normal sampler. Changing either
# breaks seed reproducibility, so bump this tag if that ever happens.
NOISE_ALGORITHM = "numpy-pcg64-ziggurat-v1"


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class Signal:
    """Time series of shape ``(channels, steps)`` on a uniform grid.

    The sample array is copied and marked read-only on construction, so
    ``Signal`` values can be shared freely.
    """

    samples: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise SignalError(f"samples must be 1-D or 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SignalError("empty signal")
        if not np.all(np.isfinite(arr)):
            raise SignalError("samples must be finite")
        if not self.sample_rate_hz > 0:
            raise SignalError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "start_time_s", float(self.start_time_s))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_steps(self) -> int:
        return self.samples.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.n_steps) / self.sample_rate_hz

    def __len__(self):
        return self.n_steps

    def __getitem__(self, index: slice) -> "Signal":
        """Slice along time; the start time follows the first kept sample."""
        if not isinstance(index, slice):
            raise TypeError("Signal supports slicing along time only")
        start, stop, step = index.indices(self.n_steps)
        if step != 1:
            raise SignalError("use resample.downsample for strided access")
        return Signal(
            self.samples[:, start:stop],
            self.sample_rate_hz,
            self.start_time_s + start / self.sample_rate_hz,
        )

    def with_samples(self, samples: np.ndarray) -> "Signal":
        return Signal(samples, self.sample_rate_hz, self.start_time_s)

    def concat(self, other: "Signal") -> "Signal":
        if other.sample_rate_hz != self.sample_rate_hz:
            raise SignalError("cannot concatenate signals with different sample rates")
        if other.n_channels != self.n_channels:
            raise SignalError("cannot concatenate signals with different channel counts")
        return self.with_samples(np.concatenate([self.samples, other.samples], axis=1))


@dataclass(frozen=True)
class NoiseSpec:
    variance: float
    seed: int = 0
    algorithm: str = field(default=NOISE_ALGORITHM, compare=False)

    def __post_init__(self):
        if self.variance < 0:
            raise SignalError(f"noise variance must be nonnegative, got {self.variance}")


def add_noise(signal: Signal, noise: NoiseSpec) -> Signal:
    """Add i.i.d. zero-mean Gaussian observation noise."""
    if noise.variance == 0:
        return signal
    rng = np.random.Generator(np.random.PCG64(noise.seed))
    eps = rng.standard_normal(signal.samples.shape) * np.sqrt(noise.variance)
    return signal.with_samples(signal.samples + eps)


def _check_same_shape(a: Signal, b: Signal):
    if a.samples.shape != b.samples.shape:
        raise SignalError(f"shape mismatch: {a.samples.shape} vs {b.samples.shape}")


def rmse(a: Signal, b: Signal) -> float:
    _check_same_shape(a, b)
    if a.sample_rate_hz != b.sample_rate_hz:
        raise SignalError("sample rate mismatch")
    return float(np.sqrt(np.mean((a.samples - b.samples) ** 2)))


def rmse_over_time(pred: Signal, truth: Signal) -> Signal:
    """Running error curve ``e_n = sqrt(sum_{k<=n} |y_k - yhat_k|^2 / (n + 1))``.

    The per-step squared norm is summed over channels. For a single channel
    the final value equals :func:`rmse` over the full window.
    """
    _check_same_shape(pred, truth)
    sq = np.sum((pred.samples - truth.samples) ** 2, axis=0)
    n = np.arange(1, sq.size + 1)
    return Signal(np.sqrt(np.cumsum(sq) / n), pred.sample_rate_hz, pred.start_time_s)


def write_csv(signal: Signal, path) -> None:
    """Write ``t,y0,y1,...`` rows; values keep 17 significant digits so they round-trip exactly."""
    header = ["t"] + [f"y{c}" for c in range(signal.n_channels)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(signal.times, signal.samples.T):
            w.writerow([format(float(t), ".17g")] + [format(float(v), ".17g") for v in row])


def read_csv(path) -> Signal:
    """Read a ``t,y0,y1,...`` file, validating a uniform time column."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SignalError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) < 2 or header[0].strip() != "t":
        raise SignalError(f"{path}: header must start with 't' followed by channel columns")
    if not body:
        raise SignalError(f"{path}: empty signal")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise SignalError(f"{path}: malformed value ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise SignalError(f"{path}: ragged rows")
    t = data[:, 0]
    if t.size == 1:
        raise SignalError(f"{path}: need at least two samples to infer the sample rate")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not dt > 0:
        raise SignalError(f"{path}: time column must be increasing")
    grid = t[0] + dt * np.arange(t.size)
    if np.max(np.abs(t - grid)) > 1e-9 * dt + 4 * np.finfo(float).eps * np.max(np.abs(t)):
        raise SignalError(f"{path}: non-uniform sampling")
    return Signal(data[:, 1:].T, 1.0 / dt, t[0])
