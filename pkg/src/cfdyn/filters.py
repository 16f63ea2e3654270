"""Butterworth IIR design, complementary filter pairs and their time-domain recurrences.

Coefficients follow the usual DSP convention: ``a`` is normalised so that
``a[0] == 1`` and the recurrence is

    out[n] = sum_k b[k] * x[n - k] - sum_{k>=1} a[k] * out[n - k]

The first ``P`` outputs (``P`` = filter order) are not produced by the
recurrence; they are supplied by an initialisation strategy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .signal import Signal, SignalError

MAX_ORDER = 8


class FilterError(ValueError):
    pass


class FilterKind(str, enum.Enum):
    LOWPASS = "lowpass"
    HIGHPASS = "highpass"


class FilterInit(str, enum.Enum):
    ZEROS = "zeros"
    HOLD_INPUT = "hold_input"


@dataclass(frozen=True)
class FilterCoefficients:
    b: np.ndarray
    a: np.ndarray
    order: int
    kind: FilterKind
    cutoff_hz: float
    sample_rate_hz: float

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        a = np.array(self.a, dtype=float)
        if b.shape != (self.order + 1,) or a.shape != (self.order + 1,):
            raise FilterError(f"order {self.order} needs {self.order + 1} coefficients, got b={b.shape}, a={a.shape}")
        if self.order < 1:
            raise FilterError("order must be at least 1")
        if a[0] == 0:
            raise FilterError("a[0] must be nonzero")
        b, a = b / a[0], a / a[0]
        if not 0 < self.cutoff_hz < self.sample_rate_hz / 2:
            raise FilterError(
                f"cutoff {self.cutoff_hz} Hz must lie in (0, {self.sample_rate_hz / 2}) Hz (Nyquist)"
            )
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "kind", FilterKind(self.kind))

    @property
    def poles(self) -> np.ndarray:
        return np.roots(self.a)

    def is_stable(self, margin: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.poles) < 1 - margin))

    def dc_gain(self) -> float:
        return float(self.b.sum() / self.a.sum())

    def to_dict(self) -> dict:
        return {
            "b": self.b.tolist(),
            "a": self.a.tolist(),
            "order": self.order,
            "kind": self.kind.value,
            "cutoff_hz": self.cutoff_hz,
            "fs_hz": self.sample_rate_hz,
        }


@dataclass(frozen=True)
class ComplementaryPair:
    high: FilterCoefficients
    low: FilterCoefficients
    perfect: bool

    def __post_init__(self):
        if self.high.sample_rate_hz != self.low.sample_rate_hz:
            raise FilterError("pair legs must share the sample rate")
        if self.high.cutoff_hz != self.low.cutoff_hz:
            raise FilterError("pair legs must share the cutoff frequency")
        if self.perfect:
            if not np.array_equal(self.high.a, self.low.a):
                raise FilterError("perfect pair needs identical denominators")
            if not np.allclose(self.low.b, self.high.a - self.high.b, rtol=0, atol=1e-14):
                raise FilterError("perfect pair needs low.b == a - high.b")

    @property
    def order(self) -> int:
        return self.high.order

    @property
    def cutoff_hz(self) -> float:
        return self.high.cutoff_hz

    @property
    def sample_rate_hz(self) -> float:
        return self.high.sample_rate_hz

    def shares_denominator(self, tol: float = 1e-12) -> bool:
        return self.high.order == self.low.order and bool(
            np.all(np.abs(self.high.a - self.low.a) <= tol * np.maximum(1.0, np.abs(self.high.a)))
        )


def _poly(roots: np.ndarray) -> np.ndarray:
    return np.real(np.poly(roots)) if len(roots) else np.ones(1)


def design_butterworth(order: int, cutoff_hz: float, sample_rate_hz: float, kind="lowpass") -> FilterCoefficients:
    """Digital Butterworth filter via a prewarped bilinear transform.

    The analog prototype poles ``exp(j*pi*(2k + P - 1) / (2P))`` are scaled
    to the prewarped cutoff ``2*fs*tan(pi*fc/fs)`` (or inverted for a
    highpass), mapped through ``z = (2fs + s) / (2fs - s)``, and the gain is
    pinned so the passband edge (DC for lowpass, Nyquist for highpass) is
    exactly 1.
    """
    kind = FilterKind(kind)
    if not (isinstance(order, (int, np.integer)) and 1 <= order <= MAX_ORDER):
        raise FilterError(f"order must be an integer in [1, {MAX_ORDER}], got {order}")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise FilterError(f"cutoff {cutoff_hz} Hz must lie in (0, {sample_rate_hz / 2}) Hz (Nyquist)")

    fs2 = 2.0 * sample_rate_hz
    warped = fs2 * np.tan(np.pi * cutoff_hz / sample_rate_hz)
    k = np.arange(1, order + 1)
    proto = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    if kind is FilterKind.LOWPASS:
        s_poles = warped * proto
        z_zeros = -np.ones(order)
    else:
        s_poles = warped / proto
        z_zeros = np.ones(order)
    z_poles = (fs2 + s_poles) / (fs2 - s_poles)

    b = _poly(z_zeros)
    a = _poly(z_poles)
    edge = 1.0 if kind is FilterKind.LOWPASS else -1.0
    powers = edge ** np.arange(order + 1)
    b = b * (a @ powers) / (b @ powers)
    return FilterCoefficients(b, a, order, kind, float(cutoff_hz), float(sample_rate_hz))


def make_perfect_complement(low: FilterCoefficients) -> ComplementaryPair:
    """Pair ``low`` with the highpass ``(a - b) / a`` so both legs sum to one."""
    high = FilterCoefficients(low.a - low.b, low.a, low.order, FilterKind.HIGHPASS, low.cutoff_hz, low.sample_rate_hz)
    return ComplementaryPair(high=high, low=low, perfect=True)


def make_shared_cutoff_pair(order: int, cutoff_hz: float, sample_rate_hz: float) -> ComplementaryPair:
    """Independent Butterworth lowpass and highpass designs at one cutoff.

    Both legs have the same poles, so the pair can drive the joint
    complementary recurrence; the denominators agree to rounding.
    """
    low = design_butterworth(order, cutoff_hz, sample_rate_hz, FilterKind.LOWPASS)
    high = design_butterworth(order, cutoff_hz, sample_rate_hz, FilterKind.HIGHPASS)
    return ComplementaryPair(high=high, low=low, perfect=False)


def make_pair(order: int, cutoff_hz: float, sample_rate_hz: float, perfect: bool) -> ComplementaryPair:
    if perfect:
        return make_perfect_complement(design_butterworth(order, cutoff_hz, sample_rate_hz, FilterKind.LOWPASS))
    return make_shared_cutoff_pair(order, cutoff_hz, sample_rate_hz)


def _recurrence(b_terms, a: np.ndarray, head: np.ndarray, n_steps: int) -> np.ndarray:
    """Run the shared-denominator recurrence along the last axis.

    ``b_terms`` is a list of ``(b, x)`` tuples whose feed-forward parts are
    summed; ``head`` holds the first ``P`` outputs.
    """
    order = len(a) - 1
    a_rev = a[:0:-1]
    out = np.empty(head.shape[:-1] + (n_steps,))
    out[..., :order] = head
    feed = sum(_fir(b, x) for b, x in b_terms)
    for n in range(order, n_steps):
        out[..., n] = feed[..., n] - out[..., n - order:n] @ a_rev
    return out


def _fir(b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``sum_k b[k] x[n-k]``, with samples before the start treated as zero."""
    out = b[0] * x
    for k in range(1, len(b)):
        out[..., k:] += b[k] * x[..., :-k]
    return out


def _initial_outputs(x: np.ndarray, order: int, init: FilterInit) -> np.ndarray:
    init = FilterInit(init)
    if init is FilterInit.ZEROS:
        return np.zeros(x.shape[:-1] + (order,))
    return x[..., :order].copy()


def lfilter_array(coeffs: FilterCoefficients, x: np.ndarray, init="zeros", head=None) -> np.ndarray:
    """Apply the recurrence to an array along its last axis."""
    x = np.asarray(x, dtype=float)
    order = coeffs.order
    if x.shape[-1] < order + 1:
        raise FilterError(f"signal too short: need at least {order + 1} steps, got {x.shape[-1]}")
    if head is None:
        head = _initial_outputs(x, order, init)
    return _recurrence([(coeffs.b, x)], coeffs.a, head, x.shape[-1])


def iir_filter(coeffs: FilterCoefficients, y: Signal, init="zeros") -> Signal:
    return y.with_samples(lfilter_array(coeffs, y.samples, init))


def _padlen(order: int, n_steps: int) -> int:
    return min(3 * (order + 1), n_steps - 1)


def filtfilt_array(coeffs: FilterCoefficients, x: np.ndarray) -> np.ndarray:
    """Zero-phase forward-backward filtering along the last axis.

    The input is extended by odd reflection of length ``3 (P + 1)`` at both
    ends. Each pass seeds its first ``P`` outputs with the steady-state
    response to the leading samples (``dc_gain * x``), which makes constant
    inputs pass exactly.
    """
    x = np.asarray(x, dtype=float)
    order = coeffs.order
    n = x.shape[-1]
    if n < 3 * (order + 1):
        raise FilterError(f"signal too short for filtfilt: need at least {3 * (order + 1)} steps, got {n}")
    pad = _padlen(order, n)
    left = 2 * x[..., :1] - x[..., pad:0:-1]
    right = 2 * x[..., -1:] - x[..., -2:-pad - 2:-1]
    ext = np.concatenate([left, x, right], axis=-1)
    gain = coeffs.dc_gain()
    fwd = lfilter_array(coeffs, ext, head=gain * ext[..., :order])
    rev = fwd[..., ::-1]
    bwd = lfilter_array(coeffs, rev, head=gain * rev[..., :order])
    return bwd[..., ::-1][..., pad:pad + n]


def filtfilt(coeffs: FilterCoefficients, y: Signal) -> Signal:
    return y.with_samples(filtfilt_array(coeffs, y.samples))


def combine_array(
    pair: ComplementaryPair,
    y_high: np.ndarray,
    y_low: np.ndarray,
    init="zeros",
    init_values=None,
) -> np.ndarray:
    """Joint complementary recurrence on raw arrays (last axis is time)."""
    if not pair.shares_denominator():
        raise FilterError("complementary recurrence needs legs with a shared denominator")
    y_high = np.asarray(y_high, dtype=float)
    y_low = np.asarray(y_low, dtype=float)
    if y_high.shape != y_low.shape:
        raise FilterError(f"shape mismatch: {y_high.shape} vs {y_low.shape}")
    order = pair.order
    if y_high.shape[-1] < order + 1:
        raise FilterError(f"signal too short: need at least {order + 1} steps, got {y_high.shape[-1]}")
    if init_values is not None:
        head = np.broadcast_to(np.asarray(init_values, dtype=float)[..., :order], y_high.shape[:-1] + (order,))
    elif FilterInit(init) is FilterInit.HOLD_INPUT:
        head = y_low[..., :order]
    else:
        head = np.zeros(y_high.shape[:-1] + (order,))
    return _recurrence([(pair.high.b, y_high), (pair.low.b, y_low)], pair.high.a, head, y_high.shape[-1])


def complementary_combine(
    pair: ComplementaryPair,
    y_high: Signal,
    y_low: Signal,
    init="zeros",
    init_values: Signal | None = None,
) -> Signal:
    """Fuse ``H(y_high) + L(y_low)`` in a single recurrence.

    When ``init_values`` is given its first ``P`` samples seed the output;
    otherwise ``init`` decides (``hold_input`` copies ``y_low``).
    """
    if y_high.sample_rate_hz != y_low.sample_rate_hz:
        raise SignalError("sample rate mismatch")
    seed = None if init_values is None else init_values.samples
    return y_high.with_samples(combine_array(pair, y_high.samples, y_low.samples, init, seed))


def frequency_response(coeffs: FilterCoefficients, n_points: int) -> np.ndarray:
    """Evaluate ``B(e^{jw}) / A(e^{jw})`` on ``n_points`` frequencies in ``[0, fs/2]``.

    Returns an ``(n_points, 3)`` array of frequency (Hz), magnitude, phase (rad).
    """
    if n_points < 2:
        raise FilterError("n_points must be at least 2")
    freqs = np.linspace(0.0, coeffs.sample_rate_hz / 2, n_points)
    h = transfer(coeffs, freqs)
    return np.column_stack([freqs, np.abs(h), np.angle(h)])


def transfer(coeffs: FilterCoefficients, freqs_hz) -> np.ndarray:
    """Complex response at arbitrary frequencies."""
    w = 2 * np.pi * np.asarray(freqs_hz, dtype=float) / coeffs.sample_rate_hz
    zinv = np.exp(-1j * np.multiply.outer(w, np.arange(coeffs.order + 1)))
    return (zinv @ coeffs.b) / (zinv @ coeffs.a)


def linear_operator(fn, n_steps: int) -> np.ndarray:
    """Dense matrix ``M`` with ``fn(x) == M @ x`` for a linear map on length-``n_steps`` rows."""
    return fn(np.eye(n_steps)).T
