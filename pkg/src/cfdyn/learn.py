"""Training and prediction for split, hybrid, baseline and residual recurrent models.

Index conventions. A training window of length ``L`` with warmup ``R``
uses observations ``0..R-1`` to set the recurrent state and is scored on
predictions for indices ``R..L-1``. Predictions over a horizon ``N'``
likewise cover indices ``R..N'-1`` and have ``N' - R`` samples.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import filters as flt
from .neural import (
    AdamState,
    DivergenceError,
    EulerMlpModel,
    GruModel,
    RecognitionNet,
    adam_step,
    clip_gradients,
    rmse_loss,
)
from .resample import check_nyquist, downsample_array, upsample_array
from .signal import Signal, SignalError


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairSpec:
    order: int = 1
    cutoff_hz: float = 0.4
    perfect: bool = True

    def build(self, sample_rate_hz: float) -> flt.ComplementaryPair:
        return flt.make_pair(self.order, self.cutoff_hz, sample_rate_hz, self.perfect)


@dataclass(frozen=True)
class ModelSpec:
    """Recipe for a recurrent model.

    ``kind="gru"`` uses ``hidden_size``; ``kind="rnn"`` is the Euler-stepped
    MLP with latent size ``hidden_size``, MLP width ``width``, recognition
    width ``rec_dim``, and Euler step ``step_size`` (signal ``dt`` when None).
    """

    kind: str = "gru"
    hidden_size: int = 16
    width: int = 500
    rec_dim: int = 100
    step_size: float | None = None
    readout_bias: bool = True

    def __post_init__(self):
        if self.kind not in ("gru", "rnn"):
            raise ConfigError(f"model kind must be 'gru' or 'rnn', got {self.kind!r}")
        if self.hidden_size < 1:
            raise ConfigError("hidden_size must be positive")


@dataclass(frozen=True)
class TrainSpec:
    subtraj_len: int = 150
    warmup: int = 30
    epochs: int = 300
    batch_size: int = 50
    lr: float = 1e-3
    lr_schedule: tuple = ()
    clip_norm: float | None = None

    def __post_init__(self):
        if self.warmup < 1:
            raise ConfigError("warmup (recognition) length must be at least 1")
        if self.warmup >= self.subtraj_len:
            raise ConfigError(f"warmup {self.warmup} must be shorter than subtrajectory length {self.subtraj_len}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")

    def lr_at(self, epoch: int) -> float:
        """Piecewise-constant schedule: ``lr_schedule`` holds ``(epoch, lr)`` switch points."""
        lr = self.lr
        for start, value in sorted(self.lr_schedule):
            if epoch >= start:
                lr = value
        return lr


@dataclass(frozen=True)
class SplitConfig:
    high_model: ModelSpec = ModelSpec("gru", 48)
    low_model: ModelSpec = ModelSpec("gru", 16)
    pair: PairSpec = PairSpec(3, 0.4, False)
    k: int = 2
    train: TrainSpec = TrainSpec()
    hp_wrap: bool = False
    seed: int = 0

    def validate(self, sample_rate_hz: float):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ConfigError(f"resampling ratio k must be an integer >= 1, got {self.k!r}")
        if not check_nyquist(self.pair.cutoff_hz, sample_rate_hz, self.k):
            raise ConfigError(
                f"k={self.k} violates Nyquist: cutoff {self.pair.cutoff_hz} Hz needs "
                f"fs/k > {2 * self.pair.cutoff_hz} Hz, got {sample_rate_hz / self.k:g} Hz"
            )
        if self.train.warmup // self.k < 1:
            raise ConfigError("warmup must cover at least one downsampled step")

    def baseline_config(self, epochs=None) -> "BaselineConfig":
        """Single full-band GRU with as many hidden units as both branches together."""
        hidden = self.high_model.hidden_size + self.low_model.hidden_size
        train = self.train if epochs is None else replace(self.train, epochs=epochs)
        return BaselineConfig(ModelSpec("gru", hidden), train, self.seed)


@dataclass(frozen=True)
class HybridConfig:
    model: ModelSpec = ModelSpec("rnn", 4)
    pair: PairSpec = PairSpec(1, 0.25, True)
    train: TrainSpec = TrainSpec(subtraj_len=200, warmup=10, epochs=2000)
    seed: int = 0


@dataclass(frozen=True)
class BaselineConfig:
    model: ModelSpec = ModelSpec("gru", 64)
    train: TrainSpec = TrainSpec()
    seed: int = 0


# ---------------------------------------------------------------------------
# recurrent predictor: model + state initialisation, flat parameter dict
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Recurrent:
    """A recurrent model plus the way its state is initialised from context.

    GRUs are warmed up by teacher forcing on observations ``0..R-2`` and
    take observation ``R-1`` as the first rollout input. Euler-MLPs get
    their state from a recognition network fed observations ``0..R-1``.
    """

    model: object
    recognizer: RecognitionNet | None = None

    @classmethod
    def build(cls, spec: ModelSpec, warmup: int, dt: float, rng, io_dim=1) -> "Recurrent":
        if spec.kind == "gru":
            return cls(GruModel.init(spec.hidden_size, io_dim, rng, spec.readout_bias))
        step = dt if spec.step_size is None else spec.step_size
        model = EulerMlpModel.init(spec.hidden_size, io_dim, spec.width, step, rng)
        rec = RecognitionNet.init(warmup, spec.hidden_size, io_dim, spec.rec_dim, rng)
        return cls(model, rec)

    @property
    def params(self) -> dict:
        out = {f"model.{k}": v for k, v in self.model.params.items()}
        if self.recognizer is not None:
            out.update({f"rec.{k}": v for k, v in self.recognizer.params.items()})
        return out

    def with_params(self, flat: dict) -> "Recurrent":
        model = self.model.with_params({k[6:]: v for k, v in flat.items() if k.startswith("model.")})
        rec = self.recognizer
        if rec is not None:
            rec = rec.with_params({k[4:]: v for k, v in flat.items() if k.startswith("rec.")})
        return Recurrent(model, rec)

    @property
    def hidden_units(self) -> int:
        return self.model.hidden_dim

    def forward(self, context: np.ndarray, n_steps: int):
        """Predict ``n_steps`` values after a ``(B, R, D)`` context; returns ``(Y, tape)``."""
        if self.recognizer is not None:
            h, rec_tape = self.recognizer.forward(context)
            y_in = None
            warm_tape = None
        else:
            h, warm_tape = self.model.warmup_forward(context[:, :-1])
            y_in = context[:, -1]
            rec_tape = None
        Y, roll_tape = self.model.rollout_forward(h, y_in, n_steps)
        return Y, (warm_tape, rec_tape, roll_tape)

    def backward(self, tape, dY) -> dict:
        warm_tape, rec_tape, roll_tape = tape
        mg = {k: np.zeros_like(v) for k, v in self.model.params.items()}
        dh, _ = self.model.rollout_backward(roll_tape, dY, mg)
        grads = {f"model.{k}": v for k, v in mg.items()}
        if self.recognizer is not None:
            rg = {k: np.zeros_like(v) for k, v in self.recognizer.params.items()}
            self.recognizer.backward(rec_tape, dh, rg)
            grads.update({f"rec.{k}": v for k, v in rg.items()})
        else:
            self.model.warmup_backward(warm_tape, dh, mg)
        return grads

    def predict(self, context: np.ndarray, n_steps: int) -> np.ndarray:
        """Single-trajectory prediction; ``context`` is ``(D, R)``, result ``(D, n_steps)``."""
        Y, _ = self.forward(np.asarray(context, dtype=float).T[None], n_steps)
        return Y[0].T


# ---------------------------------------------------------------------------
# losses over batches of windows
# ---------------------------------------------------------------------------


def _apply_time_op(op, Y):
    """Apply an ``(n, n)`` time-domain matrix to ``(B, n, D)`` trajectories."""
    return np.einsum("ij,bjd->bid", op, Y)


def _apply_time_op_t(op, dZ):
    return np.einsum("ij,bid->bjd", op, dZ)


def window_loss(rec: Recurrent, context, target, op=None, offset=None):
    """RMSE of ``op @ rollout + offset`` against ``target``; returns ``(loss, grads)``.

    ``context`` is ``(B, R, D)``, ``target`` ``(B, n, D)``. ``op`` is a linear
    time operator (e.g. a zero-phase highpass or the high leg of the
    complementary recurrence) and ``offset`` a constant added afterwards.
    """
    n = target.shape[1]
    Y, tape = rec.forward(context, n)
    pred = Y if op is None else _apply_time_op(op, Y)
    if offset is not None:
        pred = pred + offset
    loss, dpred = rmse_loss(pred, target)
    dY = dpred if op is None else _apply_time_op_t(op, dpred)
    return loss, rec.backward(tape, dY)


def filtfilt_operator(coeffs: flt.FilterCoefficients, n: int) -> np.ndarray:
    return flt.linear_operator(lambda X: flt.filtfilt_array(coeffs, X), n)


def combine_high_operator(pair: flt.ComplementaryPair, n: int) -> np.ndarray:
    """Matrix of the map ``y_high -> complementary output`` with zero low input and zero seed."""
    zeros = np.zeros((n, n))
    return flt.linear_operator(
        lambda X: flt.combine_array(pair, X, zeros, init_values=np.zeros((n, pair.order))), n
    )


def combine_offset(pair: flt.ComplementaryPair, y_low: np.ndarray, seed: np.ndarray) -> np.ndarray:
    """Part of the complementary output that does not depend on the high input (time on last axis)."""
    return flt.combine_array(pair, np.zeros_like(y_low), y_low, init_values=seed)


def _windows(x: np.ndarray, starts, length: int) -> np.ndarray:
    """Cut ``(B, length, D)`` windows out of a ``(D, N)`` array."""
    idx = np.asarray(starts)[:, None] + np.arange(length)
    return np.transpose(x[:, idx], (1, 2, 0))


# ---------------------------------------------------------------------------
# generic training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    recurrent: Recurrent
    loss_history: list
    runtime_s: float


def _fit(rec: Recurrent, batch_loss, n_windows: int, train: TrainSpec, rng, label="model") -> TrainResult:
    """Adam over all training windows.

    One epoch is a shuffled pass over every window start, split into
    ``ceil(n_windows / batch_size)`` near-equal mini-batches. The history
    holds the mean batch loss per epoch followed by one final evaluation on
    evenly spaced windows.
    """
    t0 = time.perf_counter()
    params = rec.params
    state = AdamState.for_params(params, lr=train.lr)
    n_batches = -(-n_windows // train.batch_size)
    history = []
    for epoch in range(train.epochs):
        lr = train.lr_at(epoch)
        losses = []
        for starts in np.array_split(rng.permutation(n_windows), n_batches):
            try:
                loss, grads = batch_loss(rec.with_params(params), starts)
            except DivergenceError as exc:
                raise DivergenceError(f"{label}: training diverged in epoch {epoch} ({exc})", epoch) from None
            if not np.isfinite(loss):
                raise DivergenceError(f"{label}: non-finite loss in epoch {epoch}", epoch)
            losses.append(loss)
            grads = clip_gradients(grads, train.clip_norm)
            params, state = adam_step(state, params, grads, lr=lr)
        history.append(float(np.mean(losses)))
    rec = rec.with_params(params)
    all_starts = np.unique(np.linspace(0, n_windows - 1, min(train.batch_size, n_windows)).astype(int))
    history.append(batch_loss(rec, all_starts)[0])
    return TrainResult(rec, history, time.perf_counter() - t0)


def _n_windows(n_total: int, length: int, what: str) -> int:
    if n_total < length:
        raise ConfigError(f"{what}: signal of {n_total} steps is shorter than the subtrajectory length {length}")
    return n_total - length + 1


# ---------------------------------------------------------------------------
# purely learning-based split scheme
# ---------------------------------------------------------------------------


def decompose_training_signal(pair: flt.ComplementaryPair, y: Signal, k: int):
    """Zero-phase high band at the original rate and the low band decimated by ``k``."""
    if not check_nyquist(pair.cutoff_hz, y.sample_rate_hz, k):
        raise ConfigError(f"k={k} violates Nyquist for cutoff {pair.cutoff_hz} Hz at fs={y.sample_rate_hz} Hz")
    high = flt.filtfilt_array(pair.high, y.samples)
    low = flt.filtfilt_array(pair.low, y.samples)
    return y.with_samples(high), Signal(downsample_array(low, k), y.sample_rate_hz / k, y.start_time_s)


@dataclass
class TrainedSplit:
    high: Recurrent
    low: Recurrent
    pair: flt.ComplementaryPair
    config: SplitConfig
    loss_history: dict
    runtime_s: float


def _slow_warmup(config: SplitConfig) -> int:
    return config.train.warmup // config.k


def train_split(config: SplitConfig, y: Signal) -> TrainedSplit:
    """Fit one GRU to the high band and one to the decimated low band."""
    fs = y.sample_rate_hz
    config.validate(fs)
    tr = config.train
    if y.n_steps <= tr.warmup + 1:
        raise ConfigError("training signal must be longer than warmup + 1")
    rng = np.random.default_rng(config.seed)
    pair = config.pair.build(fs)
    high_band, low_band = decompose_training_signal(pair, y, config.k)
    high_rec = Recurrent.build(config.high_model, tr.warmup, 1 / fs, rng, y.n_channels)
    low_r = _slow_warmup(config)
    low_len = tr.subtraj_len // config.k
    low_rec = Recurrent.build(config.low_model, low_r, config.k / fs, rng, y.n_channels)

    R, L = tr.warmup, tr.subtraj_len
    hb = high_band.samples
    hp_op = filtfilt_operator(pair.high, L - R) if config.hp_wrap else None

    def high_loss(rec, starts):
        w = _windows(hb, starts, L)
        return window_loss(rec, w[:, :R], w[:, R:], op=hp_op)

    lb = low_band.samples

    def low_loss(rec, starts):
        w = _windows(lb, starts, low_len)
        return window_loss(rec, w[:, :low_r], w[:, low_r:])

    hi = _fit(high_rec, high_loss, _n_windows(hb.shape[1], L, "high branch"), tr, rng, "high branch")
    lo = _fit(low_rec, low_loss, _n_windows(lb.shape[1], low_len, "low branch"), tr, rng, "low branch")
    return TrainedSplit(
        hi.recurrent, lo.recurrent, pair, config,
        {"high": hi.loss_history, "low": lo.loss_history},
        hi.runtime_s + lo.runtime_s,
    )


@dataclass
class SplitPrediction:
    total: Signal
    high: Signal
    low: Signal


def predict_split_components(trained: TrainedSplit, context: Signal, horizon: int) -> SplitPrediction:
    """Both band rollouts and their sum over indices ``R..horizon-1``.

    The whole context is band-split zero-phase (so it may be longer than
    ``R``); only its first ``R`` samples seed the recurrent states.
    """
    cfg, pair = trained.config, trained.pair
    R, k = cfg.train.warmup, cfg.k
    if horizon - R < 1:
        raise ConfigError(f"horizon {horizon} must exceed the warmup length {R}")
    if context.n_steps < R:
        raise ConfigError(f"context has {context.n_steps} steps, need at least {R}")
    n_out = horizon - R
    ctx = context.samples
    high_ctx = flt.filtfilt_array(pair.high, ctx)
    low_ctx = downsample_array(flt.filtfilt_array(pair.low, ctx), k)

    high = trained.high.predict(high_ctx[:, :R], n_out)
    if cfg.hp_wrap:
        high = flt.filtfilt_array(pair.high, high)

    r_slow = _slow_warmup(cfg)
    # slow sample j sits at fast index k*j; cover fast indices R..horizon-1
    last_fast = horizon - 1
    n_slow = -(-last_fast // k) - r_slow + 1
    slow = trained.low.predict(low_ctx[:, :r_slow], max(n_slow, 1))
    anchor = np.concatenate([low_ctx[:, r_slow - 1:r_slow], slow], axis=1)
    fast = upsample_array(anchor, k)
    offset = R - k * (r_slow - 1)
    low = fast[:, offset:offset + n_out]

    fs = context.sample_rate_hz
    t0 = context.start_time_s + R / fs
    return SplitPrediction(Signal(high + low, fs, t0), Signal(high, fs, t0), Signal(low, fs, t0))


def predict_split(trained: TrainedSplit, context: Signal, horizon: int) -> Signal:
    return predict_split_components(trained, context, horizon).total


# ---------------------------------------------------------------------------
# hybrid scheme
# ---------------------------------------------------------------------------


@dataclass
class TrainedHybrid:
    recurrent: Recurrent
    pair: flt.ComplementaryPair
    config: HybridConfig
    loss_history: list
    runtime_s: float


def _check_hybrid_pair(pair: flt.ComplementaryPair):
    if not pair.shares_denominator():
        raise ConfigError("hybrid model needs a pair with a shared denominator")


def hybrid_loss_fn(pair, y: np.ndarray, y_sim: np.ndarray, R: int, L: int):
    """Batch loss for the complementary-filtered hybrid model.

    The rollout enters the high leg of the joint recurrence, the simulator
    the low leg; the first ``P`` fused outputs are seeded with the training
    signal. The simulator is a constant, so gradients reach the rollout only.
    """
    n = L - R
    P = pair.order
    op = combine_high_operator(pair, n)

    def loss(rec, starts):
        w = _windows(y, starts, L)
        ws = _windows(y_sim, starts, L)
        target = w[:, R:]
        offset = combine_offset(pair, np.swapaxes(ws[:, R:], 1, 2), np.swapaxes(target[:, :P], 1, 2))
        return window_loss(rec, w[:, :R], target, op=op, offset=np.swapaxes(offset, 1, 2))

    return loss


def train_hybrid(config: HybridConfig, y: Signal, y_sim: Signal) -> TrainedHybrid:
    if y.samples.shape != y_sim.samples.shape:
        raise SignalError("training signal and simulator must have equal shapes")
    tr = config.train
    if y.n_steps <= tr.warmup:
        raise ConfigError("training signal must be longer than the warmup/recognition length")
    fs = y.sample_rate_hz
    pair = config.pair.build(fs)
    _check_hybrid_pair(pair)
    rng = np.random.default_rng(config.seed)
    rec = Recurrent.build(config.model, tr.warmup, 1 / fs, rng, y.n_channels)
    loss = hybrid_loss_fn(pair, y.samples, y_sim.samples, tr.warmup, tr.subtraj_len)
    res = _fit(rec, loss, _n_windows(y.n_steps, tr.subtraj_len, "hybrid"), tr, rng, "hybrid")
    return TrainedHybrid(res.recurrent, pair, config, res.loss_history, res.runtime_s)


@dataclass
class HybridPrediction:
    total: Signal
    rollout: Signal
    simulator: Signal


def predict_hybrid_components(trained: TrainedHybrid, context: Signal, y_sim: Signal, horizon: int) -> HybridPrediction:
    """Fuse the network rollout (high leg) with the simulator (low leg) over ``R..horizon-1``.

    The first ``P`` fused samples are seeded with the last ``P`` context values.
    """
    R, P = trained.config.train.warmup, trained.pair.order
    if horizon - R < P + 1:
        raise ConfigError(f"horizon {horizon} too short for warmup {R} and filter order {P}")
    if y_sim.n_steps < horizon:
        raise ConfigError(f"simulator covers {y_sim.n_steps} steps, horizon needs {horizon}")
    if context.n_steps < R:
        raise ConfigError(f"context has {context.n_steps} steps, need at least {R}")
    roll = trained.recurrent.predict(context.samples[:, :R], horizon - R)
    sim = y_sim.samples[:, R:horizon]
    fused = flt.combine_array(trained.pair, roll, sim, init_values=context.samples[:, R - P:R])
    fs = context.sample_rate_hz
    t0 = context.start_time_s + R / fs
    return HybridPrediction(Signal(fused, fs, t0), Signal(roll, fs, t0), Signal(sim, fs, t0))


def predict_hybrid(trained: TrainedHybrid, context: Signal, y_sim: Signal, horizon: int) -> Signal:
    return predict_hybrid_components(trained, context, y_sim, horizon).total


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


@dataclass
class TrainedBaseline:
    recurrent: Recurrent
    kind: str
    residual: bool
    config: BaselineConfig
    loss_history: list
    runtime_s: float


def _train_full_band(config: BaselineConfig, target: np.ndarray, fs: float, label: str) -> TrainResult:
    tr = config.train
    rng = np.random.default_rng(config.seed)
    rec = Recurrent.build(config.model, tr.warmup, 1 / fs, rng, target.shape[0])
    R, L = tr.warmup, tr.subtraj_len

    def loss(r, starts):
        w = _windows(target, starts, L)
        return window_loss(r, w[:, :R], w[:, R:])

    return _fit(rec, loss, _n_windows(target.shape[1], L, label), tr, rng, label)


def train_baseline(kind: str, config: BaselineConfig, y: Signal) -> TrainedBaseline:
    """Single GRU (``kind="gru"``) or Euler-MLP (``kind="rnn"``) on the full band."""
    config = replace(config, model=replace(config.model, kind=kind))
    res = _train_full_band(config, y.samples, y.sample_rate_hz, f"baseline {kind}")
    return TrainedBaseline(res.recurrent, kind, False, config, res.loss_history, res.runtime_s)


def train_residual(kind: str, config: BaselineConfig, y: Signal, y_sim: Signal) -> TrainedBaseline:
    """Learn ``y - y_sim``; predictions add the simulator back."""
    if y.samples.shape != y_sim.samples.shape:
        raise SignalError("training signal and simulator must have equal shapes")
    config = replace(config, model=replace(config.model, kind=kind))
    res = _train_full_band(config, y.samples - y_sim.samples, y.sample_rate_hz, f"residual {kind}")
    return TrainedBaseline(res.recurrent, kind, True, config, res.loss_history, res.runtime_s)


def predict_baseline(trained: TrainedBaseline, context: Signal, horizon: int, y_sim: Signal | None = None) -> Signal:
    R = trained.config.train.warmup
    if horizon - R < 1:
        raise ConfigError(f"horizon {horizon} must exceed the warmup length {R}")
    ctx = context.samples[:, :R]
    if trained.residual:
        if y_sim is None or y_sim.n_steps < horizon:
            raise ConfigError("residual prediction needs simulator output covering the horizon")
        ctx = ctx - y_sim.samples[:, :R]
    pred = trained.recurrent.predict(ctx, horizon - R)
    if trained.residual:
        pred = pred + y_sim.samples[:, R:horizon]
    fs = context.sample_rate_hz
    return Signal(pred, fs, context.start_time_s + R / fs)
