from dataclasses import replace

import numpy as np
import pytest

from cfdyn import filters as flt
from cfdyn.learn import (
    BaselineConfig,
    ConfigError,
    HybridConfig,
    ModelSpec,
    PairSpec,
    Recurrent,
    SplitConfig,
    TrainSpec,
    decompose_training_signal,
    hybrid_loss_fn,
    predict_baseline,
    predict_hybrid,
    predict_hybrid_components,
    predict_split,
    predict_split_components,
    train_baseline,
    train_hybrid,
    train_residual,
    train_split,
)
from cfdyn.neural import DivergenceError, EulerMlpModel, GruModel
from cfdyn.resample import upsample_array
from cfdyn.signal import Signal, SignalError
from cfdyn.systems import VdpSpec, gen_double_mass, gen_vdp_sim, gen_vdp_truth

SMALL = TrainSpec(subtraj_len=40, warmup=10, epochs=2, batch_size=8)


def small_split(**kw):
    base = SplitConfig(ModelSpec("gru", 4), ModelSpec("gru", 3), PairSpec(3, 0.4, False), 2, SMALL)
    return replace(base, **kw)


def band_limited(n=400, fs=10.0, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    freqs = rng.uniform(0.05, 1.5, 6)
    return Signal(sum(np.sin(2 * np.pi * f * t + rng.uniform(0, 6)) for f in freqs), fs)


class TestConfig:
    def test_warmup_shorter_than_window(self):
        with pytest.raises(ConfigError):
            TrainSpec(subtraj_len=10, warmup=10)

    def test_nyquist_rejected(self):
        with pytest.raises(ConfigError, match="Nyquist"):
            small_split(k=13).validate(10.0)

    def test_lr_schedule(self):
        t = TrainSpec(lr=1e-3, lr_schedule=((20, 1e-4), (500, 1e-5)))
        assert [t.lr_at(e) for e in (0, 19, 20, 499, 500)] == [1e-3, 1e-3, 1e-4, 1e-4, 1e-5]

    def test_fairness(self):
        cfg = SplitConfig()
        assert cfg.baseline_config().model.hidden_size == cfg.high_model.hidden_size + cfg.low_model.hidden_size == 64

    def test_bad_model_kind(self):
        with pytest.raises(ConfigError):
            ModelSpec("lstm")


class TestDecompose:
    def test_perfect_pair_reconstructs_interior(self):
        y = band_limited()
        pair = flt.make_pair(1, 0.4, 10.0, True)
        high, low = decompose_training_signal(pair, y, 1)
        err = (high.samples + low.samples - y.samples)[0, 50:-50]
        assert np.abs(err).max() < 0.01 * y.samples.std()

    def test_system_i_round_trip(self):
        y = gen_double_mass()
        pair = flt.make_pair(3, 0.4, 10.0, False)
        high, low = decompose_training_signal(pair, y, 2)
        assert low.sample_rate_hz == 5.0
        up = upsample_array(low.samples, 2)
        n = up.shape[1]
        rec = high.samples[:, :n] + up
        # measured 0.0095 of the signal std
        assert np.sqrt(np.mean((rec - y.samples[:, :n]) ** 2)) < 0.05 * y.samples.std()

    def test_zero(self):
        high, low = decompose_training_signal(flt.make_pair(2, 0.4, 10.0, False), Signal(np.zeros(50), 10.0), 2)
        assert not high.samples.any() and not low.samples.any()

    def test_inadmissible_k(self):
        with pytest.raises(ConfigError):
            decompose_training_signal(flt.make_pair(2, 0.4, 10.0, False), Signal(np.zeros(50), 10.0), 13)


class TestSplit:
    def test_zero_epochs(self):
        y = band_limited()
        trained = train_split(small_split(train=replace(SMALL, epochs=0)), y)
        for h in trained.loss_history.values():
            assert len(h) == 1 and np.isfinite(h[0])

    def test_prediction_is_sum_of_bands(self):
        y = band_limited()
        trained = train_split(small_split(), y)
        parts = predict_split_components(trained, y, 120)
        assert parts.total.n_steps == 110
        np.testing.assert_allclose(parts.total.samples, parts.high.samples + parts.low.samples, atol=1e-12)
        assert parts.total.start_time_s == pytest.approx(1.0)

    def test_prefix(self):
        y = band_limited()
        trained = train_split(small_split(), y)
        a = predict_split(trained, y, 100).samples
        b = predict_split(trained, y, 102).samples
        # the last partial slow segment may interpolate to a different endpoint
        np.testing.assert_allclose(a[:, :-2], b[:, :a.shape[1] - 2], atol=1e-12)

    def test_hp_wrap_prediction_is_highpassed(self):
        y = band_limited()
        trained = train_split(small_split(hp_wrap=True), y)
        parts = predict_split_components(trained, y, 200)
        assert abs(parts.high.samples.mean()) < 0.05

    def test_zero_model_zero_prediction(self):
        y = Signal(np.zeros(100), 10.0)
        trained = train_split(small_split(train=replace(SMALL, epochs=0)), y)
        zero = lambda r: Recurrent(GruModel.zeros(r.model.hidden_dim, readout_bias=True))
        trained = replace(trained, high=zero(trained.high), low=zero(trained.low))
        np.testing.assert_array_equal(predict_split(trained, y, 60).samples, 0.0)

    def test_constant_signal_low_branch_learns(self):
        y = Signal(np.full(200, 0.5), 10.0)
        cfg = small_split(train=replace(SMALL, epochs=50, lr=1e-2))
        trained = train_split(cfg, y)
        assert trained.loss_history["low"][-1] < 0.05
        assert trained.loss_history["high"][-1] < 0.05

    def test_deterministic(self):
        y = band_limited()
        a = train_split(small_split(), y)
        b = train_split(small_split(), y)
        assert a.loss_history == b.loss_history
        assert np.array_equal(predict_split(a, y, 80).samples, predict_split(b, y, 80).samples)

    def test_context_too_short(self):
        y = band_limited()
        trained = train_split(small_split(), y)
        with pytest.raises(ConfigError):
            predict_split(trained, y[:5], 80)
        with pytest.raises(ConfigError):
            predict_split(trained, y, 10)

    def test_divergence_names_epoch(self):
        y = Signal(np.full(100, 1e200), 10.0)
        with pytest.raises(DivergenceError, match="epoch 0"), np.errstate(all="ignore"):
            train_split(small_split(), y)


def vdp_pair():
    spec = VdpSpec(duration=15.0)
    return gen_vdp_truth(spec), gen_vdp_sim(spec)


def small_hybrid(kind="rnn", epochs=1):
    return HybridConfig(ModelSpec(kind, 3, width=8, rec_dim=6), PairSpec(1, 0.25, True),
                        TrainSpec(subtraj_len=40, warmup=10, epochs=epochs, batch_size=16))


class TestHybrid:
    def test_zero_epochs(self):
        y, sim = vdp_pair()
        trained = train_hybrid(small_hybrid(epochs=0), y, sim)
        assert len(trained.loss_history) == 1 and np.isfinite(trained.loss_history[0])

    def test_fixture_loss_zero_when_rollout_is_truth(self):
        y, _ = vdp_pair()
        pair = flt.make_pair(1, 0.25, 20.0, True)
        R, L = 10, 40

        class Echo:
            """Stand-in recurrent model whose rollout replays the observed window."""

            def forward(self, context, n):
                return self.rollout, None

            def backward(self, tape, dY):
                return {}

        starts = np.array([0, 7, 100])
        echo = Echo()
        echo.rollout = y.samples[0, starts[:, None] + np.arange(R, L)][..., None]
        loss, _ = hybrid_loss_fn(pair, y.samples, y.samples, R, L)(echo, starts)
        assert loss < 1e-6

    def test_prediction_follows_rollout_when_sim_equals_it(self):
        y, _ = vdp_pair()
        trained = train_hybrid(small_hybrid(epochs=0), y, y)
        R = trained.config.train.warmup
        roll = trained.recurrent.predict(y.samples[:, :R], 200 - R)
        sim = Signal(np.concatenate([y.samples[:, :R], roll], axis=1), 20.0)
        out = predict_hybrid(trained, y[:R], sim, 200)
        # perfect pair: only the seed mismatch survives, decaying with the filter pole
        pole = -trained.pair.low.a[1]
        expected = (y.samples[0, R - 1] - roll[0, 0]) * pole ** np.arange(200 - R)
        np.testing.assert_allclose(out.samples[0] - roll[0], expected, atol=1e-12)

    def test_constant_simulator_zero_rollout(self):
        y, _ = vdp_pair()
        trained = train_hybrid(small_hybrid(epochs=0), y, y)
        m = trained.recurrent.model
        zero = m.with_params({k: np.zeros_like(v) for k, v in m.params.items()})
        trained = replace(trained, recurrent=replace(trained.recurrent, model=zero))
        sim = Signal(np.full(300, 0.7), 20.0)
        out = predict_hybrid(trained, Signal(np.zeros(10), 20.0), sim, 300)
        assert out.samples[0, -1] == pytest.approx(0.7, abs=1e-6)

    def test_learned_part_has_no_dc(self):
        y, sim = vdp_pair()
        trained = train_hybrid(small_hybrid(epochs=1), y, sim)
        parts = predict_hybrid_components(trained, y, sim, 300)
        low = flt.combine_array(trained.pair, np.zeros_like(parts.rollout.samples), parts.simulator.samples,
                                init_values=np.zeros((1, 1)))
        high_leg = parts.total.samples - low
        # the high leg is the (seeded) highpass of the rollout; its mean is far below its amplitude
        assert abs(high_leg[0, 50:].mean()) < 0.01 * max(np.abs(parts.rollout.samples).max(), 1.0) + 0.05

    @pytest.mark.parametrize("kind", ["gru", "rnn"])
    def test_both_model_families(self, kind):
        y, sim = vdp_pair()
        trained = train_hybrid(small_hybrid(kind), y, sim)
        out = predict_hybrid(trained, y, sim, 250)
        assert out.n_steps == 240 and np.all(np.isfinite(out.samples))

    def test_errors(self):
        y, sim = vdp_pair()
        trained = train_hybrid(small_hybrid(epochs=0), y, sim)
        with pytest.raises(ConfigError):
            predict_hybrid(trained, y, sim[:100], 250)
        with pytest.raises(SignalError):
            train_hybrid(small_hybrid(), y, sim[:100])


class TestBaselines:
    def test_rnn_dispatch(self):
        y = band_limited()
        cfg = BaselineConfig(ModelSpec("gru", 4, width=6, rec_dim=5), SMALL)
        trained = train_baseline("rnn", cfg, y)
        assert isinstance(trained.recurrent.model, EulerMlpModel)
        assert predict_baseline(trained, y, 60).n_steps == 50

    def test_residual_zero_target(self):
        y = band_limited()
        cfg = BaselineConfig(ModelSpec("gru", 4), replace(SMALL, epochs=30, lr=1e-2))
        trained = train_residual("gru", cfg, y, y)
        assert trained.loss_history[-1] < 0.05
        pred = predict_baseline(trained, y, 100, y)
        assert np.sqrt(np.mean((pred.samples - y.samples[:, 10:100]) ** 2)) < 0.1

    def test_residual_needs_simulator(self):
        y = band_limited()
        trained = train_residual("gru", BaselineConfig(ModelSpec("gru", 3), SMALL), y, y)
        with pytest.raises(ConfigError):
            predict_baseline(trained, y, 60)
