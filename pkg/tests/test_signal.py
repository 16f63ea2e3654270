import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cfdyn.signal import (
    NoiseSpec,
    Signal,
    SignalError,
    add_noise,
    read_csv,
    rmse,
    rmse_over_time,
    write_csv,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def sig(x, fs=10.0):
    return Signal(np.asarray(x, dtype=float), fs)


class TestSignal:
    def test_1d_input_becomes_single_channel(self):
        s = sig([1, 2, 3])
        assert s.samples.shape == (1, 3)
        assert s.n_channels == 1 and s.n_steps == 3

    def test_samples_are_read_only_copies(self):
        x = np.zeros(4)
        s = sig(x)
        x[0] = 5
        assert s.samples[0, 0] == 0
        with pytest.raises(ValueError):
            s.samples[0, 0] = 1

    @pytest.mark.parametrize("bad", [[], [np.nan], [np.inf, 1.0]])
    def test_rejects_empty_or_nonfinite(self, bad):
        with pytest.raises(SignalError):
            sig(bad)

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(SignalError):
            Signal(np.ones(3), 0.0)

    def test_slicing_keeps_rate_and_shifts_start(self):
        s = sig(np.arange(10.0), fs=4.0)
        part = s[3:7]
        assert part.sample_rate_hz == 4.0
        assert part.start_time_s == pytest.approx(0.75)
        np.testing.assert_array_equal(part.samples[0], [3, 4, 5, 6])

    def test_strided_slice_rejected(self):
        with pytest.raises(SignalError):
            sig(np.arange(10.0))[::2]

    def test_concat(self):
        a, b = sig([1, 2]), sig([3])
        np.testing.assert_array_equal(a.concat(b).samples[0], [1, 2, 3])
        with pytest.raises(SignalError):
            a.concat(sig([3], fs=5.0))

    def test_times(self):
        np.testing.assert_allclose(sig(np.zeros(3), fs=2.0).times, [0, 0.5, 1.0])


class TestNoise:
    def test_zero_variance_is_identity(self):
        s = sig(np.linspace(0, 1, 50))
        assert add_noise(s, NoiseSpec(0.0, 3)) is s

    def test_sample_variance(self):
        out = add_noise(sig(np.zeros(100_000)), NoiseSpec(0.1, 7))
        assert 0.09 <= out.samples.var() <= 0.11

    def test_same_seed_bit_identical(self):
        s = sig(np.sin(np.arange(100)))
        a = add_noise(s, NoiseSpec(0.5, 11))
        b = add_noise(s, NoiseSpec(0.5, 11))
        assert np.array_equal(a.samples, b.samples)
        c = add_noise(s, NoiseSpec(0.5, 12))
        assert not np.array_equal(a.samples, c.samples)

    def test_negative_variance_rejected(self):
        with pytest.raises(SignalError):
            NoiseSpec(-1.0)


class TestRmse:
    def test_hand_values(self):
        assert rmse(sig([0, 0]), sig([3, 4])) == pytest.approx(math.sqrt(12.5))
        assert rmse(sig([1.0]), sig([0.0])) == 1.0
        s = sig([1, 2, 3])
        assert rmse(s, s) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(SignalError):
            rmse(sig([1, 2]), sig([1, 2, 3]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 30).flatmap(lambda n: st.tuples(*[arrays(float, n, elements=finite)] * 3)))
    def test_metric_properties(self, xs):
        a, b, c = (sig(x) for x in xs)
        assert rmse(a, b) == pytest.approx(rmse(b, a))
        # triangle inequality of the scaled Euclidean norm
        assert rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-9


class TestRmseOverTime:
    def test_hand_values(self):
        np.testing.assert_allclose(rmse_over_time(sig([0, 0]), sig([1, 1])).samples[0], [1, 1])
        np.testing.assert_array_equal(rmse_over_time(sig([1, 2]), sig([1, 2])).samples[0], [0, 0])

    def test_constant_error_gives_constant_curve(self):
        x = np.random.default_rng(0).normal(size=40)
        np.testing.assert_allclose(rmse_over_time(sig(x + 0.3), sig(x)).samples[0], 0.3)

    def test_first_entry_is_pointwise_norm(self):
        a = Signal(np.array([[3.0, 0.0], [4.0, 0.0]]), 1.0)
        b = Signal(np.zeros((2, 2)), 1.0)
        assert rmse_over_time(a, b).samples[0, 0] == pytest.approx(5.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40).flatmap(lambda n: st.tuples(arrays(float, n, elements=finite),
                                                          arrays(float, n, elements=finite))))
    def test_last_entry_equals_rmse(self, xs):
        a, b = sig(xs[0]), sig(xs[1])
        assert rmse_over_time(a, b).samples[0, -1] == pytest.approx(rmse(a, b), rel=1e-9, abs=1e-12)


class TestCsv:
    @settings(max_examples=30, deadline=None)
    @given(
        st.integers(1, 3),
        st.integers(2, 20),
        st.sampled_from([1.0, 10.0, 20.0, 44100.0]),
        st.floats(-5, 5),
        st.data(),
    )
    def test_round_trip(self, tmp_path_factory, d, n, fs, t0, data):
        x = data.draw(arrays(float, (d, n), elements=finite))
        s = Signal(x, fs, t0)
        path = tmp_path_factory.mktemp("csv") / "s.csv"
        write_csv(s, path)
        back = read_csv(path)
        np.testing.assert_allclose(back.samples, s.samples, rtol=1e-12, atol=1e-12)
        assert back.sample_rate_hz == pytest.approx(fs, rel=1e-9)

    def test_format(self, tmp_path):
        write_csv(Signal(np.array([[1.0, 2.0], [3.0, 4.0]]), 2.0), tmp_path / "a.csv")
        raw = (tmp_path / "a.csv").read_bytes()
        assert raw.startswith(b"t,y0,y1\n")
        assert b"\r" not in raw

    def test_header_only(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("t,y0\n")
        with pytest.raises(SignalError, match="empty signal"):
            read_csv(p)

    def test_jitter_rejected(self, tmp_path):
        p = tmp_path / "j.csv"
        p.write_text("t,y0\n0,1\n0.1,2\n0.2001,3\n0.3,4\n")
        with pytest.raises(SignalError, match="non-uniform sampling"):
            read_csv(p)

    def test_malformed(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("t,y0\n0,1\n0.1,abc\n")
        with pytest.raises(SignalError):
            read_csv(p)
        p.write_text("t,y0\n0,1\n0.1\n")
        with pytest.raises(SignalError):
            read_csv(p)
