import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfdyn.filters import filtfilt, make_pair
from cfdyn.signal import Signal, SignalError, rmse
from cfdyn.spectrum import Spectrum, SpectrumError, fft, magnitude_spectrum, plausibility_check, suggest_cutoff
from cfdyn.systems import VdpSpec, gen_double_mass, gen_vdp_sim, gen_vdp_truth


def naive_dft(x):
    n = len(x)
    m = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, m) / n) @ x


class TestFft:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 1024), st.integers(0, 2**31))
    def test_matches_naive_dft(self, n, seed):
        x = np.random.default_rng(seed).normal(size=n)
        assert np.max(np.abs(fft(x) - naive_dft(x))) < 1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 512), st.integers(0, 2**31))
    def test_parseval(self, n, seed):
        x = np.random.default_rng(seed).normal(size=n)
        assert np.sum(np.abs(fft(x)) ** 2) == pytest.approx(n * np.sum(x**2), rel=1e-6)


class TestMagnitudeSpectrum:
    def test_sinusoid_on_bin(self):
        n, fs, A = 200, 10.0, 1.7
        f0 = 13 * fs / n
        t = np.arange(n) / fs
        spec = magnitude_spectrum(Signal(A * np.sin(2 * np.pi * f0 * t), fs))
        assert spec.magnitudes[13] == pytest.approx(A / 2, abs=1e-9)
        others = np.delete(spec.magnitudes, 13)
        assert others.max() < 1e-9
        assert spec.peak_frequency() == pytest.approx(f0)

    def test_constant_is_zero(self):
        spec = magnitude_spectrum(Signal(np.full(64, 3.0), 1.0))
        np.testing.assert_allclose(spec.magnitudes, 0.0, atol=1e-12)

    def test_frequency_grid(self):
        spec = magnitude_spectrum(Signal(np.random.default_rng(0).normal(size=10), 5.0))
        np.testing.assert_allclose(spec.frequencies_hz, np.arange(6) * 0.5)
        assert spec.source_length == 10

    def test_too_short(self):
        with pytest.raises(SpectrumError):
            magnitude_spectrum(Signal(np.ones(1), 1.0))

    def test_double_mass_peaks(self):
        spec = magnitude_spectrum(gen_double_mass())
        from scipy.signal import find_peaks

        idx, props = find_peaks(spec.magnitudes, prominence=0.05 * spec.magnitudes.max())
        top = sorted(spec.frequencies_hz[idx[np.argsort(props["prominences"])[::-1][:2]]])
        # resolution of a 100 s record is 0.01 Hz
        assert top[0] == pytest.approx(0.115, abs=0.011)
        assert top[1] == pytest.approx(0.57, abs=0.011)


class TestSuggestCutoff:
    def test_double_mass(self):
        f = suggest_cutoff(magnitude_spectrum(gen_double_mass()))
        assert 0.115 < f < 0.57

    def test_single_tone_rejected(self):
        t = np.arange(400) / 10.0
        with pytest.raises(SpectrumError):
            suggest_cutoff(magnitude_spectrum(Signal(np.sin(2 * np.pi * 1.0 * t), 10.0)))

    def test_geometric_mean(self):
        freqs = np.linspace(0, 5, 51)
        mags = np.zeros(51)
        mags[10] = mags[40] = 1.0
        assert suggest_cutoff(Spectrum(freqs, mags, 100)) == pytest.approx(2.0)

    def test_flat_rejected(self):
        with pytest.raises(SpectrumError):
            suggest_cutoff(Spectrum(np.linspace(0, 1, 5), np.zeros(5), 8))

    def test_only_two_bands(self):
        with pytest.raises(SpectrumError):
            suggest_cutoff(magnitude_spectrum(gen_double_mass()), n_bands=3)


class TestPlausibility:
    def test_identity_decomposition(self):
        y = gen_double_mass()
        for order in (1, 2, 4):
            assert plausibility_check(make_pair(order, 0.3, 10.0, True), y, y) < 1e-6

    def test_lowpass_simulator_reports_leakage(self):
        y = gen_double_mass()
        pair = make_pair(2, 0.3, 10.0, False)
        sim = filtfilt(pair.low, y)
        value = plausibility_check(pair, y, sim)
        assert np.isfinite(value) and value < rmse(sim, y)

    def test_vdp(self):
        spec = VdpSpec()
        truth, sim = gen_vdp_truth(spec), gen_vdp_sim(spec)
        pair = make_pair(1, 0.25, truth.sample_rate_hz, True)
        value = plausibility_check(pair, truth, sim)
        assert np.isfinite(value) and value < rmse(truth, sim)

    def test_shape_mismatch(self):
        with pytest.raises(SignalError):
            plausibility_check(make_pair(1, 0.3, 10.0, True), Signal(np.ones(5), 10.0), Signal(np.ones(6), 10.0))
