"""Tests for the shared signal primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurosteer import dsp
from neurosteer.errors import ParameterError


def dft_magnitude_db(taps, freq_hz, rate_hz):
    """Oracle: evaluate the tap DFT directly at one frequency."""
    n = np.arange(len(taps))
    h = np.sum(taps * np.exp(-2j * np.pi * freq_hz / rate_hz * n))
    return 20 * np.log10(np.abs(h))


def naive_convolve(x, k):
    """Oracle: O(n*m) double loop."""
    out = np.zeros(len(x) + len(k) - 1)
    for i, xi in enumerate(x):
        for j, kj in enumerate(k):
            out[i + j] += xi * kj
    return out


# ---------------------------------------------------------------------------
# FIR bandpass design
# ---------------------------------------------------------------------------


class TestFirBandpass:
    def test_passband_at_5hz(self):
        taps = dsp.fir_bandpass_design(1.0, 9.5, 20.0, 127)
        assert dft_magnitude_db(taps, 5.0, 20.0) >= -1.0

    def test_passband_and_stopband_contract(self):
        taps = dsp.fir_bandpass_design(1.0, 9.5, 20.0, 127)
        for f in np.linspace(1.5, 9.0, 31):
            assert dft_magnitude_db(taps, f, 20.0) >= -3.0
        for f in np.linspace(0.01, 0.5, 11):
            assert dft_magnitude_db(taps, f, 20.0) <= -20.0

    def test_linear_phase(self):
        taps = dsp.fir_bandpass_design(1.0, 9.5, 20.0, 127)
        np.testing.assert_allclose(taps, taps[::-1], atol=1e-15)

    def test_invalid_edges(self):
        with pytest.raises(ParameterError):
            dsp.fir_bandpass_design(9.5, 1.0, 20.0, 127)
        with pytest.raises(ParameterError):
            dsp.fir_bandpass_design(1.0, 11.0, 20.0, 127)
        with pytest.raises(ParameterError):
            dsp.fir_bandpass_design(1.0, 9.5, 20.0, 128)

    def test_sinusoid_attenuation_at_80hz_rate(self):
        # 15 Hz lies above the 9.5 Hz edge; compare filtered amplitudes
        rate = 80.0
        taps = dsp.fir_bandpass_design(1.0, 9.5, rate, 255)
        t = np.arange(4000) / rate
        out5 = dsp.filter_same(np.sin(2 * np.pi * 5.0 * t), taps)
        out15 = dsp.filter_same(np.sin(2 * np.pi * 15.0 * t), taps)
        trim = slice(300, -300)
        ratio_db = 20 * np.log10(np.std(out15[trim]) / np.std(out5[trim]))
        assert ratio_db <= -20.0


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------


class TestConvolve:
    def test_identity_kernel(self):
        x = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(dsp.convolve(x, [1.0]), x, atol=1e-14)

    def test_hand_computed(self):
        np.testing.assert_allclose(dsp.convolve([1, 2], [3, 4]), [3, 10, 8], atol=1e-12)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=50)
        k = rng.normal(size=7)
        np.testing.assert_allclose(dsp.convolve(x, k), naive_convolve(x, k), atol=1e-12)

    def test_empty_raises(self):
        with pytest.raises(ParameterError):
            dsp.convolve([], [1.0])
        with pytest.raises(ParameterError):
            dsp.convolve([1.0], [])

    @settings(max_examples=30, deadline=None)
    @given(
        x=st.lists(st.floats(-10, 10), min_size=1, max_size=64),
        k=st.lists(st.floats(-10, 10), min_size=1, max_size=16),
    )
    def test_commutes_and_matches_oracle(self, x, k):
        a = dsp.convolve(x, k)
        b = dsp.convolve(k, x)
        np.testing.assert_allclose(a, b, atol=1e-12)
        np.testing.assert_allclose(a, naive_convolve(x, k), atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(
        x=st.lists(st.floats(-5, 5), min_size=2, max_size=40),
        y=st.lists(st.floats(-5, 5), min_size=2, max_size=40),
        k=st.lists(st.floats(-5, 5), min_size=1, max_size=8),
    )
    def test_linearity(self, x, y, k):
        n = min(len(x), len(y))
        x, y = np.array(x[:n]), np.array(y[:n])
        lhs = dsp.convolve(x + y, k)
        rhs = dsp.convolve(x, k) + dsp.convolve(y, k)
        np.testing.assert_allclose(lhs, rhs, atol=1e-11)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


class TestResample:
    def test_same_rate_identity(self):
        buf = dsp.AudioBuffer(np.random.default_rng(0).normal(size=(2, 100)), 8000.0)
        out = dsp.resample(buf, 8000.0)
        np.testing.assert_array_equal(out.samples, buf.samples)

    def test_sinusoid_survives_downsample(self):
        rate, target, f0 = 16000.0, 8000.0, 1000.0
        t = np.arange(16000) / rate
        buf = dsp.AudioBuffer.mono(np.sin(2 * np.pi * f0 * t), rate)
        out = dsp.resample(buf, target)
        assert out.n_samples == 8000
        # oracle: least-squares sinusoid fit on the trimmed output
        t2 = np.arange(out.n_samples)[200:-200] / target
        basis = np.vstack([np.sin(2 * np.pi * f0 * t2), np.cos(2 * np.pi * f0 * t2)]).T
        coef, *_ = np.linalg.lstsq(basis, out.samples[0, 200:-200], rcond=None)
        assert np.hypot(*coef) == pytest.approx(1.0, abs=0.01)

    def test_dc_preserved(self):
        buf = dsp.AudioBuffer.mono(np.ones(4000), 16000.0)
        out = dsp.resample(buf, 8000.0)
        np.testing.assert_allclose(out.samples[0, 100:-100], 1.0, atol=1e-6)

    def test_stems_resampled_identically(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(2, 4000))
        b = rng.normal(size=(2, 4000))
        buf = dsp.AudioBuffer(a + b, 16000.0, stems={"a": a, "b": b})
        out = dsp.resample(buf, 8000.0)
        assert out.stems is not None
        np.testing.assert_allclose(out.stems["a"] + out.stems["b"], out.samples, atol=1e-9)

    def test_invalid_target(self):
        buf = dsp.AudioBuffer.mono(np.ones(10), 8000.0)
        with pytest.raises(ParameterError):
            dsp.resample(buf, 0.0)


# ---------------------------------------------------------------------------
# STFT / WOLA
# ---------------------------------------------------------------------------


class TestStftWola:
    def test_frame_count(self):
        buf = dsp.AudioBuffer.mono(np.zeros(16000), 16000.0)
        fr = dsp.stft(buf, 512, 256)
        assert fr.frames == (16000 - 512) // 256 + 1
        assert fr.bins == 512 // 2 + 1

    def test_zero_signal_zero_frames(self):
        buf = dsp.AudioBuffer.mono(np.zeros(4096), 16000.0)
        fr = dsp.stft(buf, 512, 256)
        assert np.all(fr.data == 0)

    def test_roundtrip_white_noise(self):
        rng = np.random.default_rng(11)
        buf = dsp.AudioBuffer(rng.normal(size=(2, 8192)), 16000.0)
        rec = dsp.wola_synthesize(dsp.stft(buf, 512, 256))
        n = rec.n_samples
        interior = slice(512, n - 512)
        scale = np.max(np.abs(buf.samples))
        err = np.max(np.abs(rec.samples[:, interior] - buf.samples[:, interior])) / scale
        assert err < 1e-8

    def test_too_short_raises(self):
        buf = dsp.AudioBuffer.mono(np.zeros(100), 16000.0)
        with pytest.raises(ParameterError):
            dsp.stft(buf, 512, 256)

    def test_bad_framing_params(self):
        buf = dsp.AudioBuffer.mono(np.zeros(4096), 16000.0)
        with pytest.raises(ParameterError):
            dsp.stft(buf, 500, 250)
        with pytest.raises(ParameterError):
            dsp.stft(buf, 512, 200)

    def test_single_bin_is_windowed_burst(self):
        buf = dsp.AudioBuffer.mono(np.zeros(2048), 16000.0)
        fr = dsp.stft(buf, 512, 256)
        data = np.zeros_like(fr.data)
        data[0, 3, 10] = 1.0
        out = dsp.wola_synthesize(fr, data).samples[0]
        start, stop = 3 * 256, 3 * 256 + 512
        assert np.all(out[:start] == 0) and np.all(out[stop:] == 0)
        assert np.any(out[start:stop] != 0)

    def test_synthesis_linearity(self):
        rng = np.random.default_rng(5)
        buf = dsp.AudioBuffer.mono(rng.normal(size=4096), 16000.0)
        fr = dsp.stft(buf, 512, 256)
        a = rng.normal(size=fr.data.shape) + 1j * rng.normal(size=fr.data.shape)
        b = rng.normal(size=fr.data.shape) + 1j * rng.normal(size=fr.data.shape)
        lhs = dsp.wola_synthesize(fr, a + b).samples
        rhs = dsp.wola_synthesize(fr, a).samples + dsp.wola_synthesize(fr, b).samples
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_parseval_per_frame(self):
        rng = np.random.default_rng(13)
        buf = dsp.AudioBuffer.mono(rng.normal(size=4096), 16000.0)
        fr = dsp.stft(buf, 512, 256)
        # rfft bins: DC and Nyquist counted once, the rest twice
        weights = np.full(fr.bins, 2.0)
        weights[0] = weights[-1] = 1.0
        spec_energy = np.sum(weights * np.abs(fr.data[0]) ** 2) / fr.fft_len
        time_energy = 0.0
        for f in range(fr.frames):
            seg = buf.samples[0, f * 256:f * 256 + 512] * fr.window
            time_energy += np.sum(seg**2)
        assert spec_energy == pytest.approx(time_energy, rel=1e-9)

    def test_cola_window_pair(self):
        w = dsp._sqrt_hann(512)
        acc = np.zeros(512 + 256 * 10)
        for f in range(11):
            acc[f * 256:f * 256 + 512] += w * w
        interior = acc[512:-512]
        np.testing.assert_allclose(interior, interior[0], atol=1e-10)


class TestAudioBuffer:
    def test_stem_shape_checked(self):
        with pytest.raises(ParameterError):
            dsp.AudioBuffer(np.zeros((2, 10)), 8000.0, stems={"x": np.zeros((2, 9))})

    def test_stem_sum_error(self):
        a = np.ones((1, 10))
        buf = dsp.AudioBuffer(2 * a, 8000.0, stems={"p": a, "q": a})
        assert buf.stem_sum_error() < 1e-12

    def test_bad_rate(self):
        with pytest.raises(ParameterError):
            dsp.AudioBuffer(np.zeros((1, 4)), 0.0)
