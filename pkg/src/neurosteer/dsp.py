"""Shared signal primitives: FIR design, convolution, resampling, STFT/WOLA.

All functions are pure; buffers are treated as immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.signal

from .errors import ParameterError

DEFAULT_FFT_LEN = 512
DEFAULT_HOP = 256


@dataclass
class AudioBuffer:
    """Multi-channel sampled waveform.

    samples has shape (channels, n). stems, when present, maps a label to an
    array of the same shape; the per-sample sum of all stems equals samples.
    """

    samples: np.ndarray
    rate_hz: float
    stems: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.rate_hz <= 0:
            raise ParameterError(f"rate_hz must be positive, got {self.rate_hz}")
        if self.stems is not None:
            self.stems = {k: np.atleast_2d(np.asarray(v, dtype=np.float64)) for k, v in self.stems.items()}
            for label, stem in self.stems.items():
                if stem.shape != self.samples.shape:
                    raise ParameterError(f"stem '{label}' shape {stem.shape} != samples shape {self.samples.shape}")

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.rate_hz

    @classmethod
    def mono(cls, samples: np.ndarray, rate_hz: float) -> "AudioBuffer":
        return cls(np.asarray(samples, dtype=np.float64).reshape(1, -1), rate_hz)

    def stem_sum_error(self) -> float:
        """Relative deviation of the stem sum from the mixture (0.0 without stems)."""
        if not self.stems:
            return 0.0
        total = sum(self.stems.values())
        scale = np.max(np.abs(self.samples))
        if scale == 0.0:
            return float(np.max(np.abs(total)))
        return float(np.max(np.abs(total - self.samples)) / scale)


@dataclass
class StftFrames:
    """Complex STFT frames, shape (channels, frames, bins), bins = fft_len/2+1."""

    data: np.ndarray
    fft_len: int
    hop: int
    window: np.ndarray
    rate_hz: float
    stems: dict[str, np.ndarray] | None = field(default=None)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @property
    def bins(self) -> int:
        return self.data.shape[2]


def fir_bandpass_design(low_hz: float, high_hz: float, rate_hz: float, num_taps: int) -> np.ndarray:
    """Linear-phase windowed-sinc bandpass FIR.

    The -6 dB points sit at low_hz and high_hz; with enough taps the response
    is within 3 dB of unity on [low_hz+0.5, high_hz-0.5] and at least 20 dB
    down below low_hz/2 and above 1.5*high_hz.
    """
    if not (0 < low_hz < high_hz < rate_hz / 2):
        raise ParameterError(f"invalid band edges ({low_hz}, {high_hz}) for rate {rate_hz}")
    if num_taps < 3 or num_taps % 2 == 0:
        raise ParameterError(f"num_taps must be odd and >= 3, got {num_taps}")
    return scipy.signal.firwin(num_taps, [low_hz, high_hz], pass_zero=False, fs=rate_hz, window="hamming")


def convolve(signal: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Full linear convolution, length len(signal)+len(kernel)-1."""
    signal = np.asarray(signal, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if signal.size == 0 or kernel.size == 0:
        raise ParameterError("convolve requires non-empty inputs")
    # overlap-add FFT convolution: exact to ~1e-15 relative and fast for the
    # long-signal/short-kernel case that dominates scene synthesis
    return scipy.signal.oaconvolve(signal, kernel, mode="full")


def filter_same(signal: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Filter with an odd-length linear-phase FIR, group delay compensated.

    Output has the same length and time alignment as the input.
    """
    taps = np.asarray(taps, dtype=np.float64)
    if taps.size % 2 == 0:
        raise ParameterError("filter_same requires an odd tap count")
    full = convolve(signal, taps)
    half = (taps.size - 1) // 2
    return full[half:half + np.asarray(signal).shape[-1]]


def resample(buffer: AudioBuffer, target_hz: float) -> AudioBuffer:
    """Polyphase resampling of all channels (and stems) to target_hz."""
    if target_hz <= 0:
        raise ParameterError(f"target_hz must be positive, got {target_hz}")
    if target_hz == buffer.rate_hz:
        return AudioBuffer(buffer.samples.copy(), buffer.rate_hz,
                           None if buffer.stems is None else {k: v.copy() for k, v in buffer.stems.items()})
    frac = Fraction(target_hz).limit_denominator(10**6) / Fraction(buffer.rate_hz).limit_denominator(10**6)
    up, down = frac.numerator, frac.denominator

    def _poly(x):
        return scipy.signal.resample_poly(x, up, down, axis=-1)

    samples = _poly(buffer.samples)
    stems = None if buffer.stems is None else {k: _poly(v) for k, v in buffer.stems.items()}
    return AudioBuffer(samples, target_hz, stems)


def _sqrt_hann(fft_len: int) -> np.ndarray:
    return np.sqrt(scipy.signal.get_window("hann", fft_len, fftbins=True))


def stft(buffer: AudioBuffer, fft_len: int = DEFAULT_FFT_LEN, hop: int = DEFAULT_HOP,
         with_stems: bool = False) -> StftFrames:
    """Square-root-Hann STFT of every channel.

    Frame count is floor((n - fft_len)/hop) + 1; trailing samples that do not
    fill a frame are dropped.
    """
    if fft_len <= 0 or (fft_len & (fft_len - 1)) != 0:
        raise ParameterError(f"fft_len must be a power of two, got {fft_len}")
    if hop <= 0 or fft_len % hop != 0:
        raise ParameterError(f"hop must divide fft_len, got hop={hop}, fft_len={fft_len}")
    if buffer.n_samples < fft_len:
        raise ParameterError(f"signal length {buffer.n_samples} shorter than fft_len {fft_len}")
    window = _sqrt_hann(fft_len)
    data = _analyze(buffer.samples, fft_len, hop, window)
    stems = None
    if with_stems and buffer.stems:
        stems = {k: _analyze(v, fft_len, hop, window) for k, v in buffer.stems.items()}
    return StftFrames(data, fft_len, hop, window, buffer.rate_hz, stems)


def _analyze(samples: np.ndarray, fft_len: int, hop: int, window: np.ndarray) -> np.ndarray:
    n = samples.shape[1]
    n_frames = (n - fft_len) // hop + 1
    idx = hop * np.arange(n_frames)[:, None] + np.arange(fft_len)[None, :]
    frames = samples[:, idx] * window  # (channels, frames, fft_len)
    return np.fft.rfft(frames, axis=-1)


def wola_synthesize(frames: StftFrames, data: np.ndarray | None = None) -> AudioBuffer:
    """Weighted overlap-add synthesis with square-root-Hann synthesis window.

    The overlap-added window-product sum is divided out per sample, so any
    position covered by at least one frame reconstructs exactly.
    """
    if data is None:
        data = frames.data
    data = np.atleast_3d(data)
    if data.ndim != 3:
        raise ParameterError("frame data must have shape (channels, frames, bins)")
    n_ch, n_frames, _ = data.shape
    fft_len, hop = frames.fft_len, frames.hop
    window = frames.window
    n_out = (n_frames - 1) * hop + fft_len
    out = np.zeros((n_ch, n_out))
    blocks = np.fft.irfft(data, n=fft_len, axis=-1) * window
    for f in range(n_frames):
        out[:, f * hop:f * hop + fft_len] += blocks[:, f, :]
    norm = np.zeros(n_out)
    w2 = window * window
    for f in range(n_frames):
        norm[f * hop:f * hop + fft_len] += w2
    good = norm > 1e-12 * norm.max()
    out[:, good] /= norm[good]
    out[:, ~good] = 0.0
    return AudioBuffer(out, frames.rate_hz)
