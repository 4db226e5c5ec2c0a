"""Short-time energy envelopes and band-limited amplitude envelopes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsp
from .dsp import AudioBuffer
from .errors import NumericalError, ParameterError
from .util import signal_power

DEFAULT_ENVELOPE_RATE_HZ = 20.0
AMPLITUDE_BAND_HZ = (1.0, 9.5)
AMPLITUDE_FIR_TAPS = 127


@dataclass
class EnvelopeMatrix:
    """Short-time envelopes, shape (channels, frames).

    kind 'energy' is non-negative; kind 'amplitude' is the square root passed
    through the analysis bandpass, so it may go negative and is only meant for
    correlation use.
    """

    values: np.ndarray
    rate_hz: float
    kind: str = "energy"

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if self.kind not in ("energy", "amplitude"):
            raise ParameterError(f"unknown envelope kind {self.kind!r}")
        if self.kind == "energy" and np.any(self.values < 0):
            raise ParameterError("energy envelopes must be non-negative")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]

    def row(self, index: int) -> np.ndarray:
        return self.values[index]


def short_time_energy(buffer: AudioBuffer, envelope_rate_hz: float = DEFAULT_ENVELOPE_RATE_HZ) -> EnvelopeMatrix:
    """Mean square over non-overlapping windows of T = rate/envelope_rate samples."""
    ratio = buffer.rate_hz / envelope_rate_hz
    window = int(round(ratio))
    if abs(ratio - window) > 1e-9 or window < 1:
        raise ParameterError(f"audio rate {buffer.rate_hz} not divisible by envelope rate {envelope_rate_hz}")
    n_frames = buffer.n_samples // window
    if n_frames == 0:
        raise ParameterError("signal shorter than one envelope window")
    trimmed = buffer.samples[:, :n_frames * window]
    frames = trimmed.reshape(buffer.channels, n_frames, window)
    return EnvelopeMatrix(np.mean(frames * frames, axis=2), envelope_rate_hz, "energy")


def to_amplitude_band(env: EnvelopeMatrix, num_taps: int = AMPLITUDE_FIR_TAPS) -> EnvelopeMatrix:
    """Square root followed by the 1-9.5 Hz analysis bandpass (delay compensated)."""
    if env.kind != "energy":
        raise ParameterError(f"expected an energy envelope, got kind {env.kind!r}")
    low, high = AMPLITUDE_BAND_HZ
    taps = dsp.fir_bandpass_design(low, high, env.rate_hz, num_taps)
    amp = np.sqrt(env.values)
    out = np.stack([dsp.filter_same(row, taps) for row in amp])
    return EnvelopeMatrix(out, env.rate_hz, "amplitude")


def estimate_energy_mixing(contributions: list[AudioBuffer], dry: list[AudioBuffer],
                           envelope_rate_hz: float = DEFAULT_ENVELOPE_RATE_HZ) -> np.ndarray:
    """Per-mic, per-source scalar least-squares fit of dry envelopes to mic contributions.

    contributions[j] holds the spatialized component of source j at every mic;
    dry[j] is the corresponding single-channel dry source. The result is the
    K x S energy mixing matrix used for conditioning diagnostics.
    """
    if len(contributions) != len(dry):
        raise ParameterError("one dry source required per contribution stem")
    n_sources = len(dry)
    mics = contributions[0].channels
    a = np.zeros((mics, n_sources))
    for j in range(n_sources):
        dry_env = short_time_energy(dry[j], envelope_rate_hz).values[0]
        if np.allclose(dry_env, 0.0):
            raise NumericalError(f"source {j + 1} is silent; mixing fit undefined")
        contrib_env = short_time_energy(contributions[j], envelope_rate_hz).values
        n = min(len(dry_env), contrib_env.shape[1])
        denom = dry_env[:n] @ dry_env[:n]
        for i in range(mics):
            a[i, j] = (contrib_env[i, :n] @ dry_env[:n]) / denom
    return a
