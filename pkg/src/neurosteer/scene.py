"""Binaural scene synthesis: two speakers plus diffuse multi-talker noise.

Impulse responses come either from a manifest of measured WAV files or from
a parametric head model (spherical-head delay, sinusoidal level difference,
one-pole head-shadow tilt). Ground-truth stems are kept on the mixture for
oracle evaluation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from . import dsp
from .dsp import AudioBuffer
from .errors import ConfigError, LoadError, ParameterError
from .util import signal_power, wrap_angle_deg

SPEED_OF_SOUND_M_S = 343.0
HEAD_RADIUS_M = 0.0875

# three behind-the-ear microphones per side, slightly different radii
DEFAULT_MIC_OFFSETS_M = (-0.093, -0.0875, -0.082, 0.082, 0.0875, 0.093)

DEFAULT_NOISE_ANGLES_DEG = (-90.0, -45.0, 0.0, 45.0, 90.0)

# the twelve speaker-pair presets used by the evaluation matrix
SPEAKER_PRESETS: dict[str, tuple[float, float]] = {
    "pm90": (-90.0, 90.0),
    "pm75": (-75.0, 75.0),
    "m90p30": (-90.0, 30.0),
    "pm60": (-60.0, 60.0),
    "m90p0": (-90.0, 0.0),
    "pm45": (-45.0, 45.0),
    "m90m30": (-90.0, -30.0),
    "m60p0": (-60.0, 0.0),
    "pm30": (-30.0, 30.0),
    "m90m60": (-90.0, -60.0),
    "m60m30": (-60.0, -30.0),
    "pm15": (-15.0, 15.0),
}

MAX_IR_TAPS = 256


@dataclass
class HrirSet:
    """Impulse responses per (azimuth, microphone)."""

    angles_deg: list[float]
    mics: int
    rate_hz: float
    impulse_responses: dict[float, np.ndarray]  # angle -> (mics, taps)

    def __post_init__(self):
        if not self.angles_deg:
            raise ParameterError("HrirSet needs at least one angle")
        for angle in self.angles_deg:
            if angle not in self.impulse_responses:
                raise ParameterError(f"missing impulse responses for angle {angle}")
            ir = self.impulse_responses[angle]
            if ir.shape[0] != self.mics:
                raise ParameterError(f"angle {angle}: expected {self.mics} mics, got {ir.shape[0]}")

    def for_angle(self, angle_deg: float) -> np.ndarray:
        key = wrap_angle_deg(angle_deg)
        if key not in self.impulse_responses:
            raise ConfigError(f"angle {angle_deg} not present in HRIR set (have {sorted(self.impulse_responses)})")
        return self.impulse_responses[key]


@dataclass
class SceneConfig:
    speaker_angles_deg: tuple[float, float]
    noise_angles_deg: tuple[float, ...] = DEFAULT_NOISE_ANGLES_DEG
    noise_power_ratio: float = 0.1
    rate_hz: float = 16000.0
    attended_index: int = 1

    def __post_init__(self):
        if len(self.speaker_angles_deg) != 2:
            raise ParameterError("exactly two speaker angles required")
        if self.noise_power_ratio < 0:
            raise ParameterError("noise_power_ratio must be >= 0")
        if self.attended_index not in (1, 2):
            raise ParameterError("attended_index must be 1 or 2")


def _woodworth_factor(incidence_deg: float) -> float:
    """Dimensionless arrival-time factor vs the closest possible position.

    0 when the source is aligned with the ear, growing with the angular
    distance; beyond 90 degrees the path wraps around the head.
    """
    d = abs(incidence_deg)
    if d <= 90.0:
        return 1.0 - np.cos(np.radians(d))
    return 1.0 + np.radians(d - 90.0)


def _fractional_delay_fir(delay_samples: float, half_width: int = 24) -> np.ndarray:
    n = np.arange(int(np.ceil(delay_samples)) + 2 * half_width + 1)
    x = n - (half_width + delay_samples)
    return np.sinc(x) * _hann_at(x, half_width)


def _hann_at(x: np.ndarray, half_width: int) -> np.ndarray:
    w = np.zeros_like(x)
    inside = np.abs(x) <= half_width
    w[inside] = 0.5 * (1.0 + np.cos(np.pi * x[inside] / half_width))
    return w


def synth_hrir(angle_deg: float, mic_positions=DEFAULT_MIC_OFFSETS_M, rate_hz: float = 16000.0) -> np.ndarray:
    """Parametric impulse responses for one source azimuth, shape (mics, taps).

    Each microphone sits on the interaural axis at a signed offset (negative =
    left). The ipsilateral path is a pure fractional delay; the contralateral
    path is additionally attenuated by 6 dB * |sin(angle)| and tilted by a
    one-pole head-shadow filter (normalized to unit broadband energy so the
    level difference is carried by the gain term alone).
    """
    if not -180.0 <= angle_deg <= 180.0:
        raise ParameterError(f"angle must be in [-180, 180], got {angle_deg}")
    angle = wrap_angle_deg(angle_deg)
    irs = []
    for offset in mic_positions:
        side = 1.0 if offset >= 0 else -1.0
        radius = abs(offset) if offset != 0 else HEAD_RADIUS_M
        incidence = wrap_angle_deg(angle - side * 90.0)
        delay_s = (radius / SPEED_OF_SOUND_M_S) * _woodworth_factor(incidence)
        ir = _fractional_delay_fir(delay_s * rate_hz)
        if angle != 0.0 and side * angle < 0:
            gain = 10.0 ** (-abs(np.sin(np.radians(angle))) * 6.0 / 20.0)
            cutoff_hz = 6000.0 - 4500.0 * abs(np.sin(np.radians(angle)))
            pole = np.exp(-2.0 * np.pi * cutoff_hz / rate_hz)
            shadow = (1.0 - pole) * pole ** np.arange(MAX_IR_TAPS)
            shadow /= np.sqrt(np.sum(shadow**2))  # unit broadband energy
            ir = np.convolve(ir, shadow) * gain
        irs.append(ir[:MAX_IR_TAPS])
    taps = max(len(ir) for ir in irs)
    out = np.zeros((len(irs), taps))
    for i, ir in enumerate(irs):
        out[i, :len(ir)] = ir
    return out


def parametric_hrir_set(angles_deg, mic_positions=DEFAULT_MIC_OFFSETS_M, rate_hz: float = 16000.0) -> HrirSet:
    angles = sorted({wrap_angle_deg(a) for a in angles_deg})
    responses = {a: synth_hrir(a, mic_positions, rate_hz) for a in angles}
    return HrirSet(angles, len(tuple(mic_positions)), rate_hz, responses)


def load_hrir_set(manifest_path: str, rate_hz: float | None = None) -> HrirSet:
    """Load impulse responses from a manifest of `angle=wav_path` lines.

    A `rate_hz=<value>` line overrides the common rate; otherwise the first
    file's rate is used (or the explicit rate_hz argument). Paths are
    resolved relative to the manifest.
    """
    if not os.path.exists(manifest_path):
        raise LoadError(f"HRIR manifest not found: {manifest_path}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    entries: list[tuple[float, str]] = []
    manifest_rate = rate_hz
    with open(manifest_path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LoadError(f"{manifest_path}:{lineno}: expected 'angle=path', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "rate_hz":
                if rate_hz is None:
                    manifest_rate = float(value)
                continue
            try:
                angle = float(key)
            except ValueError as exc:
                raise LoadError(f"{manifest_path}:{lineno}: bad angle {key!r}") from exc
            entries.append((wrap_angle_deg(angle), os.path.join(base, value)))
    if not entries:
        raise LoadError(f"{manifest_path}: no angle entries")

    from .io import read_wav

    responses: dict[float, np.ndarray] = {}
    mics = None
    target = manifest_rate
    for angle, path in entries:
        if not os.path.exists(path):
            raise LoadError(f"HRIR file missing for angle {angle}: {path}")
        buf = read_wav(path)
        if mics is None:
            mics = buf.channels
        elif buf.channels != mics:
            raise LoadError(f"{path}: expected {mics} channels, got {buf.channels}")
        if target is None:
            target = buf.rate_hz
        if buf.rate_hz != target:
            buf = dsp.resample(buf, target)
        responses[angle] = buf.samples
    angles = sorted(responses)
    return HrirSet(angles, mics, float(target), responses)


def synth_speech_like(duration_s: float, rate_hz: float, rng: np.random.Generator,
                      envelope_rate_hz: float = 20.0) -> AudioBuffer:
    """Amplitude-modulated noise with silence gaps: a self-contained speech stand-in.

    Each envelope-rate slot is silent with probability 0.5, otherwise the
    gain is drawn uniform(0, 1); gains are held constant within a slot.
    """
    n = int(round(duration_s * rate_hz))
    slot = int(round(rate_hz / envelope_rate_hz))
    n_slots = int(np.ceil(n / slot))
    gains = rng.uniform(0.0, 1.0, size=n_slots)
    gains[rng.uniform(size=n_slots) < 0.5] = 0.0
    gate = np.repeat(gains, slot)[:n]
    carrier = rng.standard_normal(n)
    return AudioBuffer.mono(carrier * gate, rate_hz)


def fit_spectral_shape_fir(speech: list[AudioBuffer], rate_hz: float, num_taps: int = 65) -> np.ndarray:
    """Least-squares linear-phase FIR matched to the average speech magnitude spectrum."""
    psds = []
    for buf in speech:
        x = buf.samples[0]
        f, pxx = scipy.signal.welch(x, fs=rate_hz, nperseg=min(512, len(x)))
        psds.append(pxx)
    mag = np.sqrt(np.mean(psds, axis=0))
    mag /= mag.max()
    bands = np.empty(2 * (len(f) - 1))
    desired = np.empty_like(bands)
    bands[0::2], bands[1::2] = f[:-1], f[1:]
    desired[0::2], desired[1::2] = mag[:-1], mag[1:]
    return scipy.signal.firls(num_taps, bands, desired, fs=rate_hz)


def speech_shaped_noise(speech: list[AudioBuffer], n_sources: int, n_samples: int,
                        rate_hz: float, rng: np.random.Generator) -> list[AudioBuffer]:
    """Independent noise realizations whose spectrum matches the speech average."""
    taps = fit_spectral_shape_fir(speech, rate_hz)
    out = []
    for _ in range(n_sources):
        white = rng.standard_normal(n_samples + len(taps))
        shaped = dsp.convolve(white, taps)[len(taps):len(taps) + n_samples]
        out.append(AudioBuffer.mono(shaped, rate_hz))
    return out


def _normalize_power(x: np.ndarray, target_power: float = 1.0) -> np.ndarray:
    p = signal_power(x)
    if p == 0.0:
        return x.copy()
    return x * np.sqrt(target_power / p)


def _spatialize(source: np.ndarray, irs: np.ndarray, n_out: int) -> np.ndarray:
    """Convolve one dry source with per-mic IRs; trim to the scene length."""
    mics = irs.shape[0]
    out = np.zeros((mics, n_out))
    for i in range(mics):
        out[i] = dsp.convolve(source, irs[i])[:n_out]
    return out


def synthesize_scene(speech: tuple[AudioBuffer, AudioBuffer], noise: list[AudioBuffer],
                     hrirs: HrirSet, config: SceneConfig) -> AudioBuffer:
    """Mix two spatialized speakers and diffuse noise; keep ground-truth stems.

    Speech inputs are normalized to unit long-term power before spatialization
    (silent inputs are left untouched); each noise source is scaled to
    noise_power_ratio times that reference power.
    """
    if len(speech) != 2:
        raise ParameterError("exactly two speech sources required")
    for buf in speech:
        if buf.n_samples == 0:
            raise ParameterError("zero-length speech input")
    if hrirs.rate_hz != config.rate_hz:
        raise ConfigError(f"HRIR rate {hrirs.rate_hz} != scene rate {config.rate_hz}; resample the HRIR set first")
    for buf in list(speech) + list(noise):
        if buf.rate_hz != config.rate_hz:
            raise ParameterError(f"input rate {buf.rate_hz} != scene rate {config.rate_hz}")
    if len(noise) != len(config.noise_angles_deg) and noise:
        raise ConfigError(f"{len(noise)} noise buffers but {len(config.noise_angles_deg)} noise angles")

    n_out = min(buf.n_samples for buf in speech)
    stems: dict[str, np.ndarray] = {}
    for idx, (buf, angle) in enumerate(zip(speech, config.speaker_angles_deg), start=1):
        dry = _normalize_power(buf.samples[0, :n_out])
        stems[f"speech{idx}"] = _spatialize(dry, hrirs.for_angle(angle), n_out)

    noise_total = np.zeros_like(stems["speech1"])
    if noise:
        for buf, angle in zip(noise, config.noise_angles_deg):
            if buf.n_samples < n_out:
                reps = int(np.ceil(n_out / buf.n_samples))
                src = np.tile(buf.samples[0], reps)[:n_out]
            else:
                src = buf.samples[0, :n_out]
            src = _normalize_power(src, config.noise_power_ratio)
            noise_total += _spatialize(src, hrirs.for_angle(angle), n_out)
    stems["noise"] = noise_total

    mixture = stems["speech1"] + stems["speech2"] + stems["noise"]
    return AudioBuffer(mixture, config.rate_hz, stems=stems)


def normalized_dry_speech(speech: tuple[AudioBuffer, AudioBuffer]) -> tuple[AudioBuffer, AudioBuffer]:
    """The same power normalization synthesize_scene applies, for clean references."""
    n_out = min(buf.n_samples for buf in speech)
    return tuple(AudioBuffer.mono(_normalize_power(buf.samples[0, :n_out]), buf.rate_hz) for buf in speech)
