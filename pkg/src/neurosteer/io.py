"""File formats: WAV audio, envelope/EEG/decision/decoder/VAD/filterbank CSV.

All CSV files are comma-separated with one header row, LF line endings and
'.' decimal separator. Floats are written with shortest-roundtrip repr so a
write/read cycle is exact.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.io.wavfile

from .dsp import AudioBuffer
from .errors import LoadError, ParameterError


def _fmt(x: float) -> str:
    return repr(float(x))


def read_wav(path: str) -> AudioBuffer:
    """Read a PCM16 or float WAV file into a (channels, n) buffer in [-1, 1] scale."""
    if not os.path.exists(path):
        raise LoadError(f"audio file not found: {path}")
    try:
        rate, data = scipy.io.wavfile.read(path)
    except Exception as exc:
        raise LoadError(f"cannot read WAV {path}: {exc}") from exc
    if data.ndim == 1:
        data = data[:, None]
    data = data.T  # (channels, n)
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    else:
        data = data.astype(np.float64)
    return AudioBuffer(data, float(rate))


def write_wav(path: str, buffer: AudioBuffer, dtype: str = "float32") -> None:
    """Write a buffer as float32 (default) or pcm16 WAV."""
    data = buffer.samples.T
    if dtype == "float32":
        out = data.astype(np.float32)
    elif dtype == "pcm16":
        out = np.clip(np.round(data * 32767.0), -32768, 32767).astype(np.int16)
    else:
        raise ParameterError(f"unsupported WAV dtype {dtype!r}")
    if out.shape[1] == 1:
        out = out[:, 0]
    scipy.io.wavfile.write(path, int(buffer.rate_hz), out)


def _write_lines(path: str, lines) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _read_lines(path: str) -> list[str]:
    if not os.path.exists(path):
        raise LoadError(f"file not found: {path}")
    with open(path) as fh:
        return [ln.rstrip("\n") for ln in fh if ln.strip()]


def write_envelope_csv(path: str, rate_hz: float, kind: str, values: np.ndarray) -> None:
    """Rows are frames, columns are channels; header carries rate and kind."""
    values = np.atleast_2d(values)
    lines = ["rate_hz,kind", f"{_fmt(rate_hz)},{kind}"]
    for frame in values.T:
        lines.append(",".join(_fmt(v) for v in frame))
    _write_lines(path, lines)


def read_envelope_csv(path: str) -> tuple[float, str, np.ndarray]:
    lines = _read_lines(path)
    if len(lines) < 2 or lines[0] != "rate_hz,kind":
        raise LoadError(f"{path}: expected envelope CSV header 'rate_hz,kind'")
    rate_str, kind = lines[1].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    return float(rate_str), kind, data.T


def write_eeg_csv(path: str, rate_hz: float, values: np.ndarray) -> None:
    """Rows are time samples, columns are channels."""
    values = np.atleast_2d(values)
    lines = ["rate_hz,kappa", f"{_fmt(rate_hz)},{values.shape[0]}"]
    for sample in values.T:
        lines.append(",".join(_fmt(v) for v in sample))
    _write_lines(path, lines)


def read_eeg_csv(path: str) -> tuple[float, np.ndarray]:
    lines = _read_lines(path)
    if len(lines) < 2 or lines[0] != "rate_hz,kappa":
        raise LoadError(f"{path}: expected EEG CSV header 'rate_hz,kappa'")
    rate_str, kappa_str = lines[1].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]]).T
    if data.shape[0] != int(kappa_str):
        raise LoadError(f"{path}: header kappa={kappa_str} but {data.shape[0]} columns found")
    return float(rate_str), data


def write_decisions_csv(path: str, decisions) -> None:
    lines = ["frame,chosen,r_A,r_U"]
    for d in decisions:
        lines.append(f"{d.frame_index},{d.chosen},{_fmt(d.r_a)},{_fmt(d.r_u)}")
    _write_lines(path, lines)


def read_decisions_csv(path: str):
    from .aad import AadDecision

    lines = _read_lines(path)
    if not lines or lines[0] != "frame,chosen,r_A,r_U":
        raise LoadError(f"{path}: expected decisions CSV header 'frame,chosen,r_A,r_U'")
    out = []
    for ln in lines[1:]:
        f, c, ra, ru = ln.split(",")
        out.append(AadDecision(int(f), int(c), float(ra), float(ru)))
    return out


def write_decoder_csv(path: str, decoder) -> None:
    lines = ["kappa,tau_max", f"{decoder.kappa},{decoder.tau_max}"]
    lines += [_fmt(w) for w in decoder.weights]
    _write_lines(path, lines)


def read_decoder_csv(path: str):
    from .aad import Decoder

    lines = _read_lines(path)
    if len(lines) < 2 or lines[0] != "kappa,tau_max":
        raise LoadError(f"{path}: expected decoder CSV header 'kappa,tau_max'")
    kappa, tau_max = (int(v) for v in lines[1].split(","))
    weights = np.array([float(v) for v in lines[2:]])
    return Decoder(weights=weights, tau_max=tau_max, kappa=kappa)


def write_vad_csv(path: str, rate_hz: float, bits: np.ndarray) -> None:
    lines = ["rate_hz", _fmt(rate_hz)]
    lines += [str(int(b)) for b in bits]
    _write_lines(path, lines)


def read_vad_csv(path: str) -> tuple[float, np.ndarray]:
    lines = _read_lines(path)
    if len(lines) < 2 or lines[0] != "rate_hz":
        raise LoadError(f"{path}: expected VAD CSV header 'rate_hz'")
    rate = float(lines[1])
    bits = np.array([int(v) for v in lines[2:]], dtype=np.int8)
    return rate, bits


def write_filterbank_csv(path: str, bank) -> None:
    lines = ["bin,mic,real,imag"]
    for b in range(bank.bins):
        for m in range(bank.weights.shape[1]):
            w = bank.weights[b, m]
            lines.append(f"{b},{m},{_fmt(w.real)},{_fmt(w.imag)}")
    _write_lines(path, lines)


def read_filterbank_csv(path: str, reference_mic: int = 0):
    from .enhance import SpectralFilterBank

    lines = _read_lines(path)
    if not lines or lines[0] != "bin,mic,real,imag":
        raise LoadError(f"{path}: expected filterbank CSV header 'bin,mic,real,imag'")
    rows = [ln.split(",") for ln in lines[1:]]
    bins = max(int(r[0]) for r in rows) + 1
    mics = max(int(r[1]) for r in rows) + 1
    weights = np.zeros((bins, mics), dtype=np.complex128)
    for b, m, re, im in rows:
        weights[int(b), int(m)] = float(re) + 1j * float(im)
    return SpectralFilterBank(weights=weights, reference_mic=reference_mic)
