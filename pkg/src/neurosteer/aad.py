"""Neural decoding of auditory attention from envelope-rate EEG.

A stacked spatiotemporal linear decoder is trained by least squares to
reconstruct the attended speech envelope from lagged EEG samples; attention
per analysis frame goes to the candidate envelope best correlated with the
reconstruction. A parametric simulator stands in for recorded EEG.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dsp
from .envelope import AMPLITUDE_BAND_HZ, AMPLITUDE_FIR_TAPS, EnvelopeMatrix
from .errors import NumericalError, ParameterError
from .util import pearson

DEFAULT_TAU_MAX = 5  # 250 ms post-stimulus at 20 Hz
DEFAULT_FRAME_LEN_S = 30.0
DEFAULT_KAPPA = 64
CONDITION_LIMIT = 1e12


@dataclass
class EegRecording:
    """Envelope-rate EEG, shape (kappa, n). attended_label is simulation-only
    ground truth: a scalar speaker index or a per-frame array."""

    values: np.ndarray
    rate_hz: float
    attended_label: int | np.ndarray | None = None

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))

    @property
    def kappa(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass
class Decoder:
    weights: np.ndarray
    tau_max: int
    kappa: int

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        expected = self.kappa * (self.tau_max + 1)
        if self.weights.size != expected:
            raise ParameterError(f"decoder length {self.weights.size} != kappa*(tau_max+1) = {expected}")
        if not np.all(np.isfinite(self.weights)):
            raise ParameterError("decoder weights must be finite")


@dataclass
class AadDecision:
    frame_index: int
    chosen: int  # 1 or 2
    r_a: float  # correlation with the chosen candidate
    r_u: float  # correlation with the other candidate


@dataclass
class SimulatorConfig:
    kappa: int = DEFAULT_KAPPA
    tau_max_model: int = 5
    unattended_gain: float = 0.3
    noise_gain: float = 4.0
    seed: int = 0


def build_lag_matrix(eeg: EegRecording, tau_max: int, sample_range: tuple[int, int]) -> np.ndarray:
    """Rows are time points; columns stack channels (major) over lags (minor).

    Row n holds [r_0[n] .. r_0[n+tau_max], r_1[n] .. ], for n in
    [start, stop); every lagged index must stay inside the recording.
    """
    start, stop = sample_range
    if tau_max < 0:
        raise ParameterError("tau_max must be >= 0")
    if start < 0 or stop <= start:
        raise ParameterError(f"bad sample range ({start}, {stop})")
    if stop + tau_max > eeg.n_samples:
        raise ParameterError(
            f"range ({start}, {stop}) with tau_max {tau_max} overruns recording of {eeg.n_samples} samples")
    n = stop - start
    lags = tau_max + 1
    out = np.empty((n, eeg.kappa * lags))
    for k in range(eeg.kappa):
        for tau in range(lags):
            out[:, k * lags + tau] = eeg.values[k, start + tau:stop + tau]
    return out


def _frame_bounds(n_samples: int, rate_hz: float, frame_len_s: float) -> list[tuple[int, int]]:
    frame_len = int(round(frame_len_s * rate_hz))
    if frame_len < 2:
        raise ParameterError(f"frame length {frame_len_s}s too short at {rate_hz} Hz")
    n_frames = n_samples // frame_len
    return [(f * frame_len, (f + 1) * frame_len) for f in range(n_frames)]


def _frame_rows(eeg: EegRecording, tau_max: int, bounds: tuple[int, int]) -> tuple[np.ndarray, slice]:
    """Lag-matrix rows that use only samples inside the frame."""
    start, stop = bounds
    if stop - start < tau_max + 2:
        raise ParameterError(f"frame of {stop - start} samples shorter than tau_max+2 = {tau_max + 2}")
    rows = build_lag_matrix(eeg, tau_max, (start, stop - tau_max))
    return rows, slice(start, stop - tau_max)


def train_decoder(eeg: EegRecording, attended_env: np.ndarray, frames: list[tuple[int, int]],
                  tau_max: int = DEFAULT_TAU_MAX) -> Decoder:
    """Least-squares decoder from normal equations accumulated over all frames.

    No regularization is applied; a singular accumulated Gram matrix raises
    with its condition estimate.
    """
    target = np.asarray(attended_env, dtype=np.float64).ravel()
    dim = eeg.kappa * (tau_max + 1)
    gram = np.zeros((dim, dim))
    cross = np.zeros(dim)
    for bounds in frames:
        rows, target_slice = _frame_rows(eeg, tau_max, bounds)
        s = target[target_slice]
        gram += rows.T @ rows
        cross += rows.T @ s
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise NumericalError(f"normal equations ill-conditioned (condition estimate {cond:.3e})")
    weights = np.linalg.solve(gram, cross)
    return Decoder(weights=weights, tau_max=tau_max, kappa=eeg.kappa)


def reconstruct(eeg: EegRecording, decoder: Decoder, bounds: tuple[int, int]) -> tuple[np.ndarray, slice]:
    """Reconstructed attended envelope over one frame, with the envelope slice it aligns to."""
    rows, target_slice = _frame_rows(eeg, decoder.tau_max, bounds)
    return rows @ decoder.weights, target_slice


def detect_attention(eeg: EegRecording, decoder: Decoder, cand1: np.ndarray, cand2: np.ndarray,
                     frame_len_s: float = DEFAULT_FRAME_LEN_S) -> list[AadDecision]:
    """Per-frame choice between two candidate envelopes; ties go to candidate 1."""
    cand1 = np.asarray(cand1, dtype=np.float64).ravel()
    cand2 = np.asarray(cand2, dtype=np.float64).ravel()
    n = min(eeg.n_samples, len(cand1), len(cand2))
    decisions = []
    for idx, bounds in enumerate(_frame_bounds(n, eeg.rate_hz, frame_len_s)):
        est, sl = reconstruct(eeg, decoder, bounds)
        r1 = pearson(est, cand1[sl])
        r2 = pearson(est, cand2[sl])
        chosen = 1 if r1 >= r2 else 2
        decisions.append(AadDecision(idx, chosen, max(r1, r2), min(r1, r2)))
    return decisions


@dataclass
class CrossValidationResult:
    accuracy: float
    decisions: list[AadDecision]
    labels: np.ndarray


def cross_validate(eeg: EegRecording, attended_env: np.ndarray, cand1: np.ndarray, cand2: np.ndarray,
                   frame_len_s: float = DEFAULT_FRAME_LEN_S, tau_max: int = DEFAULT_TAU_MAX,
                   labels: np.ndarray | None = None) -> CrossValidationResult:
    """Leave-one-frame-out detection accuracy.

    For each held-out frame the decoder is solved from the accumulated normal
    equations minus that frame's contribution.
    """
    target = np.asarray(attended_env, dtype=np.float64).ravel()
    cand1 = np.asarray(cand1, dtype=np.float64).ravel()
    cand2 = np.asarray(cand2, dtype=np.float64).ravel()
    n = min(eeg.n_samples, len(target), len(cand1), len(cand2))
    bounds = _frame_bounds(n, eeg.rate_hz, frame_len_s)
    if len(bounds) < 3:
        raise ParameterError(f"cross-validation needs >= 3 frames, got {len(bounds)}")

    if labels is None:
        if eeg.attended_label is None:
            raise ParameterError("no attended labels available for scoring")
        labels = eeg.attended_label
    labels = np.broadcast_to(np.asarray(labels, dtype=int), (len(bounds),)).copy()

    dim = eeg.kappa * (tau_max + 1)
    grams = np.zeros((len(bounds), dim, dim))
    crosses = np.zeros((len(bounds), dim))
    row_cache = []
    for f, b in enumerate(bounds):
        rows, sl = _frame_rows(eeg, tau_max, b)
        grams[f] = rows.T @ rows
        crosses[f] = rows.T @ target[sl]
        row_cache.append((rows, sl))
    gram_total = grams.sum(axis=0)
    cross_total = crosses.sum(axis=0)

    decisions = []
    correct = 0
    for f, (rows, sl) in enumerate(row_cache):
        gram = gram_total - grams[f]
        cross = cross_total - crosses[f]
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise NumericalError(f"fold {f}: normal equations ill-conditioned (condition estimate {cond:.3e})")
        weights = np.linalg.solve(gram, cross)
        est = rows @ weights
        r1 = pearson(est, cand1[sl])
        r2 = pearson(est, cand2[sl])
        chosen = 1 if r1 >= r2 else 2
        decisions.append(AadDecision(f, chosen, max(r1, r2), min(r1, r2)))
        correct += int(chosen == labels[f])
    return CrossValidationResult(correct / len(bounds), decisions, labels)


def _pink_noise(n: int, rate_hz: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS noise with 1/f power shaping inside the analysis band."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate_hz)
    shape = np.zeros_like(freqs)
    low, high = AMPLITUDE_BAND_HZ
    band = (freqs >= low) & (freqs <= high)
    shape[band] = 1.0 / np.sqrt(freqs[band])
    x = np.fft.irfft(spectrum * shape, n=n)
    rms = np.sqrt(np.mean(x * x))
    return x / rms if rms > 0 else x


def simulate_eeg(attended_env: np.ndarray, unattended_env: np.ndarray,
                 config: SimulatorConfig = SimulatorConfig()) -> EegRecording:
    """Forward model: per-channel lagged responses to both envelopes plus pink noise.

    Channel k responds to the attended envelope through a short random kernel,
    to the unattended one through another kernel scaled by unattended_gain,
    and noise_gain sets the pink-noise RMS relative to the mean response RMS.
    All channels are bandpassed to the analysis band afterwards.
    """
    s_a = np.asarray(attended_env, dtype=np.float64).ravel()
    s_u = np.asarray(unattended_env, dtype=np.float64).ravel()
    n = min(len(s_a), len(s_u))
    s_a, s_u = s_a[:n], s_u[:n]
    rng = np.random.default_rng(config.seed)
    lags = config.tau_max_model + 1
    smooth = np.ones(3) / 3.0
    g_att = np.apply_along_axis(lambda r: np.convolve(r, smooth, mode="same"), 1,
                                rng.standard_normal((config.kappa, lags)))
    g_un = np.apply_along_axis(lambda r: np.convolve(r, smooth, mode="same"), 1,
                               rng.standard_normal((config.kappa, lags)))

    response = np.zeros((config.kappa, n))
    for k in range(config.kappa):
        ra = np.convolve(s_a, g_att[k])[:n]
        ru = np.convolve(s_u, g_un[k])[:n]
        response[k] = ra + config.unattended_gain * ru
    response_rms = float(np.sqrt(np.mean(response**2)))

    rate_hz = 20.0
    values = np.empty_like(response)
    taps = dsp.fir_bandpass_design(*AMPLITUDE_BAND_HZ, rate_hz, AMPLITUDE_FIR_TAPS)
    for k in range(config.kappa):
        noisy = response[k] + config.noise_gain * response_rms * _pink_noise(n, rate_hz, rng)
        values[k] = dsp.filter_same(noisy, taps)
    return EegRecording(values, rate_hz, attended_label=1)
