"""Blind separation of non-negative energy envelopes.

The algorithm alternates a symmetric decorrelation step that preserves each
row's mean and spread, a non-negativity clamp, and a projection back onto the
principal row subspace of the observed envelopes. It uses second-order
statistics only and runs at the envelope rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .envelope import EnvelopeMatrix
from .errors import DegenerateInputError, ParameterError
from .util import pearson

DEFAULT_ITERATIONS = 100
EIGENVALUE_FLOOR = 1e-8
SOURCE_COUNT_SV_RATIO = 10.0


@dataclass
class DemixResult:
    sources: EnvelopeMatrix
    iterations_run: int
    pairwise_corr: np.ndarray  # (S, S) absolute centered correlations


def _abs_corr_matrix(rows: np.ndarray) -> np.ndarray:
    s = rows.shape[0]
    out = np.eye(s)
    for i in range(s):
        for j in range(i + 1, s):
            out[i, j] = out[j, i] = abs(pearson(rows[i], rows[j]))
    return out


def mean_pairwise_abs_corr(rows: np.ndarray) -> float:
    s = rows.shape[0]
    if s < 2:
        return 0.0
    corr = _abs_corr_matrix(rows)
    iu = np.triu_indices(s, k=1)
    return float(np.mean(corr[iu]))


def _select_init_rows(env: np.ndarray, num_sources: int) -> np.ndarray:
    """Greedy pick of the least mutually correlated input rows."""
    corr = _abs_corr_matrix(env)
    np.fill_diagonal(corr, np.inf)
    i, j = np.unravel_index(np.argmin(corr), corr.shape)
    chosen = [int(i), int(j)]
    while len(chosen) < num_sources:
        remaining = [k for k in range(env.shape[0]) if k not in chosen]
        scores = [sum(corr[k, c] for c in chosen) for k in remaining]
        chosen.append(remaining[int(np.argmin(scores))])
    return env[chosen].copy()


def _inverse_sqrt(cov: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(cov)
    floor = EIGENVALUE_FLOOR * eigvals.max()
    eigvals = np.maximum(eigvals, floor)
    return (eigvecs * (1.0 / np.sqrt(eigvals))) @ eigvecs.T


def mnica(env: EnvelopeMatrix, num_sources: int, iterations: int = DEFAULT_ITERATIONS) -> DemixResult:
    """Demix K observed energy envelopes into num_sources non-negative envelopes."""
    if env.kind != "energy":
        raise ParameterError(f"demixing expects energy envelopes, got {env.kind!r}")
    k, n = env.values.shape
    s = num_sources
    if s > k:
        raise ParameterError(f"num_sources {s} exceeds channel count {k}")
    if s < 1:
        raise ParameterError("num_sources must be >= 1")
    if n < 10 * s:
        raise ParameterError(f"need at least {10 * s} frames, got {n}")

    data = env.values
    centered = data - data.mean(axis=1, keepdims=True)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    if svals[0] == 0.0:
        raise DegenerateInputError("input envelopes carry no variation")
    if s >= 2 and (svals[s - 1] == 0.0 or svals[s - 2] / max(svals[s - 1], 1e-300) > 1e6):
        raise DegenerateInputError(
            f"input rank below {s}: singular values {svals[:s]}")
    basis = vt[:s]  # rows span the principal row subspace

    y = _select_init_rows(data, s)
    for _ in range(iterations):
        means = y.mean(axis=1, keepdims=True)
        stds = y.std(axis=1, keepdims=True)
        yc = y - means
        cov = (yc @ yc.T) / n
        z = _inverse_sqrt(cov) @ yc
        z_std = z.std(axis=1, keepdims=True)
        scale = np.where(z_std > 0, stds / np.maximum(z_std, 1e-300), 0.0)
        z = z * scale + means
        np.clip(z, 0.0, None, out=z)

        z_means = z.mean(axis=1, keepdims=True)
        z = (z - z_means) @ basis.T @ basis + z_means
        np.clip(z, 0.0, None, out=z)
        y = z

    return DemixResult(
        sources=EnvelopeMatrix(y, env.rate_hz, "energy"),
        iterations_run=iterations,
        pairwise_corr=_abs_corr_matrix(y),
    )


def estimate_source_count(env: EnvelopeMatrix, threshold: float = SOURCE_COUNT_SV_RATIO) -> int:
    """Diagnostic source-count estimate from consecutive singular-value ratios.

    Never applied automatically; the demixer requires an explicit count.
    """
    centered = env.values - env.values.mean(axis=1, keepdims=True)
    svals = np.linalg.svd(centered, compute_uv=False)
    svals = svals[svals > 0]
    for i in range(len(svals) - 1):
        if svals[i] / svals[i + 1] > threshold:
            return i + 1
    return len(svals)


def match_sources(demixed: DemixResult, references: EnvelopeMatrix):
    """Assignment of demixed rows to reference rows maximizing total correlation.

    Returns (permutation, correlations): permutation[i] is the demixed row
    assigned to reference row i, correlations[i] the corresponding Pearson r.
    """
    est = demixed.sources.values
    ref = references.values
    if est.shape[1] != ref.shape[1]:
        raise ParameterError(f"frame mismatch: {est.shape[1]} vs {ref.shape[1]}")
    n_ref, n_est = ref.shape[0], est.shape[0]
    corr = np.array([[pearson(ref[i], est[j]) for j in range(n_est)] for i in range(n_ref)])
    best_perm, best_total = None, -np.inf
    for perm in permutations(range(n_est), n_ref):
        total = sum(corr[i, p] for i, p in enumerate(perm))
        if total > best_total:
            best_total, best_perm = total, perm
    return list(best_perm), [corr[i, p] for i, p in enumerate(best_perm)]
