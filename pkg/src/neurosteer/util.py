"""Small numeric helpers used across modules."""

from __future__ import annotations

import numpy as np


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation with mean removal.

    Returns 0.0 when either input has zero variance (correlation undefined);
    callers that need to distinguish that case should check variances first.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0.0:
        return 0.0
    return float(np.clip((xc @ yc) / denom, -1.0, 1.0))


def db(power_ratio: float) -> float:
    """Power ratio in decibels."""
    return float(10.0 * np.log10(power_ratio))


def signal_power(x: np.ndarray) -> float:
    """Mean-square value over all samples."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x))


def wrap_angle_deg(angle: float) -> float:
    """Wrap an angle to (-180, 180]."""
    a = (float(angle) + 180.0) % 360.0 - 180.0
    return 180.0 if a == -180.0 else a
