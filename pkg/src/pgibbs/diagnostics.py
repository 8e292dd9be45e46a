"""Chain diagnostics: autocorrelation, per-time update rates, and mean square
jumping distance."""

from __future__ import annotations

import numpy as np


def acf(series, max_lag) -> np.ndarray:
    """Autocorrelation at lags 0..max_lag with the biased 1/n normalisation
    standard in MCMC reporting."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples")
    if not 0 <= max_lag < x.size:
        raise ValueError("max_lag must satisfy 0 <= max_lag < len(series)")
    centred = x - x.mean()
    denom = np.sum(centred**2)
    if denom == 0:
        raise ValueError("constant series has no autocorrelation")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = np.sum(centred[:-k] * centred[k:]) / denom
    return out


def update_rate(path_samples) -> np.ndarray:
    """Per-time fraction of consecutive samples whose state changed.

    Change detection is exact equality of stored values: an unmoved kernel
    output is carried over verbatim, so no epsilon is appropriate.
    """
    paths = np.asarray(path_samples)
    if paths.ndim != 2 or paths.shape[0] < 2:
        raise ValueError("need at least two path samples")
    return np.mean(paths[1:] != paths[:-1], axis=0)


def msjd(samples) -> float:
    """Mean squared difference between consecutive scalar samples."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two samples")
    return float(np.mean(np.diff(x) ** 2))
