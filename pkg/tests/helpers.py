"""Shared test utilities: goodness-of-fit against exact discrete laws."""

import numpy as np
from scipy import stats


def chisquare_vs_probs(counts, probs, min_expected=5.0):
    """One-sample chi-square p-value of observed counts against exact cell
    probabilities, pooling low-expectation cells into a single bucket."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = counts.sum()
    expected = probs * total
    keep = expected >= min_expected
    if keep.sum() < 2:
        raise ValueError("too few usable cells for a chi-square test")
    obs = list(counts[keep])
    exp = list(expected[keep])
    if not keep.all():
        obs.append(counts[~keep].sum())
        exp.append(expected[~keep].sum())
    obs = np.asarray(obs)
    exp = np.asarray(exp)
    # guard against rounding drift between the two totals
    exp *= obs.sum() / exp.sum()
    return stats.chisquare(obs, exp).pvalue


def law_to_cells(law, samples):
    """Align a dict law {outcome: prob} with sampled outcomes.

    Returns (counts, probs) arrays over the union of outcomes; outcomes seen
    in the samples but absent from the law get probability zero, which makes
    the chi-square fail loudly.
    """
    counted = {}
    for s in samples:
        counted[s] = counted.get(s, 0) + 1
    keys = sorted(set(law) | set(counted))
    counts = np.array([counted.get(k, 0) for k in keys], dtype=float)
    probs = np.array([law.get(k, 0.0) for k in keys])
    return counts, probs


def empirical_vs_law(law, samples, min_expected=5.0):
    counts, probs = law_to_cells(law, samples)
    return chisquare_vs_probs(counts, probs, min_expected)
