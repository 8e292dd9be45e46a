"""Resampling schemes for particle filters, their conditional variants, and
the single-ancestor conditional probabilities needed by backward passes.

Ancestor labels are 1-based (1..N) throughout, matching the usual particle
filter convention of labelling particles 1..N; subtract one when indexing
numpy arrays.  All samplers take an explicit ``numpy.random.Generator`` and
are pure given that generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCHEMES = ("multinomial", "residual", "systematic")

# |N*w - round(N*w)| below this is treated as integral, so that e.g. uniform
# weights produce deterministic offspring counts despite rounding noise.
_INTEGER_SNAP = 1e-9


class DegenerateWeightsError(ValueError):
    """All log-potentials are -inf: the weight vector cannot be normalised."""


def normalize_weights(log_potentials) -> np.ndarray:
    """Turn a vector of log-potentials into normalised weights.

    Uses max-subtraction before exponentiation so that uniformly tiny
    potentials (far below the exp underflow threshold) still normalise
    exactly.
    """
    lg = np.asarray(log_potentials, dtype=float)
    if lg.ndim != 1 or lg.size == 0:
        raise ValueError("log_potentials must be a non-empty 1-D array")
    if not np.all(lg < np.inf):  # rejects NaN and +inf in one pass
        raise ValueError("log_potentials must be finite or -inf")
    m = lg.max()
    if m == -np.inf:
        raise DegenerateWeightsError("degenerate weights: all potentials are zero")
    w = np.exp(lg - m)
    return w / w.sum()


@dataclass(frozen=True)
class Cycle:
    """Rotation permutation of labels 1..N, stored as its offset.

    Maps n to ((n + offset - 1) mod N) + 1; offset = N is the identity.
    """

    offset: int
    size: int

    def __post_init__(self):
        if not 1 <= self.offset <= self.size:
            raise ValueError("cycle offset must lie in 1..N")

    def __call__(self, n: int) -> int:
        return (n + self.offset - 1) % self.size + 1

    def apply_to(self, labels: np.ndarray) -> np.ndarray:
        """Return the relabelled vector v with v[n] = labels[c(n)]."""
        idx = (np.arange(self.size) + self.offset) % self.size
        return np.asarray(labels)[idx]

    def inverse(self) -> "Cycle":
        return Cycle((-self.offset) % self.size or self.size, self.size)


def _check_weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    total = w.sum()
    if w.min() < 0 or not np.isfinite(total):
        raise ValueError("weights must be finite and nonnegative")
    if abs(total - 1.0) > 1e-9:
        raise ValueError("weights must sum to one")
    return w


def _floors_and_residues(w: np.ndarray):
    """Split N*w into integer parts and residues, with an integrality snap.

    Returns (floors, residues, n_residual) where n_residual = N - sum(floors)
    is computed in integer arithmetic.
    """
    n = w.size
    scaled = n * w
    nearest = np.rint(scaled)
    snapped = np.abs(scaled - nearest) < _INTEGER_SNAP
    floors = np.where(snapped, nearest, np.floor(scaled)).astype(int)
    residues = np.where(snapped, 0.0, scaled - floors)
    return floors, residues, int(n - floors.sum())


def _segment_knots(w: np.ndarray) -> np.ndarray:
    """Cumulative segment boundaries S(0..N) of N successive segments of
    length N*w^n, snapped to exact integers where rounding noise would
    otherwise create spurious fractional parts."""
    s = np.concatenate([[0.0], np.cumsum(w.size * w)])
    nearest = np.rint(s)
    snap = np.abs(s - nearest) < _INTEGER_SNAP
    return np.where(snap, nearest, s)


def _systematic_counts(knots: np.ndarray, u: float) -> np.ndarray:
    """Offspring counts of each label for systematic resampling with shift u."""
    shifted = np.ceil(knots - u)
    return (shifted[1:] - shifted[:-1]).astype(int)


def _stack_labels(counts: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(1, counts.size + 1), counts)


def categorical_labels(w: np.ndarray, rng, size: int) -> np.ndarray:
    """``size`` independent 1-based draws from the weight vector, by inverse
    CDF (much cheaper than Generator.choice for small repeated draws)."""
    if size == 1 and len(w) <= 8:
        target = rng.random() * sum(w)
        acc = 0.0
        for i, wi in enumerate(w):
            acc += wi
            if target < acc:
                return np.array([i + 1])
        return np.array([len(w)])
    cum = np.cumsum(w)
    idx = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
    return np.minimum(idx, w.size - 1) + 1


def multinomial_resample(w, rng) -> np.ndarray:
    """N independent draws from the categorical distribution over 1..N."""
    w = _check_weights(w)
    return categorical_labels(w, rng, w.size)


def residual_resample(w, rng) -> np.ndarray:
    """Residual resampling: deterministic copies of each label plus
    multinomial fill-ins, followed by a uniform permutation of all N slots."""
    w = _check_weights(w)
    n = w.size
    floors, residues, n_res = _floors_and_residues(w)
    labels = _stack_labels(floors)
    if n_res > 0:
        fills = categorical_labels(residues, rng, n_res)
        labels = np.concatenate([labels, fills])
    return labels[rng.permutation(n)]


def systematic_resample(w, rng) -> np.ndarray:
    """Systematic resampling with a uniformly chosen cycle relabelling."""
    w = _check_weights(w)
    n = w.size
    u = rng.random()
    base = _stack_labels(_systematic_counts(_segment_knots(w), u))
    shift = rng.integers(n)  # cycle offset, 0-based
    return base[(np.arange(n) + shift) % n]


def conditional_multinomial(w, rng) -> np.ndarray:
    """Multinomial resampling conditioned on the first slot pointing to 1."""
    w = _check_weights(w)
    if w[0] == 0:
        raise ValueError("conditioning on a null event: weight of label 1 is zero")
    out = np.empty(w.size, dtype=np.int64)
    out[0] = 1
    cum = np.cumsum(w)
    idx = np.searchsorted(cum, rng.random(w.size - 1) * cum[-1], side="right")
    out[1:] = np.minimum(idx, w.size - 1) + 1
    return out


def conditional_residual(w, rng, permute: bool = True) -> np.ndarray:
    """Residual resampling conditioned on the first slot pointing to 1.

    With probability floor(N*w1)/(N*w1) the first slot holds a deterministic
    copy of label 1 and the remaining slots follow plain residual stacking;
    otherwise slot one holds the residual copy of label 1 and one fewer
    fill-in is drawn.  The trailing N-1 slots are then uniformly permuted
    (skippable via ``permute`` since downstream steps are order-blind).
    """
    w = _check_weights(w)
    n = w.size
    if w[0] == 0:
        raise ValueError("conditioning on a null event: weight of label 1 is zero")
    floors, residues, n_res = _floors_and_residues(w)

    deterministic_first = floors[0] > 0 and rng.random() < floors[0] / (n * w[0])
    if deterministic_first:
        labels = _stack_labels(floors)
        if n_res > 0:
            fills = categorical_labels(residues, rng, n_res)
            labels = np.concatenate([labels, fills])
    else:
        tail = _stack_labels(floors)
        if n_res - 1 > 0:
            fills = categorical_labels(residues, rng, n_res - 1)
            tail = np.concatenate([tail, fills])
        labels = np.concatenate([[1], tail])
    if permute and n > 1:
        labels[1:] = labels[1:][rng.permutation(n - 1)]
    return labels


def conditional_systematic(w, rng) -> np.ndarray:
    """Systematic resampling conditioned on the first slot pointing to 1.

    Draws the shift U from its law given that event (piecewise uniform with
    a break at the residue of label 1), realises the offspring vector, then
    picks a cycle uniformly among those that place a copy of label 1 in
    slot one.
    """
    w = _check_weights(w)
    n = w.size
    if w[0] == 0:
        raise ValueError("conditioning on a null event: weight of label 1 is zero")
    floors, residues, _ = _floors_and_residues(w)
    nw1 = n * w[0]
    r1 = residues[0]
    if nw1 < 1.0:
        u = rng.uniform(0.0, nw1)
    elif r1 > 0 and rng.random() < r1 * (floors[0] + 1) / nw1:
        u = rng.uniform(0.0, r1)
    else:
        u = rng.uniform(r1, 1.0)
    base = _stack_labels(_systematic_counts(_segment_knots(w), u))
    ones = np.flatnonzero(base == 1)
    shift = ones[rng.integers(ones.size)]
    return base[(np.arange(n) + shift) % n]


def systematic_joint_prob(w, abar) -> float:
    """Probability that plain systematic resampling (before cycling) yields
    the nondecreasing label vector ``abar``.

    Equals the Lebesgue measure of the u values in [0, 1) for which every
    slot n lands in the segment of label abar[n]; returns 0 for infeasible
    vectors.
    """
    w = _check_weights(w)
    a = np.asarray(abar, dtype=int)
    if a.size != w.size or np.any(a < 1) or np.any(a > w.size):
        raise ValueError("abar must hold N labels in 1..N")
    knots = _segment_knots(w)
    offsets = np.arange(a.size)
    lo = max(0.0, np.max(knots[a - 1] - offsets))
    hi = min(1.0, np.min(knots[a] - offsets))
    return max(0.0, hi - lo)


def _restricted_measures(knots, known, pos_free, n):
    """Measure of the u-set compatible with the known (position, label) pairs,
    intersected with each candidate label placed at the free position.

    ``known`` is a list of 0-based (position, label) pairs of a nondecreasing
    systematic label vector with one position left open; returns an N-vector
    of interval lengths, one per candidate label.
    """
    lo, hi = 0.0, 1.0
    for pos, lab in known:
        lo = max(lo, knots[lab - 1] - pos)
        hi = min(hi, knots[lab] - pos)
    out = np.zeros(n)
    if hi <= lo:
        return out
    for m in range(1, n + 1):
        l = max(lo, knots[m - 1] - pos_free)
        h = min(hi, knots[m] - pos_free)
        if h > l:
            out[m - 1] = h - l
    return out


def _systematic_start_measures(w, knots, a_full, b, starts):
    """Sum, over candidate wrap slots ``starts``, of the u-measures of each
    candidate label in slot b.  Slot b of ``a_full`` is ignored."""
    n = w.size
    total = np.zeros(n)
    for s in starts:
        known = []
        for j in range(n):
            slot = (s - 1 + j) % n + 1
            if slot != b:
                known.append((j, int(a_full[slot - 1])))
        pos_free = (b - s) % n
        total += _restricted_measures(knots, known, pos_free, n)
    return total


def _systematic_conditional(w, a_minus_b, b):
    n = w.size
    knots = _segment_knots(w)
    floors, _, _ = _floors_and_residues(w)
    a_full = np.zeros(n, dtype=int)
    others = [s for s in range(1, n + 1) if s != b]
    a_full[[s - 1 for s in others]] = a_minus_b

    prev_slot = b - 1 if b > 1 else n
    next_slot = b + 1 if b < n else 1
    u_val = int(a_full[prev_slot - 1])
    v_val = int(a_full[next_slot - 1])

    if np.all(a_minus_b == a_minus_b[0]):
        m = int(a_minus_b[0])
        fl = floors[m - 1]
        if fl == n:
            probs = np.zeros(n)
            probs[m - 1] = 1.0
            return probs
        if fl == n - 1:
            starts = range(1, n + 1)
        elif fl == n - 2:
            starts = (b, next_slot)
        else:
            raise ValueError(
                f"systematic scheme: labels {a_minus_b} unreachable for slot {b}"
            )
        probs = _systematic_start_measures(w, knots, a_full, b, starts)
    elif u_val < v_val:
        # A single wrap position is consistent with the observed labels: the
        # unique descent when reading the other slots cyclically from b+1.
        seq = [(next_slot + j - 1) % n + 1 for j in range(n)]
        seq = [s for s in seq if s != b]
        descents = [
            seq[i + 1]
            for i in range(len(seq) - 1)
            if a_full[seq[i] - 1] > a_full[seq[i + 1] - 1]
        ]
        if len(descents) != 1:
            raise ValueError(
                f"systematic scheme: labels {a_minus_b} unreachable for slot {b}"
            )
        probs = _systematic_start_measures(w, knots, a_full, b, (descents[0],))
        # Zero out labels outside the neighbour range: infeasible by ordering.
        probs[: u_val - 1] = 0.0
        probs[v_val:] = 0.0
    elif u_val > v_val:
        # Two wrap positions are consistent: slot b itself or its successor.
        probs = _systematic_start_measures(w, knots, a_full, b, (b, next_slot))
    else:
        # Equal neighbours with some other label differing force the match.
        probs = np.zeros(n)
        mass = _systematic_start_measures(w, knots, a_full, b, range(1, n + 1))
        probs[u_val - 1] = mass[u_val - 1]

    total = probs.sum()
    if total <= 0:
        raise ValueError(
            f"systematic scheme: labels {a_minus_b} unreachable for slot {b}"
        )
    return probs / total


def _residual_conditional(w, a_minus_b, b):
    n = w.size
    floors, residues, _ = _floors_and_residues(w)
    counts = np.bincount(a_minus_b - 1, minlength=n)
    deficit = floors - counts
    unreachable = ValueError(
        f"residual scheme: labels {a_minus_b} unreachable for slot {b}"
    )
    if np.any(deficit >= 2):
        raise unreachable
    # labels above their deterministic count need fill-ins, hence a residue
    if np.any((counts > floors) & (residues == 0)):
        raise unreachable
    missing = np.flatnonzero(deficit == 1)
    if missing.size > 1:
        raise unreachable
    probs = np.zeros(n)
    if missing.size == 1:
        # The removed slot must restore the guaranteed deterministic copy.
        probs[missing[0]] = 1.0
        return probs
    probs = residues * (counts + 1) / (counts - floors + 1)
    total = probs.sum()
    if total <= 0:
        raise unreachable
    return probs / total


def ancestor_conditional_distribution(scheme, w, a_minus_b, b) -> np.ndarray:
    """Distribution of the ancestor label in slot ``b`` given all other slots.

    ``a_minus_b`` lists the N-1 labels of the other slots in slot order.
    Returns an N-vector of probabilities over labels 1..N, computed exactly
    (no sampling) for each scheme:

    * multinomial: slots are independent, so this is just ``w``;
    * residual: closed form from the joint density of counts, or a point
      mass when the remaining slots are one deterministic copy short;
    * systematic: interval-measure computation over the wrap positions
      (one, two, or all N) compatible with the observed labels.
    """
    w = _check_weights(w)
    n = w.size
    a_minus_b = np.asarray(a_minus_b, dtype=int)
    if a_minus_b.size != n - 1:
        raise ValueError("a_minus_b must hold N-1 labels")
    if a_minus_b.size and (a_minus_b.min() < 1 or a_minus_b.max() > n):
        raise ValueError("labels must lie in 1..N")
    if not 1 <= b <= n:
        raise ValueError("slot index must lie in 1..N")
    if scheme == "multinomial":
        return w.copy()
    if n == 1:
        return np.ones(1)
    if scheme == "residual":
        return _residual_conditional(w, a_minus_b, b)
    if scheme == "systematic":
        return _systematic_conditional(w, a_minus_b, b)
    raise ValueError(f"unknown resampling scheme: {scheme!r}")


_UNCONDITIONAL = {
    "multinomial": multinomial_resample,
    "residual": residual_resample,
    "systematic": systematic_resample,
}

_CONDITIONAL = {
    "multinomial": conditional_multinomial,
    "residual": conditional_residual,
    "systematic": conditional_systematic,
}


def resampler(scheme):
    try:
        return _UNCONDITIONAL[scheme]
    except KeyError:
        raise ValueError(f"unknown resampling scheme: {scheme!r}") from None


def conditional_resampler(scheme):
    try:
        return _CONDITIONAL[scheme]
    except KeyError:
        raise ValueError(f"unknown resampling scheme: {scheme!r}") from None
