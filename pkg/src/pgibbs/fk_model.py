"""Model abstraction for weighted Markov chains (a Markov chain reweighted by
strictly positive per-time potentials), plus two concrete models: a finite
state-space test model and the Poisson-count AR(1) model.

A model exposes array-valued behaviours so that particle code can propagate a
whole cloud per call:

* ``sample_initial(n, rng)`` -> array of n states,
* ``sample_transition(t, x, rng)`` -> array of next states, one per entry,
* ``log_potential(t, x)`` -> array of log-potentials,
* ``transition_log_density(t, x_from, x_to)`` (only when
  ``has_transition_density``) -> array, broadcasting over ``x_from``.

States are scalars: small integer labels for finite models, reals for the
AR(1) model.  Trajectories are 1-D arrays of length ``horizon + 1``.  Models
are immutable after construction and safe to share across workers holding
distinct generators.  Time indices are 0-based.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


def poisson_log_potential(t, x, y_t):
    """Log observation weight -exp(x) + y*x of a Poisson(exp(x)) count.

    The log(y!) term is dropped: it cancels in every normalised weight and
    acceptance ratio.  Callers stay in log space; the value can be very
    negative for moderate |x|.
    """
    x = np.asarray(x, dtype=float)
    return -np.exp(x) + y_t * x


@dataclass(frozen=True)
class PoissonAr1Params:
    """Parameters of the latent AR(1) process x_{t+1} ~ N(mu + rho(x_t - mu), sigma2)."""

    mu: float
    rho: float
    sigma2: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.rho) and np.isfinite(self.sigma2)):
            raise ValueError("parameters must be finite")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if abs(self.rho) > 1:
            raise ValueError("rho must lie in [-1, 1]")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


class PoissonAr1Model:
    """Latent Gaussian AR(1) state observed through Poisson(exp(x)) counts."""

    is_finite = False
    has_transition_density = True

    def __init__(self, params: PoissonAr1Params, counts):
        counts = np.asarray(counts, dtype=int)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-D array")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        self.params = params
        self.counts = counts
        self.horizon = counts.size - 1

    def sample_initial(self, n, rng):
        p = self.params
        return p.mu + p.sigma * rng.standard_normal(n)

    def sample_transition(self, t, x, rng):
        p = self.params
        x = np.asarray(x, dtype=float)
        return p.mu + p.rho * (x - p.mu) + p.sigma * rng.standard_normal(x.shape)

    def log_potential(self, t, x):
        return poisson_log_potential(t, x, self.counts[t])

    def transition_log_density(self, t, x_from, x_to):
        p = self.params
        mean = p.mu + p.rho * (np.asarray(x_from, dtype=float) - p.mu)
        resid = np.asarray(x_to, dtype=float) - mean
        return -0.5 * resid**2 / p.sigma2 - 0.5 * np.log(2 * np.pi * p.sigma2)


class FiniteHmm:
    """Finite model on states 0..K-1 with tabulated transitions and potentials.

    Exposes its tables (``initial_probs``, ``transition_matrix``,
    ``potentials`` of shape (horizon+1, K)) so that exact enumeration code can
    consume them directly.
    """

    is_finite = True
    has_transition_density = True

    def __init__(self, initial_probs, transition_matrix, potentials):
        initial_probs = np.asarray(initial_probs, dtype=float)
        transition_matrix = np.asarray(transition_matrix, dtype=float)
        potentials = np.asarray(potentials, dtype=float)
        k = initial_probs.size
        if transition_matrix.shape != (k, k):
            raise ValueError("transition matrix must be K x K")
        if potentials.ndim != 2 or potentials.shape[1] != k:
            raise ValueError("potential table must have shape (horizon+1, K)")
        if np.any(initial_probs < 0) or abs(initial_probs.sum() - 1.0) > 1e-12:
            raise ValueError("initial probabilities must be a distribution")
        rows = transition_matrix.sum(axis=1)
        if np.any(transition_matrix < 0) or np.any(np.abs(rows - 1.0) > 1e-12):
            raise ValueError("transition matrix rows must sum to one within 1e-12")
        if np.any(potentials <= 0):
            raise ValueError("potentials must be strictly positive")
        self.num_states = k
        self.horizon = potentials.shape[0] - 1
        self.initial_probs = initial_probs
        self.transition_matrix = transition_matrix
        self.potentials = potentials
        self._log_potentials = np.log(potentials)
        self._log_transition = np.log(np.where(transition_matrix > 0, transition_matrix, 1.0))
        self._zero_transition = transition_matrix == 0
        self._initial_cum = np.cumsum(initial_probs)
        self._transition_cum = np.cumsum(transition_matrix, axis=1)

    def sample_initial(self, n, rng):
        u = rng.random(n)
        return np.searchsorted(self._initial_cum, u, side="right").astype(np.int64)

    def sample_transition(self, t, x, rng):
        x = np.asarray(x, dtype=np.int64)
        u = rng.random(x.shape)
        cum = self._transition_cum[x]
        return (u[..., None] >= cum).sum(axis=-1).astype(np.int64)

    def log_potential(self, t, x):
        return self._log_potentials[t, np.asarray(x, dtype=np.int64)]

    def transition_log_density(self, t, x_from, x_to):
        x_from = np.asarray(x_from, dtype=np.int64)
        x_to = np.asarray(x_to, dtype=np.int64)
        out = self._log_transition[x_from, x_to]
        return np.where(self._zero_transition[x_from, x_to], -np.inf, out)

    def initial_log_density(self, x):
        p = self.initial_probs[np.asarray(x, dtype=np.int64)]
        return np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf)


def finite_hmm(num_states, initial_probs, transition_matrix, potentials, horizon) -> FiniteHmm:
    """Build a FiniteHmm, checking the declared sizes against the tables."""
    potentials = np.asarray(potentials, dtype=float)
    if np.asarray(initial_probs).size != num_states:
        raise ValueError("initial probabilities must have length K")
    if potentials.shape != (horizon + 1, num_states):
        raise ValueError("potential table must have shape (horizon+1, K)")
    return FiniteHmm(initial_probs, transition_matrix, potentials)


def demo_finite_hmm(horizon: int = 2) -> FiniteHmm:
    """Small two-state model with bounded, moderately contrasting potentials,
    used as the default substrate for exact-enumeration checks and coupling
    studies."""
    base = np.array([[1.0, 0.5], [0.8, 1.3], [0.6, 1.1]])
    reps = int(np.ceil((horizon + 1) / base.shape[0]))
    potentials = np.tile(base, (reps, 1))[: horizon + 1]
    return FiniteHmm([0.6, 0.4], [[0.7, 0.3], [0.4, 0.6]], potentials)


def simulate_dataset(params: PoissonAr1Params, horizon, rng):
    """Simulate (latent path, counts) of length horizon+1 from the model."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    sigma = params.sigma
    x = np.empty(horizon + 1)
    x[0] = params.mu + sigma * rng.standard_normal()
    for t in range(horizon):
        x[t + 1] = params.mu + params.rho * (x[t] - params.mu) + sigma * rng.standard_normal()
    y = rng.poisson(np.exp(x))
    return x, y.astype(int)


def write_counts_csv(path, counts):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "y"])
        for t, y in enumerate(counts):
            writer.writerow([t, int(y)])


def read_counts_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "y"]:
            raise ValueError(f"unexpected dataset header {header!r} in {path}")
        rows = [(int(t), int(y)) for t, y in reader]
    rows.sort()
    return np.array([y for _, y in rows], dtype=int)


def write_truth_csv(path, states):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x"])
        for t, x in enumerate(states):
            writer.writerow([t, f"{x:.17g}"])
