"""Forward interacting particle system with full genealogy storage and the
unbiased normalising-constant estimator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .resampling import DegenerateWeightsError, normalize_weights, resampler


@dataclass
class ParticleSystem:
    """Clouds, ancestry and per-time log-potentials of one particle filter run.

    ``clouds`` has shape (horizon+1, N); ``genealogy`` has shape (horizon, N)
    with 1-based labels: genealogy[t, n] is the time-t label that generated
    particle n+1 at time t+1.  ``log_normalizer_estimate`` accumulates
    log((1/N) * sum_n exp(log_potentials[t, n])) over all times.
    """

    clouds: np.ndarray
    genealogy: np.ndarray
    log_potentials: np.ndarray
    log_normalizer_estimate: float
    _weights_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_particles(self) -> int:
        return self.clouds.shape[1]

    @property
    def horizon(self) -> int:
        return self.clouds.shape[0] - 1

    def weights(self, t: int) -> np.ndarray:
        """Normalised resampling weights of the time-t cloud (cached)."""
        if t not in self._weights_cache:
            self._weights_cache[t] = _weights_at(self.log_potentials[t], t)
        return self._weights_cache[t]


def _log_mean_exp(lg: np.ndarray) -> float:
    m = lg.max()
    if m == -np.inf:
        return -np.inf
    return float(m + np.log(np.exp(lg - m).sum() / lg.size))


def forward_smc(model, n_particles, scheme, rng) -> ParticleSystem:
    """Run a plain particle filter for the model, resampling at every step.

    Raises DegenerateWeightsError naming the failing time if all potentials
    underflow at some step.
    """
    if n_particles < 1:
        raise ValueError("need at least one particle")
    draw_ancestors = resampler(scheme)
    horizon = model.horizon
    x0 = np.asarray(model.sample_initial(n_particles, rng))
    clouds = np.empty((horizon + 1, n_particles), dtype=x0.dtype)
    clouds[0] = x0
    genealogy = np.ones((horizon, n_particles), dtype=np.int64)
    log_pot = np.empty((horizon + 1, n_particles))
    log_pot[0] = model.log_potential(0, clouds[0])
    log_z = _per_time_term(log_pot[0], 0)
    cache = {}
    for t in range(1, horizon + 1):
        weights = _weights_at(log_pot[t - 1], t - 1)
        cache[t - 1] = weights
        ancestors = draw_ancestors(weights, rng)
        genealogy[t - 1] = ancestors
        clouds[t] = model.sample_transition(t, clouds[t - 1][ancestors - 1], rng)
        log_pot[t] = model.log_potential(t, clouds[t])
        log_z += _per_time_term(log_pot[t], t)
    return ParticleSystem(clouds, genealogy, log_pot, log_z, cache)


def _weights_at(log_potentials, t):
    try:
        return normalize_weights(log_potentials)
    except DegenerateWeightsError:
        raise DegenerateWeightsError(f"degenerate weights at time {t}") from None


def _per_time_term(log_potentials, t):
    term = _log_mean_exp(log_potentials)
    if term == -np.inf:
        raise DegenerateWeightsError(f"degenerate weights at time {t}")
    return term


def trace_ancestry(system: ParticleSystem, label: int) -> np.ndarray:
    """Follow the genealogy of the given final-time label backwards.

    Returns the 1-based label of the chosen particle's ancestor at each time.
    """
    n = system.n_particles
    if not 1 <= label <= n:
        raise ValueError(f"label {label} outside 1..{n}")
    horizon = system.horizon
    trace = np.empty(horizon + 1, dtype=np.int64)
    trace[horizon] = label
    for t in range(horizon - 1, -1, -1):
        trace[t] = system.genealogy[t, trace[t + 1] - 1]
    return trace


def extract_trajectory(system: ParticleSystem, trace: np.ndarray) -> np.ndarray:
    """Assemble the path visiting clouds[t, trace[t]] for every t."""
    trace = np.asarray(trace, dtype=np.int64)
    if trace.size != system.horizon + 1:
        raise ValueError("trace length must equal horizon + 1")
    return system.clouds[np.arange(trace.size), trace - 1].copy()
