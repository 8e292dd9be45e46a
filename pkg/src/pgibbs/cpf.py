"""The conditional particle filter Markov kernel: conditional forward pass,
final index selection (plain or forced-move), and the backward pass that
redraws the selected path's ancestry."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .resampling import (
    SCHEMES,
    ancestor_conditional_distribution,
    categorical_labels,
    conditional_resampler,
)
from .smc import ParticleSystem, _per_time_term, _weights_at, extract_trajectory, trace_ancestry


@dataclass(frozen=True)
class CpfConfig:
    n_particles: int
    scheme: str = "multinomial"
    backward_sampling: bool = False
    forced_move: bool = False

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("the conditional particle filter needs at least two particles")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown resampling scheme: {self.scheme!r}")


@dataclass
class CpfOutput:
    new_trajectory: np.ndarray
    selected_index: int
    ancestry: np.ndarray
    moved: bool
    system: ParticleSystem = field(repr=False)


def cpf_forward(model, config: CpfConfig, frozen, rng) -> ParticleSystem:
    """Run the conditional forward pass with the frozen path pinned in slot 1.

    Slot 1 carries the frozen state at every time with ancestor label 1;
    slots 2..N are generated through the scheme's conditional resampler and
    the model transitions.
    """
    frozen = np.asarray(frozen)
    horizon = model.horizon
    if frozen.shape != (horizon + 1,):
        raise ValueError("frozen trajectory length must equal horizon + 1")
    n = config.n_particles
    draw_ancestors = conditional_resampler(config.scheme)

    free0 = np.asarray(model.sample_initial(n - 1, rng))
    clouds = np.empty((horizon + 1, n), dtype=np.result_type(free0.dtype, frozen.dtype))
    clouds[0, 0] = frozen[0]
    clouds[0, 1:] = free0
    genealogy = np.ones((horizon, n), dtype=np.int64)
    log_pot = np.empty((horizon + 1, n))
    log_pot[0] = model.log_potential(0, clouds[0])
    log_z = _per_time_term(log_pot[0], 0)
    cache = {}
    for t in range(1, horizon + 1):
        weights = _weights_at(log_pot[t - 1], t - 1)
        cache[t - 1] = weights
        ancestors = draw_ancestors(weights, rng)
        genealogy[t - 1] = ancestors
        clouds[t, 0] = frozen[t]
        clouds[t, 1:] = model.sample_transition(t, clouds[t - 1][ancestors[1:] - 1], rng)
        log_pot[t] = model.log_potential(t, clouds[t])
        log_z += _per_time_term(log_pot[t], t)
    return ParticleSystem(clouds, genealogy, log_pot, log_z, cache)


def select_index(weights, forced_move, rng) -> int:
    """Draw the output slot from the final weights.

    Without the forced move this is a plain categorical draw.  With it, a
    non-frozen slot n >= 2 is proposed with probability w_n / (1 - w_1) and
    accepted with probability min((1 - w_1) / (1 - w_n), 1); a rejection
    keeps slot 1.  The acceptance ratio is formed from sums of the remaining
    weights, so two equal "everything else" masses accept exactly.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    if not forced_move:
        return int(categorical_labels(w, rng, 1)[0])
    others = w.sum() - w[0]
    if others <= 0.0:
        return 1
    proposal = int(categorical_labels(w[1:], rng, 1)[0]) + 1
    mass_without_prop = w.sum() - w[proposal - 1]
    if mass_without_prop <= 0.0:
        return proposal
    log_accept = np.log(others) - np.log(mass_without_prop)
    if log_accept >= 0 or np.log(rng.random()) < log_accept:
        return proposal
    return 1


def backward_sample(system: ParticleSystem, model, scheme, n_star, rng) -> np.ndarray:
    """Redraw the selected path's ancestor at every time, from last to first.

    At each time the label is drawn from the scheme's single-slot ancestor
    conditional reweighted by the transition density into the already-chosen
    next state.  The drawn label is written back into the genealogy so the
    stored ancestry matches the returned trace.
    """
    if not model.has_transition_density:
        raise ValueError("backward sampling needs an explicit transition density")
    horizon = system.horizon
    n = system.n_particles
    if not 1 <= n_star <= n:
        raise ValueError(f"label {n_star} outside 1..{n}")
    trace = np.empty(horizon + 1, dtype=np.int64)
    trace[horizon] = n_star
    for t in range(horizon - 1, -1, -1):
        slot = trace[t + 1]
        weights = system.weights(t)
        a_minus = np.delete(system.genealogy[t], slot - 1)
        label_probs = ancestor_conditional_distribution(scheme, weights, a_minus, slot)
        log_dens = model.transition_log_density(t + 1, system.clouds[t], system.clouds[t + 1, slot - 1])
        finite = np.isfinite(log_dens)
        probs = np.zeros(n)
        if finite.any():
            probs[finite] = label_probs[finite] * np.exp(log_dens[finite] - log_dens[finite].max())
        total = probs.sum()
        if total <= 0:
            raise ValueError(f"zero backward-sampling mass at time {t}")
        drawn = int(categorical_labels(probs, rng, 1)[0])
        trace[t] = drawn
        system.genealogy[t, slot - 1] = drawn
    return trace


def cpf_step(model, config: CpfConfig, current, rng, keep_system: bool = True) -> CpfOutput:
    """One application of the conditional particle filter kernel."""
    if config.backward_sampling and not model.has_transition_density:
        raise ValueError("backward sampling needs an explicit transition density")
    system = cpf_forward(model, config, current, rng)
    weights = system.weights(system.horizon)
    n_star = select_index(weights, config.forced_move, rng)
    if config.backward_sampling:
        trace = backward_sample(system, model, config.scheme, n_star, rng)
    else:
        trace = trace_ancestry(system, n_star)
    trajectory = extract_trajectory(system, trace)
    moved = bool(np.any(trace != 1))
    return CpfOutput(trajectory, n_star, trace, moved, system if keep_system else None)


def run_chain(model, config: CpfConfig, iterations, burn_in, init, rng, sink) -> None:
    """Iterate the kernel, streaming each post-burn-in output to ``sink``.

    ``sink`` is called as sink(iteration_index, CpfOutput).
    """
    if not iterations > burn_in >= 0:
        raise ValueError("need iterations > burn_in >= 0")
    current = np.asarray(init)
    for i in range(iterations):
        out = cpf_step(model, config, current, rng, keep_system=False)
        current = out.new_trajectory
        if i >= burn_in:
            sink(i, out)
