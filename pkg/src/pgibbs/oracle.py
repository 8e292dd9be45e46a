"""Exact brute-force machinery on finite models: path enumeration for the
target path law and its normaliser, exact joint laws of the resampling
schemes on small N, and dense transition matrices of the conditional
particle filter variants, obtained by summing over all discrete randomness.

Everything here is desk-scale reference code: correctness and determinism
over speed.  Trajectories of a K-state model with horizon T are indexed
lexicographically, index = sum_t x_t * K^(T-t).
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .cpf import CpfConfig
from .resampling import (
    _floors_and_residues,
    _segment_knots,
    _stack_labels,
    _systematic_counts,
    ancestor_conditional_distribution,
    normalize_weights,
)


@dataclass
class ExactDistribution:
    """All trajectories of a finite model with their exact probabilities."""

    paths: np.ndarray  # (M, horizon+1) int
    probs: np.ndarray  # (M,)
    normalizer: float


@dataclass
class ExactKernel:
    """Dense stochastic matrix over lexicographically indexed trajectories."""

    matrix: np.ndarray
    paths: np.ndarray


def path_index(path, num_states) -> int:
    idx = 0
    for x in path:
        idx = idx * num_states + int(x)
    return idx


def all_paths(num_states, horizon) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(num_states)] * (horizon + 1)), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def brute_force_q(model, max_paths: int = 100_000) -> ExactDistribution:
    """Enumerate every trajectory's unnormalised mass and normalise.

    The mass of a path is the initial probability times all transition
    probabilities times all potentials (one per time, including the final
    one, matching what the particle estimator targets).
    """
    if not getattr(model, "is_finite", False):
        raise ValueError("exact enumeration needs a finite model")
    k = model.num_states
    horizon = model.horizon
    if k ** (horizon + 1) > max_paths:
        raise ValueError(f"{k ** (horizon + 1)} paths exceed the cap of {max_paths}")
    paths = all_paths(k, horizon)
    mass = model.initial_probs[paths[:, 0]].copy()
    for t in range(1, horizon + 1):
        mass *= model.transition_matrix[paths[:, t - 1], paths[:, t]]
    for t in range(horizon + 1):
        mass *= model.potentials[t, paths[:, t]]
    z = float(mass.sum())
    if z <= 0:
        raise ValueError("the model assigns zero mass to every path")
    return ExactDistribution(paths, mass / z, z)


def forward_recursion_normalizer(model) -> float:
    """Normaliser via the sum-product recursion, for cross-checking."""
    alpha = model.initial_probs * model.potentials[0]
    for t in range(1, model.horizon + 1):
        alpha = (alpha @ model.transition_matrix) * model.potentials[t]
    return float(alpha.sum())


# ---------------------------------------------------------------------------
# Exact joint laws of the resampling schemes (small N), enumerated
# mechanically from each scheme's defining randomness.

def enumerate_multinomial_joint(w) -> dict:
    w = np.asarray(w, dtype=float)
    n = w.size
    law = {}
    for a in itertools.product(range(1, n + 1), repeat=n):
        p = float(np.prod(w[np.array(a) - 1]))
        if p > 0:
            law[a] = p
    return law


def enumerate_residual_joint(w) -> dict:
    """Joint law of residual resampling followed by a uniform permutation,
    enumerated over every fill-in assignment and every permutation."""
    w = np.asarray(w, dtype=float)
    n = w.size
    floors, residues, n_res = _floors_and_residues(w)
    base = _stack_labels(floors)
    fill_probs = residues / residues.sum() if n_res > 0 else None
    law = {}
    perms = list(itertools.permutations(range(n)))
    for fills in itertools.product(range(1, n + 1), repeat=n_res):
        p_fill = 1.0
        for f in fills:
            p_fill *= fill_probs[f - 1]
        if p_fill == 0:
            continue
        vec = np.concatenate([base, np.array(fills, dtype=int)]) if n_res else base
        for perm in perms:
            a = tuple(int(vec[i]) for i in perm)
            law[a] = law.get(a, 0.0) + p_fill / len(perms)
    return law


def enumerate_systematic_joint(w) -> dict:
    """Joint law of systematic resampling plus uniform cycling, enumerated by
    integrating the shift variable over the segments where the offspring
    vector is constant."""
    w = np.asarray(w, dtype=float)
    n = w.size
    knots = _segment_knots(w)
    cuts = {0.0, 1.0}
    for s in knots:
        frac = float(s - np.floor(s))
        if 0.0 < frac < 1.0:
            cuts.add(frac)
    cuts = sorted(cuts)
    law = {}
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        base = _stack_labels(_systematic_counts(knots, mid))
        for shift in range(n):
            a = tuple(int(base[(i + shift) % n]) for i in range(n))
            law[a] = law.get(a, 0.0) + (hi - lo) / n
    return law


_JOINT_ENUMERATORS = {
    "multinomial": enumerate_multinomial_joint,
    "residual": enumerate_residual_joint,
    "systematic": enumerate_systematic_joint,
}


def enumerate_joint_law(scheme, w) -> dict:
    try:
        return _JOINT_ENUMERATORS[scheme](w)
    except KeyError:
        raise ValueError(f"unknown resampling scheme: {scheme!r}") from None


def conditional_ancestor_law(scheme, w) -> dict:
    """Exact law of the ancestor vector given that slot one points to 1,
    obtained by conditioning the enumerated joint law."""
    law = enumerate_joint_law(scheme, w)
    kept = {a: p for a, p in law.items() if a[0] == 1}
    total = sum(kept.values())
    if total <= 0:
        raise ValueError("label 1 has zero probability in slot one")
    return {a: p / total for a, p in kept.items()}


def enumerated_slot_conditional(scheme, w, a_minus_b, b) -> np.ndarray:
    """Conditional law of slot b given the other slots, from the enumerated
    joint law; reference route for the closed-form computation."""
    w = np.asarray(w, dtype=float)
    n = w.size
    law = enumerate_joint_law(scheme, w)
    others = [s for s in range(n) if s != b - 1]
    probs = np.zeros(n)
    target = tuple(int(v) for v in a_minus_b)
    for a, p in law.items():
        if tuple(a[s] for s in others) == target:
            probs[a[b - 1] - 1] += p
    total = probs.sum()
    if total <= 0:
        raise ValueError(f"{scheme} scheme: labels {a_minus_b} unreachable for slot {b}")
    return probs / total


# ---------------------------------------------------------------------------
# Exact kernels.

def _selection_probs(w: np.ndarray, forced_move: bool) -> np.ndarray:
    if not forced_move:
        return w
    n = w.size
    others = w.sum() - w[0]
    probs = np.zeros(n)
    if others <= 0:
        probs[0] = 1.0
        return probs
    for m in range(2, n + 1):
        rest = w.sum() - w[m - 1]
        accept = 1.0 if rest <= 0 else min(others / rest, 1.0)
        probs[m - 1] = w[m - 1] / others * accept
    probs[0] = max(0.0, 1.0 - probs[1:].sum())
    return probs


def exact_cpf_kernel(model, n_particles, config: CpfConfig, max_atoms: int = 10_000_000) -> ExactKernel:
    """Sum over all discrete randomness of the conditional particle filter to
    produce its exact transition matrix on a finite model.

    Enumerates, per source trajectory: free initial states, conditional
    ancestor vectors per step, free propagation outcomes per step, the final
    selection, and (with backward sampling on) every backward label choice.
    Organised as a depth-first weighted traversal so only the current branch
    is materialised.
    """
    if not getattr(model, "is_finite", False):
        raise ValueError("exact enumeration needs a finite model")
    if config.n_particles != n_particles:
        config = CpfConfig(n_particles, config.scheme, config.backward_sampling, config.forced_move)
    k = model.num_states
    horizon = model.horizon
    n = n_particles
    paths = all_paths(k, horizon)
    m_paths = paths.shape[0]
    trans = model.transition_matrix
    pot = model.potentials
    free_states = list(itertools.product(range(k), repeat=n - 1))

    law_cache: dict = {}

    def cond_law(weights):
        key = tuple(np.round(weights, 12))
        if key not in law_cache:
            law_cache[key] = [
                (np.array(a, dtype=int), p)
                for a, p in conditional_ancestor_law(config.scheme, weights).items()
            ]
        return law_cache[key]

    matrix = np.zeros((m_paths, m_paths))
    atoms = 0

    def weights_of(cloud, t):
        return normalize_weights(np.log(pot[t, np.asarray(cloud)]))

    for src in range(m_paths):
        frozen = paths[src]
        row = np.zeros(m_paths)

        def backward(t, slot_next, suffix_head, genealogy, clouds, prob):
            nonlocal atoms
            if t < 0:
                row[path_index(suffix_head, k)] += prob
                atoms += 1
                if atoms > max_atoms:
                    raise ValueError(f"enumeration exceeded the cap of {max_atoms} atoms")
                return
            weights = weights_of(clouds[t], t)
            a_minus = np.delete(genealogy[t], slot_next - 1)
            label_probs = ancestor_conditional_distribution(config.scheme, weights, a_minus, slot_next)
            dens = trans[np.asarray(clouds[t]), clouds[t + 1][slot_next - 1]]
            probs = label_probs * dens
            total = probs.sum()
            for m in range(n):
                if probs[m] > 0:
                    backward(t - 1, m + 1, (clouds[t][m],) + suffix_head,
                             genealogy, clouds, prob * probs[m] / total)

        def finalize(clouds, genealogy, prob):
            nonlocal atoms
            w_final = weights_of(clouds[horizon], horizon)
            sel = _selection_probs(w_final, config.forced_move)
            for n_star in range(1, n + 1):
                p_sel = sel[n_star - 1]
                if p_sel == 0:
                    continue
                if config.backward_sampling:
                    backward(horizon - 1, n_star, (clouds[horizon][n_star - 1],),
                             genealogy, clouds, prob * p_sel)
                else:
                    out = np.empty(horizon + 1, dtype=int)
                    slot = n_star
                    out[horizon] = clouds[horizon][slot - 1]
                    for t in range(horizon - 1, -1, -1):
                        slot = genealogy[t][slot - 1]
                        out[t] = clouds[t][slot - 1]
                    row[path_index(out, k)] += prob * p_sel
                    atoms += 1
                    if atoms > max_atoms:
                        raise ValueError(f"enumeration exceeded the cap of {max_atoms} atoms")

        def extend(t, clouds, genealogy, prob):
            if t == horizon:
                finalize(clouds, genealogy, prob)
                return
            weights = weights_of(clouds[t], t)
            for ancestors, p_anc in cond_law(weights):
                sources = [clouds[t][a - 1] for a in ancestors[1:]]
                for xs in free_states:
                    p_prop = 1.0
                    for s, x in zip(sources, xs):
                        p_prop *= trans[s, x]
                        if p_prop == 0:
                            break
                    if p_prop == 0:
                        continue
                    extend(t + 1, clouds + [(frozen[t + 1],) + xs],
                           genealogy + [ancestors], prob * p_anc * p_prop)

        for xs in free_states:
            p0 = 1.0
            for x in xs:
                p0 *= model.initial_probs[x]
            if p0 > 0:
                extend(0, [(frozen[0],) + xs], [], p0)

        matrix[src] = row

    row_sums = matrix.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-10):
        raise AssertionError(f"kernel rows do not sum to one: {row_sums}")
    return ExactKernel(matrix, paths)


def stationarity_gap(kernel: ExactKernel, dist: np.ndarray) -> float:
    """Max-norm distance between dist.K and dist."""
    dist = np.asarray(dist, dtype=float)
    return float(np.max(np.abs(dist @ kernel.matrix - dist)))


def detailed_balance_gap(kernel: ExactKernel, dist: np.ndarray) -> float:
    """Largest violation of dist(z) K(z, z') = dist(z') K(z', z) over pairs."""
    dist = np.asarray(dist, dtype=float)
    flow = dist[:, None] * kernel.matrix
    return float(np.max(np.abs(flow - flow.T)))


def lag_one_autocov(kernel: ExactKernel, dist: np.ndarray, h: np.ndarray) -> float:
    """Uncentered lag-one autocovariance sum_{z,z'} dist(z) K(z,z') h(z) h(z')."""
    dist = np.asarray(dist, dtype=float)
    h = np.asarray(h, dtype=float)
    return float(h @ (dist[:, None] * kernel.matrix) @ h)


def kernel_to_csv(kernel: ExactKernel, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "prob"])
        for i, j in np.ndindex(kernel.matrix.shape):
            p = kernel.matrix[i, j]
            if p > 0:
                writer.writerow([i, j, f"{p:.17g}"])
