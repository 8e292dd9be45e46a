"""Coupled pair of conditional particle filter updates under multinomial
resampling.

Two conditional particle systems, one per reference trajectory, are grown
jointly so that as many particles as possible coincide.  Particles are
path-valued here: a coupled slot carries the same full path in both systems.
Per free slot, the ancestors are drawn from the maximal coupling of the two
"ancestor lies in the coupled set" events, sharing the propagation draw on
success; the final selection is coupled the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .resampling import categorical_labels


@dataclass
class CouplingReport:
    coupled_final: bool  # the two selected output paths coincide
    coupled_counts: np.ndarray  # |C_t| for t = 0..horizon
    lambdas: np.ndarray
    lambdas_check: np.ndarray


def _coupled_masses(model, t, paths, paths_check, coupled):
    """Total potential mass of the coupled set and of each system's
    uncoupled remainder, with one shared max-subtraction so the three sums
    are directly comparable."""
    lg = model.log_potential(t, paths[:, t])
    lg_check = model.log_potential(t, paths_check[:, t])
    m = max(lg.max(), lg_check.max())
    g = np.exp(lg - m)
    g_check = np.exp(lg_check - m)
    shared = g[coupled].sum()
    return shared, g[~coupled].sum(), g_check[~coupled].sum(), g, g_check


def _pick(rng, indices, masses):
    return indices[categorical_labels(masses, rng, 1)[0] - 1]


def coupled_cpf_step(model, n_particles, z, z_check, rng):
    """Advance both kernels one step from (z, z_check); multinomial scheme.

    Returns (new z, new z_check, CouplingReport).
    """
    n = n_particles
    if n < 2:
        raise ValueError("need at least two particles")
    z = np.asarray(z, dtype=float)
    z_check = np.asarray(z_check, dtype=float)
    horizon = model.horizon
    if z.shape != (horizon + 1,) or z_check.shape != (horizon + 1,):
        raise ValueError("both trajectories must have length horizon + 1")

    paths = np.zeros((n, horizon + 1))
    paths_check = np.zeros((n, horizon + 1))
    paths[0] = z
    paths_check[0] = z_check
    shared0 = model.sample_initial(n - 1, rng)
    paths[1:, 0] = shared0
    paths_check[1:, 0] = shared0
    coupled = np.ones(n, dtype=bool)
    coupled[0] = False

    counts = np.empty(horizon + 1, dtype=int)
    lambdas = np.empty(horizon + 1)
    lambdas_check = np.empty(horizon + 1)
    counts[0] = n - 1

    for t in range(1, horizon + 1):
        shared, rest, rest_check, g, g_check = _coupled_masses(
            model, t - 1, paths, paths_check, coupled
        )
        lam = shared / (shared + rest)
        lam_check = shared / (shared + rest_check)
        omega = min(lam, lam_check)
        lambdas[t - 1] = lam
        lambdas_check[t - 1] = lam_check

        in_coupled = np.flatnonzero(coupled)
        out_coupled = np.flatnonzero(~coupled)
        new_paths = np.empty_like(paths)
        new_paths_check = np.empty_like(paths_check)
        new_paths[0, : t + 1] = z[: t + 1]
        new_paths_check[0, : t + 1] = z_check[: t + 1]
        new_coupled = np.zeros(n, dtype=bool)

        stay = rng.random(n - 1) < omega
        for j, success in zip(range(1, n), stay):
            if success:
                anc = _pick(rng, in_coupled, g[in_coupled])
                x = model.sample_transition(t, paths[anc, t - 1 : t], rng)[0]
                new_paths[j, :t] = paths[anc, :t]
                new_paths[j, t] = x
                new_paths_check[j, :t] = paths_check[anc, :t]
                new_paths_check[j, t] = x
                new_coupled[j] = True
                continue
            # Uncoupled branch: residual mixture of the maximal coupling.
            if lam <= lam_check:
                anc = _pick(rng, out_coupled, g[out_coupled])
                if omega < 1.0 and rng.random() < (lam_check - lam) / (1.0 - omega):
                    anc_check = _pick(rng, in_coupled, g_check[in_coupled])
                else:
                    anc_check = _pick(rng, out_coupled, g_check[out_coupled])
            else:
                anc_check = _pick(rng, out_coupled, g_check[out_coupled])
                if omega < 1.0 and rng.random() < (lam - lam_check) / (1.0 - omega):
                    anc = _pick(rng, in_coupled, g[in_coupled])
                else:
                    anc = _pick(rng, out_coupled, g[out_coupled])
            new_paths[j, :t] = paths[anc, :t]
            new_paths[j, t] = model.sample_transition(t, paths[anc, t - 1 : t], rng)[0]
            new_paths_check[j, :t] = paths_check[anc_check, :t]
            new_paths_check[j, t] = model.sample_transition(t, paths_check[anc_check, t - 1 : t], rng)[0]
        paths = new_paths
        paths_check = new_paths_check
        coupled = new_coupled
        counts[t] = int(coupled.sum())

    shared, rest, rest_check, g, g_check = _coupled_masses(
        model, horizon, paths, paths_check, coupled
    )
    lam = shared / (shared + rest)
    lam_check = shared / (shared + rest_check)
    omega = min(lam, lam_check)
    lambdas[horizon] = lam
    lambdas_check[horizon] = lam_check

    in_coupled = np.flatnonzero(coupled)
    out_coupled = np.flatnonzero(~coupled)
    shared_draw = rng.random() < omega
    if shared_draw:
        idx = _pick(rng, in_coupled, g[in_coupled])
        out = paths[idx]
        out_check = paths_check[idx]
    elif lam <= lam_check:
        out = paths[_pick(rng, out_coupled, g[out_coupled])]
        if omega < 1.0 and rng.random() < (lam_check - lam) / (1.0 - omega):
            out_check = paths_check[_pick(rng, in_coupled, g_check[in_coupled])]
        else:
            out_check = paths_check[_pick(rng, out_coupled, g_check[out_coupled])]
    else:
        out_check = paths_check[_pick(rng, out_coupled, g_check[out_coupled])]
        if omega < 1.0 and rng.random() < (lam - lam_check) / (1.0 - omega):
            out = paths[_pick(rng, in_coupled, g[in_coupled])]
        else:
            out = paths[_pick(rng, out_coupled, g[out_coupled])]

    coupled_final = bool(np.array_equal(out, out_check))
    report = CouplingReport(coupled_final, counts, lambdas, lambdas_check)
    return out.copy(), out_check.copy(), report


def estimate_coupling_probability(model, n_particles, z, z_check, reps, rng):
    """Fraction of replicates whose final selections couple, with its
    binomial standard error."""
    if reps < 1:
        raise ValueError("need at least one replicate")
    hits = 0
    for _ in range(reps):
        _, _, report = coupled_cpf_step(model, n_particles, z, z_check, rng)
        hits += report.coupled_final
    frac = hits / reps
    stderr = float(np.sqrt(frac * (1.0 - frac) / reps))
    return frac, stderr
