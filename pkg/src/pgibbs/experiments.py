"""Particle Gibbs inside a parameter Gibbs sampler for the Poisson-count
AR(1) model: conjugate full conditionals for the innovation variance, the
autoregression coefficient (truncated to [-1, 1]) and the level, alternated
with a conditional particle filter update of the latent path."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

from .cpf import CpfConfig, cpf_step
from .fk_model import PoissonAr1Model, PoissonAr1Params


class DegenerateConditionalError(ValueError):
    """A full conditional has collapsed (zero-variance conditioning data)."""


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors: level ~ N(m_mu, s_mu^2), precision ~ Gamma(a_sigma,
    b_sigma), autoregression coefficient uniform on [-1, 1]."""

    m_mu: float = 0.0
    s_mu: float = 10.0
    a_sigma: float = 1.0
    b_sigma: float = 1.0

    def __post_init__(self):
        if self.s_mu <= 0 or self.a_sigma <= 0 or self.b_sigma <= 0:
            raise ValueError("prior scale and Gamma parameters must be positive")


@dataclass
class GibbsState:
    params: PoissonAr1Params
    path: np.ndarray


def sample_precision(path, params: PoissonAr1Params, prior: PriorSpec, rng, size=None):
    """Draw the innovation variance: conjugate Gamma on the precision given
    the centred path, returned as its reciprocal."""
    x = np.asarray(path, dtype=float)
    centred = x - params.mu
    horizon = x.size - 1
    shape = prior.a_sigma + (horizon + 1) / 2.0
    rate = prior.b_sigma + 0.5 * centred[0] ** 2
    if horizon > 0:
        rate += 0.5 * np.sum((centred[1:] - params.rho * centred[:-1]) ** 2)
    if not np.isfinite(rate):
        raise ValueError("non-finite rate in the precision conditional")
    precision = rng.gamma(shape, 1.0 / rate, size=size)
    return 1.0 / precision


def sample_rho(path, params: PoissonAr1Params, prior: PriorSpec, rng, size=None):
    """Draw the autoregression coefficient from its Gaussian conditional
    truncated to [-1, 1], via the inverse CDF on the truncated interval."""
    x = np.asarray(path, dtype=float)
    centred = x - params.mu
    lagged = centred[:-1]
    denom = np.sum(lagged**2)
    if denom <= 0:
        raise DegenerateConditionalError(
            "degenerate rho conditional: no signal in the lagged path"
        )
    mean = np.sum(lagged * centred[1:]) / denom
    sd = np.sqrt(params.sigma2 / denom)
    lo = ndtr((-1.0 - mean) / sd)
    hi = ndtr((1.0 - mean) / sd)
    if hi - lo < 1e-300:
        value = np.clip(mean, -1.0, 1.0)
        return value if size is None else np.full(size, value)
    u = rng.random(size=size)
    draw = mean + sd * ndtri(lo + u * (hi - lo))
    return np.clip(draw, -1.0, 1.0)


def sample_mu(path, params: PoissonAr1Params, prior: PriorSpec, rng, size=None):
    """Draw the level from its Gaussian conditional."""
    x = np.asarray(path, dtype=float)
    horizon = x.size - 1
    rho = params.rho
    lam = 1.0 / prior.s_mu**2 + (1.0 + horizon * (1.0 - rho) ** 2) / params.sigma2
    linear = prior.m_mu / prior.s_mu**2
    linear += (x[0] + (1.0 - rho) * np.sum(x[1:] - rho * x[:-1])) / params.sigma2
    mean = linear / lam
    return rng.normal(mean, 1.0 / np.sqrt(lam), size=size)


def pg_gibbs_sweep(counts, state: GibbsState, cpf_config: CpfConfig, prior: PriorSpec, rng) -> GibbsState:
    """One full sweep: variance, coefficient, level, then the particle
    update of the latent path under the refreshed parameters."""
    params = state.params
    sigma2 = float(sample_precision(state.path, params, prior, rng))
    params = replace(params, sigma2=sigma2)
    rho = float(sample_rho(state.path, params, prior, rng))
    params = replace(params, rho=rho)
    mu = float(sample_mu(state.path, params, prior, rng))
    params = replace(params, mu=mu)
    model = PoissonAr1Model(params, counts)
    out = cpf_step(model, cpf_config, state.path, rng, keep_system=False)
    return GibbsState(params, out.new_trajectory)


def run_pg_chain(counts, init: GibbsState, cpf_config: CpfConfig, prior: PriorSpec,
                 iterations, burn_in, rng, sink) -> None:
    """Iterate pg_gibbs_sweep, streaming post-burn-in states to ``sink``.

    ``sink`` is called as sink(iteration_index, GibbsState).
    """
    if not iterations > burn_in >= 0:
        raise ValueError("need iterations > burn_in >= 0")
    state = init
    for i in range(iterations):
        state = pg_gibbs_sweep(counts, state, cpf_config, prior, rng)
        if i >= burn_in:
            sink(i, state)
