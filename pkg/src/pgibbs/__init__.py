"""Particle Gibbs kernels with exact-enumeration oracles for finite models."""

from .fk_model import (
    FiniteHmm,
    PoissonAr1Model,
    PoissonAr1Params,
    demo_finite_hmm,
    finite_hmm,
    poisson_log_potential,
    simulate_dataset,
)
from .resampling import (
    DegenerateWeightsError,
    SCHEMES,
    ancestor_conditional_distribution,
    conditional_multinomial,
    conditional_residual,
    conditional_systematic,
    multinomial_resample,
    normalize_weights,
    residual_resample,
    systematic_joint_prob,
    systematic_resample,
)
from .smc import ParticleSystem, extract_trajectory, forward_smc, trace_ancestry
from .cpf import CpfConfig, CpfOutput, backward_sample, cpf_forward, cpf_step, run_chain, select_index
from .coupling import CouplingReport, coupled_cpf_step, estimate_coupling_probability

__version__ = "0.1.0"
