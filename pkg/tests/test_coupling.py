import numpy as np
import pytest

from helpers import chisquare_vs_probs
from pgibbs import oracle
from pgibbs.coupling import coupled_cpf_step, estimate_coupling_probability
from pgibbs.cpf import CpfConfig
from pgibbs.fk_model import FiniteHmm, demo_finite_hmm


class DiracModel:
    """Fully deterministic model: a single possible state at every time."""

    is_finite = False
    has_transition_density = False
    horizon = 2

    def sample_initial(self, n, rng):
        return np.zeros(n)

    def sample_transition(self, t, x, rng):
        return np.asarray(x, dtype=float).copy()

    def log_potential(self, t, x):
        return np.zeros(np.asarray(x).shape)


def test_identical_inputs_deterministic_model_always_couple():
    model = DiracModel()
    z = np.zeros(3)
    rng = np.random.default_rng(0)
    frac, err = estimate_coupling_probability(model, 4, z, z, 50, rng)
    assert frac == 1.0
    for _ in range(20):
        out, out_check, report = coupled_cpf_step(model, 4, z, z, rng)
        assert report.coupled_final
        assert np.array_equal(out, out_check)


def test_coupled_set_structure():
    model = demo_finite_hmm()
    z = np.zeros(3, dtype=np.int64)
    z_check = np.ones(3, dtype=np.int64)
    rng = np.random.default_rng(1)
    for n in (2, 5):
        for _ in range(30):
            out, out_check, report = coupled_cpf_step(model, n, z, z_check, rng)
            assert report.coupled_counts[0] == n - 1
            assert np.all(report.coupled_counts <= n - 1)
            assert report.lambdas.shape == (model.horizon + 1,)
            if report.coupled_final:
                assert np.array_equal(out, out_check)


def test_two_particle_structure():
    model = demo_finite_hmm()
    rng = np.random.default_rng(2)
    z = np.zeros(3, dtype=np.int64)
    z_check = np.ones(3, dtype=np.int64)
    saw_coupled = False
    for _ in range(200):
        out, out_check, report = coupled_cpf_step(model, 2, z, z_check, rng)
        if report.coupled_counts[-1] == 1 and report.coupled_final:
            saw_coupled = True
            assert np.array_equal(out, out_check)
    assert saw_coupled


@pytest.mark.parametrize("side", [0, 1])
def test_marginal_law_matches_exact_kernel(side):
    model = demo_finite_hmm()
    n = 3
    kern = oracle.exact_cpf_kernel(model, n, CpfConfig(n, "multinomial"))
    z = np.zeros(3, dtype=np.int64)
    z_check = np.array([1, 0, 1], dtype=np.int64)
    src = oracle.path_index([z, z_check][side], 2)
    rng = np.random.default_rng(3 + side)
    reps = 50_000
    counts = np.zeros(kern.matrix.shape[0])
    for _ in range(reps):
        outputs = coupled_cpf_step(model, n, z, z_check, rng)
        counts[oracle.path_index(outputs[side].astype(int), 2)] += 1
    assert chisquare_vs_probs(counts, kern.matrix[src]) > 0.001


def test_near_degenerate_potentials_leave_coupling_incomplete():
    potentials = np.array([[1.0, 1e-8], [1e-8, 1.0], [1.0, 1e-8]])
    model = FiniteHmm([0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]], potentials)
    z = np.zeros(3, dtype=np.int64)
    z_check = np.ones(3, dtype=np.int64)
    rng = np.random.default_rng(4)
    frac, _ = estimate_coupling_probability(model, 2, z, z_check, 300, rng)
    assert frac < 1.0


def test_coupling_probability_increases_with_particles():
    model = demo_finite_hmm()
    z = np.zeros(3, dtype=np.int64)
    z_check = np.ones(3, dtype=np.int64)
    rng = np.random.default_rng(5)
    fractions = {}
    errors = {}
    for n in (8, 32, 128):
        fractions[n], errors[n] = estimate_coupling_probability(model, n, z, z_check, 800, rng)
    assert fractions[32] >= fractions[8] - 3 * (errors[8] + errors[32])
    assert fractions[128] >= fractions[32] - 3 * (errors[32] + errors[128])
    assert fractions[128] > fractions[8]


def test_replicate_validation():
    model = demo_finite_hmm()
    z = np.zeros(3, dtype=np.int64)
    with pytest.raises(ValueError):
        estimate_coupling_probability(model, 4, z, z, 0, np.random.default_rng(0))
    frac, err = estimate_coupling_probability(model, 4, z, z, 1, np.random.default_rng(0))
    assert frac in (0.0, 1.0) and err == 0.0
