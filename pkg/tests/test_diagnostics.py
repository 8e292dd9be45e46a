import numpy as np
import pytest

from pgibbs import oracle
from pgibbs.cpf import CpfConfig, cpf_step
from pgibbs.diagnostics import acf, msjd, update_rate
from pgibbs.fk_model import demo_finite_hmm


def test_acf_lag_zero_is_one():
    rng = np.random.default_rng(0)
    series = rng.standard_normal(500)
    values = acf(series, 10)
    assert values[0] == 1.0


def test_acf_alternating_series():
    series = np.tile([1.0, -1.0], 500)
    values = acf(series, 1)
    assert values[1] == pytest.approx(-1.0, abs=2 / np.sqrt(series.size))


def test_acf_iid_noise_mostly_within_band():
    rng = np.random.default_rng(1)
    n = 10_000
    values = acf(rng.standard_normal(n), 20)
    inside = np.abs(values[1:]) < 3 / np.sqrt(n)
    assert inside.mean() >= 0.95


def test_acf_errors():
    with pytest.raises(ValueError):
        acf(np.ones(100), 5)
    with pytest.raises(ValueError):
        acf(np.arange(10.0), 10)
    with pytest.raises(ValueError):
        acf(np.array([1.0]), 0)


def test_update_rate_extremes():
    paths = np.tile(np.arange(5.0), (4, 1))
    assert np.array_equal(update_rate(paths), np.zeros(5))
    rng = np.random.default_rng(2)
    fresh = rng.standard_normal((50, 5))
    assert np.array_equal(update_rate(fresh), np.ones(5))
    with pytest.raises(ValueError):
        update_rate(fresh[:1])


def test_update_rate_counts_exact_changes():
    paths = np.array([[0.0, 1.0], [0.0, 2.0], [1.0, 2.0], [1.0, 2.0]])
    assert np.allclose(update_rate(paths), [1 / 3, 1 / 3])


def test_update_rate_invariant_to_relabeling():
    rng = np.random.default_rng(3)
    paths = rng.integers(0, 3, size=(200, 4))
    relabeled = 2 - paths  # bijective relabeling of {0,1,2}
    assert np.array_equal(update_rate(paths), update_rate(relabeled))


def test_msjd_examples():
    assert msjd(np.full(10, 3.0)) == 0.0
    assert msjd(np.tile([0.0, 1.0], 50)) == 1.0
    with pytest.raises(ValueError):
        msjd([1.0])


def test_msjd_matches_exact_lag_one_identity():
    """For a stationary reversible chain, the mean square jump of h equals
    2 (E[h^2] - lag-one autocovariance); compare the chain estimate against
    the enumerated kernel value."""
    model = demo_finite_hmm()
    q = oracle.brute_force_q(model)
    config = CpfConfig(2, "multinomial")
    kern = oracle.exact_cpf_kernel(model, 2, config)
    rng = np.random.default_rng(4)
    h = rng.standard_normal(q.probs.size)

    exact = 2 * (np.sum(q.probs * h**2) - oracle.lag_one_autocov(kern, q.probs, h))

    sweeps = 60_000
    values = np.empty(sweeps)
    path = q.paths[rng.choice(q.probs.size, p=q.probs)]
    for i in range(sweeps):
        out = cpf_step(model, config, path, rng, keep_system=False)
        path = out.new_trajectory
        values[i] = h[oracle.path_index(path, 2)]
    estimate = msjd(values)
    jumps = np.diff(values) ** 2
    se = jumps.std(ddof=1) / np.sqrt(jumps.size)  # optimistic for a chain
    assert abs(estimate - exact) < 6 * se


def test_msjd_backward_sampling_not_worse():
    model = demo_finite_hmm()
    q = oracle.brute_force_q(model)
    rng = np.random.default_rng(5)
    h_table = rng.standard_normal(q.probs.size)
    estimates = {}
    errors = {}
    for bs in (False, True):
        config = CpfConfig(2, "multinomial", backward_sampling=bs)
        sweeps = 40_000
        values = np.empty(sweeps)
        path = q.paths[rng.choice(q.probs.size, p=q.probs)]
        for i in range(sweeps):
            out = cpf_step(model, config, path, rng, keep_system=False)
            path = out.new_trajectory
            values[i] = h_table[oracle.path_index(path, 2)]
        estimates[bs] = msjd(values)
        jumps = np.diff(values) ** 2
        errors[bs] = jumps.std(ddof=1) / np.sqrt(jumps.size)
    assert estimates[True] >= estimates[False] - 3 * (errors[True] + errors[False])
