import pytest

import numpy as np

from pymjs.markov import (StochasticMatrix, DistributionVector, Partition,
                          ConvergenceError, MixingTimeError, DegeneracyError,
                          stationary_distribution, transient_distribution,
                          mixing_time, sample_trajectory, build_aggregatable,
                          sample_dirichlet_rows, sample_perturbed,
                          spectral_summary, random_partition,
                          fit_transient_envelope)
from pymjs.utils import ArraySentryError
from . import utils


TWO_STATE = [[0.9, 0.1], [0.2, 0.8]]


def test_stochastic_matrix_validation():
    with pytest.raises(ValueError):
        StochasticMatrix([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(ArraySentryError):
        StochasticMatrix([[1.2, -0.2], [0.5, 0.5]])
    with pytest.raises(ArraySentryError):
        StochasticMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    P = StochasticMatrix(TWO_STATE)
    assert P.n == 2
    with pytest.raises(ValueError):
        P.rows[0, 0] = 1.0


def test_is_ergodic():
    assert StochasticMatrix(TWO_STATE).is_ergodic()
    assert not StochasticMatrix([[0, 1], [1, 0]]).is_ergodic()
    assert not StochasticMatrix([[1, 0], [0.5, 0.5]]).is_ergodic()
    # periodic-looking support made aperiodic by one self-loop
    assert StochasticMatrix([[0, 1, 0], [0, 0, 1],
                             [0.5, 0, 0.5]]).is_ergodic()


@pytest.mark.parametrize('rows,expect', [
    ([[0.5, 0.5], [0.5, 0.5]], [0.5, 0.5]),
    (TWO_STATE, [2 / 3, 1 / 3]),
])
def test_stationary_closed_form(rows, expect):
    pi = stationary_distribution(StochasticMatrix(rows))
    np.testing.assert_allclose(pi.probs, expect, atol=1e-8)


@pytest.mark.parametrize('seed', range(100))
def test_stationary_matches_eigen_solve(seed):
    P = utils.random_chain(8, seed)
    pi = stationary_distribution(P)
    np.testing.assert_allclose(pi.probs, utils.eigen_stationary(P),
                               atol=1e-8)
    assert np.abs(pi.probs @ P.rows - pi.probs).sum() <= 1e-10


def test_stationary_convergence_error():
    with pytest.raises(ConvergenceError) as raises:
        stationary_distribution(StochasticMatrix(TWO_STATE), tol=1e-12,
                                max_iters=2)
    assert raises.value.residual > 1e-12
    with pytest.raises(ValueError):
        stationary_distribution(StochasticMatrix(TWO_STATE), tol=0)


def test_transient_distribution():
    P = StochasticMatrix([[0, 1], [1, 0]])
    pi0 = DistributionVector.point_mass(2, 0)
    np.testing.assert_array_equal(transient_distribution(P, pi0, 0).probs,
                                  [1, 0])
    np.testing.assert_array_equal(transient_distribution(P, pi0, 3).probs,
                                  [0, 1])

    P = utils.random_chain(6, 1)
    pi0 = utils.random_distribution(6, 2)
    expect = pi0.probs
    for _ in range(5):
        expect = expect @ P.rows
    np.testing.assert_allclose(transient_distribution(P, pi0, 5).probs,
                               expect, rtol=1e-14)


def _brute_mixing_time(P, eps):
    pi = utils.eigen_stationary(P)
    k = 1
    power = P.rows.copy()
    while 0.5 * np.abs(power - pi).sum(axis=1).max() > eps:
        power = power @ P.rows
        k += 1
    return k


def test_mixing_time():
    P = StochasticMatrix(np.tile([0.2, 0.3, 0.5], (3, 1)))
    assert mixing_time(P, 0.25) == 1
    assert mixing_time(P, 0.01) == 1

    P = StochasticMatrix(TWO_STATE)
    for eps in (0.25, 0.1, 0.01, 1e-4):
        assert mixing_time(P, eps) == _brute_mixing_time(P, eps)


@pytest.mark.parametrize('seed', range(5))
def test_mixing_time_monotone_in_eps(seed):
    P = utils.random_reversible_chain(6, seed)
    grid = [0.5, 0.25, 0.1, 0.01, 1e-3, 1e-5]
    times = [mixing_time(P, eps) for eps in grid]
    assert times == sorted(times)
    assert times == [_brute_mixing_time(P, eps) for eps in grid]


@pytest.mark.parametrize('seed', range(10))
@pytest.mark.parametrize('delta', [0.1, 0.2, 0.3, 0.45])
def test_mixing_time_chains_from_coarser_accuracy(seed, delta):
    P = utils.random_reversible_chain(6, seed)
    tau_delta = mixing_time(P, delta)
    for eps in (0.1, 0.05, 0.01, 1e-3):
        if eps > delta:
            continue
        blocks = np.ceil(np.log(eps / delta) / np.log(2 * delta)) + 1
        assert mixing_time(P, eps) <= tau_delta * blocks


def test_mixing_time_errors():
    slow = StochasticMatrix([[0.999, 0.001], [0.001, 0.999]])
    with pytest.raises(MixingTimeError) as raises:
        mixing_time(slow, 0.01, max_k=10)
    assert raises.value.distance > 0.01
    with pytest.raises(ValueError):
        mixing_time(slow, 1.5)


def test_transient_envelope():
    P = utils.random_chain(5, 3)
    pi0 = DistributionVector.point_mass(5, 0)
    env = fit_transient_envelope(P, pi0)
    t = np.arange(env.distances.size)
    assert 0 < env.rho < 1
    assert np.all(env.distances <= env.C * env.rho ** t * (1 + 1e-9))


def test_sample_trajectory():
    P = StochasticMatrix([[0, 1], [1, 0]])
    modes = sample_trajectory(P, DistributionVector.point_mass(2, 0), 7, 0)
    np.testing.assert_array_equal(modes, [0, 1] * 4)

    P = StochasticMatrix(TWO_STATE)
    pi0 = DistributionVector.uniform(2)
    a = sample_trajectory(P, pi0, 1000, 42)
    b = sample_trajectory(P, pi0, 1000, 42)
    np.testing.assert_array_equal(a, b)
    assert a.size == 1001
    with pytest.raises(ValueError):
        sample_trajectory(P, pi0, 0, 42)


def test_sample_trajectory_pair_frequencies():
    P = utils.random_chain(4, 7)
    pi = utils.eigen_stationary(P)
    modes = sample_trajectory(P, DistributionVector(pi), 10 ** 5, 3)
    freq = np.zeros((4, 4))
    np.add.at(freq, (modes[:-1], modes[1:]), 1)
    freq /= modes.size - 1
    np.testing.assert_allclose(freq, pi[:, None] * P.rows, atol=0.02)


def test_build_aggregatable():
    rows = np.array([[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1]])
    partition = Partition([0, 0, 1, 1])
    P_bar = build_aggregatable(partition, rows)
    np.testing.assert_array_equal(P_bar.rows, rows[[0, 0, 1, 1]])

    square = utils.random_chain(4, 0).rows
    identity = Partition(np.arange(4))
    np.testing.assert_array_equal(build_aggregatable(identity, square).rows,
                                  square)

    with pytest.raises(DegeneracyError):
        build_aggregatable(partition, rows[[0, 0]])


@pytest.mark.parametrize('seed', range(10))
def test_build_aggregatable_rank(seed):
    rng = np.random.RandomState(seed)
    n, r = 12, 3
    partition = utils.random_partition_labels(n, r, rng)
    rows = rng.dirichlet(np.ones(n), size=r)
    P_bar = build_aggregatable(partition, rows)
    sigma = spectral_summary(P_bar.rows).singular_values
    assert sigma[r] <= 1e-9
    assert sigma[r - 1] > 1e-9
    assert len(np.unique(P_bar.rows, axis=0)) == r


def test_sample_dirichlet_rows():
    draws = sample_dirichlet_rows(np.ones(5), 10 ** 4, 0)
    np.testing.assert_allclose(draws.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(draws.mean(axis=0), 0.2, atol=0.02)

    alpha = np.array([1.0, 2.0, 3.0, 4.0])
    draws = sample_dirichlet_rows(alpha * 1e4, 100, 1)
    assert np.abs(draws - alpha / alpha.sum()).max() < 0.05

    np.testing.assert_array_equal(sample_dirichlet_rows([1.0], 3, 2),
                                  [[1.0], [1.0], [1.0]])
    with pytest.raises(ValueError):
        sample_dirichlet_rows([1.0, 0.0], 3, 2)


def _instance(n, r, seed):
    rng = np.random.RandomState(seed)
    partition = utils.random_partition_labels(n, r, rng)
    rows = rng.dirichlet(np.ones(n), size=r)
    return partition, build_aggregatable(partition, rows)


def test_sample_perturbed_concentrates():
    partition, P_bar = _instance(50, 6, 0)
    pert = sample_perturbed(P_bar, partition, 1e6, 1)
    assert pert.delta_norm < 0.01
    np.testing.assert_allclose(pert.matrix.rows.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(pert.delta, pert.matrix.rows - P_bar.rows)


def test_sample_perturbed_is_unbiased():
    partition, P_bar = _instance(5, 2, 1)
    total = np.zeros((5, 5))
    for seed in range(1000):
        total += sample_perturbed(P_bar, partition, 50.0, seed).delta
    np.testing.assert_allclose(total / 1000, 0.0, atol=0.01)


def test_sample_perturbed_rejects_zeros():
    partition = Partition([0, 1])
    P_bar = StochasticMatrix([[1.0, 0.0], [0.5, 0.5]])
    with pytest.raises(ValueError):
        sample_perturbed(P_bar, partition, 10.0, 0)
    partition, P_bar = _instance(4, 2, 0)
    with pytest.raises(ValueError):
        sample_perturbed(P_bar, partition, 0.0, 0)


def test_spectral_summary():
    summary = spectral_summary(np.eye(3))
    np.testing.assert_allclose(summary.singular_values, [1, 1, 1])
    np.testing.assert_allclose(summary.eigenvalues, [1, 1, 1])

    P = utils.random_chain(7, 4)
    summary = P.spectral_summary()
    assert abs(np.abs(summary.eigenvalues).max() - 1) <= 1e-9
    assert abs(summary.eigenvalues[0] - 1) <= 1e-9
    assert np.all(np.diff(summary.singular_values) <= 0)


def test_partition_queries():
    part = Partition([2, 0, 2, 1, 2])
    assert part.r == 3
    np.testing.assert_array_equal(part.sizes, [1, 1, 3])
    np.testing.assert_array_equal(part.ordered_sizes, [3, 1, 1])
    np.testing.assert_array_equal(part.canonical().assignment,
                                  [0, 1, 0, 2, 0])
    assert part.same_clusters(Partition([0, 2, 0, 1, 0]))
    assert part != Partition([0, 2, 0, 1, 0])
    member = part.to_membership()
    np.testing.assert_array_equal(member.sum(axis=0), part.sizes)
    assert Partition.from_membership(member) == part
    with pytest.raises(ValueError):
        Partition([0, 0, 2])
    with pytest.raises(ValueError):
        Partition([0, 1], r=3)
    with pytest.raises(ValueError):
        Partition([0.5, 1])


def test_random_partition():
    part = random_partition(20, 6, 0)
    assert part.r == 6 and part.n == 20
    assert random_partition(20, 6, 0) == part
    assert random_partition(5, 5, 1).sizes.tolist() == [1] * 5
    with pytest.raises(ValueError):
        random_partition(3, 4, 0)
