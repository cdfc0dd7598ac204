"""
Row-stochastic matrices, distributions, partitions and the Markov chain
operations built on them: stationary and transient distributions, mixing
time, spectral summaries, trajectory sampling, and construction or sampling
of aggregatable and perturbed matrices.
"""
import logging
from collections import namedtuple

import numpy as np
from numba import njit

from .settings import settings
from .utils import (NumericalError, _ArraySentry, as_float_matrix,
                    as_float_vector, readonly, make_rng, draw_categorical,
                    spectral_norm)


_logger = logging.getLogger(__name__)


class ConvergenceError(NumericalError):
    def __init__(self, msg, residual, iterations):
        super(ConvergenceError, self).__init__(msg)
        self.residual = residual
        self.iterations = iterations


class MixingTimeError(NumericalError):
    def __init__(self, msg, distance, max_k):
        super(MixingTimeError, self).__init__(msg)
        self.distance = distance
        self.max_k = max_k


class DegeneracyError(NumericalError):
    pass


def _check_stochastic_rows(rows, name, tol):
    _ArraySentry(rows, name).nonempty().nonnegative()
    deviation = np.abs(rows.sum(axis=1) - 1.0).max()
    if deviation > tol:
        msg = '{}: rows must sum to 1 (max deviation {:.3g})'
        raise ValueError(msg.format(name, deviation))


class StochasticMatrix(object):
    """An immutable n x n row-stochastic transition matrix.

    Parameters
    ----------
    rows : array_like
        Square matrix with nonnegative entries and unit row sums.
    tol : float; optional
        Row-sum tolerance.  Defaults to ``settings.tolerance['stochastic']``.
    """
    def __init__(self, rows, tol=None):
        rows = as_float_matrix(rows, 'rows')
        _ArraySentry(rows, 'rows').square()
        tol = settings.resolve('tolerance', 'stochastic', tol)
        _check_stochastic_rows(rows, 'rows', tol)
        self._rows = readonly(rows)

    @classmethod
    def uniform(cls, n):
        return cls(np.full((n, n), 1.0 / n))

    @property
    def rows(self):
        return self._rows

    @property
    def n(self):
        return self._rows.shape[0]

    @property
    def shape(self):
        return self._rows.shape

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.array(self._rows, dtype=dtype, copy=True)

    def __repr__(self):
        return '<StochasticMatrix n={}>'.format(self.n)

    def is_ergodic(self):
        """Whether the chain is irreducible and aperiodic.

        A finite chain is ergodic iff its adjacency matrix is primitive,
        i.e. ``A^k > 0`` for ``k = (n - 1)^2 + 1`` (Wielandt) and for every
        larger power.
        """
        n = self.n
        adj = (self._rows > 0).astype(np.float64)
        target = (n - 1) ** 2 + 1
        power = 1
        while power < target:
            adj = ((adj @ adj) > 0).astype(np.float64)
            power *= 2
        return bool(np.all(adj > 0))

    def stationary(self, tol=None, max_iters=None):
        return stationary_distribution(self, tol=tol, max_iters=max_iters)

    def spectral_summary(self):
        return spectral_summary(self._rows)


class DistributionVector(object):
    """An immutable probability vector over ``n`` states.
    """
    def __init__(self, probs, tol=None):
        probs = as_float_vector(probs, 'probs')
        _ArraySentry(probs, 'probs').nonempty().nonnegative()
        tol = settings.resolve('tolerance', 'stochastic', tol)
        deviation = abs(probs.sum() - 1.0)
        if deviation > tol:
            msg = 'probs: must sum to 1 (deviation {:.3g})'
            raise ValueError(msg.format(deviation))
        self._probs = readonly(probs)

    @classmethod
    def uniform(cls, n):
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n, state):
        probs = np.zeros(n)
        probs[state] = 1.0
        return cls(probs)

    @property
    def probs(self):
        return self._probs

    @property
    def n(self):
        return self._probs.size

    @property
    def pi_max(self):
        return float(self._probs.max())

    @property
    def pi_min(self):
        return float(self._probs.min())

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.array(self._probs, dtype=dtype, copy=True)

    def __repr__(self):
        return '<DistributionVector n={}>'.format(self.n)

    def l1_distance(self, other):
        return float(np.abs(self._probs - np.asarray(other)).sum())


class Partition(object):
    """Assignment of ``n`` states to ``r`` nonempty clusters.

    Parameters
    ----------
    assignment : array_like of int
        Cluster id in ``[0, r)`` of every state.
    r : int; optional
        Number of clusters.  Defaults to ``max(assignment) + 1``.
    """
    def __init__(self, assignment, r=None):
        raw = np.asarray(assignment)
        labels = raw.astype(np.int64)
        _ArraySentry(labels, 'assignment').ndim(1).nonempty()
        if not np.array_equal(labels, raw):
            raise ValueError('assignment: cluster ids must be integers')
        if r is None:
            r = int(labels.max()) + 1
        if labels.min() < 0 or labels.max() >= r:
            raise ValueError('assignment: cluster ids outside [0, {})'
                             .format(r))
        sizes = np.bincount(labels, minlength=r)
        if np.any(sizes == 0):
            empty = np.flatnonzero(sizes == 0).tolist()
            raise ValueError('assignment: empty clusters {}'.format(empty))
        self._labels = readonly(labels)
        self._sizes = readonly(sizes)

    @classmethod
    def from_membership(cls, membership):
        mat = np.asarray(membership)
        _ArraySentry(mat, 'membership').ndim(2).nonempty()
        if not (np.all((mat == 0) | (mat == 1)) and
                np.all(mat.sum(axis=1) == 1)):
            raise ValueError('membership: rows must be one-hot')
        return cls(np.argmax(mat, axis=1), r=mat.shape[1])

    @property
    def assignment(self):
        return self._labels

    @property
    def n(self):
        return self._labels.size

    @property
    def r(self):
        return self._sizes.size

    @property
    def sizes(self):
        """Cardinality of every cluster, indexed by cluster id."""
        return self._sizes

    @property
    def ordered_sizes(self):
        """Cluster cardinalities in descending order."""
        return np.sort(self._sizes)[::-1]

    def clusters(self):
        return [np.flatnonzero(self._labels == k) for k in range(self.r)]

    def to_membership(self):
        """One-hot n x r membership matrix."""
        mat = np.zeros((self.n, self.r), dtype=np.int64)
        mat[np.arange(self.n), self._labels] = 1
        return mat

    def canonical(self):
        """Relabel clusters in order of first appearance."""
        _, first = np.unique(self._labels, return_index=True)
        order = np.argsort(first, kind='mergesort')
        relabel = np.empty(self.r, dtype=np.int64)
        relabel[order] = np.arange(self.r)
        return Partition(relabel[self._labels], r=self.r)

    def same_clusters(self, other):
        """Equality up to relabeling of clusters."""
        return (self.n == other.n and self.r == other.r and
                np.array_equal(self.canonical().assignment,
                               other.canonical().assignment))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.r == other.r and np.array_equal(self._labels,
                                                    other._labels)

    def __ne__(self, other):
        res = self.__eq__(other)
        return res if res is NotImplemented else not res

    __hash__ = None

    def __repr__(self):
        return '<Partition n={} r={} sizes={}>'.format(self.n, self.r,
                                                       self._sizes.tolist())


SpectralSummary = namedtuple('SpectralSummary',
                             ['singular_values', 'eigenvalues'])

TransientEnvelope = namedtuple('TransientEnvelope',
                               ['C', 'rho', 'distances'])

Perturbation = namedtuple('Perturbation', ['matrix', 'delta', 'delta_norm'])


def power_iterate(step, start, tol, max_iters):
    """Iterate ``pi <- step(pi)`` until ``|step(pi) - pi|_1 <= tol``.

    Returns the iterate whose residual met the tolerance, so the fixed-point
    contract holds for the returned vector itself.
    """
    pi = np.array(start, dtype=np.float64)
    residual = np.inf
    for it in range(max_iters):
        nxt = step(pi)
        residual = float(np.abs(nxt - pi).sum())
        if residual <= tol:
            _logger.debug('power method converged after %d iterations '
                          '(residual %.3g)', it, residual)
            return pi
        pi = nxt / nxt.sum()
    msg = 'power method did not converge in {} iterations (residual {:.3g})'
    raise ConvergenceError(msg.format(max_iters, residual), residual,
                           max_iters)


def stationary_distribution(P, tol=None, max_iters=None):
    """Stationary distribution of an ergodic chain by the power method.

    Parameters
    ----------
    P : StochasticMatrix
    tol : float; optional
        Stop once ``|pi P - pi|_1 <= tol``.
    max_iters : int; optional

    Returns
    -------
    DistributionVector

    Raises
    ------
    ConvergenceError
        If the residual is still above *tol* after *max_iters* steps.
    """
    tol = settings.resolve('power', 'tol', tol)
    max_iters = settings.resolve('power', 'max_iters', max_iters)
    if tol <= 0:
        raise ValueError('tol must be positive')
    rows = P.rows
    pi = power_iterate(lambda v: v @ rows, np.full(P.n, 1.0 / P.n), tol,
                       max_iters)
    return DistributionVector(pi / pi.sum())


def transient_distribution(P, pi0, t):
    """``pi0^T P^t`` computed by *t* successive vector-matrix products."""
    if t < 0:
        raise ValueError('t must be nonnegative')
    if pi0.n != P.n:
        raise ValueError('pi0 has {} states, P has {}'.format(pi0.n, P.n))
    pi = pi0.probs.copy()
    rows = P.rows
    for _ in range(t):
        pi = pi @ rows
    return DistributionVector(pi)


def mixing_time(P, eps, max_k=None):
    """Smallest ``k`` with ``max_i TV(P^k(i, :), pi) <= eps``.

    The worst-row total-variation distance is nonincreasing in ``k``, so the
    search combines repeated squaring with a binary descent over the
    precomputed powers ``P^(2^i)``.

    Raises
    ------
    MixingTimeError
        If the distance at ``max_k`` is still above *eps*.
    """
    if not 0 < eps < 1:
        raise ValueError('eps must lie in (0, 1)')
    max_k = settings.resolve('mixing', 'max_k', max_k)
    pi = stationary_distribution(P).probs

    def distance(mat):
        return 0.5 * float(np.abs(mat - pi).sum(axis=1).max())

    powers = [P.rows]
    while 2 ** len(powers) <= max_k:
        powers.append(powers[-1] @ powers[-1])

    # largest k <= max_k whose distance is still above eps
    k = 0
    current = None
    for i in reversed(range(len(powers))):
        step = 2 ** i
        if k + step > max_k:
            continue
        cand = powers[i] if current is None else current @ powers[i]
        if distance(cand) > eps:
            current, k = cand, k + step
    if k == max_k:
        dist = distance(current)
        msg = 'distance {:.3g} > eps={} after {} steps'
        raise MixingTimeError(msg.format(dist, eps, max_k), dist, max_k)
    return k + 1


def fit_geometric_envelope(distances):
    """Fit ``C, rho`` so that ``distances[t] <= C rho^t`` for every ``t``.

    ``rho`` is the exponential of the least-squares slope of
    ``log distances``; ``C`` is then the smallest constant keeping every
    point under the envelope.
    """
    dist = np.asarray(distances, dtype=np.float64)
    steps = np.arange(dist.size)
    mask = dist > 0
    if mask.sum() >= 2:
        slope = np.polyfit(steps[mask], np.log(dist[mask]), 1)[0]
        rho = float(np.clip(np.exp(slope), 1e-12, 1 - 1e-12))
    else:
        rho = 0.5
    if mask.any():
        C = float(np.exp(np.max(np.log(dist[mask]) -
                                steps[mask] * np.log(rho))))
    else:
        C = 0.0
    return C, rho


def fit_transient_envelope(P, pi0, t_max=None):
    """Empirical ``C, rho`` with ``|pi_t - pi|_1 <= C rho^t`` on
    ``t in [0, t_max]``; *t_max* defaults to five times ``tau(1/4)``.
    """
    if t_max is None:
        t_max = 5 * mixing_time(P, 0.25)
    pi = stationary_distribution(P).probs
    dist = np.empty(t_max + 1)
    cur = pi0.probs.copy()
    for t in range(t_max + 1):
        dist[t] = np.abs(cur - pi).sum()
        cur = cur @ P.rows
    C, rho = fit_geometric_envelope(dist)
    return TransientEnvelope(C=C, rho=rho, distances=dist)


@njit(nogil=True)
def _walk_chain(cum0, cum_rows, uniforms):
    out = np.empty(uniforms.size, dtype=np.int64)
    out[0] = draw_categorical(cum0, uniforms[0])
    for t in range(1, uniforms.size):
        out[t] = draw_categorical(cum_rows[out[t - 1]], uniforms[t])
    return out


def sample_trajectory(P, pi0, N, rng_seed):
    """Sample ``X_0..X_N`` with ``X_0 ~ pi0`` and ``X_{t+1} ~ P(X_t, :)``.

    Returns
    -------
    numpy.ndarray of int64 with ``N + 1`` entries.
    """
    if N < 1:
        raise ValueError('N must be at least 1')
    if pi0.n != P.n:
        raise ValueError('pi0 has {} states, P has {}'.format(pi0.n, P.n))
    uniforms = make_rng(rng_seed).random(N + 1)
    cum_rows = np.ascontiguousarray(np.cumsum(P.rows, axis=1))
    return _walk_chain(np.cumsum(pi0.probs), cum_rows, uniforms)


def build_aggregatable(partition, cluster_rows):
    """Expand r cluster rows into the r-aggregatable matrix
    ``Pbar(i, :) = cluster_rows(assignment(i), :)``.

    Raises
    ------
    DegeneracyError
        If ``sigma_r(cluster_rows)`` is at or below the rank tolerance.
    """
    rows = as_float_matrix(cluster_rows, 'cluster_rows')
    _ArraySentry(rows, 'cluster_rows').shape((partition.r, partition.n))
    _check_stochastic_rows(rows, 'cluster_rows',
                           settings.tolerance['stochastic'])
    sigma = np.linalg.svd(rows, compute_uv=False)
    if sigma[partition.r - 1] <= settings.tolerance['rank']:
        msg = 'cluster_rows has rank < r={} (sigma_r={:.3g})'
        raise DegeneracyError(msg.format(partition.r,
                                         sigma[partition.r - 1]))
    return StochasticMatrix(rows[partition.assignment])


def _normalized_gamma(rng, shape_params):
    draws = rng.standard_gamma(shape_params)
    sums = draws.sum(axis=1)
    # shapes far below one can underflow a whole row
    bad = np.flatnonzero(sums <= 0)
    while bad.size:
        draws[bad] = rng.standard_gamma(shape_params[bad])
        sums[bad] = draws[bad].sum(axis=1)
        bad = bad[sums[bad] <= 0]
    return draws / sums[:, None]


def sample_dirichlet_rows(alpha, count, rng_seed):
    """*count* independent Dirichlet(alpha) rows from normalized Gamma
    variates.
    """
    alpha = as_float_vector(alpha, 'alpha')
    if alpha.size == 0 or np.any(alpha <= 0):
        raise ValueError('alpha: all entries must be positive')
    rng = make_rng(rng_seed)
    params = np.broadcast_to(alpha, (count, alpha.size))
    return _normalized_gamma(rng, np.array(params))


def sample_perturbed(P_bar, partition, alpha_scale, rng_seed):
    """Sample ``P(i, :) ~ Dirichlet(alpha_scale * Pbar(Omega_k, :))`` for
    every state ``i`` in cluster ``k``.

    Returns
    -------
    Perturbation
        ``(matrix, delta, delta_norm)`` with ``delta = P - Pbar`` and its
        spectral norm.
    """
    if alpha_scale <= 0:
        raise ValueError('alpha_scale must be positive')
    if partition.n != P_bar.n:
        raise ValueError('partition has {} states, P_bar has {}'
                         .format(partition.n, P_bar.n))
    if np.any(P_bar.rows <= 0):
        raise ValueError('P_bar has zero entries; Dirichlet parameters must '
                         'be positive, smooth P_bar first')
    first = np.array([members[0] for members in partition.clusters()])
    cluster_rows = P_bar.rows[first]
    params = alpha_scale * cluster_rows[partition.assignment]
    rows = _normalized_gamma(make_rng(rng_seed), params)
    matrix = StochasticMatrix(rows)
    delta = rows - P_bar.rows
    return Perturbation(matrix=matrix, delta=delta,
                        delta_norm=spectral_norm(delta))


def spectral_summary(M):
    """Descending singular values and modulus-ordered eigenvalues of *M*.
    """
    mat = as_float_matrix(M, 'M')
    _ArraySentry(mat, 'M').square().nonempty()
    try:
        sigma = np.linalg.svd(mat, compute_uv=False)
        eig = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as e:
        raise NumericalError('spectral decomposition failed: {}'.format(e))
    order = np.argsort(-np.abs(eig), kind='mergesort')
    return SpectralSummary(singular_values=sigma, eigenvalues=eig[order])


def random_partition(n, r, rng_seed, max_draws=None):
    """Uniform partition over labeled surjections ``[n] -> [r]`` by
    rejection of labelings that leave a cluster empty.
    """
    if not 1 <= r <= n:
        raise ValueError('need 1 <= r <= n, got r={} n={}'.format(r, n))
    max_draws = settings.resolve('experiment', 'max_partition_draws',
                                 max_draws)
    rng = make_rng(rng_seed)
    for _ in range(max_draws):
        labels = rng.integers(0, r, size=n)
        if np.unique(labels).size == r:
            return Partition(labels, r=r)
    raise NumericalError('no surjective labeling of {} states onto {} '
                         'clusters in {} draws'.format(n, r, max_draws))
