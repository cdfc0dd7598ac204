"""
k-means on the rows of a truncated singular basis, membership matrices and
the two partition-comparison metrics: the misclustering rate (row-normalized
misplacements) and the clustering error (raw misplacements over ``n``).
"""
import logging
import warnings
from collections import namedtuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .markov import Partition
from .settings import settings
from .utils import _ArraySentry, as_float_matrix, make_rng, derive_seed


_logger = logging.getLogger(__name__)


KMeansResult = namedtuple('KMeansResult', ['partition', 'centroids', 'cost',
                                           'restarts_used'])

EpsilonCertificate = namedtuple('EpsilonCertificate',
                                ['epsilon', 'exact', 'optimal_cost'])


def membership_matrix(partition):
    """One-hot ``n x r`` matrix with ``M(i, k) = 1`` iff state ``i`` is in
    cluster ``k``.
    """
    return partition.to_membership()


def partition_from_membership(membership):
    return Partition.from_membership(membership)


#
# Lloyd's iteration with D^2 seeding
#

def _sq_dists(X, centers):
    diff = X[:, None, :] - centers[None, :, :]
    return (diff * diff).sum(axis=2)


def _means(X, labels, r):
    sums = np.zeros((r, X.shape[1]))
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=r)
    return sums / counts[:, None]


def _cost(X, labels, centers):
    diff = X - centers[labels]
    return float((diff * diff).sum())


def _seed_centroids(X, r, rng):
    """Greedy D^2 seeding: every new center is the best of a few
    D^2-weighted candidates by resulting potential.
    """
    n = X.shape[0]
    centers = np.empty((r, X.shape[1]))
    first = rng.integers(n)
    centers[0] = X[first]
    closest = ((X - X[first]) ** 2).sum(axis=1)
    trials = 2 + int(np.log(r))
    for c in range(1, r):
        total = closest.sum()
        if total <= 0:
            # every point sits on a chosen center
            cand = rng.integers(n, size=trials)
        else:
            cand = np.searchsorted(np.cumsum(closest),
                                   rng.random(trials) * total, side='right')
            cand = np.minimum(cand, n - 1)
        dists = _sq_dists(X, X[cand]).T
        pooled = np.minimum(closest[None, :], dists)
        best = int(np.argmin(pooled.sum(axis=1)))
        centers[c] = X[cand[best]]
        closest = pooled[best]
    return centers


def _fill_empty(labels, d2, r):
    """Move the point farthest from its centroid, taken from a cluster with
    more than one member, into each empty cluster.
    """
    n = labels.size
    sizes = np.bincount(labels, minlength=r)
    for empty in np.flatnonzero(sizes == 0):
        own = d2[np.arange(n), labels]
        own = np.where(sizes[labels] > 1, own, -1.0)
        i = int(np.argmax(own))
        sizes[labels[i]] -= 1
        labels[i] = empty
        sizes[empty] = 1
    return labels


def _lloyd(X, r, centers, max_iters, rel_tol):
    prev = np.inf
    labels = None
    cost = np.inf
    for it in range(max_iters):
        d2 = _sq_dists(X, centers)
        labels = _fill_empty(np.argmin(d2, axis=1), d2, r)
        centers = _means(X, labels, r)
        cost = _cost(X, labels, centers)
        assert cost <= prev * (1 + 1e-12) + 1e-12, 'Lloyd cost increased'
        if np.isfinite(prev) and prev - cost <= rel_tol * prev:
            break
        prev = cost
    return labels, centers, cost


def kmeans(points, r, restarts=None, max_iters=None, rel_tol=None,
           rng_seed=0):
    """Best-of-restarts k-means on the rows of *points*.

    Each restart seeds with D^2 sampling from its own derived seed and runs
    Lloyd's iteration until the relative cost decrease drops to *rel_tol*.
    The lowest cost wins; ties go to the earliest restart.

    Parameters
    ----------
    points : array_like
        ``n x d`` matrix, one point per row.
    r : int
        Number of clusters, ``1 <= r <= n``.
    restarts, max_iters, rel_tol : optional
        Default to ``settings.kmeans``.
    rng_seed : int

    Returns
    -------
    KMeansResult
    """
    X = as_float_matrix(points, 'points')
    _ArraySentry(X, 'points').nonempty()
    n = X.shape[0]
    if not 1 <= r <= n:
        raise ValueError('need 1 <= r <= n, got r={} n={}'.format(r, n))
    restarts = settings.resolve('kmeans', 'restarts', restarts)
    max_iters = settings.resolve('kmeans', 'max_iters', max_iters)
    rel_tol = settings.resolve('kmeans', 'rel_tol', rel_tol)
    if restarts < 1:
        raise ValueError('restarts must be at least 1')
    if max_iters < 1:
        raise ValueError('max_iters must be at least 1')

    best = None
    for rep in range(restarts):
        rng = make_rng(derive_seed(rng_seed, rep))
        labels, centers, cost = _lloyd(X, r, _seed_centroids(X, r, rng),
                                       max_iters, rel_tol)
        if best is None or cost < best[2]:
            best = (labels, centers, cost)
    labels, centers, cost = best
    _logger.debug('k-means r=%d over %d restarts: cost %.6g', r, restarts,
                  cost)
    return KMeansResult(partition=Partition(labels, r=r), centroids=centers,
                        cost=cost, restarts_used=restarts)


#
# Partition comparison
#

def _contingency(truth, estimate):
    if truth.n != estimate.n or truth.r != estimate.r:
        msg = 'partitions differ: n={}/{} r={}/{}'
        raise ValueError(msg.format(truth.n, estimate.n, truth.r, estimate.r))
    overlap = np.zeros((truth.r, truth.r), dtype=np.int64)
    np.add.at(overlap, (truth.assignment, estimate.assignment), 1)
    return overlap


def _assignment_minimum(cost):
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def misclustering_rate(truth, estimate):
    """``min_k sum_j |Omega_j minus Omegahat_k(j)| / |Omega_j|`` over
    bijections ``k`` of the cluster labels; lies in ``[0, r]``.
    """
    overlap = _contingency(truth, estimate)
    sizes = truth.sizes[:, None].astype(np.float64)
    return _assignment_minimum((sizes - overlap) / sizes)


def clustering_error(truth, estimate):
    """Fewest misplaced states over label bijections, divided by ``n``."""
    overlap = _contingency(truth, estimate)
    misplaced = truth.sizes[:, None] - overlap
    return _assignment_minimum(misplaced.astype(np.float64)) / truth.n


#
# (1 + eps) certificates
#

def _growth_strings(n, r):
    """Restricted growth strings of length *n* with exactly *r* blocks, one
    per set partition.
    """
    labels = np.zeros(n, dtype=np.int64)

    def extend(i, used):
        if i == n:
            if used == r:
                yield labels.copy()
            return
        if n - i < r - used:
            return
        for k in range(min(used + 1, r)):
            labels[i] = k
            for out in extend(i + 1, max(used, k + 1)):
                yield out

    return extend(1, 1)


def _batched_costs(X, batch, r):
    onehot = (batch[:, :, None] == np.arange(r)).astype(np.float64)
    sums = np.einsum('bnk,nd->bkd', onehot, X)
    counts = onehot.sum(axis=1)
    return (X * X).sum() - ((sums * sums).sum(axis=2) / counts).sum(axis=1)


def _exhaustive_optimum(X, r, batch_size=4096):
    best_cost = np.inf
    best_labels = None
    pending = []

    def flush():
        stack = np.array(pending)
        costs = _batched_costs(X, stack, r)
        i = int(np.argmin(costs))
        del pending[:]
        return costs[i], stack[i]

    for labels in _growth_strings(X.shape[0], r):
        pending.append(labels)
        if len(pending) == batch_size:
            cost, cand = flush()
            if cost < best_cost:
                best_cost, best_labels = cost, cand
    if pending:
        cost, cand = flush()
        if cost < best_cost:
            best_cost, best_labels = cost, cand
    # recompute directly; the batched formula cancels
    return _cost(X, best_labels, _means(X, best_labels, r))


def kmeans_epsilon_certificate(points, result, r, rng_seed=0):
    """Smallest ``eps >= 0`` with ``cost(result) <= (1 + eps) * optimum``.

    For ``n <= settings.kmeans['exact_enumeration_max_n']`` the optimum is
    found by enumerating every set partition into *r* blocks and the
    certificate is exact.  Otherwise the optimum is replaced by the best of
    ``settings.kmeans['certificate_restarts']`` restarts, an upper bound, so
    the certificate is flagged non-exact.

    Returns
    -------
    EpsilonCertificate
    """
    X = as_float_matrix(points, 'points')
    n = X.shape[0]
    if not 1 <= r <= n:
        raise ValueError('need 1 <= r <= n, got r={} n={}'.format(r, n))
    if n <= settings.kmeans['exact_enumeration_max_n']:
        optimum = _exhaustive_optimum(X, r)
        exact = True
    else:
        warnings.warn('n={} is too large for enumeration; certificate is '
                      'relative to the best restart'.format(n))
        restarts = int(settings.kmeans['certificate_restarts'])
        optimum = kmeans(X, r, restarts=restarts, rng_seed=rng_seed).cost
        exact = False
    cost = result.cost
    scale = max((X * X).sum(), 1.0)
    if optimum <= 1e-12 * scale:
        eps = 0.0 if cost <= 1e-12 * scale else np.inf
    elif cost <= optimum * (1 + 1e-12):
        eps = 0.0
    else:
        eps = cost / optimum - 1.0
    return EpsilonCertificate(epsilon=float(eps), exact=exact,
                              optimal_cost=float(optimum))
