import itertools

import numpy as np

from pymjs.markov import StochasticMatrix, DistributionVector, Partition


def random_chain(n, seed):
    """Strictly positive (hence ergodic) chain with Dirichlet(1) rows."""
    rng = np.random.RandomState(seed)
    return StochasticMatrix(rng.dirichlet(np.ones(n), size=n))


def random_reversible_chain(n, seed):
    """Random walk on a positive symmetric weight matrix; reversible, so
    its spectrum is real.
    """
    rng = np.random.RandomState(seed)
    weights = rng.random_sample((n, n)) + 0.05
    weights = weights + weights.T
    return StochasticMatrix(weights / weights.sum(axis=1, keepdims=True))


def random_distribution(n, seed):
    rng = np.random.RandomState(seed)
    return DistributionVector(rng.dirichlet(np.ones(n)))


def random_partition_labels(n, r, rng):
    """Surjective labeling of ``n`` states onto ``r`` clusters."""
    labels = np.concatenate([np.arange(r), rng.randint(0, r, size=n - r)])
    rng.shuffle(labels)
    return Partition(labels, r=r)


def eigen_stationary(P):
    """Left Perron eigenvector by a dense eigen-solve."""
    vals, vecs = np.linalg.eig(P.rows.T)
    vec = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    return vec / vec.sum()


def random_orthonormal(n, r, rng):
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return q


def brute_force_mr(truth, estimate):
    best = np.inf
    for perm in itertools.permutations(range(truth.r)):
        total = 0.0
        for j, k in enumerate(perm):
            members = truth.assignment == j
            wrong = np.count_nonzero(estimate.assignment[members] != k)
            total += wrong / float(members.sum())
        best = min(best, total)
    return best


def brute_force_ce(truth, estimate):
    best = np.inf
    for perm in itertools.permutations(range(truth.r)):
        mapped = np.array(perm)[truth.assignment]
        best = min(best, np.count_nonzero(mapped != estimate.assignment))
    return best / float(truth.n)


def kmeans_cost(points, labels, r):
    """Within-cluster sum of squares at the cluster means."""
    points = np.asarray(points, dtype=np.float64)
    cost = 0.0
    for k in range(r):
        members = points[labels == k]
        if len(members):
            cost += ((members - members.mean(axis=0)) ** 2).sum()
    return cost


def exhaustive_kmeans_optimum(points, r):
    """Minimum cost over all surjective labelings; for tiny ``n`` only."""
    n = len(points)
    best = np.inf
    for labels in itertools.product(range(r), repeat=n):
        labels = np.array(labels)
        if np.unique(labels).size == r:
            best = min(best, kmeans_cost(points, labels, r))
    return best
