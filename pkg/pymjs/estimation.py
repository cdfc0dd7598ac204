"""
Transition counting and empirical estimates from (possibly mistaken) mode
sequences.
"""
from collections import namedtuple

import numpy as np
from numba import njit

from .markov import StochasticMatrix
from .utils import _ArraySentry, readonly


EmpiricalFrequency = namedtuple('EmpiricalFrequency', ['F_hat', 'pi_hat'])

PerturbationStats = namedtuple('PerturbationStats', ['N_prime', 'eta'])


class TransitionCounts(object):
    """Transition-pair counts of a mode sequence.

    ``visit_counts(i)`` counts the steps ``t = 1..N`` with ``X_{t-1} = i``
    and always equals the row sum of ``pair_counts``.  Counts of independent
    sequences merge with ``+``.
    """
    def __init__(self, pair_counts):
        pairs = np.array(pair_counts, dtype=np.int64)
        _ArraySentry(pairs, 'pair_counts').square().nonempty().nonnegative()
        self._pairs = readonly(pairs)
        self._visits = readonly(pairs.sum(axis=1))

    @property
    def n(self):
        return self._pairs.shape[0]

    @property
    def N(self):
        """Number of transition pairs counted."""
        return int(self._visits.sum())

    @property
    def pair_counts(self):
        return self._pairs

    @property
    def visit_counts(self):
        return self._visits

    def __add__(self, other):
        if not isinstance(other, TransitionCounts):
            return NotImplemented
        if other.n != self.n:
            raise ValueError('cannot merge counts over {} and {} states'
                             .format(self.n, other.n))
        return TransitionCounts(self._pairs + other._pairs)

    def __eq__(self, other):
        if not isinstance(other, TransitionCounts):
            return NotImplemented
        return np.array_equal(self._pairs, other._pairs)

    def __ne__(self, other):
        res = self.__eq__(other)
        return res if res is NotImplemented else not res

    __hash__ = None

    def __repr__(self):
        return '<TransitionCounts n={} N={}>'.format(self.n, self.N)


@njit(nogil=True)
def _count_pairs(modes, n):
    out = np.zeros((n, n), dtype=np.int64)
    for t in range(1, modes.size):
        out[modes[t - 1], modes[t]] += 1
    return out


def count_transitions(modes, n):
    """Count the pairs ``(X_{t-1}, X_t)`` for ``t = 1..N``.

    Parameters
    ----------
    modes : array_like of int
        Mode sequence valued in ``[0, n)`` with at least two entries.
    n : int
        Number of states.
    """
    raw = np.asarray(modes)
    seq = raw.astype(np.int64)
    _ArraySentry(seq, 'modes').ndim(1)
    if seq.size < 2:
        raise ValueError('modes: need at least two entries')
    if not np.array_equal(seq, raw):
        raise ValueError('modes: entries must be integers')
    if seq.min() < 0 or seq.max() >= n:
        raise ValueError('modes: entries outside [0, {})'.format(n))
    return TransitionCounts(_count_pairs(seq, n))


def empirical_matrix(counts):
    """``P_hat(i, j) = pair(i, j) / visit(i)``; rows of unvisited states are
    uniform ``1 / n``.
    """
    n = counts.n
    pairs = counts.pair_counts.astype(np.float64)
    visits = counts.visit_counts
    rows = np.full((n, n), 1.0 / n)
    seen = visits > 0
    rows[seen] = pairs[seen] / visits[seen, None]
    return StochasticMatrix(rows)


def empirical_frequency(counts):
    """Pair frequencies ``F_hat = pair / N`` and source frequencies
    ``pi_hat = visit / N``.
    """
    N = counts.N
    if N == 0:
        raise ValueError('counts are empty')
    return EmpiricalFrequency(F_hat=counts.pair_counts / float(N),
                              pi_hat=counts.visit_counts / float(N))


def perturbation_stats(true_modes, est_modes):
    """Mismatches ``N'`` over ``t = 0..N`` and the rate ``eta = N' / N``.

    ``eta`` is not clipped: a sequence wrong at every one of its ``N + 1``
    steps has ``eta = (N + 1) / N``.
    """
    true_modes = np.asarray(true_modes)
    est_modes = np.asarray(est_modes)
    if true_modes.shape != est_modes.shape:
        raise ValueError('mode sequences differ in length: {} != {}'
                         .format(true_modes.size, est_modes.size))
    mistakes = int(np.count_nonzero(true_modes != est_modes))
    N = max(true_modes.size - 1, 1)
    return PerturbationStats(N_prime=mistakes, eta=mistakes / N)
