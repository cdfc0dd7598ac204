"""
Aggregated re-estimation of a transition matrix over estimated clusters, the
factored reduced model with ``O(rn)`` products, calculators for the
stationary, misclustering and matrix-gap bounds, and the end-to-end
reduction pipeline.
"""
import json
import logging
import warnings
from collections import namedtuple

import numpy as np

from .clustering import kmeans
from .estimation import count_transitions, empirical_matrix
from .jumpmodel import estimate_modes
from .markov import (StochasticMatrix, DistributionVector, ConvergenceError,
                     power_iterate, stationary_distribution, mixing_time,
                     spectral_summary, fit_geometric_envelope,
                     _check_stochastic_rows)
from .settings import settings
from .spectral import truncate_svd
from .utils import (_ArraySentry, as_float_matrix, readonly, spectral_norm,
                    inf_norm)


_logger = logging.getLogger(__name__)


PipelineResult = namedtuple('PipelineResult', ['estimate', 'P_hat', 'kmeans',
                                               'reduced', 'counts', 'basis'])


class ReducedModel(object):
    """An r-aggregatable matrix kept in factored form.

    Row ``i`` of the dense expansion is ``cluster_rows[assignment[i]]``.

    Parameters
    ----------
    partition : Partition
    cluster_rows : array_like
        ``r x n`` row-stochastic matrix.
    provenance : dict; optional
        Free-form record of how the model was obtained (``N``, ``eta``,
        ``r``).
    """
    def __init__(self, partition, cluster_rows, provenance=None):
        rows = as_float_matrix(cluster_rows, 'cluster_rows')
        _ArraySentry(rows, 'cluster_rows').shape((partition.r, partition.n))
        _check_stochastic_rows(rows, 'cluster_rows',
                               settings.tolerance['stochastic'])
        self.partition = partition
        self._rows = readonly(rows)
        self._membership = partition.to_membership().astype(np.float64)
        self.provenance = dict(provenance or {})
        self._dense = None

    @property
    def cluster_rows(self):
        return self._rows

    @property
    def n(self):
        return self.partition.n

    @property
    def r(self):
        return self.partition.r

    @property
    def dense(self):
        """The ``n x n`` expansion as a StochasticMatrix."""
        if self._dense is None:
            self._dense = StochasticMatrix(
                self._rows[self.partition.assignment])
        return self._dense

    def step(self, probs):
        """Unchecked ``probs^T Ptilde``: pool by cluster, then multiply the
        length-r vector against the cluster rows.
        """
        return (probs @ self._membership) @ self._rows

    def multiply(self, pi):
        return reduced_multiply(self, pi)

    def stationary(self, tol=None, max_iters=None):
        return reduced_stationary(self, tol=tol, max_iters=max_iters)

    def __repr__(self):
        return '<ReducedModel n={} r={}>'.format(self.n, self.r)


def aggregate_reestimate(counts, partition, eta=None):
    """Pool transition counts within clusters.

    ``cluster_rows[s, j]`` is the number of transitions into ``j`` from
    states of cluster ``s`` over the visits of that cluster.  A cluster that
    is never visited gets the uniform row ``1 / n``.
    """
    n = counts.n
    if partition.n != n:
        raise ValueError('partition has {} states, counts have {}'
                         .format(partition.n, n))
    r = partition.r
    pooled = np.zeros((r, n), dtype=np.int64)
    np.add.at(pooled, partition.assignment, counts.pair_counts)
    visits = pooled.sum(axis=1)
    rows = np.full((r, n), 1.0 / n)
    seen = visits > 0
    rows[seen] = pooled[seen] / visits[seen, None].astype(np.float64)
    if not seen.all():
        _logger.debug('clusters %s never visited; using uniform rows',
                      np.flatnonzero(~seen).tolist())
    provenance = {'N': counts.N, 'eta': eta, 'r': r}
    return ReducedModel(partition, rows, provenance=provenance)


def reduced_multiply(model, pi):
    """``pi^T Ptilde`` in ``O(rn)`` operations."""
    probs = pi.probs if isinstance(pi, DistributionVector) else np.asarray(pi)
    if probs.size != model.n:
        raise ValueError('pi has {} entries, model has {} states'
                         .format(probs.size, model.n))
    return DistributionVector(model.step(probs))


def reduced_stationary(model, tol=None, max_iters=None):
    """Stationary distribution of the dense expansion, by the power method
    over the factored product.
    """
    tol = settings.resolve('power', 'tol', tol)
    max_iters = settings.resolve('power', 'max_iters', max_iters)
    if tol <= 0:
        raise ValueError('tol must be positive')
    start = np.full(model.n, 1.0 / model.n)
    pi = power_iterate(model.step, start, tol, max_iters)
    return DistributionVector(pi / pi.sum())


#
# Bound calculators
#

def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


class BoundReport(object):
    """Value of an error bound with every input that produced it.

    A report is *vacuous* when the value exceeds the trivial cap of the
    bounded metric, and *inapplicable* (``value is None``) when a
    precondition of the bound fails; ``reason`` then says which.
    """
    def __init__(self, name, value, inputs, cap, applicable=True, reason='',
                 extras=None):
        self.name = name
        self.value = None if value is None else float(value)
        self.inputs = dict(inputs)
        self.cap = cap
        self.applicable = bool(applicable)
        self.reason = reason
        self.extras = dict(extras or {})

    @property
    def vacuous(self):
        return self.applicable and self.value > self.cap

    def to_dict(self):
        return _jsonable({
            'name': self.name,
            'value': self.value,
            'cap': self.cap,
            'vacuous': self.vacuous,
            'applicable': self.applicable,
            'reason': self.reason,
            'inputs': self.inputs,
            'extras': self.extras,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def __repr__(self):
        if not self.applicable:
            return '<BoundReport {} inapplicable: {}>'.format(self.name,
                                                             self.reason)
        return '<BoundReport {}={:.6g}{}>'.format(
            self.name, self.value, ' (vacuous)' if self.vacuous else '')


def _try_stationary(P):
    try:
        return stationary_distribution(P).probs
    except ConvergenceError as e:
        _logger.warning('no stationary distribution: %s', e)
        return None


def bound_stationary_diff(P, P_tilde):
    """``|pi - pitilde|_1 <= sum_{i>=2} |1 / (1 - lambda_i(P))|
    |P - Ptilde|_inf``.

    The eigenvalue closest to one is the Perron root and is dropped.  The
    measured ``|pi - pitilde|_1`` is returned in ``extras['actual']``.

    Raises
    ------
    ValueError
        If one is an eigenvalue of *P* more than once.
    """
    if P.n != P_tilde.n:
        raise ValueError('P has {} states, P_tilde has {}'
                         .format(P.n, P_tilde.n))
    eig = spectral_summary(P.rows).eigenvalues
    near_one = np.abs(eig - 1.0) <= 1e-9
    if near_one.sum() > 1:
        raise ValueError('P is not ergodic: eigenvalue 1 has multiplicity {}'
                         .format(int(near_one.sum())))
    rest = np.delete(eig, np.argmin(np.abs(eig - 1.0)))
    kappa = float(np.abs(1.0 / (1.0 - rest)).sum())
    gap = inf_norm(P.rows - P_tilde.rows)
    pi = _try_stationary(P)
    pi_tilde = _try_stationary(P_tilde)
    actual = None
    if pi is not None and pi_tilde is not None:
        actual = float(np.abs(pi - pi_tilde).sum())
    return BoundReport('stationary_diff', kappa * gap,
                       inputs={'kappa': kappa, 'inf_norm_gap': gap,
                               'n': P.n},
                       cap=2.0, extras={'actual': actual})


_MR_KEYS = ('sigma_r_bar', 'sigma_1_bar', 'delta_norm', 'pi_min', 'pi_max',
            'tau_star', 'eta', 'eps1', 'eps2', 'omega_max', 'omega_min', 'n',
            'r', 'N')

_P_DIFF_KEYS = ('n', 'pi_min', 'sigma_1', 'eps2', 'eta', 'delta_inf_norm',
                'mr')


def _gather(keys, inputs, kwargs):
    merged = dict(inputs or {})
    merged.update(kwargs)
    missing = [k for k in keys if k not in merged]
    if missing:
        raise ValueError('missing bound inputs: {}'.format(missing))
    unknown = sorted(set(merged) - set(keys))
    if unknown:
        raise ValueError('unknown bound inputs: {}'.format(unknown))
    return {k: merged[k] for k in keys}


def mr_admissible_delta(sigma_r_bar, eps1, r, omega_min, omega_max):
    """Largest ``|Delta|`` under which the misclustering bound applies."""
    return (sigma_r_bar / (8.0 * np.sqrt((2.0 + eps1) * r)) *
            np.sqrt(omega_min / omega_max + 1.0))


def bound_mr(inputs=None, **kwargs):
    """Misclustering-rate bound

    ``64 (2 + eps1) r (|D| / s_r + 4 (eps2 + 1.5 eta) (|D| + s_1)
    / (pi_min s_r))^2``

    with ``s_r, s_1`` the r-th and first singular values of the aggregatable
    part and ``|D|`` the spectral norm of the perturbation.  Alongside the
    value, ``extras`` carries the effective accuracy ``eps2_tilde``, the
    minimal trajectory length and the probability lower bound at ``N``.

    Inputs are the named scalars ``sigma_r_bar, sigma_1_bar, delta_norm,
    pi_min, pi_max, tau_star, eta, eps1, eps2, omega_max, omega_min, n, r,
    N`` given as a mapping and/or keywords.
    """
    p = _gather(_MR_KEYS, inputs, kwargs)
    for key in ('sigma_r_bar', 'sigma_1_bar', 'pi_min', 'pi_max', 'tau_star',
                'omega_max', 'omega_min', 'n', 'r'):
        if not p[key] > 0:
            raise ValueError('{} must be positive'.format(key))
    for key in ('delta_norm', 'eta', 'eps1', 'eps2', 'N'):
        if p[key] < 0:
            raise ValueError('{} must be nonnegative'.format(key))

    s_r, s_1, delta = p['sigma_r_bar'], p['sigma_1_bar'], p['delta_norm']
    pi_min, eta = p['pi_min'], p['eta']
    admissible = mr_admissible_delta(s_r, p['eps1'], p['r'], p['omega_min'],
                                     p['omega_max'])
    extras = {'admissible_delta': float(admissible)}
    if delta > admissible:
        reason = ('perturbation norm {:.3g} exceeds the admissible {:.3g}'
                  .format(delta, admissible))
        return BoundReport('misclustering_rate', None, p, cap=p['r'],
                           applicable=False, reason=reason, extras=extras)
    if eta >= pi_min / 2:
        reason = 'mistake rate {:.3g} is not below pi_min / 2 = {:.3g}'.format(
            eta, pi_min / 2)
        return BoundReport('misclustering_rate', None, p, cap=p['r'],
                           applicable=False, reason=reason, extras=extras)

    inner = (delta / s_r +
             4.0 * (p['eps2'] + 1.5 * eta) * (delta + s_1) / (pi_min * s_r))
    value = 64.0 * (2.0 + p['eps1']) * p['r'] * inner ** 2

    eps2_tilde = min(p['eps2'], pi_min / 2 - eta,
                     pi_min / (4.0 * (s_1 + delta)) * (admissible - delta))
    extras['eps2_tilde'] = float(eps2_tilde)
    if 0 < eps2_tilde < 1:
        log_inv = np.log(1.0 / eps2_tilde)
        scale = 200.0 * p['tau_star'] * p['pi_max'] * log_inv / eps2_tilde**2
        min_N = scale * (np.log(24.0 * p['n'] * p['tau_star']) +
                         np.log(log_inv))
        extras['min_N'] = float(min_N)
        extras['probability'] = float(1.0 - np.exp(-p['N'] / scale))
        extras['sample_size_ok'] = bool(p['N'] >= min_N)
    else:
        extras['min_N'] = None
        extras['probability'] = None
        extras['sample_size_ok'] = None
    return BoundReport('misclustering_rate', value, p, cap=p['r'],
                       extras=extras)


def bound_p_diff(inputs=None, **kwargs):
    """``|P - Ptilde|_inf <= 12 sqrt(n) / pi_min sigma_1(P) (eps2 + 1.5 eta)
    + 2 |Delta|_inf``, valid when the clusters were recovered exactly
    (``mr == 0``).

    Inputs: ``n, pi_min, sigma_1, eps2, eta, delta_inf_norm, mr``.
    """
    p = _gather(_P_DIFF_KEYS, inputs, kwargs)
    if not p['pi_min'] > 0:
        raise ValueError('pi_min must be positive')
    if p['mr'] != 0:
        return BoundReport('p_diff', None, p, cap=2.0, applicable=False,
                           reason='clusters were not recovered exactly '
                                  '(mr={:.3g})'.format(p['mr']))
    if p['eta'] >= p['pi_min'] / 2:
        return BoundReport('p_diff', None, p, cap=2.0, applicable=False,
                           reason='mistake rate is not below pi_min / 2')
    value = (12.0 * np.sqrt(p['n']) / p['pi_min'] * p['sigma_1'] *
             (p['eps2'] + 1.5 * p['eta']) + 2.0 * p['delta_inf_norm'])
    return BoundReport('p_diff', value, p, cap=2.0)


def backsolve_eps2(P_hat, P, pi_min, eta):
    """Accuracy parameter implied by a measured ``|Phat - P|``:
    ``|Phat - P| pi_min / (4 sigma_1(P)) - 1.5 eta``, floored at zero.
    """
    gap = spectral_norm(P_hat.rows - P.rows)
    sigma_1 = spectral_norm(P.rows)
    return max(0.0, gap * pi_min / (4.0 * sigma_1) - 1.5 * eta)


def bound_transient_diff(P, P_tilde, pi0, t, t_max=None):
    """``|pi_t - pitilde_t|_1 <= C rho^t + |pi - pitilde|_1`` where ``C,
    rho`` envelope ``|pi_s - pi|_1 + |pitilde_s - pitilde|_1`` over
    ``s in [0, t_max]``.
    """
    if t < 0:
        raise ValueError('t must be nonnegative')
    if t_max is None:
        t_max = max(t, 5 * max(mixing_time(P, 0.25),
                               mixing_time(P_tilde, 0.25)))
    if t_max < t:
        raise ValueError('t_max must be at least t')
    pi = stationary_distribution(P).probs
    pi_t = stationary_distribution(P_tilde).probs
    dist = np.empty(t_max + 1)
    cur = pi0.probs.copy()
    cur_t = pi0.probs.copy()
    at_t = None
    for s in range(t_max + 1):
        dist[s] = np.abs(cur - pi).sum() + np.abs(cur_t - pi_t).sum()
        if s == t:
            at_t = float(np.abs(cur - cur_t).sum())
        cur = cur @ P.rows
        cur_t = cur_t @ P_tilde.rows
    C, rho = fit_geometric_envelope(dist)
    stationary_gap = float(np.abs(pi - pi_t).sum())
    value = C * rho ** t + stationary_gap
    return BoundReport('transient_diff', value,
                       inputs={'C': C, 'rho': rho, 't': t, 't_max': t_max,
                               'stationary_l1_diff': stationary_gap},
                       cap=2.0, extras={'actual': at_t})


def collect_bound_inputs(P, P_bar, partition, eta, N, eps1=0.0, eps2=0.0,
                         estimated_clusters=False):
    """Named scalars of :func:`bound_mr` measured on an instance.

    Cluster sizes come from *partition*; pass ``estimated_clusters=True``
    when it is an estimate, which is flagged with a warning.
    """
    if estimated_clusters:
        warnings.warn('cluster sizes taken from estimated clusters')
    sigma = spectral_summary(P_bar.rows).singular_values
    r = partition.r
    pi = stationary_distribution(P).probs
    return {
        'sigma_r_bar': float(sigma[r - 1]),
        'sigma_1_bar': float(sigma[0]),
        'delta_norm': spectral_norm(P.rows - P_bar.rows),
        'pi_min': float(pi.min()),
        'pi_max': float(pi.max()),
        'tau_star': mixing_time(P, 0.25),
        'eta': float(eta),
        'eps1': float(eps1),
        'eps2': float(eps2),
        'omega_max': int(partition.sizes.max()),
        'omega_min': int(partition.sizes.min()),
        'n': partition.n,
        'r': r,
        'N': int(N),
    }


#
# End to end
#

def run_pipeline(model, traj, r, kmeans_options=None, rng_seed=0):
    """Estimate modes, count transitions, form the empirical matrix, embed
    states by its leading left singular vectors, cluster them with k-means
    and re-estimate over the clusters.

    Parameters
    ----------
    model : JumpModel
    traj : Trajectory
    r : int
        Number of clusters.
    kmeans_options : dict; optional
        Keyword arguments forwarded to :func:`pymjs.clustering.kmeans`.
    rng_seed : int

    Returns
    -------
    PipelineResult
    """
    if traj.N < model.order + 1:
        raise ValueError('trajectory too short: N={} < {}'
                         .format(traj.N, model.order + 1))
    if not 1 <= r <= model.n:
        raise ValueError('need 1 <= r <= n, got r={} n={}'
                         .format(r, model.n))
    estimate = estimate_modes(model, traj)
    counts = count_transitions(estimate.modes, model.n)
    P_hat = empirical_matrix(counts)
    basis = truncate_svd(P_hat.rows, r)
    km = kmeans(basis.left, r, rng_seed=rng_seed, **(kmeans_options or {}))
    reduced = aggregate_reestimate(counts, km.partition,
                                   eta=estimate.mistake_rate)
    _logger.debug('pipeline n=%d r=%d N=%d: k-means cost %.3g', model.n, r,
                  traj.N, km.cost)
    return PipelineResult(estimate=estimate, P_hat=P_hat, kmeans=km,
                          reduced=reduced, counts=counts, basis=basis)
