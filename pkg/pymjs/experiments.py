"""
Experiment harness: seeded synthetic sweeps over trajectory length, cluster
count and noise level, perturbation sweeps over the Dirichlet concentration,
and the patrol-robot study.  Replications run in a thread pool and are
collected into a pandas-backed record.
"""
import json
import logging
import os
import time
from collections import OrderedDict, namedtuple
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np
import pandas as pd

from .clustering import clustering_error, misclustering_rate
from .jumpmodel import (simulate, sample_jump_model, robot_model,
                        check_separability)
from .markov import (DistributionVector, build_aggregatable, random_partition,
                     sample_dirichlet_rows, sample_perturbed,
                     stationary_distribution)
from .reduction import reduced_stationary, run_pipeline
from .settings import settings
from .utils import NumericalError, derive_seed


_logger = logging.getLogger(__name__)

SCENARIOS = ('synthetic-sweep', 'perturbation-sweep', 'robot')

METRICS = ('CE', 'MR', 'stationary_l1_diff', 'eta', 'delta_norm')

GRID_COLUMNS = {
    'synthetic-sweep': ['N', 'r', 'noise_max'],
    'perturbation-sweep': ['alpha'],
    'robot': ['N', 'r'],
}

_DEFAULTS = OrderedDict([
    ('scenario', 'synthetic-sweep'),
    ('n', 50),
    ('r', 6),
    ('n_a', 3),
    ('n_c', 2),
    ('noise_max', 0.1),
    ('N', 10 ** 5),
    ('N_grid', [10 ** 5]),
    ('r_grid', [6]),
    ('noise_grid', [0.1]),
    ('alpha_grid', [10.0]),
    ('replications', 100),
    ('rng_seed', 0),
    ('output_dir', 'results'),
    ('K', 0.7),
    ('robot_noise_var', 0.1),
    ('kmeans_restarts', 50),
    ('require_separable', False),
    ('separable_draws', 20),
    ('threads', 1),
    ('timeout', None),
])

_GRIDS = ('N_grid', 'r_grid', 'noise_grid', 'alpha_grid')


class ConfigError(ValueError):
    pass


class ReplicationTimeout(NumericalError):
    pass


def _check_deadline(deadline, stage):
    if time.perf_counter() > deadline:
        raise ReplicationTimeout('timeout before {}'.format(stage))


class ExperimentConfig(object):
    """Experiment parameters; JSON config keys mirror the attribute names.

    Unknown keys, empty grids and invalid values raise ConfigError.
    """
    def __init__(self, **kwargs):
        unknown = sorted(set(kwargs) - set(_DEFAULTS))
        if unknown:
            raise ConfigError('unknown config keys: {}'.format(unknown))
        for key, default in _DEFAULTS.items():
            value = kwargs.get(key, default)
            if isinstance(value, list):
                value = list(value)
            setattr(self, key, value)
        self._validate()

    @classmethod
    def from_dict(cls, dct):
        if not isinstance(dct, dict):
            raise ConfigError('config must be a JSON object')
        return cls(**dct)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                dct = json.load(fh)
        except ValueError as e:
            raise ConfigError('{}: invalid JSON: {}'.format(path, e))
        return cls.from_dict(dct)

    def to_dict(self):
        return OrderedDict((key, getattr(self, key)) for key in _DEFAULTS)

    def replace(self, **kwargs):
        dct = self.to_dict()
        dct.update(kwargs)
        return type(self)(**dct)

    def _check_int(self, key, low):
        value = getattr(self, key)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ConfigError('{} must be an integer, got {!r}'
                              .format(key, value))
        if value < low:
            raise ConfigError('{} must be at least {}'.format(key, low))

    def _validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError('scenario must be one of {}'.format(SCENARIOS))
        for key in ('n', 'r', 'replications', 'N', 'kmeans_restarts',
                    'threads', 'separable_draws'):
            self._check_int(key, 1)
        for key in ('n_a', 'n_c', 'rng_seed'):
            self._check_int(key, 0)
        if self.n_a + self.n_c < 1:
            raise ConfigError('need n_a + n_c >= 1')
        if self.r > self.n:
            raise ConfigError('r must not exceed n')
        for key in _GRIDS:
            grid = getattr(self, key)
            if not isinstance(grid, list) or not grid:
                raise ConfigError('{} must be a nonempty list'.format(key))
        if any(not 1 <= r <= self.n for r in self.r_grid):
            raise ConfigError('r_grid values must lie in [1, n]')
        order = max(self.n_a, self.n_c) + 1
        if any(N < order for N in self.N_grid + [self.N]):
            raise ConfigError('trajectory lengths must be at least {}'
                              .format(order))
        if any(v < 0 for v in self.noise_grid + [self.noise_max]):
            raise ConfigError('noise levels must be nonnegative')
        if any(a <= 0 for a in self.alpha_grid):
            raise ConfigError('alpha_grid values must be positive')
        if not 0 < self.K < 2:
            raise ConfigError('K must lie in (0, 2)')
        if self.robot_noise_var < 0:
            raise ConfigError('robot_noise_var must be nonnegative')
        if self.timeout is not None and not self.timeout > 0:
            raise ConfigError('timeout must be positive')

    def __repr__(self):
        return '<ExperimentConfig {}>'.format(dict(self.to_dict()))


class ExperimentRecord(object):
    """Per-replication rows of one experiment.

    Failed replications stay in ``rows`` with ``failed=True`` and are left
    out of :meth:`means`.
    """
    def __init__(self, config, scenario, rows):
        self.config = config
        self.scenario = scenario
        frame = pd.DataFrame(rows)
        self.rows = frame.sort_values(['grid_index', 'replication']) \
                         .reset_index(drop=True)

    @property
    def grid_columns(self):
        return GRID_COLUMNS[self.scenario]

    @property
    def failed_count(self):
        return int(self.rows['failed'].sum())

    def succeeded(self):
        return self.rows[~self.rows['failed']]

    def means(self):
        """Metric means per grid point over successful replications."""
        ok = self.succeeded()
        cols = self.grid_columns
        grouped = ok.groupby(['grid_index'] + cols, sort=True)
        frame = grouped[list(METRICS)].mean()
        frame['replications'] = grouped.size()
        return frame.reset_index()

    def save(self, path):
        self.rows.to_csv(path, index=False, float_format='%.17g')

    def __repr__(self):
        return '<ExperimentRecord {} rows={} failed={}>'.format(
            self.scenario, len(self.rows), self.failed_count)


#
# Instances
#

Instance = namedtuple('Instance', ['partition', 'P_bar', 'pi0'])


def sample_synthetic_instance(n, r, rng_seed):
    """Uniformly random partition, Dirichlet(1) cluster rows and initial
    distribution.
    """
    partition = random_partition(n, r, derive_seed(rng_seed, 1))
    ones = np.ones(n)
    cluster_rows = sample_dirichlet_rows(ones, r, derive_seed(rng_seed, 2))
    P_bar = build_aggregatable(partition, cluster_rows)
    seed = derive_seed(rng_seed, 3)
    pi0 = DistributionVector(sample_dirichlet_rows(ones, 1, seed)[0])
    return Instance(partition=partition, P_bar=P_bar, pi0=pi0)


def _sample_system(cfg, P, pi0, N, noise_max, seed, deadline):
    """Draw dynamics and simulate; with ``require_separable`` redraw the
    dynamics until the separability condition holds after ``t = 0``.
    """
    draws = cfg.separable_draws if cfg.require_separable else 1
    for attempt in range(draws):
        _check_deadline(deadline, 'dynamics draw {}'.format(attempt))
        model = sample_jump_model(P.n, cfg.n_a, cfg.n_c,
                                  derive_seed(seed, 4, attempt))
        traj = simulate(model, P, pi0, N, noise_max, 'gaussian-unit',
                        derive_seed(seed, 5, attempt))
        if not cfg.require_separable:
            return model, traj
        if check_separability(model, traj, noise_max, start=1).overall:
            return model, traj
    raise NumericalError('no separable dynamics in {} draws'.format(draws))


def _evaluate(cfg, truth, P, model, traj, r, seed, deadline):
    _check_deadline(deadline, 'pipeline')
    result = run_pipeline(model, traj, r,
                          kmeans_options={'restarts': cfg.kmeans_restarts},
                          rng_seed=derive_seed(seed, 6))
    estimate = result.kmeans.partition
    pi = stationary_distribution(P)
    pi_tilde = reduced_stationary(result.reduced)
    return {
        'CE': clustering_error(truth, estimate),
        'MR': misclustering_rate(truth, estimate),
        'stationary_l1_diff': pi.l1_distance(pi_tilde.probs),
        'eta': result.estimate.mistake_rate,
    }


def _synthetic_instance(cfg, params, seed, deadline):
    inst = sample_synthetic_instance(cfg.n, params['r'], seed)
    model, traj = _sample_system(cfg, inst.P_bar, inst.pi0, params['N'],
                                 params['noise_max'], seed, deadline)
    metrics = _evaluate(cfg, inst.partition, inst.P_bar, model, traj,
                        params['r'], seed, deadline)
    metrics['delta_norm'] = 0.0
    return metrics


def _perturbation_instance(cfg, params, seed, deadline):
    inst = sample_synthetic_instance(cfg.n, params['r'], seed)
    pert = sample_perturbed(inst.P_bar, inst.partition, params['alpha'],
                            derive_seed(seed, 7))
    model, traj = _sample_system(cfg, pert.matrix, inst.pi0, params['N'],
                                 params['noise_max'], seed, deadline)
    metrics = _evaluate(cfg, inst.partition, pert.matrix, model, traj,
                        params['r'], seed, deadline)
    metrics['delta_norm'] = pert.delta_norm
    return metrics


def _robot_instance(cfg, params, seed, deadline):
    inst = sample_synthetic_instance(cfg.n, params['r'], seed)
    model = robot_model(cfg.n, np.arange(1, cfg.n + 1), cfg.K)
    _check_deadline(deadline, 'simulation')
    traj = simulate(model, inst.P_bar, inst.pi0, params['N'],
                    params['noise_max'], 'constant-one',
                    derive_seed(seed, 5), noise_kind='gaussian')
    metrics = _evaluate(cfg, inst.partition, inst.P_bar, model, traj,
                        params['r'], seed, deadline)
    metrics['delta_norm'] = 0.0
    return metrics


_INSTANCES = {
    'synthetic-sweep': _synthetic_instance,
    'perturbation-sweep': _perturbation_instance,
    'robot': _robot_instance,
}


def _grid(cfg, scenario):
    nan = float('nan')
    if scenario == 'synthetic-sweep':
        return [{'N': N, 'r': r, 'noise_max': noise, 'alpha': nan}
                for N, r, noise in product(cfg.N_grid, cfg.r_grid,
                                           cfg.noise_grid)]
    elif scenario == 'perturbation-sweep':
        return [{'N': cfg.N, 'r': cfg.r, 'noise_max': cfg.noise_max,
                 'alpha': alpha} for alpha in cfg.alpha_grid]
    else:
        # variance of the Gaussian noise
        return [{'N': cfg.N, 'r': cfg.r,
                 'noise_max': float(np.sqrt(cfg.robot_noise_var)),
                 'alpha': nan}]


def _replicate(cfg, scenario, grid_index, replication, params, timeout):
    seed = derive_seed(cfg.rng_seed, grid_index, replication)
    row = OrderedDict([('grid_index', grid_index),
                       ('replication', replication), ('seed', seed)])
    row.update(params)
    start = time.perf_counter()
    try:
        metrics = _INSTANCES[scenario](cfg, params, seed, start + timeout)
        error = ''
    except ReplicationTimeout as e:
        metrics = {}
        error = str(e)
        _logger.warning('replication %d of grid point %d aborted: %s',
                        replication, grid_index, error)
    except NumericalError as e:
        metrics = {}
        error = '{}: {}'.format(type(e).__name__, e)
        _logger.warning('replication %d of grid point %d failed: %s',
                        replication, grid_index, error)
    elapsed = time.perf_counter() - start
    if not error and elapsed > timeout:
        # the last stage overran; its result is discarded
        metrics = {}
        error = 'timeout after {:.1f}s'.format(elapsed)
        _logger.warning('replication %d of grid point %d: %s', replication,
                        grid_index, error)
    for key in METRICS:
        row[key] = metrics.get(key, float('nan'))
    row['wall_time'] = elapsed
    row['failed'] = bool(error)
    row['error'] = error
    _logger.info('%s grid point %d replication %d done in %.2fs', scenario,
                 grid_index, replication, elapsed)
    return row


def run_experiment(cfg, scenario=None):
    """Run every (grid point, replication) pair of *scenario* (default
    ``cfg.scenario``) and collect the rows.
    """
    scenario = scenario or cfg.scenario
    if scenario not in SCENARIOS:
        raise ConfigError('unknown scenario {!r}'.format(scenario))
    timeout = settings.resolve('experiment', 'timeout', cfg.timeout)
    tasks = [(index, rep, params)
             for index, params in enumerate(_grid(cfg, scenario))
             for rep in range(cfg.replications)]
    _logger.info('%s: %d replications on %d threads', scenario, len(tasks),
                 cfg.threads)
    if cfg.threads == 1:
        rows = [_replicate(cfg, scenario, index, rep, params, timeout)
                for index, rep, params in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(_replicate, cfg, scenario, index, rep,
                                   params, timeout)
                       for index, rep, params in tasks]
            rows = [fut.result() for fut in futures]
    record = ExperimentRecord(cfg, scenario, rows)
    if record.failed_count:
        _logger.warning('%s: %d of %d replications failed', scenario,
                        record.failed_count, len(rows))
    return record


def run_synthetic_sweep(cfg):
    """Sweep ``N x r x noise`` on exactly aggregatable chains."""
    return run_experiment(cfg, 'synthetic-sweep')


def run_perturbation_sweep(cfg):
    """Sweep the Dirichlet concentration of perturbed chains."""
    return run_experiment(cfg, 'perturbation-sweep')


def run_robot(cfg):
    """Patrol robot with stations at ``1..n`` and Gaussian noise of
    variance ``cfg.robot_noise_var``.
    """
    return run_experiment(cfg, 'robot')


_X_COLUMN = {
    'synthetic-sweep': None,
    'perturbation-sweep': 'delta_norm',
    'robot': None,
}

PLOT_METRICS = ('CE', 'stationary_l1_diff')


def emit_plot_data(record, kind, output_dir=None):
    """Write ``<output_dir>/<scenario>_<metric>.csv`` for every plotted
    metric.

    ``kind='line'`` writes one row per grid point (grid columns and the
    metric mean); ``kind='scatter'`` writes one row per successful
    replication (perturbation norm and the raw metric).

    Returns
    -------
    list of str
        The written paths.
    """
    if kind not in ('line', 'scatter'):
        raise ValueError("kind must be 'line' or 'scatter'")
    if len(record.rows) == 0:
        raise ValueError('record is empty')
    output_dir = output_dir or record.config.output_dir
    os.makedirs(output_dir, exist_ok=True)
    paths = []
    for metric in PLOT_METRICS:
        if kind == 'line':
            frame = record.means()[record.grid_columns + [metric]]
        else:
            x = _X_COLUMN[record.scenario] or 'replication'
            frame = record.succeeded()[[x, metric]]
        path = os.path.join(output_dir,
                            '{}_{}.csv'.format(record.scenario, metric))
        frame.to_csv(path, index=False, float_format='%.17g')
        paths.append(path)
    return paths
