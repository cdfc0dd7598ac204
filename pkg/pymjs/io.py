"""
CSV and JSON readers and writers.

Matrix-like files start with one header line ``# <kind> key=value ...``
followed by comma-separated rows.  Mode and cluster ids are 0-based.
"""
import io
import json
import os
import warnings

import numpy as np
import pandas as pd

from .estimation import TransitionCounts
from .jumpmodel import JumpModel, Trajectory
from .markov import StochasticMatrix, DistributionVector, Partition
from .reduction import ReducedModel
from .settings import settings


_FLOAT_FORMAT = '%.17g'


class FileFormatError(ValueError):
    pass


def _format_header(kind, **fields):
    parts = ['# {}'.format(kind)]
    parts.extend('{}={}'.format(k, v) for k, v in fields.items())
    return ' '.join(parts) + '\n'


def _parse_header(line, kind, keys):
    tokens = line.strip().split()
    if len(tokens) < 2 or tokens[0] != '#' or tokens[1] != kind:
        raise FileFormatError('expected a "# {}" header, got {!r}'
                              .format(kind, line.strip()))
    fields = {}
    for token in tokens[2:]:
        key, sep, value = token.partition('=')
        if not sep:
            raise FileFormatError('malformed header field {!r}'.format(token))
        try:
            fields[key] = int(value)
        except ValueError:
            raise FileFormatError('header field {} is not an integer: {!r}'
                                  .format(key, value))
    missing = [k for k in keys if k not in fields]
    if missing:
        raise FileFormatError('header lacks {}'.format(missing))
    return fields


def _read_table(path, kind, keys, dtype=np.float64):
    with open(path, 'r') as fh:
        header = _parse_header(fh.readline(), kind, keys)
        body = fh.read()
    if not body.strip():
        return header, np.zeros((0, 0), dtype=dtype)
    try:
        frame = pd.read_csv(io.StringIO(body), header=None, dtype=dtype)
    except (ValueError, pd.errors.ParserError) as e:
        raise FileFormatError('{}: {}'.format(path, e))
    return header, frame.values


def _write_table(path, header, values):
    with open(path, 'w', newline='') as fh:
        fh.write(header)
        pd.DataFrame(np.atleast_2d(values)).to_csv(
            fh, header=False, index=False, float_format=_FLOAT_FORMAT)


def _repair_rows(rows, path):
    """Renormalize rows whose sums are off by less than the repair
    tolerance; reject anything worse.
    """
    if np.any(rows < 0):
        raise FileFormatError('{}: negative probabilities'.format(path))
    sums = rows.sum(axis=1)
    deviation = np.abs(sums - 1.0)
    if deviation.max() <= settings.tolerance['stochastic']:
        return rows
    if deviation.max() >= settings.tolerance['repair']:
        raise FileFormatError('{}: row sums deviate from 1 by up to {:.3g}'
                              .format(path, deviation.max()))
    warnings.warn('{}: renormalized rows {}'.format(
        path, np.flatnonzero(deviation > settings.tolerance['stochastic'])
        .tolist()))
    return rows / sums[:, None]


#
# Stochastic matrices and distributions
#

def write_matrix(path, P):
    _write_table(path, _format_header('stochastic', n=P.n), P.rows)


def read_matrix(path):
    """Read a ``# stochastic n=<n>`` file into a StochasticMatrix."""
    header, rows = _read_table(path, 'stochastic', ['n'])
    n = header['n']
    if rows.shape != (n, n):
        raise FileFormatError('{}: expected {}x{} entries, got {}'
                              .format(path, n, n, rows.shape))
    return StochasticMatrix(_repair_rows(rows, path))


def write_distribution(path, pi):
    with open(path, 'w', newline='') as fh:
        pd.DataFrame([pi.probs]).to_csv(fh, header=False, index=False,
                                        float_format=_FLOAT_FORMAT)


def read_distribution(path):
    try:
        frame = pd.read_csv(path, header=None, dtype=np.float64)
    except (ValueError, pd.errors.ParserError,
            pd.errors.EmptyDataError) as e:
        raise FileFormatError('{}: {}'.format(path, e))
    if frame.shape[0] != 1:
        raise FileFormatError('{}: expected a single line'.format(path))
    probs = _repair_rows(frame.values, path)[0]
    return DistributionVector(probs)


#
# Trajectories
#

def write_trajectory(path, traj, n_a, n_c):
    """Columns ``t,y,u`` plus ``mode`` when ground truth is known."""
    frame = pd.DataFrame({'t': np.arange(traj.N + 1), 'y': traj.y,
                          'u': traj.u})
    if traj.modes is not None:
        frame['mode'] = traj.modes
    with open(path, 'w', newline='') as fh:
        fh.write(_format_header('trajectory', N=traj.N, n_a=n_a, n_c=n_c))
        frame.to_csv(fh, index=False, float_format=_FLOAT_FORMAT)


def read_trajectory(path):
    """Returns ``(trajectory, n_a, n_c)``; the pre-history is zero."""
    with open(path, 'r') as fh:
        header = _parse_header(fh.readline(), 'trajectory',
                               ['N', 'n_a', 'n_c'])
        try:
            frame = pd.read_csv(fh)
        except (ValueError, pd.errors.ParserError,
                pd.errors.EmptyDataError) as e:
            raise FileFormatError('{}: {}'.format(path, e))
    missing = {'t', 'y', 'u'} - set(frame.columns)
    if missing:
        raise FileFormatError('{}: missing columns {}'
                              .format(path, sorted(missing)))
    if len(frame) != header['N'] + 1:
        raise FileFormatError('{}: header says N={}, found {} samples'
                              .format(path, header['N'], len(frame)))
    if not np.array_equal(frame['t'].values, np.arange(len(frame))):
        raise FileFormatError('{}: t must run 0..N'.format(path))
    modes = frame['mode'].values if 'mode' in frame.columns else None
    traj = Trajectory(frame['y'].values, frame['u'].values, modes=modes)
    return traj, header['n_a'], header['n_c']


def write_modes(path, modes):
    pd.DataFrame({'t': np.arange(len(modes)), 'mode': modes}).to_csv(
        path, index=False)


#
# Counts and partitions
#

def write_counts(path, counts):
    _write_table(path, _format_header('counts', n=counts.n, N=counts.N),
                 counts.pair_counts)


def read_counts(path):
    header, pairs = _read_table(path, 'counts', ['n', 'N'], dtype=np.int64)
    n = header['n']
    if pairs.shape != (n, n):
        raise FileFormatError('{}: expected {}x{} entries, got {}'
                              .format(path, n, n, pairs.shape))
    counts = TransitionCounts(pairs)
    if counts.N != header['N']:
        raise FileFormatError('{}: header says N={}, counts sum to {}'
                              .format(path, header['N'], counts.N))
    return counts


def write_partition(path, partition):
    _write_table(path, _format_header('partition', n=partition.n,
                                      r=partition.r),
                 partition.assignment[None, :])


def read_partition(path):
    header, labels = _read_table(path, 'partition', ['n', 'r'],
                                 dtype=np.int64)
    if labels.shape != (1, header['n']):
        raise FileFormatError('{}: expected one line of {} ids'
                              .format(path, header['n']))
    try:
        return Partition(labels[0], r=header['r'])
    except ValueError as e:
        raise FileFormatError('{}: {}'.format(path, e))


#
# Models and reports
#

def write_jump_model(path, model):
    _write_table(path, _format_header('jumpmodel', n=model.n, n_a=model.n_a,
                                      n_c=model.n_c), model.w)


def read_jump_model(path):
    header, w = _read_table(path, 'jumpmodel', ['n', 'n_a', 'n_c'])
    expected = (header['n'], header['n_a'] + header['n_c'])
    if w.shape != expected:
        raise FileFormatError('{}: expected {} entries, got {}'
                              .format(path, expected, w.shape))
    return JumpModel(w, header['n_a'], header['n_c'])


def write_reduced_model(directory, model):
    """``partition.csv`` and ``cluster_rows.csv`` under *directory*."""
    os.makedirs(directory, exist_ok=True)
    write_partition(os.path.join(directory, 'partition.csv'), model.partition)
    _write_table(os.path.join(directory, 'cluster_rows.csv'),
                 _format_header('cluster_rows', r=model.r, n=model.n),
                 model.cluster_rows)
    with open(os.path.join(directory, 'provenance.json'), 'w') as fh:
        json.dump(model.provenance, fh, indent=2, sort_keys=True)


def read_reduced_model(directory):
    partition = read_partition(os.path.join(directory, 'partition.csv'))
    path = os.path.join(directory, 'cluster_rows.csv')
    header, rows = _read_table(path, 'cluster_rows', ['r', 'n'])
    if rows.shape != (header['r'], header['n']):
        raise FileFormatError('{}: expected {}x{} entries, got {}'
                              .format(path, header['r'], header['n'],
                                      rows.shape))
    provenance = {}
    prov_path = os.path.join(directory, 'provenance.json')
    if os.path.exists(prov_path):
        with open(prov_path) as fh:
            provenance = json.load(fh)
    return ReducedModel(partition, _repair_rows(rows, path),
                        provenance=provenance)


def write_bound_report(path, report):
    with open(path, 'w') as fh:
        fh.write(report.to_json())
        fh.write('\n')


def write_bound_reports(path, reports):
    with open(path, 'w') as fh:
        json.dump([rep.to_dict() for rep in reports], fh, indent=2,
                  sort_keys=True)
        fh.write('\n')
