import json
import os

import pytest

import numpy as np

from pymjs import cli, io
from pymjs.utils import NumericalError
from . import utils


_SMALL = {'n': 8, 'r': 2, 'r_grid': [2], 'n_a': 2, 'n_c': 1, 'N': 3000,
          'N_grid': [2000], 'noise_grid': [0.0], 'noise_max': 0.0,
          'replications': 2, 'kmeans_restarts': 5}


def _config(tmpdir, **over):
    dct = dict(_SMALL)
    dct.update(over)
    path = tmpdir.join('config.json')
    path.write(json.dumps(dct))
    return str(path)


def _simulated(tmpdir):
    out = str(tmpdir.join('sim'))
    assert cli.main(['simulate', '--config', _config(tmpdir),
                     '--out', out]) == cli.EXIT_OK
    return out


def test_simulate_estimate_cluster_reduce(tmpdir):
    sim = _simulated(tmpdir)
    for name in ('trajectory.csv', 'P.csv', 'pi0.csv', 'partition.csv',
                 'model.csv'):
        assert os.path.exists(os.path.join(sim, name))
    traj, n_a, n_c = io.read_trajectory(os.path.join(sim, 'trajectory.csv'))
    assert (traj.N, n_a, n_c) == (3000, 2, 1)

    args = ['--trajectory', os.path.join(sim, 'trajectory.csv'),
            '--model', os.path.join(sim, 'model.csv')]
    est = str(tmpdir.join('est'))
    assert cli.main(['estimate'] + args + ['--out', est]) == cli.EXIT_OK
    counts = io.read_counts(os.path.join(est, 'counts.csv'))
    assert counts.N == 3000
    P_hat = io.read_matrix(os.path.join(est, 'P_hat.csv'))
    assert P_hat.n == 8

    clu = str(tmpdir.join('clu'))
    assert cli.main(['cluster', '--matrix', os.path.join(est, 'P_hat.csv'),
                     '--r', '2', '--out', clu]) == cli.EXIT_OK
    assert io.read_partition(os.path.join(clu, 'partition.csv')).r == 2

    red = str(tmpdir.join('red'))
    assert cli.main(['reduce'] + args + ['--r', '2', '--out', red]) == \
        cli.EXIT_OK
    reduced = io.read_reduced_model(os.path.join(red, 'reduced'))
    assert (reduced.n, reduced.r) == (8, 2)
    assert reduced.provenance['N'] == 3000


def test_simulate_is_seeded(tmpdir):
    config = _config(tmpdir)
    paths = []
    for name in ('a', 'b'):
        out = str(tmpdir.join(name))
        cli.main(['simulate', '--config', config, '--seed', '5',
                  '--out', out])
        paths.append(os.path.join(out, 'trajectory.csv'))
    with open(paths[0]) as a, open(paths[1]) as b:
        assert a.read() == b.read()


def test_bounds(tmpdir):
    inputs = {
        'mr': {'sigma_r_bar': 0.5, 'sigma_1_bar': 1.0, 'delta_norm': 0.0,
               'pi_min': 0.1, 'pi_max': 0.2, 'tau_star': 5, 'eta': 0.0,
               'eps1': 0.0, 'eps2': 0.01, 'omega_max': 3, 'omega_min': 2,
               'n': 10, 'r': 4, 'N': 100000},
        'p_diff': {'n': 10, 'pi_min': 0.1, 'sigma_1': 1.0, 'eps2': 0.01,
                   'eta': 0.0, 'delta_inf_norm': 0.0, 'mr': 0.0},
    }
    path = tmpdir.join('inputs.json')
    path.write(json.dumps(inputs))
    P = str(tmpdir.join('P.csv'))
    P_tilde = str(tmpdir.join('Pt.csv'))
    io.write_matrix(P, utils.random_chain(4, 0))
    io.write_matrix(P_tilde, utils.random_chain(4, 1))
    out = str(tmpdir.join('bounds'))
    assert cli.main(['bounds', '--inputs', str(path), '--matrix', P,
                     '--approx', P_tilde, '--out', out]) == cli.EXIT_OK
    with open(os.path.join(out, 'bounds.json')) as fh:
        reports = json.load(fh)
    assert [rep['name'] for rep in reports] == [
        'misclustering_rate', 'p_diff', 'stationary_diff']
    np.testing.assert_allclose(reports[1]['value'],
                               12 * np.sqrt(10) / 0.1 * 0.01)
    assert reports[2]['extras']['actual'] <= reports[2]['value'] + 1e-12


@pytest.mark.parametrize('extra', [
    ['--matrix', 'P.csv'],
    [],
])
def test_bounds_usage_errors(tmpdir, extra):
    assert cli.main(['bounds', '--out', str(tmpdir)] + extra) == \
        cli.EXIT_USAGE


@pytest.mark.parametrize('inputs', [
    {'mr': 3},
    {'p_diff': [1.0, 2.0]},
    {'p_diff': None},
    [{'mr': {}}],
    'mr',
    {'p_diff': {'n': 10, 'pi_min': '0.1', 'sigma_1': 1.0, 'eps2': 0.01,
                'eta': 0.0, 'delta_inf_norm': 0.0, 'mr': 0.0}},
])
def test_bounds_malformed_inputs(tmpdir, inputs):
    path = tmpdir.join('inputs.json')
    path.write(json.dumps(inputs))
    out = str(tmpdir.join('bounds'))
    assert cli.main(['bounds', '--inputs', str(path), '--out', out]) == \
        cli.EXIT_USAGE
    assert not os.path.exists(os.path.join(out, 'bounds.json'))


def test_experiment(tmpdir):
    out = str(tmpdir.join('results'))
    assert cli.main(['experiment', '--config', _config(tmpdir),
                     '--out', out, '--threads', '2']) == cli.EXIT_OK
    for name in ('synthetic-sweep_rows.csv', 'synthetic-sweep_CE.csv',
                 'synthetic-sweep_stationary_l1_diff.csv'):
        assert os.path.exists(os.path.join(out, name))


def test_usage_errors(tmpdir):
    assert cli.main([]) == cli.EXIT_USAGE
    assert cli.main(['experiment', '--config',
                     _config(tmpdir, bogus=1)]) == cli.EXIT_USAGE
    assert cli.main(['experiment', '--config',
                     str(tmpdir.join('missing.json'))]) == cli.EXIT_USAGE
    with pytest.raises(SystemExit):
        cli.main(['cluster', '--matrix', 'P.csv'])


def test_numerical_failure(tmpdir, monkeypatch):
    sim = _simulated(tmpdir)

    def failing(*args, **kwargs):
        raise NumericalError('singular')

    monkeypatch.setattr(cli, 'run_pipeline', failing)
    code = cli.main(['reduce',
                     '--trajectory', os.path.join(sim, 'trajectory.csv'),
                     '--model', os.path.join(sim, 'model.csv'),
                     '--r', '2', '--out', str(tmpdir.join('red'))])
    assert code == cli.EXIT_NUMERICAL
