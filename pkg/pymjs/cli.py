"""
Command line front end::

    pymjs [-v] <command> [--config JSON] [--seed S] [--out DIR] [--threads K]

Exit status is 0 on success, 2 on configuration, argument or file-format
errors and 3 on numerical failures.
"""
import argparse
import json
import logging
import os
import sys

from . import io as mjsio
from .clustering import kmeans
from .estimation import count_transitions, empirical_matrix
from .experiments import (ConfigError, ExperimentConfig, run_experiment,
                          emit_plot_data, sample_synthetic_instance)
from .jumpmodel import estimate_modes, sample_jump_model, simulate
from .reduction import (bound_mr, bound_p_diff, bound_stationary_diff,
                        run_pipeline)
from .spectral import truncate_svd
from .utils import NumericalError, derive_seed


_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _load_config(args):
    cfg = (ExperimentConfig.from_json(args.config) if args.config
           else ExperimentConfig())
    overrides = {}
    if args.seed is not None:
        overrides['rng_seed'] = args.seed
    if args.threads is not None:
        overrides['threads'] = args.threads
    if args.out is not None:
        overrides['output_dir'] = args.out
    return cfg.replace(**overrides) if overrides else cfg


def _out_path(cfg, name):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def cmd_simulate(args):
    cfg = _load_config(args)
    seed = cfg.rng_seed
    inst = sample_synthetic_instance(cfg.n, cfg.r, seed)
    model = sample_jump_model(cfg.n, cfg.n_a, cfg.n_c, derive_seed(seed, 4))
    traj = simulate(model, inst.P_bar, inst.pi0, cfg.N, cfg.noise_max,
                    'gaussian-unit', derive_seed(seed, 5))
    mjsio.write_trajectory(_out_path(cfg, 'trajectory.csv'), traj,
                           model.n_a, model.n_c)
    mjsio.write_matrix(_out_path(cfg, 'P.csv'), inst.P_bar)
    mjsio.write_distribution(_out_path(cfg, 'pi0.csv'), inst.pi0)
    mjsio.write_partition(_out_path(cfg, 'partition.csv'), inst.partition)
    mjsio.write_jump_model(_out_path(cfg, 'model.csv'), model)
    print('wrote a {}-mode trajectory of {} steps to {}'.format(
        cfg.n, cfg.N, cfg.output_dir))


def cmd_estimate(args):
    cfg = _load_config(args)
    model = mjsio.read_jump_model(args.model)
    traj, _, _ = mjsio.read_trajectory(args.trajectory)
    est = estimate_modes(model, traj)
    counts = count_transitions(est.modes, model.n)
    mjsio.write_modes(_out_path(cfg, 'modes.csv'), est.modes)
    mjsio.write_counts(_out_path(cfg, 'counts.csv'), counts)
    mjsio.write_matrix(_out_path(cfg, 'P_hat.csv'), empirical_matrix(counts))
    if est.mistake_count is not None:
        print('mistakes: {} (eta={:.6g})'.format(est.mistake_count,
                                                 est.mistake_rate))


def cmd_cluster(args):
    cfg = _load_config(args)
    P_hat = mjsio.read_matrix(args.matrix)
    if not 1 <= args.r <= P_hat.n:
        raise ConfigError('r must lie in [1, {}]'.format(P_hat.n))
    basis = truncate_svd(P_hat.rows, args.r)
    result = kmeans(basis.left, args.r, restarts=cfg.kmeans_restarts,
                    rng_seed=cfg.rng_seed)
    mjsio.write_partition(_out_path(cfg, 'partition.csv'), result.partition)
    print('k-means cost {:.6g}, cluster sizes {}'.format(
        result.cost, result.partition.sizes.tolist()))


def cmd_reduce(args):
    cfg = _load_config(args)
    model = mjsio.read_jump_model(args.model)
    traj, _, _ = mjsio.read_trajectory(args.trajectory)
    if not 1 <= args.r <= model.n:
        raise ConfigError('r must lie in [1, {}]'.format(model.n))
    result = run_pipeline(model, traj, args.r,
                          kmeans_options={'restarts': cfg.kmeans_restarts},
                          rng_seed=cfg.rng_seed)
    mjsio.write_reduced_model(_out_path(cfg, 'reduced'), result.reduced)
    print('reduced {} modes to {} clusters of sizes {}'.format(
        model.n, args.r, result.kmeans.partition.sizes.tolist()))


def cmd_bounds(args):
    reports = []
    if args.inputs:
        try:
            with open(args.inputs) as fh:
                named = json.load(fh)
        except ValueError as e:
            raise ConfigError('{}: invalid JSON: {}'.format(args.inputs, e))
        if not isinstance(named, dict):
            raise ConfigError('{}: bound inputs must be a JSON object'
                              .format(args.inputs))
        calculators = {'mr': bound_mr, 'p_diff': bound_p_diff}
        unknown = sorted(set(named) - set(calculators))
        if unknown:
            raise ConfigError('unknown bound sections: {}'.format(unknown))
        for key in sorted(named):
            if not isinstance(named[key], dict):
                raise ConfigError('{}: section must be a JSON object, got {!r}'
                                  .format(key, named[key]))
            try:
                reports.append(calculators[key](named[key]))
            except (TypeError, ValueError) as e:
                raise ConfigError('{}: {}'.format(key, e))
    if args.matrix or args.approx:
        if not (args.matrix and args.approx):
            raise ConfigError('--matrix and --approx go together')
        reports.append(bound_stationary_diff(mjsio.read_matrix(args.matrix),
                                             mjsio.read_matrix(args.approx)))
    if not reports:
        raise ConfigError('nothing to evaluate: give --inputs and/or '
                          '--matrix with --approx')
    out = args.out or '.'
    os.makedirs(out, exist_ok=True)
    mjsio.write_bound_reports(os.path.join(out, 'bounds.json'), reports)
    for rep in reports:
        print(repr(rep))


def cmd_experiment(args):
    cfg = _load_config(args)
    record = run_experiment(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    record.save(os.path.join(cfg.output_dir,
                             '{}_rows.csv'.format(record.scenario)))
    kind = 'scatter' if record.scenario == 'perturbation-sweep' else 'line'
    emit_plot_data(record, kind)
    print(record.means().to_string(index=False))
    if record.failed_count:
        print('failed replications: {}'.format(record.failed_count))


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='experiment config (JSON)')
    common.add_argument('--seed', type=int, help='master seed')
    common.add_argument('--out', help='output directory')
    common.add_argument('--threads', type=int, help='worker threads')
    return common


def build_parser():
    parser = argparse.ArgumentParser(
        prog='pymjs',
        description='Mode clustering and reduction for Markov jump systems')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress, -vv for debug output')
    sub = parser.add_subparsers(dest='command')
    common = _common_parser()

    p = sub.add_parser('simulate', parents=[common],
                       help='sample an instance and simulate it')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('estimate', parents=[common],
                       help='estimate the mode sequence of a trajectory')
    p.add_argument('--trajectory', required=True)
    p.add_argument('--model', required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser('cluster', parents=[common],
                       help='cluster the states of a transition matrix')
    p.add_argument('--matrix', required=True)
    p.add_argument('--r', type=int, required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser('reduce', parents=[common],
                       help='run the full reduction pipeline')
    p.add_argument('--trajectory', required=True)
    p.add_argument('--model', required=True)
    p.add_argument('--r', type=int, required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser('bounds', parents=[common],
                       help='evaluate error bounds')
    p.add_argument('--inputs', help='JSON with "mr" and/or "p_diff" inputs')
    p.add_argument('--matrix', help='true transition matrix')
    p.add_argument('--approx', help='approximating transition matrix')
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser('experiment', parents=[common],
                       help='run the configured experiment')
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose,
                                                      logging.DEBUG)
    logging.basicConfig(level=level,
                        format='%(asctime)s %(name)s %(levelname)s '
                               '%(message)s')
    try:
        args.func(args)
    except NumericalError as e:
        _logger.error('%s', e)
        print('numerical failure: {}'.format(e), file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK
