"""
dslx command line.

    dslx gen-data  -c exp.yml                  expert-labelled dataset
    dslx train     --dataset train.jsonl       MLC-SEFRON model
    dslx eval      --model model.jsonl [--dataset test.jsonl] [--team-sizes 2..8]
    dslx simulate  [--scenario s.jsonl | --run-id K] [--model model.jsonl]
    dslx sweep     --model model.jsonl --team-sizes 2..8
    dslx calibrate [--target 85.04]
    dslx summarize <experiment dirs>

Trailing KEY VALUE pairs override config entries, e.g.
`dslx train --dataset d.jsonl TRAIN.EPOCHS 5`. Every command except
summarize writes into its own run directory
<LOGROOT>/<EXP_NAME>/<run> together with hparams.json, logging.log and
metrics.csv. Exit codes: 0 ok, 2 config, 3 io, 4 numerical, 5 domain.
"""
import argparse
import os
import sys

import yaml

from . import dataset as ds
from . import evaluation as ev
from .consensus import dsl_policy
from .config import (assert_and_infer_cfg, cfg, merge_cfg_from_file,
                     merge_cfg_from_list, reset_cfg)
from .expert import default_kappa, prune_infeasible
from .logx import logx
from .sefron import SefronNetwork, init_network, train
from .sumx import summarize
from .utils import (ConfigError, DataIOError, DslxError, ShapeError,
                    make_run_dir)
from .world import Scenario, dump_chains, simulate_episode


def parse_team_sizes(text):
    """'2..8' or '2,4,8' -> [2, ..., 8]"""
    try:
        if '..' in text:
            lo, hi = text.split('..')
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(',')]
    except ValueError:
        raise ConfigError('bad team sizes {!r}'.format(text))


def setup_run(args):
    """Resolve the config and open the run directory; returns the logdir."""
    reset_cfg()
    if args.config_file:
        merge_cfg_from_file(args.config_file)
    if args.opts:
        merge_cfg_from_list(args.opts)
    if args.seed is not None:
        cfg.SEED = args.seed
    if args.jobs is not None:
        cfg.JOBS = args.jobs
    if args.exp_name is not None:
        cfg.EXP_NAME = args.exp_name
    assert_and_infer_cfg(make_immutable=False)
    if args.logdir is not None:
        cfg.LOGROOT = args.logdir
    cfg.immutable(True)

    logdir = make_run_dir(cfg.LOGROOT, cfg.EXP_NAME, args.tag,
                          args.no_cooldir)
    logx.initialize(logdir, hparams=cfg.to_dict(),
                    tensorboard=args.tensorboard)
    logx.msg('dslx {} -> {}'.format(args.command, logdir))
    return logdir


def load_model(path):
    net = SefronNetwork.load(path)
    logx.msg('loaded model {} (m={})'.format(path, net.m))
    return net


def cmd_gen_data(args):
    logdir = setup_run(args)
    train_set, test_set = ds.make_datasets(cfg, jobs=cfg.JOBS)
    ds.write_dataset(os.path.join(logdir, 'train.jsonl'), train_set,
                     ds.dataset_header(cfg, 'train'))
    ds.write_dataset(os.path.join(logdir, 'test.jsonl'), test_set,
                     ds.dataset_header(cfg, 'test'))

    m = cfg.DATASET.OBSERVATION
    trn = ev.label_statistics(train_set, m)
    tst = ev.label_statistics(test_set, m)
    ev.write_tsv(os.path.join(logdir, 'label_stats.tsv'),
                 ['zone', 'train positive', 'train negative',
                  'test positive', 'test negative'],
                 [a + b[1:] for a, b in zip(trn, tst)])
    logx.metric('val', {'train_samples': len(train_set),
                        'test_samples': len(test_set)})


def cmd_train(args):
    logdir = setup_run(args)
    header, samples = ds.read_dataset(args.dataset)
    if not samples:
        raise DataIOError('{} holds no samples'.format(args.dataset))
    pairs = [(s.pattern, s.labels) for s in samples]
    net = init_network(pairs, cfg.TRAIN, header['m'])
    net, _ = train(net, pairs, cfg.TRAIN)
    model_fn = os.path.join(logdir, 'model.jsonl')
    net.save(model_fn)
    logx.msg('saved model to {}'.format(model_fn))

    preds = net.predict_many([s.pattern for s in samples])
    summary = ev.multilabel_summary(preds, [s.labels for s in samples])
    logx.metric('val', {'train_' + k: v for k, v in summary.items()})


def _write_zone_report(logdir, net, path):
    header, samples = ds.read_dataset(path)
    if header['m'] != net.m:
        raise ShapeError('dataset {} has m={}, model has m={}'.format(
            path, header['m'], net.m))
    preds = net.predict_many([s.pattern for s in samples])
    targets = [s.labels for s in samples]
    metrics = ev.zone_metrics(preds, targets)
    ev.write_tsv(os.path.join(logdir, 'zone_metrics.tsv'),
                 ['zone', 'precision', 'recall', 'f1', 'support'],
                 metrics.rows())
    summary = ev.multilabel_summary(preds, targets)
    logx.metric('val', summary)
    for k, v in summary.items():
        logx.msg('{}: {:.4f}'.format(k, v))


def _write_sweep(logdir, net, team_sizes):
    points = ev.scalability_sweep(team_sizes, net, cfg, jobs=cfg.JOBS)
    header, rows = ev.sweep_table(points)
    ev.write_tsv(os.path.join(logdir, 'sweep.tsv'), header, rows)


def cmd_eval(args):
    logdir = setup_run(args)
    net = load_model(args.model) if args.model else None
    if args.dataset:
        if net is None:
            raise ConfigError('--dataset needs --model')
        _write_zone_report(logdir, net, args.dataset)

    modes = args.modes.split(',') if args.modes else \
        [m for m in ev.MODES if net is not None or m not in ev.LEARNED_MODES]
    if not args.neighbors:
        modes = [m for m in modes if m != ev.DSL_NEIGHBORS]
    summaries = ev.run_suite(cfg, modes, net=net, jobs=cfg.JOBS)
    for mode, s in summaries.items():
        logx.msg('{:<14} {}'.format(mode, s))
        logx.metric('val', {mode: s.mean, mode + '_3sigma': s.band})

    header, rows = ev.success_table([summaries])
    ev.write_tsv(os.path.join(logdir, 'success.tsv'), header, rows)
    header, rows = ev.comparison_table([summaries])
    ev.write_tsv(os.path.join(logdir, 'comparison.tsv'), header, rows)

    if args.team_sizes:
        if net is None:
            raise ConfigError('--team-sizes needs --model')
        _write_sweep(logdir, net, parse_team_sizes(args.team_sizes))


def cmd_sweep(args):
    logdir = setup_run(args)
    _write_sweep(logdir, load_model(args.model),
                 parse_team_sizes(args.team_sizes or '2..8'))


def _report_text(report):
    captured = ' '.join('({}, {}, {!r})'.format(*c) for c in report.captured)
    escaped = ' '.join('({}, {!r})'.format(*e) for e in report.escaped)
    return 'captured: {}\nescaped: {}\nsuccess: {!r}\n'.format(
        captured, escaped, report.success_percentage)


def cmd_simulate(args):
    logdir = setup_run(args)
    if args.scenario:
        with open(args.scenario) as fp:
            scenario = Scenario.from_record(fp.readline())
    else:
        scenario = ds.scenario_for_run(cfg, cfg.EVAL.SEED, args.run_id)
    with open(os.path.join(logdir, 'scenario.jsonl'), 'w') as fp:
        fp.write(scenario.to_record() + '\n')

    transit = cfg.WORLD.TRANSIT_CAPTURES
    sol = prune_infeasible(scenario, default_kappa(
        scenario.num_segments, cfg.DATASET.KAPPA_FACTOR))
    policies = {'expert': (sol.visits(), sol.pruned_intruders, False)}
    policies['naive'] = (ev.naive_trajectories(scenario), (), transit)
    if args.model:
        net = load_model(args.model)
        for name, alpha in (('dsl', 0.0), ('dsl+neighbors',
                                           cfg.CONSENSUS.ALPHA)):
            result = dsl_policy(scenario, net, alpha, net.tcfg.T,
                                scenario.horizon)
            policies[name] = (result.trajectories, [], transit)

    for name, (trajectories, pruned, scored_in_transit) in policies.items():
        report = simulate_episode(scenario, trajectories, scored_in_transit)
        stem = name.replace('+', '_')
        dump_chains(trajectories, pruned,
                    os.path.join(logdir, '{}_chains.txt'.format(stem)))
        with open(os.path.join(logdir, '{}_report.txt'.format(stem)),
                  'w') as fp:
            fp.write(_report_text(report))
        logx.msg('{:<14} {:.2f}%'.format(name, report.success_percentage))


def cmd_calibrate(args):
    logdir = setup_run(args)
    target = cfg.EVAL.CALIBRATION_TARGET if args.target is None \
        else args.target
    speed, trace = ev.calibrate_defender_speed(target, cfg, jobs=cfg.JOBS)
    ev.write_tsv(os.path.join(logdir, 'calibration.tsv'),
                 ['defender speed', 'expert success'], trace)
    with open(os.path.join(logdir, 'calibrated.yml'), 'w') as fp:
        yaml.safe_dump({'WORLD': {'DEFENDER_SPEED': speed}}, fp)
    logx.metric('val', {'defender_speed': speed,
                        'expert': trace[-1][1]})
    logx.msg('calibrated WORLD.DEFENDER_SPEED = {!r}'.format(speed))


def cmd_summarize(args):
    print(summarize(args.dirs, args.sortwith, args.csv))


def _add_run_args(p):
    p.add_argument('--config_file', '-c', type=str, default=None,
                   help='yaml config merged over the defaults')
    p.add_argument('--logdir', type=str, default=None,
                   help='output root, overrides LOGROOT and DSLX_LOGROOT')
    p.add_argument('--exp_name', type=str, default=None)
    p.add_argument('--tag', type=str, default=None,
                   help='prefix of the run directory name')
    p.add_argument('--no_cooldir', action='store_true',
                   help='name the run directory after --tag only')
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--jobs', type=int, default=None,
                   help='worker processes')
    p.add_argument('--tensorboard', action='store_true')
    p.add_argument('opts', nargs=argparse.REMAINDER,
                   help='KEY VALUE config overrides')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='dslx', description='Decentralized spike-based learning for '
        'discrete perimeter defense')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('gen-data', help='generate an expert-labelled dataset')
    p.set_defaults(func=cmd_gen_data)
    _add_run_args(p)

    p = sub.add_parser('train', help='train MLC-SEFRON on a dataset file')
    p.add_argument('--dataset', type=str, required=True)
    p.set_defaults(func=cmd_train)
    _add_run_args(p)

    p = sub.add_parser('eval', help='zone metrics and success percentages')
    p.add_argument('--model', type=str, default=None)
    p.add_argument('--dataset', type=str, default=None,
                   help='test set for per-zone metrics')
    p.add_argument('--modes', type=str, default=None,
                   help='comma list of {}'.format(','.join(ev.MODES)))
    p.add_argument('--neighbors', dest='neighbors', action='store_true',
                   default=True)
    p.add_argument('--no-neighbors', dest='neighbors', action='store_false')
    p.add_argument('--team-sizes', type=str, default=None,
                   help='run the team size sweep, e.g. 2..8')
    p.set_defaults(func=cmd_eval)
    _add_run_args(p)

    p = sub.add_parser('simulate', help='play one scenario with every policy')
    p.add_argument('--scenario', type=str, default=None,
                   help='file whose first line is a scenario record')
    p.add_argument('--run-id', type=int, default=0)
    p.add_argument('--model', type=str, default=None)
    p.set_defaults(func=cmd_simulate)
    _add_run_args(p)

    p = sub.add_parser('sweep', help='expert vs DSL over team sizes')
    p.add_argument('--model', type=str, required=True)
    p.add_argument('--team-sizes', type=str, default=None)
    p.set_defaults(func=cmd_sweep)
    _add_run_args(p)

    p = sub.add_parser('calibrate',
                       help='bisect the defender speed to an expert success')
    p.add_argument('--target', type=float, default=None)
    p.set_defaults(func=cmd_calibrate)
    _add_run_args(p)

    p = sub.add_parser('summarize', help='tabulate finished runs')
    p.add_argument('dirs', nargs='+', type=str)
    p.add_argument('--sortwith', '-s', type=str, default=None)
    p.add_argument('--csv', type=str, default=None)
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except DslxError as e:
        logx.msg('error: {}'.format(e))
        return e.exit_code
    except OSError as e:
        logx.msg('error: {}'.format(e))
        return DataIOError.exit_code
    finally:
        logx.close()
    return 0


if __name__ == '__main__':
    sys.exit(main())
