"""
Metrics, policy comparisons, calibration and the team-size sweep.

Policies compared on the same seeded scenario set:

- expert: centralized assignment with infeasible intruders pruned
- dsl: MLC-SEFRON predictions + auction, no neighbour smoothing (alpha = 0)
- dsl+neighbors: same with the configured CONSENSUS.ALPHA
- naive: N equal static sectors, each defender greedily serving its own
"""
import copy
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import (accuracy_score, hamming_loss,
                             precision_recall_fscore_support)
from tabulate import tabulate

from .collections import AttrDict
from .consensus import build_trajectory, dsl_policy
from .dataset import scenario_for_run, zone_positive_counts
from .expert import default_kappa, prune_infeasible
from .farm import farm_map
from .logx import logx
from .utils import CalibrationError, ConfigError, NumericalError
from .world import simulate_episode

EXPERT = 'expert'
DSL = 'dsl'
DSL_NEIGHBORS = 'dsl+neighbors'
NAIVE = 'naive'
MODES = (EXPERT, DSL, DSL_NEIGHBORS, NAIVE)
# modes that need a trained network
LEARNED_MODES = (DSL, DSL_NEIGHBORS)


@dataclass(frozen=True)
class ZoneMetrics:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    def rows(self):
        return [[j + 1, float(p), float(r), float(f), int(s)]
                for j, (p, r, f, s) in enumerate(zip(
                    self.precision, self.recall, self.f1, self.support))]


def zone_metrics(preds, targets):
    """Per-zone precision / recall / F1; undefined ratios count as 0."""
    preds = np.asarray(preds, dtype=int)
    targets = np.asarray(targets, dtype=int)
    if preds.shape != targets.shape:
        raise ConfigError('prediction shape {} != target shape {}'.format(
            preds.shape, targets.shape))
    p, r, f, s = precision_recall_fscore_support(
        targets, preds, average=None, zero_division=0)
    return ZoneMetrics(p, r, f, s)


def multilabel_summary(preds, targets):
    """Hamming loss, exact-match ratio and micro / macro averaged scores."""
    preds = np.asarray(preds, dtype=int)
    targets = np.asarray(targets, dtype=int)
    out = {
        'hamming_loss': float(hamming_loss(targets, preds)),
        'exact_match': float(accuracy_score(targets, preds)),
    }
    for average in ('micro', 'macro'):
        p, r, f, _ = precision_recall_fscore_support(
            targets, preds, average=average, zero_division=0)
        out['{}_precision'.format(average)] = float(p)
        out['{}_recall'.format(average)] = float(r)
        out['{}_f1'.format(average)] = float(f)
    return out


def label_statistics(samples, m=0):
    """[zone, positives, negatives] rows over a sample set (m zones if empty)."""
    pos = zone_positive_counts(samples, m)
    return [[j + 1, int(p), len(samples) - int(p)] for j, p in enumerate(pos)]


def success_percentage(report):
    captured = len(report.captured)
    total = captured + len(report.escaped)
    return 100.0 if total == 0 else 100.0 * captured / total


@dataclass(frozen=True)
class SuccessSummary:
    mean: float
    std: float
    runs: int
    mode: str
    observation: str

    @classmethod
    def from_values(cls, values, mode, observation):
        values = np.asarray(values, dtype=float)
        return cls(float(values.mean()) if len(values) else 0.0,
                   float(values.std()) if len(values) else 0.0,
                   len(values), mode, observation)

    @property
    def band(self):
        """Half-width of the mean +- 3 sigma band."""
        return 3.0 * self.std

    def __str__(self):
        return '{:.2f} ± {:.2f}'.format(self.mean, self.band)


def learning_efficiency(dsl, expert):
    if expert.mean == 0:
        raise NumericalError('expert mean success is 0, efficiency undefined')
    return 100.0 * dsl.mean / expert.mean


def sector_of(segment, num_sectors, n):
    """0-based sector; a segment straddling a sector edge goes to the lower one."""
    return (segment - 1) * num_sectors // n


def naive_trajectories(scenario):
    """
    Equal static sectors, one per defender. Sectors are cut from segment 1
    and handed to the defenders in angular order (lowest segment first), so
    the seating never depends on where the intruders are. Each defender
    visits its sector's intruders greedily in arrival order, skipping the
    ones it cannot reach in time.
    """
    n = scenario.num_segments
    defenders = sorted(scenario.defenders, key=lambda d: (d.segment, d.id))
    k = len(defenders)
    trajectories = {}
    for j, d in enumerate(defenders):
        own = [(i.segment, i.arrival_time) for i in scenario.intruders
               if sector_of(i.segment, k, n) == j]
        trajectories[d.id], _ = build_trajectory(d, own, n)
    return trajectories


def naive_baseline(scenario, transit_captures=False):
    return simulate_episode(scenario, naive_trajectories(scenario),
                            transit_captures)


def expert_episode(scenario, cfg):
    kappa = default_kappa(scenario.num_segments, cfg.DATASET.KAPPA_FACTOR)
    solution = prune_infeasible(scenario, kappa)
    # scored on the plan only, so success is exactly 100 (M - pruned) / M
    report = simulate_episode(scenario, solution.visits(),
                              transit_captures=False)
    return report, solution


def dsl_episode(scenario, net, cfg, alpha):
    result = dsl_policy(scenario, net, alpha, net.tcfg.T, scenario.horizon)
    report = simulate_episode(scenario, result.trajectories,
                              cfg.WORLD.TRANSIT_CAPTURES)
    return report, result


def run_modes(scenario, cfg, net, modes):
    """mode -> success percentage of one scenario."""
    out = {}
    for mode in modes:
        if mode == EXPERT:
            report, _ = expert_episode(scenario, cfg)
        elif mode == DSL:
            report, _ = dsl_episode(scenario, net, cfg, 0.0)
        elif mode == DSL_NEIGHBORS:
            report, _ = dsl_episode(scenario, net, cfg, cfg.CONSENSUS.ALPHA)
        elif mode == NAIVE:
            report = naive_baseline(scenario, cfg.WORLD.TRANSIT_CAPTURES)
        else:
            raise ConfigError('unknown mode {}'.format(mode))
        out[mode] = success_percentage(report)
    return out


_WORKER = {}


def _install_worker(cfg_dict, net):
    _WORKER['cfg'] = AttrDict(cfg_dict)
    _WORKER['net'] = net


def _evaluate_run(item):
    run_id, seed, team_size, modes = item
    cfg = _WORKER['cfg']
    scenario = scenario_for_run(cfg, seed, run_id, team_size)
    return run_modes(scenario, cfg, _WORKER['net'], modes)


def observation_tag(m, n):
    return 'full' if m >= n else 'partial'


def run_suite(cfg, modes, net=None, runs=None, seed=None, team_size=None,
              jobs=1):
    """mode -> SuccessSummary over `runs` seeded scenarios."""
    runs = cfg.EVAL.RUNS if runs is None else runs
    seed = cfg.EVAL.SEED if seed is None else seed
    modes = tuple(modes)
    if net is None and any(m in LEARNED_MODES for m in modes):
        raise ConfigError('modes {} need a trained model'.format(
            [m for m in modes if m in LEARNED_MODES]))
    m = net.m if net is not None else cfg.DATASET.OBSERVATION
    observation = observation_tag(m, cfg.WORLD.NUM_SEGMENTS)

    items = [(run_id, seed, team_size, modes) for run_id in range(runs)]
    results = farm_map(_evaluate_run, items, jobs=jobs,
                       initializer=_install_worker,
                       initargs=(cfg.to_dict(), net))
    return {mode: SuccessSummary.from_values([r[mode] for r in results],
                                             mode, observation)
            for mode in modes}


def _with_speed(cfg, speed):
    out = copy.deepcopy(cfg)
    out.WORLD.DEFENDER_SPEED = float(speed)
    return out


def calibrate_defender_speed(target, cfg, runs=None, tol=None, bracket=None,
                             max_steps=None, seed=None, jobs=1):
    """
    Bisection on WORLD.DEFENDER_SPEED until the expert mean success over
    `runs` seeded scenarios is within `tol` of `target`. Returns
    (speed, trace) with trace = [(speed, mean success), ...].
    """
    ev = cfg.EVAL
    runs = ev.CALIBRATION_RUNS if runs is None else runs
    tol = ev.CALIBRATION_TOL if tol is None else tol
    lo, hi = ev.SPEED_BRACKET if bracket is None else bracket
    max_steps = ev.MAX_BISECTIONS if max_steps is None else max_steps
    seed = cfg.SEED if seed is None else seed
    trace = []

    def expert_mean(speed):
        summary = run_suite(_with_speed(cfg, speed), [EXPERT], runs=runs,
                            seed=seed, jobs=jobs)[EXPERT]
        trace.append((float(speed), summary.mean))
        logx.msg('calibrate: v_D {:.6f} rad/s -> expert {:.4f}%'.format(
            speed, summary.mean))
        return summary.mean

    f_lo, f_hi = expert_mean(lo), expert_mean(hi)
    if abs(f_lo - target) <= tol:
        return float(lo), trace
    if abs(f_hi - target) <= tol:
        return float(hi), trace
    if not f_lo < target < f_hi:
        raise CalibrationError(
            'target {} outside bracket [{:.4f}, {:.4f}]'.format(
                target, f_lo, f_hi), trace)

    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        f_mid = expert_mean(mid)
        if abs(f_mid - target) <= tol:
            return mid, trace
        if f_mid < target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        'no speed within {} of {} after {} bisections'.format(
            tol, target, max_steps), trace)


@dataclass(frozen=True)
class SweepPoint:
    team_size: int
    expert: SuccessSummary
    dsl: SuccessSummary

    @property
    def gap(self):
        return self.expert.mean - self.dsl.mean


def scalability_sweep(team_sizes, net, cfg, runs=None, jobs=1):
    """
    Expert vs DSL (with neighbours) per team size; the network is the one
    trained at cfg.DATASET.TEAM_SIZE and is not retrained.
    """
    points = []
    for size in team_sizes:
        summary = run_suite(cfg, [EXPERT, DSL_NEIGHBORS], net=net, runs=runs,
                            team_size=size, jobs=jobs)
        point = SweepPoint(size, summary[EXPERT], summary[DSL_NEIGHBORS])
        points.append(point)
        logx.metric('val', {'team_size': size, 'expert': point.expert.mean,
                            'dsl': point.dsl.mean, 'gap': point.gap})
    return points


def write_tsv(path, header, rows):
    with open(path, 'w') as fp:
        fp.write(tabulate(rows, headers=header, tablefmt='tsv') + '\n')


def success_table(summaries):
    """Rows of the success-percentage comparison, one per observation mode."""
    header = ['observation', 'runs'] + [m for m in MODES
                                        if any(m in s for s in summaries)]
    header.append('learning efficiency')
    rows = []
    for s in summaries:
        any_summary = next(iter(s.values()))
        row = [any_summary.observation, any_summary.runs]
        row += [s[m].mean if m in s else None for m in header[2:-1]]
        if EXPERT in s and DSL_NEIGHBORS in s:
            row.append(learning_efficiency(s[DSL_NEIGHBORS], s[EXPERT]))
        else:
            row.append(None)
        rows.append(row)
    return header, rows


def comparison_table(summaries):
    """mean +- 3 sigma per policy and observation mode."""
    header = ['policy', 'observation', 'mean', '3 sigma', 'runs']
    rows = [[mode, s.observation, s.mean, s.band, s.runs]
            for summary in summaries for mode, s in summary.items()]
    return header, rows


def sweep_table(points):
    header = ['team size', 'expert', 'dsl+neighbors', 'gap']
    rows = [[p.team_size, p.expert.mean, p.dsl.mean, p.gap] for p in points]
    return header, rows
