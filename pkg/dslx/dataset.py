"""
Monte-Carlo scenarios, expert labels, oversampling and train/test splits.

Scenario `run_id` is drawn from `run_rng(seed, run_id)`, so a dataset is a
pure function of (config, seed) regardless of how many jobs produced it.

Dataset files are line-delimited json: a header line
{"config": ..., "m": ..., "T": ..., "seed": ..., "split": ...} followed by
one sample per line with keys defender_id, labels, scenario_id, spikes
(spikes = [[channel, time], ...], 1-based channels).
"""
import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.neighbors import NearestNeighbors

from .collections import AttrDict
from .expert import default_kappa, labels_from_assignment, prune_infeasible
from .farm import farm_map
from .logx import logx
from .spikes import SpikePattern, encode, zones_of
from .utils import ConfigError, DataIOError, run_rng, stream_rng
from .world import Defender, Intruder, Scenario

SPLIT_STREAM = 1
OVERSAMPLE_STREAM = 2


@dataclass(frozen=True, eq=False)
class Sample:
    pattern: SpikePattern
    labels: np.ndarray
    defender_id: int
    scenario_id: int

    def to_record(self):
        return json.dumps({
            'defender_id': self.defender_id,
            'labels': [int(b) for b in self.labels],
            'scenario_id': self.scenario_id,
            'spikes': [[c, t] for c, t in self.pattern.spike_list()],
        }, sort_keys=True)

    @classmethod
    def from_record(cls, line, m, T):
        try:
            rec = json.loads(line)
            pattern = SpikePattern.from_spike_list(rec['spikes'], m, T)
            labels = np.array(rec['labels'], dtype=np.int8)
            sample = cls(pattern, labels, rec['defender_id'],
                         rec['scenario_id'])
        except (ValueError, KeyError, TypeError, IndexError) as e:
            raise DataIOError('bad sample record: {}'.format(e))
        if len(labels) != m:
            raise DataIOError('sample has {} labels, expected {}'.format(
                len(labels), m))
        return sample


def generate_scenario(cfg, rng, team_size=None):
    """
    One random snapshot: team_size defenders on distinct random segments,
    Poisson(rate) intruders on distinct random segments with arrival times
    uniform on (0, horizon]; radii are back-computed from the arrival times.
    """
    n = cfg.WORLD.NUM_SEGMENTS
    v_i, v_d = cfg.WORLD.INTRUDER_SPEED, cfg.WORLD.DEFENDER_SPEED
    horizon = cfg.DATASET.HORIZON
    team_size = cfg.DATASET.TEAM_SIZE if team_size is None else team_size
    if team_size > n:
        raise ConfigError('team size {} exceeds {} segments'.format(
            team_size, n))

    seats = rng.choice(n, size=team_size, replace=False) + 1
    defenders = tuple(Defender(k + 1, int(s), v_d)
                      for k, s in enumerate(seats))

    count = int(rng.poisson(cfg.DATASET.POISSON_RATE))
    while count > n:
        count = int(rng.poisson(cfg.DATASET.POISSON_RATE))
    segments = rng.choice(n, size=count, replace=False) + 1
    arrivals = horizon - rng.uniform(0.0, horizon, size=count)
    intruders = tuple(Intruder(k + 1, int(s), 1.0 + v_i * float(t), v_i)
                      for k, (s, t) in enumerate(zip(segments, arrivals)))
    return Scenario(n, defenders, intruders, horizon)


def scenario_for_run(cfg, seed, run_id, team_size=None):
    return generate_scenario(cfg, run_rng(seed, run_id), team_size)


def label_scenario(scenario, scenario_id, cfg, solution=None):
    """One sample per defender: its encoded view and its expert zone labels."""
    m = cfg.DATASET.OBSERVATION
    kappa = default_kappa(scenario.num_segments, cfg.DATASET.KAPPA_FACTOR)
    if solution is None:
        solution = prune_infeasible(scenario, kappa)
    samples = []
    for d in sorted(scenario.defenders, key=lambda d: d.id):
        zmap = zones_of(d.segment, m, scenario.num_segments)
        pattern = encode(scenario, d, zmap, cfg.TRAIN.T, scenario.horizon)
        labels = labels_from_assignment(solution, d, zmap)
        samples.append(Sample(pattern, labels, d.id, scenario_id))
    return samples


def _samples_for_run(item):
    run_id, cfg_dict = item
    cfg = AttrDict(cfg_dict)
    scenario = scenario_for_run(cfg, cfg.SEED, run_id)
    return label_scenario(scenario, run_id, cfg)


def build_samples(cfg, runs=None, jobs=1):
    """Samples of runs 0..runs-1 in run order."""
    runs = cfg.DATASET.RUNS if runs is None else runs
    cfg_dict = cfg.to_dict()
    per_run = farm_map(_samples_for_run,
                       [(run_id, cfg_dict) for run_id in range(runs)],
                       jobs=jobs, progress=max(1, runs // 10))
    return [s for samples in per_run for s in samples]


def split(samples, train_fraction, seed):
    """
    Scenario-disjoint split: a seeded permutation of scenario ids, the first
    round(train_fraction * #scenarios) of which go to the training set. The
    training set keeps at least one scenario, so a single-scenario run goes
    entirely to train and leaves the test set empty.
    """
    ids = sorted({s.scenario_id for s in samples})
    n_train = min(len(ids), max(1, int(round(train_fraction * len(ids)))))
    if n_train == len(ids) and ids:
        logx.msg('split: {} scenario(s) all go to train, test set is empty'.
                 format(len(ids)))
    order = stream_rng(seed, SPLIT_STREAM).permutation(len(ids))
    train_ids = {ids[k] for k in order[:n_train]}
    train = [s for s in samples if s.scenario_id in train_ids]
    test = [s for s in samples if s.scenario_id not in train_ids]
    return train, test


def _feature_matrix(samples, T):
    """Spike-time vectors with silent channels at T + 1."""
    return np.array([np.nan_to_num(s.pattern.times, nan=T + 1.0)
                     for s in samples])


def zone_positive_counts(samples, m=0):
    """Per-zone positive label counts; m zeros for an empty set."""
    if not samples:
        return np.zeros(m, dtype=int)
    return np.sum([s.labels for s in samples], axis=0).astype(int)


def oversample(train, rng, k=5):
    """
    SMOTE-style balancing of zone labels.

    Zones whose positive count is below the median are topped up to
    ceil(median) with synthetic samples: a random positive sample of the zone
    is interpolated towards one of its k nearest positive neighbours on the
    intruder channels both of them spike on. Presence and labels are copied
    from the base sample. Zones with a single positive duplicate it.
    """
    if not train:
        return list(train)
    m = len(train[0].labels)
    T = train[0].pattern.T
    X = _feature_matrix(train, T)
    counts = zone_positive_counts(train)
    target = int(math.ceil(np.median(counts)))
    out = list(train)

    for j in range(m):
        if counts[j] >= target:
            continue
        pos = np.flatnonzero([s.labels[j] == 1 for s in train])
        if not len(pos):
            logx.msg('oversample: zone {} has no positive sample, '
                     'left unbalanced'.format(j + 1))
            continue
        neighbors = None
        if len(pos) >= 2:
            nn = NearestNeighbors(n_neighbors=min(k + 1, len(pos)))
            nn.fit(X[pos])
            neighbors = nn.kneighbors(X[pos], return_distance=False)

        added = 0
        while counts[j] < target:
            b = int(rng.integers(len(pos)))
            base = train[pos[b]]
            if neighbors is None:
                synth = Sample(base.pattern, base.labels.copy(),
                               base.defender_id, base.scenario_id)
            else:
                candidates = [c for c in neighbors[b] if c != b]
                other = train[pos[int(rng.choice(candidates))]]
                synth = _interpolate(base, other, rng.uniform(0.0, 1.0), m)
            out.append(synth)
            counts += synth.labels
            added += 1
        logx.msg('oversample: zone {} +{} samples'.format(j + 1, added))
    return out


def _interpolate(base, other, gap, m):
    times = base.pattern.times.copy()
    both = ~np.isnan(base.pattern.times[m:]) & ~np.isnan(other.pattern.times[m:])
    idx = np.flatnonzero(both) + m
    times[idx] = base.pattern.times[idx] + gap * (
        other.pattern.times[idx] - base.pattern.times[idx])
    return Sample(SpikePattern(times, base.pattern.T), base.labels.copy(),
                  base.defender_id, base.scenario_id)


def write_dataset(path, samples, header):
    with open(path, 'w') as fp:
        fp.write(json.dumps(header, sort_keys=True) + '\n')
        for s in samples:
            fp.write(s.to_record() + '\n')


def read_dataset(path):
    """(header, samples) of a dataset file."""
    try:
        with open(path) as fp:
            header = json.loads(fp.readline())
            m, T = header['m'], header['T']
            samples = [Sample.from_record(line, m, T)
                       for line in fp if line.strip()]
    except (ValueError, KeyError) as e:
        raise DataIOError('bad dataset header in {}: {}'.format(path, e))
    return header, samples


def dataset_header(cfg, split_name):
    return {
        'config': cfg.to_dict(),
        'm': cfg.DATASET.OBSERVATION,
        'T': cfg.TRAIN.T,
        'seed': cfg.SEED,
        'split': split_name,
    }


def make_datasets(cfg, jobs=1):
    """
    Full pipeline: generate and label cfg.DATASET.RUNS scenarios, split them
    and (optionally) oversample the training part.
    """
    samples = build_samples(cfg, jobs=jobs)
    train, test = split(samples, cfg.DATASET.TRAIN_FRACTION, cfg.SEED)
    logx.msg('{} samples: {} train / {} test'.format(
        len(samples), len(train), len(test)))
    if cfg.DATASET.OVERSAMPLE:
        train = oversample(train, stream_rng(cfg.SEED, OVERSAMPLE_STREAM),
                           cfg.DATASET.SMOTE_K)
        logx.msg('{} train samples after oversampling'.format(len(train)))
    return train, test
