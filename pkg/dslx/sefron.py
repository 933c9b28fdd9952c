"""
MLC-SEFRON: multi-label classifier built from SEFRON neurons.

Each synapse carries a time-varying weight w(t), a sum of Gaussian bumps of a
shared width. A neuron's potential is

    v(t) = sum_i w_i(t_i) * eps(t - t_i)

with the weight sampled at the presynaptic spike time t_i, and the neuron
fires the first time v reaches its threshold theta. Output zone j is read
from the pair of neurons (2j-1, 2j): the zone is assigned when the first
("assigned") neuron fires strictly earlier than the second.

Neurons are stored row-wise in a SefronLayer so the whole network is
evaluated with a few matrix products. A single neuron is a one-row layer.
Firing times use np.inf for "never fired".

Training constants come from the TRAIN section of the config (see
dslx.config): T, T_D, T_M, TAU, SIGMA, A_PLUS, A_MINUS, TAU_PLUS, TAU_MINUS,
LR, EPOCHS, GRID_POINTS, CAUSAL_FLOOR, MAX_ERROR.
"""
import copy
import json

import numpy as np

from .collections import AttrDict
from .logx import logx
from .utils import (DataIOError, DegenerateInputError, DegenerateUpdateError,
                    InitError, NumericalError, ShapeError)

# bumps smaller than this are dropped
MIN_AMPLITUDE = 1e-12
# denominators below this make fractional contributions / errors undefined
DEGENERATE_EPS = 1e-12
# slack on the threshold test so a neuron built to reach theta at T_D fires there
FIRE_TOL = 1e-12


def epsilon(s, tau):
    """Spike response kernel (s/tau) * exp(1 - s/tau), zero for s < 0."""
    s = np.asarray(s, dtype=float)
    x = np.maximum(s, 0.0) / tau
    out = np.where(s >= 0, x * np.exp(1.0 - x), 0.0)
    return float(out) if out.ndim == 0 else out


def stdp_dw(s, tcfg):
    """STDP window: A+ exp(-s/tau+) for s >= 0, -A- exp(s/tau-) otherwise."""
    s = np.asarray(s, dtype=float)
    pos = tcfg.A_PLUS * np.exp(-np.maximum(s, 0.0) / tcfg.TAU_PLUS)
    neg = -tcfg.A_MINUS * np.exp(np.minimum(s, 0.0) / tcfg.TAU_MINUS)
    out = np.where(s >= 0, pos, neg)
    return float(out) if out.ndim == 0 else out


def _fractions(t_refs, pattern, tcfg):
    """(len(t_refs), 2m) fractional contributions, zero on silent channels."""
    spiking = pattern.spiking
    if not spiking.any():
        raise DegenerateInputError('all-silent spike pattern')
    t_refs = np.atleast_1d(np.asarray(t_refs, dtype=float))
    times = pattern.times[spiking]
    dw = stdp_dw(t_refs[:, None] - times[None, :], tcfg)
    total = dw.sum(axis=1)
    if np.any(np.abs(total) < DEGENERATE_EPS):
        raise DegenerateInputError(
            'STDP contributions cancel at t = {}'.format(
                t_refs[np.abs(total) < DEGENERATE_EPS].tolist()))
    u = np.zeros((len(t_refs), len(pattern.times)))
    u[:, spiking] = dw / total[:, None]
    return u


def _learning_fractions(t_refs, pattern, tcfg):
    """
    Fractions used by the weight update. Same as _fractions except that the
    normalizer is max(sum dw, CAUSAL_FLOOR * causal dw), so late inputs
    cannot flip the sign of the update or blow it up.
    """
    spiking = pattern.spiking
    if not spiking.any():
        raise DegenerateInputError('all-silent spike pattern')
    t_refs = np.atleast_1d(np.asarray(t_refs, dtype=float))
    s = t_refs[:, None] - pattern.times[spiking][None, :]
    dw = stdp_dw(s, tcfg)
    causal = np.where(s >= 0, dw, 0.0).sum(axis=1)
    total = np.maximum(dw.sum(axis=1), tcfg.CAUSAL_FLOOR * causal)
    if np.any(total < DEGENERATE_EPS):
        raise DegenerateInputError(
            'no input spike before t = {}'.format(
                t_refs[total < DEGENERATE_EPS].tolist()))
    u = np.zeros((len(t_refs), len(pattern.times)))
    u[:, spiking] = dw / total[:, None]
    return u


def fractional_contribution(t_ref, pattern, tcfg):
    """u_i(t_ref) = dw(t_ref - t_i) / sum_k dw(t_ref - t_k) over spiking inputs."""
    return _fractions([t_ref], pattern, tcfg)[0]


def required_potential(t, pattern, tcfg):
    """V(t) = sum_i u_i(t) eps(t - t_i), for one or many t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = _fractions(t, pattern, tcfg)
    spiking = pattern.spiking
    eps = np.zeros_like(u)
    eps[:, spiking] = epsilon(t[:, None] - pattern.times[spiking][None, :],
                              tcfg.TAU)
    return (u * eps).sum(axis=1)


class TimeVaryingWeight(object):
    """
    Gaussian-bump weights from one input channel to R neurons.

    All rows share the bump centers; amplitudes is (R, B). Bumps at an
    identical center are merged by adding amplitudes.
    """

    def __init__(self, rows, sigma):
        self.sigma = float(sigma)
        self.centers = np.zeros(0)
        self.amplitudes = np.zeros((rows, 0))
        self._index = {}

    @property
    def rows(self):
        return self.amplitudes.shape[0]

    def __call__(self, t):
        if not len(self.centers):
            return np.zeros(self.rows)
        g = np.exp(-(t - self.centers) ** 2 / (2.0 * self.sigma ** 2))
        return self.amplitudes @ g

    def add_bump(self, center, amplitudes):
        center = float(center)
        amplitudes = np.asarray(amplitudes, dtype=float)
        col = self._index.get(center)
        if col is None:
            if not np.any(np.abs(amplitudes) >= MIN_AMPLITUDE):
                return
            self.centers = np.append(self.centers, center)
            self.amplitudes = np.hstack([self.amplitudes,
                                         np.zeros((self.rows, 1))])
            col = len(self.centers) - 1
            self._index[center] = col
        column = self.amplitudes[:, col] + amplitudes
        column[np.abs(column) < MIN_AMPLITUDE] = 0.0
        self.amplitudes[:, col] = column
        if not column.any():
            self._drop(col)

    def _drop(self, col):
        self.centers = np.delete(self.centers, col)
        self.amplitudes = np.delete(self.amplitudes, col, axis=1)
        self._index = {c: k for k, c in enumerate(self.centers.tolist())}

    def bumps(self, row):
        """[(amplitude, center, sigma), ...] of one neuron."""
        return [(float(a), float(c), self.sigma)
                for a, c in zip(self.amplitudes[row], self.centers) if a != 0.0]


class SefronLayer(object):
    """R neurons fed by the same 2m input channels."""

    def __init__(self, rows, channels, sigma, tau):
        self.tau = float(tau)
        self.thetas = np.zeros(rows)
        self.weights = [TimeVaryingWeight(rows, sigma) for _ in range(channels)]

    @property
    def rows(self):
        return len(self.thetas)

    @property
    def channels(self):
        return len(self.weights)

    def weights_at_spikes(self, pattern):
        """(R, C) weights sampled at each spiking channel's spike time."""
        idx = np.flatnonzero(pattern.spiking)
        W = np.zeros((self.rows, len(idx)))
        for col, c in enumerate(idx):
            W[:, col] = self.weights[c](pattern.times[c])
        return W, pattern.times[idx]


def membrane_potential(layer, pattern, t):
    """(R,) potentials at time t."""
    W, times = layer.weights_at_spikes(pattern)
    if not len(times):
        return np.zeros(layer.rows)
    return W @ np.atleast_1d(epsilon(t - times, layer.tau))


def time_grid(tcfg):
    """Uniform grid over [0, T] with T_D added as a node."""
    return np.union1d(np.linspace(0.0, tcfg.T, int(tcfg.GRID_POINTS)),
                      [tcfg.T_D])


def grid_step(tcfg):
    return tcfg.T / (int(tcfg.GRID_POINTS) - 1)


def first_spike_time(layer, pattern, tcfg):
    """
    (R,) first threshold crossings on time_grid, refined by
    linear interpolation between the bracketing grid points; np.inf when the
    potential never reaches theta.
    """
    out = np.full(layer.rows, np.inf)
    W, times = layer.weights_at_spikes(pattern)
    if not len(times):
        return out
    grid = time_grid(tcfg)
    V = W @ epsilon(grid[None, :] - times[:, None], tcfg.TAU)
    thetas = layer.thetas[:, None]
    above = V >= thetas - FIRE_TOL * np.maximum(np.abs(thetas), 1.0)
    fired = above.any(axis=1)
    k = np.argmax(above, axis=1)
    for r in np.flatnonzero(fired):
        if k[r] == 0:
            out[r] = grid[0]
            continue
        v0, v1 = V[r, k[r] - 1], V[r, k[r]]
        frac = float(np.clip((layer.thetas[r] - v0) / (v1 - v0), 0.0, 1.0)) \
            if v1 != v0 else 1.0
        out[r] = grid[k[r] - 1] + frac * (grid[k[r]] - grid[k[r] - 1])
    return out


def init_neuron(pattern, tcfg):
    """
    One-row layer that fires at T_d on `pattern`: one bump per spiking input
    with amplitude u_i(T_d) centered at t_i, theta = sum u_i(T_d) eps(T_d - t_i).
    """
    layer = SefronLayer(1, len(pattern.times), tcfg.SIGMA, tcfg.TAU)
    u = fractional_contribution(tcfg.T_D, pattern, tcfg)
    for c in np.flatnonzero(pattern.spiking):
        layer.weights[c].add_bump(pattern.times[c], [u[c]])
    eps = epsilon(tcfg.T_D - pattern.times[pattern.spiking], tcfg.TAU)
    layer.thetas[0] = float(np.dot(u[pattern.spiking], eps))
    return layer


def _as_time(t, tcfg):
    return tcfg.T if t is None or not np.isfinite(t) else float(t)


def desired_times_escaped(t_a, t_u, tcfg):
    """Desired (assigned, unassigned) firing times when c_j = 1 but c^_j = 0."""
    t_a, t_u = _as_time(t_a, tcfg), _as_time(t_u, tcfg)
    td_a = t_a if t_a < tcfg.T_D else tcfg.T_D
    td_u = t_u if t_u >= td_a + tcfg.T_M else td_a + tcfg.T_M
    return td_a, td_u


def desired_times_incorrect(t_a, t_u, tcfg):
    """Desired (assigned, unassigned) firing times when c_j = 0 but c^_j = 1."""
    t_a, t_u = _as_time(t_a, tcfg), _as_time(t_u, tcfg)
    td_u = t_u if t_u < tcfg.T_D else tcfg.T_D
    td_a = t_a if t_a >= td_u + tcfg.T_M else td_u + tcfg.T_M
    return td_a, td_u


def _learning_time(t, tcfg):
    # V vanishes at t = 0, so the update never looks earlier than one step
    return max(_as_time(t, tcfg), grid_step(tcfg))


def learning_potential(t, pattern, tcfg):
    """V(t) with the update's normalization; positive once an input has spiked."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = _learning_fractions(t, pattern, tcfg)
    spiking = pattern.spiking
    eps = np.zeros_like(u)
    eps[:, spiking] = epsilon(t[:, None] - pattern.times[spiking][None, :],
                              tcfg.TAU)
    return (u * eps).sum(axis=1)


def update_error(thetas, pattern, t_d, t_hat, tcfg):
    """
    e = theta / V(t_d) - theta / V(t^) per row, both times floored at one grid
    step and t^ = T when silent, clipped to +-MAX_ERROR * theta.
    """
    t_d = np.array([_learning_time(t, tcfg) for t in np.atleast_1d(t_d)])
    t_hat = np.array([_learning_time(t, tcfg) for t in np.atleast_1d(t_hat)])
    try:
        v_d = learning_potential(t_d, pattern, tcfg)
        v_hat = learning_potential(t_hat, pattern, tcfg)
    except DegenerateInputError as e:
        raise DegenerateUpdateError(str(e))
    if np.any(v_d < DEGENERATE_EPS) or np.any(v_hat < DEGENERATE_EPS):
        raise DegenerateUpdateError(
            'zero required potential at t_d={} t^={}'.format(
                t_d.tolist(), t_hat.tolist()))
    thetas = np.asarray(thetas, dtype=float)
    bound = tcfg.MAX_ERROR * np.abs(thetas)
    return np.clip(thetas / v_d - thetas / v_hat, -bound, bound)


def apply_update(layer, pattern, t_d, tcfg, rows=None, t_hat=None):
    """
    Move the firing time of `rows` toward `t_d` (one desired time per row).

    Every spiking input i of row r gains a bump of amplitude
    LR * u_i(t_d) * e_r centered at t_i, with e_r from update_error.
    """
    rows = np.arange(layer.rows) if rows is None else np.asarray(rows)
    t_d = np.broadcast_to(np.asarray(t_d, dtype=float), rows.shape)
    if t_hat is None:
        t_hat = first_spike_time(layer, pattern, tcfg)[rows]
    t_hat = np.broadcast_to(np.asarray(t_hat, dtype=float), rows.shape)

    e = update_error(layer.thetas[rows], pattern, t_d, t_hat, tcfg)
    t_ref = np.array([_learning_time(t, tcfg) for t in t_d])
    u = _learning_fractions(t_ref, pattern, tcfg)
    delta = tcfg.LR * u * e[:, None]
    for c in np.flatnonzero(pattern.spiking):
        amps = np.zeros(layer.rows)
        amps[rows] = delta[:, c]
        layer.weights[c].add_bump(pattern.times[c], amps)
    return layer


class SefronNetwork(object):
    """
    2m input channels, 2m SEFRON neurons and m paired outputs. Neuron row
    2(j-1) is the "assigned" neuron of zone j, row 2(j-1)+1 the
    "unassigned" one.
    """

    def __init__(self, m, tcfg):
        self.m = m
        self.tcfg = AttrDict(copy.deepcopy(dict(tcfg)))
        self.layer = SefronLayer(2 * m, 2 * m, tcfg.SIGMA, tcfg.TAU)

    def firing_times(self, pattern):
        return first_spike_time(self.layer, pattern, self.tcfg)

    def predict(self, pattern):
        return predict(self, pattern)

    def predict_many(self, patterns):
        return np.array([predict(self, p) for p in patterns], dtype=np.int8) \
            if patterns else np.zeros((0, self.m), dtype=np.int8)

    def neuron(self, row):
        """Copy of one neuron as a one-row layer."""
        out = SefronLayer(1, self.layer.channels, self.tcfg.SIGMA, self.tcfg.TAU)
        out.thetas[0] = self.layer.thetas[row]
        for src, dst in zip(self.layer.weights, out.weights):
            for a, c, _ in src.bumps(row):
                dst.add_bump(c, [a])
        return out

    def set_neuron(self, row, single):
        """Install a one-row layer as neuron `row`."""
        self.layer.thetas[row] = single.thetas[0]
        for src, dst in zip(single.weights, self.layer.weights):
            for a, c, _ in src.bumps(0):
                amps = np.zeros(self.layer.rows)
                amps[row] = a
                dst.add_bump(c, amps)

    def save(self, path):
        """
        Text model file: a json header line {m, config, centers} followed by
        one json line per neuron {neuron, theta, bumps: [[channel, center,
        amplitude], ...]}. Floats are written with repr, so load(save(net))
        reproduces the network bit for bit.
        """
        header = {
            'config': self.tcfg.to_dict(),
            'm': self.m,
            'centers': [w.centers.tolist() for w in self.layer.weights],
        }
        with open(path, 'w') as fp:
            fp.write(json.dumps(header, sort_keys=True) + '\n')
            for r in range(self.layer.rows):
                bumps = [[c + 1, cen, amp]
                         for c, w in enumerate(self.layer.weights)
                         for amp, cen in zip(w.amplitudes[r].tolist(),
                                             w.centers.tolist())
                         if amp != 0.0]
                line = {'neuron': r + 1, 'theta': float(self.layer.thetas[r]),
                        'bumps': bumps}
                fp.write(json.dumps(line, sort_keys=True) + '\n')

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fp:
                header = json.loads(fp.readline())
                neurons = [json.loads(line) for line in fp if line.strip()]
            net = cls(header['m'], AttrDict(header['config']))
            for w, centers in zip(net.layer.weights, header['centers']):
                w.centers = np.array(centers, dtype=float)
                w.amplitudes = np.zeros((net.layer.rows, len(centers)))
                w._index = {c: k for k, c in enumerate(centers)}
            for line in neurons:
                r = line['neuron'] - 1
                net.layer.thetas[r] = line['theta']
                for channel, center, amp in line['bumps']:
                    w = net.layer.weights[channel - 1]
                    w.amplitudes[r, w._index[center]] = amp
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise DataIOError('bad model file {}: {}'.format(path, e))
        if len(neurons) != 2 * net.m:
            raise DataIOError('model file {} lists {} neurons, expected {}'.
                              format(path, len(neurons), 2 * net.m))
        return net


def predict(net, pattern):
    """Label vector: zone j is 1 iff t^_{2j-1} < t^_{2j} (never-fired = inf)."""
    if len(pattern.times) != 2 * net.m:
        raise ShapeError('pattern has {} channels, network expects {}'.format(
            len(pattern.times), 2 * net.m))
    t = net.firing_times(pattern)
    return (t[0::2] < t[1::2]).astype(np.int8)


def init_network(samples, tcfg, m):
    """
    Initialization strategy: neuron 2j-1 (assigned) is initialized from the
    first sample labelled 1 in zone j, neuron 2j from the first labelled 0.
    Samples whose initialization gives a non-positive threshold are passed
    over.
    """
    net = SefronNetwork(m, tcfg)
    done = np.zeros(2 * m, dtype=bool)
    cache = {}
    for idx, (pattern, labels) in enumerate(samples):
        if done.all():
            break
        labels = np.asarray(labels)
        for j in range(m):
            row = 2 * j if labels[j] == 1 else 2 * j + 1
            if done[row]:
                continue
            if idx not in cache:
                try:
                    cache[idx] = init_neuron(pattern, tcfg)
                except NumericalError:
                    cache[idx] = None
            single = cache[idx]
            if single is None or single.thetas[0] <= 0:
                continue
            net.set_neuron(row, single)
            done[row] = True
    missing = sorted({r // 2 + 1 for r in np.flatnonzero(~done)})
    if missing:
        raise InitError(missing)
    return net


def train(net, samples, tcfg=None):
    """
    Escaped-intruder / incorrect-assignment updates over `samples` in fixed
    order for tcfg.EPOCHS epochs. Returns (net, trace) where trace holds one
    dict per epoch with the hamming error measured during that pass and the
    number of applied and skipped zone updates.
    """
    tcfg = net.tcfg if tcfg is None else tcfg
    trace = []
    num_labels = max(1, len(samples) * net.m)
    for epoch in range(int(tcfg.EPOCHS)):
        errors, updates = 0, 0
        skipped = np.zeros(net.m, dtype=int)
        last_skip = None
        for pattern, labels in samples:
            labels = np.asarray(labels)
            t = net.firing_times(pattern)
            pred = (t[0::2] < t[1::2]).astype(np.int8)
            wrong = np.flatnonzero(pred != labels)
            errors += len(wrong)
            for j in wrong:
                t_a, t_u = t[2 * j], t[2 * j + 1]
                if labels[j] == 1:
                    td = desired_times_escaped(t_a, t_u, tcfg)
                else:
                    td = desired_times_incorrect(t_a, t_u, tcfg)
                try:
                    apply_update(net.layer, pattern, td, tcfg,
                                 rows=[2 * j, 2 * j + 1], t_hat=[t_a, t_u])
                    updates += 1
                except DegenerateUpdateError as e:
                    skipped[j] += 1
                    last_skip = e
        row = {'hamming_error': errors / num_labels, 'updates': updates,
               'skipped': int(skipped.sum())}
        trace.append(row)
        logx.metric('train', row, epoch)
        logx.msg('epoch {} hamming error {:.5f} updates {} skipped {}'.format(
            epoch, row['hamming_error'], updates, row['skipped']))
        if last_skip is not None:
            per_zone = ' '.join('z{}={}'.format(j + 1, k)
                                for j, k in enumerate(skipped) if k)
            logx.msg('epoch {} skipped updates per zone: {} (last: {})'.format(
                epoch, per_zone, last_skip))
    return net, trace
