"""
Turn per-defender label predictions into conflict-free trajectories.

Each defender maps its zone labels onto global segments, smooths them with
its neighbouring labels (effective labels), bids on every segment with a
positive effective label, and a single-round minimum-cost auction keeps one
winner per segment. Winners visit their segments in arrival order; legs the
defender cannot fly in time are dropped.
"""
from dataclasses import dataclass

import numpy as np

from .sefron import predict
from .spikes import encode, zones_of
from .world import TIME_EPS, arc_distance, travel_time


@dataclass(frozen=True)
class EffectiveLabels:
    # indexed by segment - 1
    values: np.ndarray
    alpha: float

    def __getitem__(self, segment):
        return float(self.values[segment - 1])

    def positive_segments(self):
        return [int(s) + 1 for s in np.flatnonzero(self.values > 0)]


@dataclass(frozen=True)
class Bid:
    defender_id: int
    segment: int
    cost: float
    start_segment: int


def labels_to_segments(labels, zmap):
    """Zone-frame labels of one defender as a length-n vector over segments."""
    out = np.zeros(zmap.n)
    for k, bit in enumerate(labels, start=1):
        if bit:
            out[zmap.segment_of(k) - 1] = float(bit)
    return out


def intruder_presence(scenario):
    present = np.zeros(scenario.num_segments, dtype=bool)
    for i in scenario.intruders:
        present[i.segment - 1] = True
    return present


def effective_labels(segment_labels, presence, alpha):
    """
    l_eff[j] = l[j] + alpha * (l[j+1] + l[j-1]) on segments holding an
    intruder, 0 elsewhere. Neighbours are cyclic.
    """
    l = np.asarray(segment_labels, dtype=float)
    smoothed = l + alpha * np.roll(l, -1) + alpha * np.roll(l, 1)
    return EffectiveLabels(np.where(presence, smoothed, 0.0), float(alpha))


def place_bids(defender, eff, scenario):
    """
    Bids of one defender, in arrival order. The start segment of each bid is
    the previous segment of the defender's own arrival-sorted plan.
    """
    n = scenario.num_segments
    targets = sorted(
        (scenario.intruder_at(s) for s in eff.positive_segments()),
        key=lambda i: (i.arrival_time, i.segment))
    bids = []
    start = defender.segment
    for intruder in targets:
        cost = eff[intruder.segment] * arc_distance(start, intruder.segment, n)
        bids.append(Bid(defender.id, intruder.segment, cost, start))
        start = intruder.segment
    return bids


def auction(bids):
    """segment -> winning Bid; lowest cost wins, ties go to the lower id."""
    winners = {}
    for bid in bids:
        best = winners.get(bid.segment)
        if best is None or (bid.cost, bid.defender_id) < \
           (best.cost, best.defender_id):
            winners[bid.segment] = bid
    return winners


def build_trajectory(defender, won, n):
    """
    Visit list for `defender` over its won (segment, arrival time) pairs,
    sorted by arrival time. Returns (visits, dropped) where dropped lists the
    segments whose leg exceeded the defender's speed.
    """
    visits, dropped = [], []
    prev_seg, prev_t = defender.segment, 0.0
    for seg, t_a in sorted(won, key=lambda v: (v[1], v[0])):
        need = travel_time(arc_distance(prev_seg, seg, n), n,
                           defender.max_angular_speed)
        if need > t_a - prev_t + TIME_EPS:
            dropped.append(seg)
            continue
        visits.append((seg, t_a))
        prev_seg, prev_t = seg, t_a
    return visits, dropped


@dataclass
class ConsensusResult:
    trajectories: dict
    dropped: dict
    predictions: dict
    winners: dict


def resolve(scenario, segment_labels, alpha):
    """
    Consensus over already-predicted labels: segment_labels maps defender id
    to its length-n label vector in the global frame.
    """
    presence = intruder_presence(scenario)
    bids = []
    for d in sorted(scenario.defenders, key=lambda d: d.id):
        eff = effective_labels(segment_labels[d.id], presence, alpha)
        bids.extend(place_bids(d, eff, scenario))
    winners = auction(bids)

    won = {d.id: [] for d in scenario.defenders}
    for seg, bid in winners.items():
        won[bid.defender_id].append(
            (seg, scenario.intruder_at(seg).arrival_time))
    trajectories, dropped = {}, {}
    for d in scenario.defenders:
        trajectories[d.id], dropped[d.id] = build_trajectory(
            d, won[d.id], scenario.num_segments)
    return trajectories, dropped, winners


def dsl_policy(scenario, net, alpha, T, horizon):
    """
    Decentralized policy: every defender encodes its own view, predicts its
    zone labels with `net` and the consensus step resolves conflicts.
    alpha = 0 is DSL without neighbour smoothing.
    """
    n = scenario.num_segments
    predictions, segment_labels = {}, {}
    for d in scenario.defenders:
        zmap = zones_of(d.segment, net.m, n)
        labels = predict(net, encode(scenario, d, zmap, T, horizon))
        predictions[d.id] = labels
        segment_labels[d.id] = labels_to_segments(labels, zmap)
    trajectories, dropped, winners = resolve(scenario, segment_labels, alpha)
    return ConsensusResult(trajectories, dropped, predictions, winners)
