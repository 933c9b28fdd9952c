"""
Circular territory split into n equal perimeter segments.

Segments are 1-based and cyclic. Defenders live on the perimeter (radius 1)
and move along it at most at `max_angular_speed` rad/s; intruders move
radially inward at `radial_speed` and reach the perimeter at
(radius - 1) / radial_speed. An intruder is captured when a defender occupies
its segment at its arrival time (closed condition: arriving exactly on time
counts).

Trajectories are ordered lists of (segment, time) visits. Between visits a
defender leaves immediately along the shorter arc at full speed and waits at
the target (antipodal targets are reached anticlockwise).
"""
import json
import math
from dataclasses import dataclass
from typing import Tuple

from .utils import DataIOError, DomainError, FeasibilityError

# slack on feasibility comparisons of times in seconds
TIME_EPS = 1e-9

Visit = Tuple[int, float]


def normalize_segment(index, n):
    """Fold any integer onto [1, n]."""
    if n < 1:
        raise DomainError('segment count must be >= 1, got {}'.format(n))
    return (int(index) - 1) % n + 1


def _check_segment(index, n):
    if not 1 <= index <= n:
        raise DomainError('segment {} outside [1, {}]'.format(index, n))


def arc_distance(a, b, n):
    """Hops along the shorter cyclic direction between segments a and b."""
    _check_segment(a, n)
    _check_segment(b, n)
    d = abs(a - b)
    return min(d, n - d)


def arc_direction(a, b, n):
    """+1 when the shorter way from a to b is anticlockwise, -1 otherwise."""
    forward = (b - a) % n
    return 1 if forward <= n - forward else -1


def segment_width(n):
    return 2.0 * math.pi / n


def travel_time(hops, n, speed):
    """Seconds needed to cover `hops` segment centers at `speed` rad/s."""
    if hops == 0:
        return 0.0
    if speed <= 0:
        return math.inf
    return hops * segment_width(n) / speed


@dataclass(frozen=True)
class Defender:
    id: int
    segment: int
    max_angular_speed: float
    radius: float = 1.0

    def __post_init__(self):
        if self.radius != 1.0:
            raise DomainError('defenders live on the perimeter (radius 1)')
        if self.max_angular_speed < 0:
            raise DomainError('defender speed must be >= 0')


@dataclass(frozen=True)
class Intruder:
    id: int
    segment: int
    radius: float
    radial_speed: float

    @property
    def arrival_time(self):
        return arrival_time(self)


def arrival_time(intruder):
    """Seconds until the intruder reaches the perimeter."""
    if intruder.radial_speed <= 0:
        raise DomainError('intruder {} radial speed must be > 0'.format(
            intruder.id))
    if intruder.radius < 1:
        raise DomainError('intruder {} is inside the territory'.format(
            intruder.id))
    return (intruder.radius - 1.0) / intruder.radial_speed


def segment_center(segment, n):
    return (segment - 0.5) * segment_width(n)


@dataclass(frozen=True)
class Scenario:
    num_segments: int
    defenders: Tuple[Defender, ...]
    intruders: Tuple[Intruder, ...]
    horizon: float

    def __post_init__(self):
        n = self.num_segments
        object.__setattr__(self, 'defenders', tuple(self.defenders))
        object.__setattr__(self, 'intruders', tuple(self.intruders))
        for d in self.defenders:
            _check_segment(d.segment, n)
        seen = set()
        for i in self.intruders:
            _check_segment(i.segment, n)
            if i.radius <= 1:
                raise DomainError(
                    'intruder {} must spawn outside the perimeter'.format(i.id))
            if i.segment in seen:
                raise DomainError(
                    'more than one intruder in segment {}'.format(i.segment))
            seen.add(i.segment)

    @property
    def defender_speed(self):
        return self.defenders[0].max_angular_speed if self.defenders else 0.0

    @property
    def intruder_speed(self):
        return self.intruders[0].radial_speed if self.intruders else 0.0

    def intruder_at(self, segment):
        for i in self.intruders:
            if i.segment == segment:
                return i
        return None

    def defender(self, defender_id):
        for d in self.defenders:
            if d.id == defender_id:
                return d
        raise KeyError(defender_id)

    def rotated(self, k):
        """Same scenario with every segment index shifted by k (cyclic)."""
        n = self.num_segments
        return Scenario(
            n,
            tuple(Defender(d.id, normalize_segment(d.segment + k, n),
                           d.max_angular_speed) for d in self.defenders),
            tuple(Intruder(i.id, normalize_segment(i.segment + k, n),
                           i.radius, i.radial_speed) for i in self.intruders),
            self.horizon)

    def with_team(self, defenders):
        return Scenario(self.num_segments, tuple(defenders), self.intruders,
                        self.horizon)

    def without_intruders(self, intruder_ids):
        drop = set(intruder_ids)
        return Scenario(self.num_segments, self.defenders,
                        tuple(i for i in self.intruders if i.id not in drop),
                        self.horizon)

    def to_record(self):
        """One-line text record; field order is fixed."""
        record = {
            'n': self.num_segments,
            'horizon': self.horizon,
            'defenders': [{'id': d.id, 'segment': d.segment}
                          for d in self.defenders],
            'intruders': [{'id': i.id, 'segment': i.segment,
                           'radius': i.radius} for i in self.intruders],
            'speeds': {'defender': self.defender_speed,
                       'intruder': self.intruder_speed},
        }
        return json.dumps(record)

    @classmethod
    def from_record(cls, line):
        try:
            record = json.loads(line)
            v_d = record['speeds']['defender']
            v_i = record['speeds']['intruder']
            return cls(
                record['n'],
                tuple(Defender(d['id'], d['segment'], v_d)
                      for d in record['defenders']),
                tuple(Intruder(i['id'], i['segment'], i['radius'], v_i)
                      for i in record['intruders']),
                record['horizon'])
        except (ValueError, KeyError, TypeError) as e:
            raise DataIOError('bad scenario record: {}'.format(e))


@dataclass(frozen=True)
class CaptureReport:
    captured: Tuple[Tuple[int, int, float], ...]
    escaped: Tuple[Tuple[int, float], ...]
    success_percentage: float

    @property
    def captured_ids(self):
        return {c[0] for c in self.captured}

    @property
    def escaped_ids(self):
        return {e[0] for e in self.escaped}


def check_trajectory(defender, visits, n):
    """Raise FeasibilityError on the first leg that outruns the defender."""
    prev_seg, prev_t = defender.segment, 0.0
    for seg, t in visits:
        _check_segment(seg, n)
        hops = arc_distance(prev_seg, seg, n)
        dt = t - prev_t
        need = travel_time(hops, n, defender.max_angular_speed)
        if dt < -TIME_EPS or need > dt + TIME_EPS:
            required = hops * segment_width(n) / dt if dt > 0 else math.inf
            raise FeasibilityError(defender.id, ((prev_seg, prev_t), (seg, t)),
                                   required, defender.max_angular_speed)
        prev_seg, prev_t = seg, t


def _hop_offset(hops, direction, elapsed, n, speed):
    if speed <= 0:
        return 0
    traveled = min(float(hops), elapsed * speed / segment_width(n))
    return int(math.floor(direction * traveled + 0.5))


def position_at(defender, visits, n, t):
    """Segment occupied by the defender at time t."""
    prev_seg, prev_t = defender.segment, 0.0
    for seg, t_visit in visits:
        if t <= t_visit:
            hops = arc_distance(prev_seg, seg, n)
            offset = _hop_offset(hops, arc_direction(prev_seg, seg, n),
                                 max(0.0, t - prev_t), n,
                                 defender.max_angular_speed)
            return normalize_segment(prev_seg + offset, n)
        prev_seg, prev_t = seg, t_visit
    return prev_seg


def dwelling_at(defender, visits, n, t):
    """
    Segment of the scheduled visit the defender is waiting at at time t,
    or None while in transit or before its first visit. A defender with no
    visits holds its own segment.
    """
    if not visits:
        return defender.segment
    prev_seg, prev_t = defender.segment, 0.0
    for k, (seg, t_visit) in enumerate(visits):
        arrive = prev_t + travel_time(arc_distance(prev_seg, seg, n), n,
                                      defender.max_angular_speed)
        if t < arrive - TIME_EPS:
            return None
        if k + 1 == len(visits) or t <= t_visit + TIME_EPS:
            return seg
        prev_seg, prev_t = seg, t_visit
    return None


def simulate_episode(scenario, trajectories, transit_captures=True):
    """
    Play the defenders' visit lists against the scenario's intruders.

    trajectories maps defender id -> ordered (segment, time) visits; missing
    defenders hold their segment. With transit_captures=False only defenders
    waiting at a scheduled visit capture.
    """
    n = scenario.num_segments
    plans = {d.id: list(trajectories.get(d.id, ())) for d in scenario.defenders}
    for d in scenario.defenders:
        check_trajectory(d, plans[d.id], n)

    captured, escaped = [], []
    for intruder in sorted(scenario.intruders,
                           key=lambda i: (i.arrival_time, i.segment)):
        t_a = intruder.arrival_time
        captor = None
        for d in sorted(scenario.defenders, key=lambda d: d.id):
            if transit_captures:
                seg = position_at(d, plans[d.id], n, t_a)
            else:
                seg = dwelling_at(d, plans[d.id], n, t_a)
            if seg == intruder.segment:
                captor = d.id
                break
        if captor is None:
            escaped.append((intruder.id, t_a))
        else:
            captured.append((intruder.id, captor, t_a))

    total = len(scenario.intruders)
    success = 100.0 if total == 0 else 100.0 * len(captured) / total
    return CaptureReport(tuple(captured), tuple(escaped), success)


def dump_chains(chains, pruned=(), path=None):
    """
    Text dump shared by expert chains and consensus trajectories:
    one line per defender `D<id>: (seg, t) (seg, t) ...`, then `pruned: ...`.
    """
    lines = []
    for did in sorted(chains):
        visits = ' '.join('({}, {!r})'.format(s, float(t))
                          for s, t in chains[did])
        lines.append('D{}: {}'.format(did, visits).rstrip())
    lines.append('pruned: {}'.format(' '.join(str(p) for p in sorted(pruned))
                                     ).rstrip())
    text = '\n'.join(lines) + '\n'
    if path is not None:
        with open(path, 'w') as fp:
            fp.write(text)
    return text
