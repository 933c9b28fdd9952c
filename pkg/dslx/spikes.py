"""
Decentralized spike encoding of a scenario.

Each defender sees a window of m zones centered on its own segment; zones are
numbered anticlockwise and the defender always sits in the central zone
ceil((m + 1) / 2). A pattern has 2m single-spike channels: channel k
(1..m) fires at 0 when a defender is in zone k, channel m + k fires at the
scaled arrival time of the intruder in zone k. Empty zones stay silent.
"""
import math
from dataclasses import dataclass

import numpy as np

from .utils import DegenerateInputError, DomainError
from .world import normalize_segment


@dataclass(frozen=True)
class ZoneMap:
    defender_segment: int
    m: int
    n: int
    zone_to_segment: tuple

    @property
    def central_zone(self):
        return central_zone(self.m)

    def segment_of(self, zone):
        return self.zone_to_segment[zone - 1]

    def zone_of(self, segment):
        """Zone index (1-based) of a global segment, None outside the window."""
        offset = (segment - self.zone_to_segment[0]) % self.n
        return offset + 1 if offset < self.m else None


def central_zone(m):
    return int(math.ceil((m + 1) / 2.0))


def zones_of(defender_segment, m, n):
    if not 1 <= m <= n:
        raise DomainError('observation window {} must lie in [1, {}]'.format(
            m, n))
    c = central_zone(m)
    segments = tuple(normalize_segment(defender_segment - c + k, n)
                     for k in range(1, m + 1))
    return ZoneMap(defender_segment, m, n, segments)


@dataclass(frozen=True, eq=False)
class SpikePattern:
    """2m spike times; NaN marks a silent channel."""
    times: np.ndarray
    T: float

    @property
    def m(self):
        return len(self.times) // 2

    @property
    def spiking(self):
        return ~np.isnan(self.times)

    def spike_list(self):
        """[(channel, time), ...] with 1-based channels, silent ones left out."""
        return [(int(c) + 1, float(self.times[c]))
                for c in np.flatnonzero(self.spiking)]

    @classmethod
    def from_spike_list(cls, spikes, m, T):
        times = np.full(2 * m, np.nan)
        for channel, t in spikes:
            times[int(channel) - 1] = float(t)
        return cls(times, T)

    def __eq__(self, other):
        return isinstance(other, SpikePattern) and self.T == other.T and \
            np.array_equal(self.times, other.times, equal_nan=True)

    def __hash__(self):
        return hash((self.T, tuple(np.nan_to_num(self.times, nan=-1.0))))


def encode(scenario, defender, zmap, T, horizon):
    """Spike pattern of `scenario` as seen from `defender` through `zmap`."""
    m = zmap.m
    times = np.full(2 * m, np.nan)
    scale = T / horizon
    last = np.nextafter(T, 0.0)

    for d in scenario.defenders:
        zone = zmap.zone_of(d.segment)
        if zone is not None:
            times[zone - 1] = 0.0
    # own defender always fires the central channel
    times[zmap.central_zone - 1] = 0.0

    for intruder in scenario.intruders:
        zone = zmap.zone_of(intruder.segment)
        if zone is None:
            continue
        t = min(intruder.arrival_time * scale, last)
        channel = m + zone - 1
        if np.isnan(times[channel]) or t < times[channel]:
            times[channel] = t

    if not (~np.isnan(times)).any():
        raise DegenerateInputError('encoded an all-silent pattern')
    return SpikePattern(times, float(T))
