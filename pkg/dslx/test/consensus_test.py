import copy
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from dslx import consensus
from dslx.config import cfg, reset_cfg
from dslx.dataset import generate_scenario
from dslx.sefron import SefronNetwork
from dslx.spikes import zones_of
from dslx.world import Defender, Intruder, Scenario, check_trajectory

N = 36
V_I = 0.5


def intruder(iid, segment, t_a):
    return Intruder(iid, segment, 1.0 + V_I * t_a, V_I)


def labels_on(*segments):
    out = np.zeros(N)
    for s in segments:
        out[s - 1] = 1.0
    return out


class EffectiveLabelTest(unittest.TestCase):
    def test_neighbour_boost(self):
        presence = np.zeros(N, dtype=bool)
        presence[9] = True
        eff = consensus.effective_labels(labels_on(9, 10, 11), presence, 0.2)
        self.assertAlmostEqual(eff[10], 1.4, places=12)
        self.assertEqual(eff[9], 0.0)
        self.assertEqual(eff[11], 0.0)
        self.assertEqual(eff.positive_segments(), [10])

    def test_cyclic_neighbours(self):
        presence = np.zeros(N, dtype=bool)
        presence[0] = True
        eff = consensus.effective_labels(labels_on(1, 36), presence, 0.2)
        self.assertAlmostEqual(eff[1], 1.2, places=12)

    def test_alpha_zero_masks(self):
        presence = np.zeros(N, dtype=bool)
        presence[[2, 4]] = True
        l = labels_on(3, 4, 5, 20)
        eff = consensus.effective_labels(l, presence, 0.0)
        np.testing.assert_array_equal(eff.values, np.where(presence, l, 0.0))

    def test_labels_to_segments(self):
        zmap = zones_of(5, 3, N)
        out = consensus.labels_to_segments([1, 0, 1], zmap)
        np.testing.assert_array_equal(out, labels_on(4, 6))

    def test_presence(self):
        s = Scenario(N, [Defender(1, 1, 0.25)],
                     [intruder(1, 7, 2.0), intruder(2, 36, 1.0)], 8.0)
        presence = consensus.intruder_presence(s)
        self.assertEqual(list(np.flatnonzero(presence) + 1), [7, 36])


class AuctionTest(unittest.TestCase):
    def test_costs_and_winner(self):
        s = Scenario(N, [Defender(1, 5, 0.25), Defender(2, 20, 0.25)],
                     [intruder(1, 10, 6.0)], 8.0)
        presence = consensus.intruder_presence(s)
        b1 = consensus.place_bids(
            s.defenders[0],
            consensus.effective_labels(labels_on(10), presence, 0.2), s)
        b2 = consensus.place_bids(
            s.defenders[1],
            consensus.effective_labels(labels_on(9, 10), presence, 0.2), s)
        self.assertEqual(b1[0].cost, 5.0)
        self.assertAlmostEqual(b2[0].cost, 12.0, places=12)
        winners = consensus.auction(b2 + b1)
        self.assertEqual(winners[10].defender_id, 1)

    def test_tie_goes_to_lower_id(self):
        bids = [consensus.Bid(3, 10, 5.0, 15), consensus.Bid(2, 10, 5.0, 5)]
        self.assertEqual(consensus.auction(bids)[10].defender_id, 2)
        self.assertEqual(consensus.auction(bids[::-1])[10].defender_id, 2)

    def test_bid_start_follows_plan(self):
        s = Scenario(N, [Defender(1, 1, 0.25)],
                     [intruder(1, 5, 2.0), intruder(2, 3, 4.0)], 8.0)
        eff = consensus.effective_labels(
            labels_on(3, 5), consensus.intruder_presence(s), 0.0)
        bids = consensus.place_bids(s.defenders[0], eff, s)
        self.assertEqual([(b.segment, b.cost, b.start_segment) for b in bids],
                         [(5, 4.0, 1), (3, 2.0, 5)])

    def test_no_positive_labels(self):
        s = Scenario(N, [Defender(1, 1, 0.25)], [intruder(1, 5, 2.0)], 8.0)
        trajectories, dropped, winners = consensus.resolve(
            s, {1: np.zeros(N)}, 0.2)
        self.assertEqual(trajectories, {1: []})
        self.assertEqual(dropped, {1: []})
        self.assertEqual(winners, {})


class TrajectoryTest(unittest.TestCase):
    def test_sorted_by_arrival(self):
        d = Defender(1, 1, 10.0)
        visits, dropped = consensus.build_trajectory(
            d, [(8, 6.0), (3, 2.0)], N)
        self.assertEqual(visits, [(3, 2.0), (8, 6.0)])
        self.assertEqual(dropped, [])

    def test_unreachable_leg_dropped(self):
        # two hops take 2 * (2pi/36) / 0.25 ~ 1.40 s
        d = Defender(1, 1, 0.25)
        visits, dropped = consensus.build_trajectory(
            d, [(3, 1.0), (4, 5.0)], N)
        self.assertEqual(visits, [(4, 5.0)])
        self.assertEqual(dropped, [3])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1), st.floats(0.0, 0.5))
    def test_conflict_free_and_feasible(self, seed, alpha):
        reset_cfg()
        rng = np.random.default_rng(seed)
        s = generate_scenario(cfg, rng)
        labels = {d.id: rng.integers(0, 2, size=N).astype(float)
                  for d in s.defenders}
        trajectories, _, winners = consensus.resolve(s, labels, alpha)
        visited = [seg for visits in trajectories.values()
                   for seg, _ in visits]
        self.assertEqual(len(visited), len(set(visited)))
        for d in s.defenders:
            check_trajectory(d, trajectories[d.id], N)
            for seg, t in trajectories[d.id]:
                self.assertEqual(winners[seg].defender_id, d.id)
                self.assertEqual(t, s.intruder_at(seg).arrival_time)


class PolicyTest(unittest.TestCase):
    def setUp(self):
        reset_cfg()
        self.tcfg = copy.deepcopy(cfg.TRAIN)

    def oracle_net(self, m):
        """Network stand-in that assigns every zone holding an intruder."""
        net = SefronNetwork(m, self.tcfg)

        def firing_times(pattern):
            t = np.empty(2 * m)
            seen = ~np.isnan(pattern.times[m:])
            t[0::2] = np.where(seen, 1.0, 2.0)
            t[1::2] = np.where(seen, 2.0, 1.0)
            return t
        net.firing_times = firing_times
        return net

    def test_visible_intruders_assigned(self):
        s = Scenario(N, [Defender(1, 5, 0.25), Defender(2, 22, 0.25)],
                     [intruder(1, 7, 6.0), intruder(2, 20, 7.0),
                      intruder(3, 14, 7.5)], 8.0)
        result = consensus.dsl_policy(s, self.oracle_net(5), 0.0, 8.0, 8.0)
        self.assertEqual(list(result.predictions[1]), [0, 0, 0, 0, 1])
        self.assertEqual(list(result.predictions[2]), [1, 0, 0, 0, 0])
        # segment 14 lies outside both windows
        self.assertEqual(sorted(result.winners), [7, 20])
        self.assertEqual(result.trajectories, {1: [(7, 6.0)], 2: [(20, 7.0)]})


if __name__ == '__main__':
    unittest.main()
