import math
import unittest

from hypothesis import given, settings, strategies as st
from parameterized import parameterized

from dslx import world
from dslx.utils import DataIOError, DomainError, FeasibilityError
from dslx.world import Defender, Intruder, Scenario

N = 36
V_I = 0.5


def intruder(iid, segment, t_a, speed=V_I):
    return Intruder(iid, segment, 1.0 + speed * t_a, speed)


class ArcTest(unittest.TestCase):
    @parameterized.expand([
        (5, 5, 0),
        (1, 19, 18),
        (32, 10, 14),
        (36, 1, 1),
    ])
    def test_arc_distance(self, a, b, expected):
        self.assertEqual(world.arc_distance(a, b, N), expected)

    @parameterized.expand([(0, 5), (5, 37), (-1, 2)])
    def test_arc_distance_invalid(self, a, b):
        with self.assertRaises(DomainError):
            world.arc_distance(a, b, N)

    @given(st.integers(1, N), st.integers(1, N), st.integers(1, N))
    def test_metric_properties(self, a, b, c):
        self.assertEqual(world.arc_distance(a, b, N), world.arc_distance(b, a, N))
        self.assertLessEqual(
            world.arc_distance(a, b, N),
            world.arc_distance(a, c, N) + world.arc_distance(c, b, N))

    @parameterized.expand([(0, 36), (37, 1), (-35, 1), (36, 36)])
    def test_normalize_segment(self, index, expected):
        self.assertEqual(world.normalize_segment(index, N), expected)


class ArrivalTest(unittest.TestCase):
    @parameterized.expand([
        (1.0, 0.5, 0.0),
        (2.075, 0.5, 2.15),
        (3.0, 1.0, 2.0),
    ])
    def test_arrival_time(self, radius, speed, expected):
        i = Intruder(1, 1, radius, speed)
        self.assertAlmostEqual(world.arrival_time(i), expected, places=12)

    @parameterized.expand([(0.0,), (-1.0,)])
    def test_bad_speed(self, speed):
        with self.assertRaises(DomainError):
            world.arrival_time(Intruder(1, 1, 2.0, speed))


class ScenarioTest(unittest.TestCase):
    def test_one_intruder_per_segment(self):
        with self.assertRaises(DomainError):
            Scenario(N, (), (intruder(1, 4, 1.0), intruder(2, 4, 2.0)), 8.0)

    def test_radius_above_one(self):
        with self.assertRaises(DomainError):
            Scenario(N, (), (Intruder(1, 4, 1.0, V_I),), 8.0)

    def test_defender_on_perimeter(self):
        with self.assertRaises(DomainError):
            Defender(1, 3, 0.25, radius=2.0)

    def test_record_round_trip(self):
        s = Scenario(N, (Defender(1, 3, 0.25), Defender(2, 20, 0.25)),
                     (intruder(1, 7, 2.15), intruder(2, 30, 6.5)), 8.0)
        line = s.to_record()
        self.assertEqual(Scenario.from_record(line), s)
        self.assertTrue(line.startswith('{"n": 36, "horizon": 8.0'))

    def test_bad_record(self):
        with self.assertRaises(DataIOError):
            Scenario.from_record('{"n": 36}')


class SimulateTest(unittest.TestCase):
    def test_parked_defender_captures(self):
        s = Scenario(N, (Defender(1, 5, 0.25),), (intruder(1, 5, 3.0),), 8.0)
        report = world.simulate_episode(s, {})
        self.assertEqual(report.captured, ((1, 1, 3.0),))
        self.assertEqual(report.success_percentage, 100.0)

    def test_parked_defender_captures_without_transit(self):
        d = Defender(1, 5, 0.25)
        s = Scenario(N, (d,), (intruder(1, 5, 3.0), intruder(2, 6, 3.0)), 8.0)
        self.assertEqual(world.dwelling_at(d, [], N, 3.0), 5)
        report = world.simulate_episode(s, {1: []}, transit_captures=False)
        self.assertEqual(report.captured, ((1, 1, 3.0),))
        self.assertEqual(report.escaped_ids, {2})

    def test_no_defenders(self):
        s = Scenario(N, (), (intruder(1, 5, 3.0), intruder(2, 9, 1.0)), 8.0)
        report = world.simulate_episode(s, {})
        self.assertEqual(report.captured, ())
        self.assertEqual(report.escaped_ids, {1, 2})
        self.assertEqual(report.success_percentage, 0.0)

    def test_no_intruders(self):
        s = Scenario(N, (Defender(1, 5, 0.25),), (), 8.0)
        self.assertEqual(world.simulate_episode(s, {}).success_percentage,
                         100.0)

    def test_one_unreachable(self):
        # 0.25 rad/s covers one segment (2*pi/36 rad) in ~0.698 s
        d1, d2 = Defender(1, 1, 0.25), Defender(2, 19, 0.25)
        hop = world.travel_time(1, N, 0.25)
        s = Scenario(N, (d1, d2), (
            intruder(1, 3, 2 * hop + 0.1),
            intruder(2, 19, 1.0),
            intruder(3, 10, 1.0),
        ), 8.0)
        trajectories = {1: [(3, 2 * hop + 0.1)], 2: [(19, 1.0)]}
        report = world.simulate_episode(s, trajectories)
        self.assertEqual(report.captured_ids, {1, 2})
        self.assertEqual(report.escaped_ids, {3})
        self.assertAlmostEqual(report.success_percentage, 200.0 / 3)

    def test_arriving_exactly_on_time_captures(self):
        hop = world.travel_time(4, N, 0.25)
        s = Scenario(N, (Defender(1, 1, 0.25),), (intruder(1, 5, hop),), 8.0)
        report = world.simulate_episode(s, {1: [(5, hop)]})
        self.assertEqual(report.captured_ids, {1})

    def test_infeasible_leg(self):
        s = Scenario(N, (Defender(1, 1, 0.25),), (intruder(1, 19, 1.0),), 8.0)
        with self.assertRaises(FeasibilityError) as ctx:
            world.simulate_episode(s, {1: [(19, 1.0)]})
        err = ctx.exception
        self.assertEqual(err.defender_id, 1)
        self.assertEqual(err.leg, ((1, 0.0), (19, 1.0)))
        self.assertAlmostEqual(err.required_speed, math.pi)

    def test_transit_capture_modes(self):
        # defender passes through segment 3 on its way to 5
        hop = world.travel_time(1, N, 0.25)
        s = Scenario(N, (Defender(1, 1, 0.25),),
                     (intruder(1, 3, 2 * hop), intruder(2, 5, 4 * hop)), 8.0)
        plan = {1: [(5, 4 * hop)]}
        self.assertEqual(world.simulate_episode(s, plan).captured_ids, {1, 2})
        self.assertEqual(
            world.simulate_episode(s, plan, transit_captures=False)
            .captured_ids, {2})

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, N - 1), st.lists(
        st.tuples(st.integers(1, N), st.floats(0.1, 8.0)), max_size=6,
        unique_by=lambda x: x[0]))
    def test_rotation_preserves_captures(self, k, raw):
        d = Defender(1, 4, 0.25)
        s = Scenario(N, (d,), tuple(intruder(j + 1, seg, t)
                                    for j, (seg, t) in enumerate(raw)), 8.0)
        plan = []
        prev, prev_t = d.segment, 0.0
        for i in sorted(s.intruders, key=lambda i: i.arrival_time):
            need = world.travel_time(world.arc_distance(prev, i.segment, N),
                                     N, 0.25)
            if need <= i.arrival_time - prev_t:
                plan.append((i.segment, i.arrival_time))
                prev, prev_t = i.segment, i.arrival_time
        rotated = s.rotated(k)
        rplan = [(world.normalize_segment(seg + k, N), t) for seg, t in plan]
        a = world.simulate_episode(s, {1: plan})
        b = world.simulate_episode(rotated, {1: rplan})
        self.assertEqual(a.captured, b.captured)
        self.assertEqual(a.escaped, b.escaped)
        expected = 100.0 * len(a.captured) / len(s.intruders) \
            if s.intruders else 100.0
        self.assertEqual(a.success_percentage, expected)


class DumpTest(unittest.TestCase):
    def test_dump_chains(self):
        text = world.dump_chains({2: [(7, 2.5)], 1: []}, pruned=[4, 3])
        self.assertEqual(text, 'D1:\nD2: (7, 2.5)\npruned: 3 4\n')


if __name__ == '__main__':
    unittest.main()
