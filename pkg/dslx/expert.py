"""
Centralized expert policy for the discrete perimeter defense problem.

Every intruder is a task (segment, arrival time). A task is either the first
task of a defender or the successor of an earlier task, so the assignment is
a rectangular linear sum assignment with N + M - 1 rows (N defender rows,
one row per task except the latest) and M task columns:

- first-task cost: arc hops from the defender, or kappa when the defender
  cannot get there before the arrival time;
- successor cost: arc hops between the two task segments, kappa when the
  gap in arrival times is too short, forbidden when the successor would come
  earlier in arrival order.

Tasks that can only be matched at kappa are removed one at a time (earliest
arrival first) and the problem re-solved; removed tasks are the pruned
intruders, which escape.
"""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from scipy.optimize import linear_sum_assignment

from .utils import InfeasibleAssignmentError
from .world import TIME_EPS, arc_distance, travel_time


def default_kappa(n, factor=10):
    return float(factor * n)


def task_order(intruders):
    """Tasks sorted by arrival time, ties broken by segment index."""
    return tuple(sorted(intruders, key=lambda i: (i.arrival_time, i.segment)))


@dataclass(frozen=True)
class TaskCostMatrix:
    num_segments: int
    defenders: tuple
    tasks: tuple
    cost: np.ndarray
    # forbidden entries are never matched, whatever `cost` holds there
    forbidden: np.ndarray
    kappa: float

    @property
    def num_first_rows(self):
        return len(self.defenders)

    def is_kappa(self, row, col):
        return not self.forbidden[row, col] and self.cost[row, col] >= self.kappa


@dataclass
class AssignmentSolution:
    first_assignments: Dict[int, int] = field(default_factory=dict)
    successor_links: Dict[int, int] = field(default_factory=dict)
    chains: Dict[int, list] = field(default_factory=dict)
    total_cost: float = 0.0
    pruned_intruders: List[int] = field(default_factory=list)
    kappa_tasks: List[int] = field(default_factory=list)

    def visits(self):
        """defender id -> [(segment, arrival time), ...] in chain order."""
        return {did: [(i.segment, i.arrival_time) for i in chain]
                for did, chain in self.chains.items()}

    def assigned_ids(self):
        return {i.id for chain in self.chains.values() for i in chain}


def build_cost_matrix(scenario, kappa=None):
    n = scenario.num_segments
    if kappa is None:
        kappa = default_kappa(n)
    defenders = tuple(sorted(scenario.defenders, key=lambda d: d.id))
    tasks = task_order(scenario.intruders)
    num_d, num_t = len(defenders), len(tasks)
    rows = num_d + max(num_t - 1, 0)
    cost = np.zeros((rows, num_t))
    forbidden = np.zeros((rows, num_t), dtype=bool)

    for r, d in enumerate(defenders):
        for c, task in enumerate(tasks):
            hops = arc_distance(d.segment, task.segment, n)
            need = travel_time(hops, n, d.max_angular_speed)
            cost[r, c] = hops if need <= task.arrival_time + TIME_EPS else kappa

    speed = scenario.defender_speed
    for k, prev in enumerate(tasks[:-1]):
        r = num_d + k
        for c, task in enumerate(tasks):
            if c <= k:
                forbidden[r, c] = True
                continue
            hops = arc_distance(prev.segment, task.segment, n)
            gap = task.arrival_time - prev.arrival_time
            need = travel_time(hops, n, speed)
            cost[r, c] = hops if need <= gap + TIME_EPS else kappa

    return TaskCostMatrix(n, defenders, tasks, cost, forbidden, float(kappa))


def solve_assignment(m):
    num_d, num_t = len(m.defenders), len(m.tasks)
    if num_t == 0:
        return AssignmentSolution(chains={d.id: [] for d in m.defenders})

    blocked = np.all(m.forbidden, axis=0) if m.cost.shape[0] else \
        np.ones(num_t, dtype=bool)
    if blocked.any():
        raise InfeasibleAssignmentError(
            [m.tasks[c].id for c in np.flatnonzero(blocked)])

    weights = np.where(m.forbidden, np.inf, m.cost)
    try:
        row_ind, col_ind = linear_sum_assignment(weights)
    except ValueError:
        raise InfeasibleAssignmentError([t.id for t in m.tasks])

    sol = AssignmentSolution()
    for r, c in zip(row_ind, col_ind):
        task = m.tasks[c]
        sol.total_cost += float(m.cost[r, c])
        if m.is_kappa(r, c):
            sol.kappa_tasks.append(task.id)
        if r < num_d:
            sol.first_assignments[m.defenders[r].id] = task.id
        else:
            sol.successor_links[m.tasks[r - num_d].id] = task.id

    by_id = {t.id: t for t in m.tasks}
    for d in m.defenders:
        chain = []
        tid = sol.first_assignments.get(d.id)
        while tid is not None:
            chain.append(by_id[tid])
            tid = sol.successor_links.get(tid)
        sol.chains[d.id] = chain
    assert sum(len(c) for c in sol.chains.values()) == num_t, \
        'successor links must fold into chains covering every task'
    return sol


def prune_infeasible(scenario, kappa=None):
    """
    Solve, drop the earliest-arriving kappa-matched intruder, repeat until
    every matched entry is strictly below kappa. Dropped intruders sitting
    on an idle defender's segment are handed back to that defender.
    """
    pruned = []
    current = scenario
    while True:
        m = build_cost_matrix(current, kappa)
        if not m.defenders and m.tasks:
            pruned.extend(t.id for t in m.tasks)
            sol = AssignmentSolution()
            break
        sol = solve_assignment(m)
        if not sol.kappa_tasks:
            break
        late = set(sol.kappa_tasks)
        drop = next(t for t in m.tasks if t.id in late)
        pruned.append(drop.id)
        current = current.without_intruders([drop.id])
    sol.pruned_intruders = _hold_parked(scenario, sol, pruned)
    return sol


def _hold_parked(scenario, sol, pruned):
    """
    A defender left without a chain that already sits on a pruned intruder's
    segment captures it by staying put; that intruder becomes its chain.
    Returns the intruders that stay pruned.
    """
    idle = {}
    for d in sorted(scenario.defenders, key=lambda d: d.id):
        if not sol.chains.get(d.id):
            idle.setdefault(d.segment, d)
    by_id = {i.id: i for i in scenario.intruders}
    left = []
    for iid in pruned:
        d = idle.pop(by_id[iid].segment, None)
        if d is None:
            left.append(iid)
            continue
        sol.chains[d.id] = [by_id[iid]]
        sol.first_assignments[d.id] = iid
    return left


def labels_from_assignment(sol, defender, zone_map):
    """
    Zone labels for one defender: bit k is set when a task of the defender's
    chain lies in zone k's segment. Tasks outside the window are left out.
    """
    labels = np.zeros(zone_map.m, dtype=np.int8)
    for task in sol.chains.get(defender.id, ()):
        zone = zone_map.zone_of(task.segment)
        if zone is not None:
            labels[zone - 1] = 1
    return labels
