"""Per-step orchestration of the agent, and whole trials."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .action_memory import learn_a, modulate_cnx, spike_a
from .features import FAILURE, location_indices, motor_indices
from .network import NetworkState, init_network, update_last_spikes
from .object_memory import learn_o, spike_o
from .params import Params
from .query import choose_a_move, query
from .world import Coord, WorldModel, calculate_new_loc

START = (0, 0)


@dataclass
class AgentState:
    depart: Coord
    prev_fired_o: np.ndarray
    step_count: int
    net: NetworkState
    rng: np.random.Generator


def new_agent(params: Params, rng: np.random.Generator, start: Coord = START) -> AgentState:
    net = init_network(params, rng)
    return AgentState(tuple(start), np.zeros(0, dtype=np.intp), 0, net, rng)


@dataclass(frozen=True)
class StepRecord:
    step: int                   # 1-based
    depart: Coord
    arrival: Coord
    mode: str
    move: str
    predicted: frozenset[str]
    actual: frozenset[str]
    redo: frozenset[str] | None  # learning-free re-prediction after learn_a

    @property
    def bumped(self) -> bool:
        return FAILURE in self.actual

    @property
    def cc(self) -> bool:
        return self.redo == self.actual

    @property
    def missed(self) -> int:
        return len(self.actual - (self.redo or frozenset()))

    @property
    def errors(self) -> int:
        return len((self.redo or frozenset()) - self.actual)


def make_a_step(agent: AgentState, world: WorldModel, redo_prediction: bool = True) -> StepRecord:
    """Choose, act, observe, learn, refresh firings and age the last-spike counters.

    Mutates ``agent`` in place and returns the record of the step.
    """
    net, rng, p = agent.net, agent.rng, agent.net.params
    input_oa1 = agent.prev_fired_o
    decision = choose_a_move(input_oa1, net, rng)
    input_ma2 = motor_indices(decision.move)
    arrival, features = calculate_new_loc(world, agent.depart, decision.move)

    if features is None:
        fired_o = input_oa1
        input_oa3 = np.array([net.failure_row], dtype=np.intp)
        actual = frozenset({FAILURE})
    else:
        input_lo = location_indices(features)
        sums, fired_o = spike_o(input_lo, net.cnx_lo, net.sto, p.tnb_fired_o)
        learn_o(input_lo, sums, fired_o, net, rng)
        _, fired_o = spike_o(input_lo, net.cnx_lo, net.sto, p.tnb_fired_o)
        input_oa3 = fired_o
        actual = frozenset(features)

    learn_a(input_oa1, input_ma2, input_oa3, net, actual, decision.predicted, rng)

    redo = None
    if redo_prediction:
        redo = frozenset(query(input_oa1, input_ma2, net)[0])

    _, _, fired_a = spike_a(input_oa1, input_ma2,
                            modulate_cnx(input_oa1, net.cnx_oa1, p),
                            modulate_cnx(input_ma2, net.cnx_ma2, p), p)

    record = StepRecord(agent.step_count + 1, agent.depart, arrival, decision.mode,
                        decision.move, decision.predicted, actual, redo)
    agent.depart = arrival
    agent.prev_fired_o = np.asarray(fired_o, dtype=np.intp)
    net.last_spiked_o = update_last_spikes(net.last_spiked_o, fired_o)
    net.last_spiked_a = update_last_spikes(net.last_spiked_a, fired_a)
    agent.step_count += 1
    return record


# probe(agent, world) -> any; called at every series boundary
Probe = Callable[[AgentState, WorldModel], object]


@dataclass
class TrialResult:
    series_labels: list[int]
    records: list[list[StepRecord]]
    probes: dict[str, list] = field(default_factory=dict)
    applied_events: list[tuple[str, int]] = field(default_factory=list)
    seconds: float = 0.0
    net_digest: str = ""
    agent: AgentState | None = None
    world: WorldModel | None = None


def series_labels(schedule) -> list[int]:
    return np.cumsum(np.asarray(schedule, dtype=np.int64)).tolist()


def run_trial(world: WorldModel, schedule, params: Params, rng: np.random.Generator,
              probes: dict[str, Probe] | None = None, redo_prediction: bool = True,
              on_step: Callable[[AgentState, WorldModel], None] | None = None,
              agent: AgentState | None = None) -> TrialResult:
    """Run one trial over ``schedule`` (a list of series lengths).

    ``world`` is copied, so the caller's model is left untouched. Probes are
    evaluated after each series and must not modify the agent.
    """
    schedule = [int(s) for s in schedule]
    if not schedule or min(schedule) < 1:
        raise ValueError("schedule must be a non-empty list of positive series lengths")
    probes = probes or {}
    world = world.copy()
    t0 = time.perf_counter()
    if agent is None:
        agent = new_agent(params, rng)
    result = TrialResult(series_labels(schedule), [], {name: [] for name in probes})
    for length in schedule:
        series = []
        for _ in range(length):
            for ev in world.apply_events(agent.step_count + 1):
                result.applied_events.append((ev.name, agent.step_count + 1))
            series.append(make_a_step(agent, world, redo_prediction))
            if on_step is not None:
                on_step(agent, world)
        result.records.append(series)
        for name, probe in probes.items():
            result.probes[name].append(probe(agent, world))
    result.seconds = time.perf_counter() - t0
    result.net_digest = agent.net.digest()
    result.agent = agent
    result.world = world
    return result
