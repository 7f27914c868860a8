"""Per-series statistics and learning-free probes of a frozen network."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .agent import AgentState, StepRecord
from .features import FAILURE, FEATURE_CLASSES, MOVES, feature_class, location_indices, motor_indices
from .network import NetworkState
from .object_memory import spike_o
from .query import EXPLOITATION, QueryContext, _labels, _run_query, choose_a_move
from .world import WorldModel, outcome_features


@dataclass
class PostLearningCounts:
    steps: int = 0
    cc: int = 0
    missed: int = 0
    to_predict: int = 0
    errors: int = 0
    predicted: int = 0


def post_learning_counts(records: list[StepRecord]) -> PostLearningCounts:
    c = PostLearningCounts()
    for r in records:
        redo = r.redo or frozenset()
        c.steps += 1
        c.cc += r.cc
        c.missed += r.missed
        c.to_predict += len(r.actual)
        c.errors += r.errors
        c.predicted += len(redo)
    return c


def _pct(num: float, den: float) -> float | None:
    return 100.0 * num / den if den else None


def post_learning_pcts(c: PostLearningCounts) -> dict[str, float | None]:
    """CC% over steps, MF% over features to predict, PE% over predicted features."""
    return {"cc_pct": _pct(c.cc, c.steps), "mf_pct": _pct(c.missed, c.to_predict),
            "pe_pct": _pct(c.errors, c.predicted)}


def outcome_class(record: StepRecord) -> str:
    if record.bumped:
        return FAILURE
    return "KO" if "KO" in record.actual else "OK"


def exploitation_outcomes(records: list[StepRecord]) -> Counter:
    return Counter(outcome_class(r) for r in records if r.mode == EXPLOITATION)


def outcome_shares(counts: Counter) -> dict[str, float] | None:
    total = sum(counts.values())
    if not total:
        return None
    return {k: 100.0 * counts.get(k, 0) / total for k in ("OK", "KO", FAILURE)}


def fire_on_features(net: NetworkState, features) -> np.ndarray:
    idx = location_indices(features)
    return spike_o(idx, net.cnx_lo, net.sto, net.params.tnb_fired_o)[1]


def predict_from(net: NetworkState, fired_o, moves=MOVES) -> dict[str, frozenset[str]]:
    """Learning-free predictions for ``moves`` given the O-firing of a depart box."""
    ctx = QueryContext(net, fired_o)
    return {m: frozenset(_labels(_run_query(ctx, motor_indices(m))[0])) for m in moves}


@dataclass
class ClassCounts:
    present: int = 0
    predicted: int = 0
    hit: int = 0

    def add(self, other: ClassCounts) -> None:
        self.present += other.present
        self.predicted += other.predicted
        self.hit += other.hit

    @property
    def hit_pct(self) -> float | None:
        return _pct(self.hit, self.present)

    @property
    def correctness_pct(self) -> float | None:
        return _pct(self.hit, self.predicted)


def hit_correctness_probe(net: NetworkState, world: WorldModel) -> dict[tuple[int, str], ClassCounts]:
    """Predict every (box, move) outcome on a frozen network; counts per (room, class).

    A feature counts as hit when it is both predicted and present. Features are
    pooled by class, so a predicted name scores against the class BoxName.
    """
    table = {(room, c): ClassCounts() for room in world.rooms() for c in FEATURE_CLASSES}
    for coord in sorted(world.boxes):
        box = world.boxes[coord]
        preds = predict_from(net, fire_on_features(net, box.features))
        for move in MOVES:
            present = outcome_features(world, coord, move)
            predicted = preds[move]
            for f in present | predicted:
                cell = table[(box.room, feature_class(f))]
                cell.present += f in present
                cell.predicted += f in predicted
                cell.hit += f in present and f in predicted
    return table


def present_census(world: WorldModel) -> Counter:
    """Direct count of features to predict per (room, class), for cross-checking."""
    census = Counter()
    for coord, box in world.boxes.items():
        for move in MOVES:
            for f in outcome_features(world, coord, move):
                census[(box.room, feature_class(f))] += 1
    return census


def sound_rule_probe(net: NetworkState) -> tuple[bool, bool]:
    """Whether NorthWall follows a north move, and SouthWall a south move, from Sound alone."""
    preds = predict_from(net, fire_on_features(net, {"Sound"}), ("N", "S"))
    return "NorthWall" in preds["N"], "SouthWall" in preds["S"]


def location_type_probe(agent: AgentState, world: WorldModel, room: int,
                        rng: np.random.Generator) -> dict[frozenset[str], str]:
    """Exploitation choice outcome for one box of each distinct feature set of ``room``."""
    net = agent.net
    outcomes = {}
    for coord in sorted(world.boxes):
        box = world.boxes[coord]
        if box.room != room or box.features in outcomes:
            continue
        decision = choose_a_move(fire_on_features(net, box.features), net, rng, mode=EXPLOITATION)
        got = outcome_features(world, coord, decision.move)
        outcomes[box.features] = FAILURE if FAILURE in got else ("KO" if "KO" in got else "OK")
    return outcomes
