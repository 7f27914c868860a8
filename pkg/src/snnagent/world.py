"""Grid universe: boxes carrying location features, walls, scripted events.

Worlds are data. A world document is a YAML file::

    format: snnagent-world
    version: 1
    boxes:
      - {at: [x, y], room: 1, features: [OK, SouthWall, "#0"]}
    events:
      - {name: door, step: 2048, kind: open_door,
         walls: [{at: [2, 0], wall: EastWall}]}
      - {name: sound, step: 4549, kind: move_feature, feature: Sound,
         from: [[3, 3]], to: [[3, -1]]}

An optional ``extent: {min: [x, y], max: [x, y]}`` bounds the grid; every box
must lie inside it. An optional ``exclusions`` section is ignored on load and
only documents the fixed mutual-exclusion table (see :func:`exclusion_table`).
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .features import (
    FAILURE,
    L_INDEX,
    LOCATION_FEATURES,
    MOVE_BLOCKERS,
    MOVE_DELTAS,
    MOVES,
    NAMES,
    WALLS,
    canonical_move,
    exclusive,
)

FORMAT_NAME = "snnagent-world"
FORMAT_VERSION = 1

Coord = tuple[int, int]

# wall feature -> direction whose neighbour must exist when the wall is absent
_WALL_FOR_DIR = {"N": "NorthWall", "E": "EastWall", "S": "SouthWall", "W": "WestWall"}


class WorldError(ValueError):
    """Malformed world document or violated world invariant."""


@dataclass
class Box:
    coord: Coord
    features: frozenset[str]
    room: int = 1

    @property
    def walls(self) -> frozenset[str]:
        """Edges (N/E/S/W) closed by a wall feature."""
        return frozenset(d for d, w in _WALL_FOR_DIR.items() if w in self.features)


@dataclass
class OpenDoor:
    walls: list[tuple[Coord, str]]


@dataclass
class MoveFeature:
    feature: str
    sources: list[Coord]
    targets: list[Coord]


@dataclass
class WorldEvent:
    name: str
    at_step: int
    action: OpenDoor | MoveFeature


@dataclass
class WorldModel:
    boxes: dict[Coord, Box]
    events: list[WorldEvent] = field(default_factory=list)
    applied_events: int = 0
    source_text: str = ""

    def __contains__(self, coord) -> bool:
        return tuple(coord) in self.boxes

    def features(self, coord: Coord) -> frozenset[str]:
        return self.box(coord).features

    def box(self, coord: Coord) -> Box:
        try:
            return self.boxes[tuple(coord)]
        except KeyError:
            raise WorldError(f"no box at {tuple(coord)}") from None

    def rooms(self) -> list[int]:
        return sorted({b.room for b in self.boxes.values()})

    def checksum(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()

    def copy(self) -> WorldModel:
        return copy.deepcopy(self)

    def with_events(self, schedule: dict[str, int]) -> WorldModel:
        """Copy keeping only the named events, re-timed to the given steps.

        Events not named in ``schedule`` are dropped. Unknown names raise.
        """
        known = {e.name: e for e in self.events}
        missing = sorted(set(schedule) - set(known))
        if missing:
            raise WorldError(f"world defines no event named {', '.join(missing)}")
        world = self.copy()
        world.events = sorted(
            (WorldEvent(n, int(s), copy.deepcopy(known[n].action)) for n, s in schedule.items()),
            key=lambda e: e.at_step,
        )
        world.applied_events = 0
        return world

    def apply_events(self, current_step: int) -> list[WorldEvent]:
        """Apply, in order and exactly once, every pending event due by ``current_step``."""
        applied = []
        while self.applied_events < len(self.events):
            event = self.events[self.applied_events]
            if event.at_step > current_step:
                break
            _apply(self.boxes, event)
            self.applied_events += 1
            applied.append(event)
        return applied

    def replay(self, count: int) -> None:
        """Apply the next ``count`` pending events regardless of their steps."""
        if count > len(self.events) - self.applied_events:
            raise WorldError("more events to replay than are pending")
        for _ in range(count):
            _apply(self.boxes, self.events[self.applied_events])
            self.applied_events += 1


def _apply(boxes: dict[Coord, Box], event: WorldEvent) -> None:
    action = event.action
    if isinstance(action, OpenDoor):
        for coord, wall in action.walls:
            box = boxes[coord]
            box.features = box.features - {wall}
    else:
        for coord in action.sources:
            box = boxes[coord]
            box.features = box.features - {action.feature}
        for coord in action.targets:
            box = boxes[coord]
            box.features = box.features | {action.feature}


def apply_events(world: WorldModel, current_step: int) -> WorldModel:
    if current_step < 1:
        raise ValueError("current_step must be >= 1")
    world.apply_events(current_step)
    return world


def calculate_new_loc(world: WorldModel, depart: Coord, move: str):
    """Physics of one step.

    Returns ``(arrival, features)``. On a wall bump the agent stays put and
    ``features`` is None. Diagonal moves are blocked by either component wall
    of the depart box.
    """
    move = canonical_move(move)
    box = world.box(depart)
    if any(w in box.features for w in MOVE_BLOCKERS[move]):
        return box.coord, None
    dx, dy = MOVE_DELTAS[move]
    target = (box.coord[0] + dx, box.coord[1] + dy)
    if target not in world.boxes:
        # unreachable for validated worlds
        raise WorldError(f"move {move} from {box.coord} leaves the world")
    return target, world.boxes[target].features


def outcome_features(world: WorldModel, depart: Coord, move: str) -> frozenset[str]:
    """Features to predict for a move: arrival features, or ``{Failure}``."""
    _, feats = calculate_new_loc(world, depart, move)
    return frozenset((FAILURE,)) if feats is None else feats


def exclusion_table() -> list[list[str]]:
    pairs = []
    for i, a in enumerate(LOCATION_FEATURES):
        for b in LOCATION_FEATURES[i + 1:]:
            if exclusive(a, b):
                pairs.append([a, b])
    pairs.extend([FAILURE, f] for f in LOCATION_FEATURES)
    return pairs


# --------------------------------------------------------------------------- loading


def _coord(value, where: str) -> Coord:
    if not (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
        raise WorldError(f"{where}: expected [x, y] integer pair, got {value!r}")
    return (value[0], value[1])


def check_box(coord: Coord, features: frozenset[str], where: str = "") -> None:
    prefix = f"{where}box {coord}"
    for f in features:
        if f not in L_INDEX:
            raise WorldError(f"{prefix}: unknown location feature {f!r}")
    if {"OK", "KO"} <= features:
        raise WorldError(f"{prefix}: OK and KO are mutually exclusive")
    names = sorted(features & set(NAMES))
    if len(names) > 1:
        raise WorldError(f"{prefix}: several names {names}; box names are mutually exclusive")


def check_closure(boxes: dict[Coord, Box], when: str = "") -> None:
    """Every unblocked move from every box must land on an existing box."""
    for coord, box in boxes.items():
        for move in MOVES:
            if any(w in box.features for w in MOVE_BLOCKERS[move]):
                continue
            dx, dy = MOVE_DELTAS[move]
            if (coord[0] + dx, coord[1] + dy) not in boxes:
                raise WorldError(
                    f"box {coord}{when}: move {move} is not blocked by a wall "
                    f"but leads outside the world (world must be closed)"
                )


def _line(node_items, i) -> str:
    try:
        return f"line {node_items[i].start_mark.line + 1}: "
    except (IndexError, AttributeError):
        return ""


def parse_world(text: str) -> WorldModel:
    """Parse and validate a world document."""
    try:
        root = yaml.compose(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise WorldError(f"cannot parse world document{loc}: {exc}") from None
    if not isinstance(doc, dict):
        raise WorldError("world document must be a mapping")
    if doc.get("format") != FORMAT_NAME:
        raise WorldError(f"format must be {FORMAT_NAME!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise WorldError(f"unsupported world document version {doc.get('version')!r}")

    box_nodes = []
    event_nodes = []
    for key, value in root.value:
        if key.value == "boxes" and isinstance(value, yaml.SequenceNode):
            box_nodes = value.value
        if key.value == "events" and isinstance(value, yaml.SequenceNode):
            event_nodes = value.value

    raw_boxes = doc.get("boxes") or []
    if not isinstance(raw_boxes, list) or not raw_boxes:
        raise WorldError("world needs a non-empty 'boxes' list")
    boxes: dict[Coord, Box] = {}
    for i, entry in enumerate(raw_boxes):
        where = _line(box_nodes, i)
        if not isinstance(entry, dict) or "at" not in entry:
            raise WorldError(f"{where}box entry needs an 'at' coordinate")
        coord = _coord(entry["at"], f"{where}box")
        if coord in boxes:
            raise WorldError(f"{where}box {coord} defined twice")
        feats = entry.get("features") or []
        if not isinstance(feats, list):
            raise WorldError(f"{where}box {coord}: features must be a list")
        feats = frozenset(str(f) for f in feats)
        check_box(coord, feats, where)
        room = entry.get("room", 1)
        if not isinstance(room, int):
            raise WorldError(f"{where}box {coord}: room must be an integer")
        boxes[coord] = Box(coord, feats, room)
    if "extent" in doc:
        _check_extent(doc["extent"], boxes)
    check_closure(boxes)

    events = []
    for i, entry in enumerate(doc.get("events") or []):
        where = _line(event_nodes, i)
        events.append(_parse_event(entry, boxes, where))
    events.sort(key=lambda e: e.at_step)
    names = [e.name for e in events]
    if len(set(names)) != len(names):
        raise WorldError("event names must be unique")

    world = WorldModel(boxes, events, 0, text)
    # events must keep the world valid whatever subset of them is scheduled
    for event in events:
        trial = copy.deepcopy(boxes)
        _apply(trial, event)
        for coord, box in trial.items():
            check_box(coord, box.features, f"after event {event.name!r}: ")
        check_closure(trial, f" after event {event.name!r}")
    trial = copy.deepcopy(boxes)
    for event in events:
        _apply(trial, event)
    check_closure(trial, " after all events")
    return world


def _check_extent(extent, boxes) -> None:
    if not isinstance(extent, dict) or set(extent) != {"min", "max"}:
        raise WorldError("extent must be a mapping with 'min' and 'max' coordinates")
    (x0, y0), (x1, y1) = _coord(extent["min"], "extent min"), _coord(extent["max"], "extent max")
    for x, y in boxes:
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            raise WorldError(f"box {(x, y)} lies outside the declared extent")


def _parse_event(entry, boxes, where) -> WorldEvent:
    if not isinstance(entry, dict):
        raise WorldError(f"{where}event must be a mapping")
    name = str(entry.get("name", ""))
    if not name:
        raise WorldError(f"{where}event needs a name")
    step = entry.get("step")
    if not isinstance(step, int) or step < 1:
        raise WorldError(f"{where}event {name!r}: step must be an integer >= 1")
    kind = entry.get("kind")

    def existing(value):
        c = _coord(value, f"{where}event {name!r}")
        if c not in boxes:
            raise WorldError(f"{where}event {name!r} refers to missing box {c}")
        return c

    if kind == "open_door":
        walls = []
        for w in entry.get("walls") or []:
            c = existing(w.get("at"))
            if w.get("wall") not in WALLS:
                raise WorldError(f"{where}event {name!r}: {w.get('wall')!r} is not a wall feature")
            walls.append((c, w["wall"]))
        return WorldEvent(name, step, OpenDoor(walls))
    if kind == "move_feature":
        feature = entry.get("feature")
        if feature not in L_INDEX:
            raise WorldError(f"{where}event {name!r}: unknown feature {feature!r}")
        sources = [existing(c) for c in entry.get("from") or []]
        targets = [existing(c) for c in entry.get("to") or []]
        return WorldEvent(name, step, MoveFeature(feature, sources, targets))
    raise WorldError(f"{where}event {name!r}: unknown kind {kind!r}")


def load_world(source: str | Path | None = None) -> WorldModel:
    """Load a world from a path, from document text, or the bundled default."""
    if source is None:
        text = resources.files("snnagent.data").joinpath("default_world.yaml").read_text()
    elif isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise WorldError(f"cannot read world document {path}: {exc.strerror}") from None
    else:
        text = source
    return parse_world(text)
