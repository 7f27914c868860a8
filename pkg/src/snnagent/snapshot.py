"""Versioned, bit-exact snapshots of an agent (network, RNG, position) and its world."""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from pathlib import Path

import numpy as np

from .agent import AgentState
from .network import _ARRAYS, NetworkState
from .params import Params
from .world import WorldModel, parse_world

SNAPSHOT_FORMAT = "snnagent-snapshot"
SNAPSHOT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


class SnapshotError(ValueError):
    pass


def _metadata(agent: AgentState, world: WorldModel) -> dict:
    return {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "params": agent.net.params.to_dict(),
        "step_count": agent.step_count,
        "depart": list(agent.depart),
        "prev_fired_o": [int(o) for o in agent.prev_fired_o],
        "rng": {"bit_generator": agent.rng.bit_generator.state["bit_generator"],
                "state": agent.rng.bit_generator.state},
        "world": {"text": world.source_text,
                  "events": {e.name: e.at_step for e in world.events},
                  "applied": world.applied_events},
    }


def snapshot_bytes(agent: AgentState, world: WorldModel) -> bytes:
    """Serialise to a zip archive; identical states give identical bytes."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        info = zipfile.ZipInfo("metadata.json", _EPOCH)
        zf.writestr(info, json.dumps(_metadata(agent, world), sort_keys=True, indent=1))
        for name in _ARRAYS:
            arr = io.BytesIO()
            np.save(arr, np.ascontiguousarray(getattr(agent.net, name)), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", _EPOCH), arr.getvalue())
    return buf.getvalue()


def save_snapshot(path: str | Path, agent: AgentState, world: WorldModel) -> str:
    """Write a snapshot file and return its sha256."""
    data = snapshot_bytes(agent, world)
    path = Path(path)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc.strerror}") from None
    return hashlib.sha256(data).hexdigest()


def load_snapshot(path: str | Path) -> tuple[AgentState, WorldModel]:
    path = Path(path)
    try:
        zf = zipfile.ZipFile(path)
    except (OSError, zipfile.BadZipFile) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from None
    with zf:
        meta = json.loads(zf.read("metadata.json"))
        if meta.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotError(f"{path} is not a snapshot")
        if meta.get("version") != SNAPSHOT_VERSION:
            raise SnapshotError(f"{path}: unsupported snapshot version {meta.get('version')}")
        arrays = {n: np.load(io.BytesIO(zf.read(f"{n}.npy")), allow_pickle=False) for n in _ARRAYS}
    params = Params.from_dict(meta["params"])
    net = NetworkState(params, **arrays)
    bit_gen = getattr(np.random, meta["rng"]["bit_generator"])()
    bit_gen.state = meta["rng"]["state"]
    agent = AgentState(tuple(meta["depart"]), np.array(meta["prev_fired_o"], dtype=np.intp),
                       int(meta["step_count"]), net, np.random.Generator(bit_gen))
    w = meta["world"]
    world = parse_world(w["text"]).with_events(w["events"])
    world.replay(int(w["applied"]))
    return agent, world
