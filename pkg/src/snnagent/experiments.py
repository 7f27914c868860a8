"""The three experiments: trial runs, per-series aggregation and result files."""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .agent import AgentState, new_agent, run_trial, series_labels
from .features import FAILURE, FEATURE_CLASSES
from .metrics import (
    ClassCounts,
    exploitation_outcomes,
    hit_correctness_probe,
    location_type_probe,
    post_learning_counts,
    post_learning_pcts,
    sound_rule_probe,
)
from .params import Params
from .snapshot import save_snapshot
from .world import WorldModel, load_world


def doubling_schedule(total: int) -> list[int]:
    """[1, 1, 2, 4, ..., total/2]: series whose cumulative lengths are the powers of two."""
    if total < 1 or total & (total - 1):
        raise ValueError("total must be a power of two")
    sched = [1]
    while sum(sched) < total:
        sched.append(sum(sched))
    return sched


@dataclass(frozen=True)
class ExperimentSpec:
    schedule: tuple[int, ...]
    events: dict[str, int]


EXPERIMENTS = {
    1: ExperimentSpec(tuple(doubling_schedule(65536)), {}),
    2: ExperimentSpec(tuple(doubling_schedule(65536)), {"door": 2048}),
    3: ExperimentSpec(tuple(doubling_schedule(2048) + [100] * 50), {"door": 2048, "sound": 2048 + 25 * 100 + 1}),
}

PROBE_ROOM = 2   # room whose location types are probed under exploitation


@dataclass
class TrialSummary:
    """What one trial contributes to the aggregate files (small enough to pickle)."""
    index: int
    postlearning: list[dict]
    outcomes: list[Counter]
    hits: list[dict] | None
    sound: list[tuple[bool, bool]] | None
    location_types: list[dict] | None
    applied_events: list[tuple[str, int]]
    seconds: float
    steps: int
    net_digest: str
    snapshots: dict[str, str] = field(default_factory=dict)


PROBES = ("hit", "sound", "types")


def _probes(probe_rng: np.random.Generator, names) -> dict:
    every = {
        "hit": lambda agent, world: hit_correctness_probe(agent.net, world),
        "sound": lambda agent, world: sound_rule_probe(agent.net),
        "types": lambda agent, world: location_type_probe(agent, world, PROBE_ROOM, probe_rng),
    }
    return {n: every[n] for n in names}


def run_one_trial(index: int, seed_seq: np.random.SeedSequence, world: WorldModel, schedule,
                  params: Params, out: Path | None = None, snapshot_every: int = 0,
                  probes=PROBES) -> TrialSummary:
    main_seq, probe_seq = seed_seq.spawn(2)
    rng = np.random.Generator(np.random.PCG64(main_seq))
    probe_rng = np.random.Generator(np.random.PCG64(probe_seq))
    snapshots: dict[str, str] = {}
    snap_dir = out / "snapshots" if out is not None else None
    if snap_dir is not None:
        snap_dir.mkdir(parents=True, exist_ok=True)

    agent = new_agent(params, rng)
    def save_periodic(a: AgentState, w: WorldModel) -> None:
        if a.step_count % snapshot_every == 0:
            name = f"trial{index:03d}_step{a.step_count:06d}.zip"
            snapshots[name] = save_snapshot(snap_dir / name, a, w)

    hook = save_periodic if snap_dir is not None and snapshot_every > 0 else None

    result = run_trial(world, schedule, params, rng, _probes(probe_rng, probes), agent=agent, on_step=hook)
    if snap_dir is not None:
        name = f"trial{index:03d}_final.zip"
        snapshots[name] = save_snapshot(snap_dir / name, result.agent, result.world)

    return TrialSummary(
        index=index,
        postlearning=[post_learning_pcts(post_learning_counts(s)) for s in result.records],
        outcomes=[exploitation_outcomes(s) for s in result.records],
        hits=result.probes.get("hit"),
        sound=result.probes.get("sound"),
        location_types=result.probes.get("types"),
        applied_events=result.applied_events,
        seconds=result.seconds,
        steps=sum(len(s) for s in result.records),
        net_digest=result.net_digest,
        snapshots=snapshots,
    )


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.4f}"
    return str(x)


@dataclass
class ExperimentResult:
    labels: list[int]
    trials: list[TrialSummary]

    def postlearning_rows(self) -> list[dict]:
        rows = []
        for s, label in enumerate(self.labels):
            per = [t.postlearning[s] for t in self.trials]
            rows.append({"series": label, "cc_pct": _mean(p["cc_pct"] for p in per),
                         "mf_pct_of_features_to_predict": _mean(p["mf_pct"] for p in per),
                         "pe_pct_of_predicted_features": _mean(p["pe_pct"] for p in per)})
        return rows

    def global_cc(self) -> float | None:
        """Mean over trials of each trial's CC% over all its steps."""
        per_trial = []
        for t in self.trials:
            steps = [b - a for a, b in zip([0] + self.labels[:-1], self.labels)]
            cc = math.fsum(p["cc_pct"] * n for p, n in zip(t.postlearning, steps) if p["cc_pct"] is not None)
            per_trial.append(cc / sum(steps))
        return _mean(per_trial)

    def hit_rows(self) -> list[dict]:
        rows = []
        for s, label in enumerate(self.labels):
            keys = sorted({k for t in self.trials for k in t.hits[s]},
                          key=lambda k: (k[0], FEATURE_CLASSES.index(k[1])))
            for room, cls in keys:
                cells = [t.hits[s][(room, cls)] for t in self.trials]
                rows.append({"series": label, "room": room, "feature_class": cls,
                             "hit_rate_pct": _mean(c.hit_pct for c in cells),
                             "correctness_pct": _mean(c.correctness_pct for c in cells),
                             "present": sum(c.present for c in cells),
                             "predicted": sum(c.predicted for c in cells)})
        return rows

    def hit(self, series: int, room: int, cls: str) -> tuple[float | None, float | None]:
        cells: list[ClassCounts] = [t.hits[series][(room, cls)] for t in self.trials]
        return _mean(c.hit_pct for c in cells), _mean(c.correctness_pct for c in cells)

    def outcome_rows(self) -> list[dict]:
        rows = []
        for s, label in enumerate(self.labels):
            pooled = Counter()
            for t in self.trials:
                pooled.update(t.outcomes[s])
            total = sum(pooled.values())
            row = {"series": label, "exploitation_steps": total, "no_data": int(total == 0)}
            for k, col in (("OK", "ok"), ("KO", "ko"), (FAILURE, "failure")):
                row[f"{col}_count"] = pooled.get(k, 0)
                row[f"{col}_pct"] = 100.0 * pooled.get(k, 0) / total if total else None
            rows.append(row)
        return rows

    def sound_rows(self) -> list[dict]:
        rows = []
        for s, label in enumerate(self.labels):
            n = len(self.trials)
            rows.append({"series": label,
                         "northwall_pred_pct": 100.0 * sum(t.sound[s][0] for t in self.trials) / n,
                         "southwall_pred_pct": 100.0 * sum(t.sound[s][1] for t in self.trials) / n})
        return rows

    def location_type_rows(self) -> list[dict]:
        rows = []
        for s, label in enumerate(self.labels):
            types = sorted({k for t in self.trials for k in t.location_types[s]}, key=sorted)
            for ftype in types:
                got = Counter(t.location_types[s][ftype] for t in self.trials if ftype in t.location_types[s])
                n = sum(got.values())
                rows.append({"series": label, "room": PROBE_ROOM, "location_type": " ".join(sorted(ftype)),
                             "ok_pct": 100.0 * got["OK"] / n, "ko_pct": 100.0 * got["KO"] / n,
                             "failure_pct": 100.0 * got[FAILURE] / n})
        return rows


POSTLEARNING_HEADER = ["series", "cc_pct", "mf_pct_of_features_to_predict", "pe_pct_of_predicted_features"]
HIT_HEADER = ["series", "room", "feature_class", "hit_rate_pct", "correctness_pct", "present", "predicted"]
OUTCOME_HEADER = ["series", "exploitation_steps", "no_data", "ok_count", "ko_count", "failure_count",
                  "ok_pct", "ko_pct", "failure_pct"]
SOUND_HEADER = ["series", "northwall_pred_pct", "southwall_pred_pct"]
TYPE_HEADER = ["series", "room", "location_type", "ok_pct", "ko_pct", "failure_pct"]


def write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(row[h]) for h in header])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def _versions() -> dict:
    import yaml
    return {"snnagent": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "pyyaml": yaml.__version__}


def _trial_job(args):
    return run_one_trial(*args)


def run_experiment(experiment: int, trials: int = 1, seed: int = 0, world: WorldModel | None = None,
                   schedule=None, params: Params | None = None, out: str | Path | None = None,
                   snapshot_every: int = 0, workers: int = 1, events: dict[str, int] | None = None,
                   probes=PROBES) -> ExperimentResult:
    """Run ``trials`` independent trials of an experiment and write the result files.

    Trial ``i`` draws from the ``i``-th child of ``SeedSequence(seed)``, so a
    trial's outcome does not depend on how many workers run it.
    """
    if experiment not in EXPERIMENTS:
        raise ValueError(f"experiment must be one of {sorted(EXPERIMENTS)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    unknown = sorted(set(probes) - set(PROBES))
    if unknown:
        raise ValueError(f"unknown probes: {', '.join(unknown)}")
    probes = tuple(p for p in PROBES if p in set(probes))
    spec = EXPERIMENTS[experiment]
    schedule = [int(s) for s in (schedule or spec.schedule)]
    params = params or Params()
    base = world or load_world()
    world = base.with_events(spec.events if events is None else events)
    out_dir = Path(out) if out is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    children = np.random.SeedSequence(seed).spawn(trials)
    jobs = [(i, children[i], world, schedule, params, out_dir, snapshot_every, probes) for i in range(trials)]
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_trial_job, jobs))
    else:
        summaries = [_trial_job(j) for j in jobs]
    summaries.sort(key=lambda t: t.index)
    result = ExperimentResult(series_labels(schedule), summaries)

    if out_dir is not None:
        write_csv(out_dir / "postlearning.csv", POSTLEARNING_HEADER, result.postlearning_rows())
        write_csv(out_dir / "outcomes.csv", OUTCOME_HEADER, result.outcome_rows())
        if "hit" in probes:
            write_csv(out_dir / "hit_correctness.csv", HIT_HEADER, result.hit_rows())
        if "sound" in probes:
            write_csv(out_dir / "soundrule.csv", SOUND_HEADER, result.sound_rows())
        if "types" in probes:
            write_csv(out_dir / "location_types.csv", TYPE_HEADER, result.location_type_rows())
        manifest = {
            "experiment": experiment,
            "seed": seed,
            "trials": trials,
            "workers": workers,
            "schedule": schedule,
            "total_steps": sum(schedule),
            "params": params.to_dict(),
            "world_sha256": world.checksum(),
            "events": {e.name: e.at_step for e in world.events},
            "probes": list(probes),
            "versions": _versions(),
            "wall_clock_seconds": {
                "per_trial": [round(t.seconds, 3) for t in summaries],
                "total": round(time.perf_counter() - t0, 3),
            },
            "trial_results": [
                {"trial": t.index, "steps": t.steps, "applied_events": t.applied_events,
                 "network_sha256": t.net_digest, "snapshots": t.snapshots}
                for t in summaries
            ],
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return result
