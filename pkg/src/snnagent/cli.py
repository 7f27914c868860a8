"""Command line: run experiments and probe saved snapshots."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, PROBES, run_experiment
from .features import FEATURE_CLASSES
from .metrics import hit_correctness_probe, sound_rule_probe
from .params import ParameterError, load_params
from .snapshot import SnapshotError, load_snapshot
from .world import WorldError, load_world


def _schedule(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("schedule must be a comma separated list of integers") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("schedule needs positive series lengths")
    return values


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snnagent", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV results")
    run.add_argument("--experiment", type=int, choices=sorted(EXPERIMENTS), default=1)
    run.add_argument("--trials", type=_positive, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--world", type=Path, help="world document (YAML); default is the bundled layout")
    run.add_argument("--schedule", type=_schedule, help="series lengths, e.g. 1,1,2,4")
    run.add_argument("--out", type=Path, default=Path("results"))
    run.add_argument("--params", type=Path, help="JSON or YAML parameter overrides")
    run.add_argument("--snapshot-every", type=int, default=0, metavar="N",
                     help="also save a snapshot every N steps")
    run.add_argument("--workers", type=_positive, default=1)
    run.add_argument("--probes", default=",".join(PROBES),
                     help=f"comma separated subset of {','.join(PROBES)} run after each series")

    probe = sub.add_parser("probe", help="probe a saved snapshot without learning")
    probe.add_argument("--snapshot", type=Path, required=True)
    probe.add_argument("--kind", choices=("hit", "sound"), default="hit")
    return parser


def _run(args) -> int:
    result = run_experiment(
        args.experiment, trials=args.trials, seed=args.seed,
        world=load_world(args.world) if args.world else None,
        schedule=args.schedule, params=load_params(args.params), out=args.out,
        snapshot_every=args.snapshot_every, workers=args.workers,
        probes=[p for p in args.probes.split(",") if p],
    )
    cc = result.global_cc()
    print(f"experiment {args.experiment}: {args.trials} trial(s), {result.labels[-1]} steps each, "
          f"global post-learning CC {cc:.1f}%; results in {args.out}")
    return 0


def _probe(args) -> int:
    agent, world = load_snapshot(args.snapshot)
    out = csv.writer(sys.stdout, lineterminator="\n")
    if args.kind == "sound":
        north, south = sound_rule_probe(agent.net)
        out.writerow(["step", "northwall_predicted", "southwall_predicted"])
        out.writerow([agent.step_count, int(north), int(south)])
        return 0
    table = hit_correctness_probe(agent.net, world)
    out.writerow(["step", "room", "feature_class", "hit_rate_pct", "correctness_pct", "present", "predicted"])
    for (room, cls), c in sorted(table.items(), key=lambda kv: (kv[0][0], FEATURE_CLASSES.index(kv[0][1]))):
        fmt = lambda x: "" if x is None else f"{x:.4f}"
        out.writerow([agent.step_count, room, cls, fmt(c.hit_pct), fmt(c.correctness_pct), c.present, c.predicted])
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return _run(args) if args.command == "run" else _probe(args)
    except (WorldError, ParameterError, SnapshotError, OSError, ValueError) as exc:
        print(f"snnagent: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
