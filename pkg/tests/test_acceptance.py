"""Acceptance criteria, each checked at its stated tolerance and time budget.

Every test reports one ``ACCEPTANCE <n> PASS|FAIL`` line; the lines are
collected and printed together in the terminal summary.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from snnagent.action_memory import boost_input_a, calculate_lr, learn_a, modulate_cnx
from snnagent.agent import run_trial
from snnagent.experiments import EXPERIMENTS, doubling_schedule, run_experiment
from snnagent.features import FAILURE, MOVES, NAMES, motor_indices
from snnagent.network import init_network, proba_new_synapses_a, proba_new_synapses_lo
from snnagent.object_memory import boost_input_lo, learn_o, spike_o
from snnagent.params import Params
from snnagent.query import make_predictions, short_term_memory_coef
from snnagent.world import load_world

pytestmark = pytest.mark.acceptance


def trial_rngs(seed: int, n: int):
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


# ---------------------------------------------------------------- 1

def test_conservation_fuzz(accept):
    params = Params(n_o=24, n_a=48)
    rng = np.random.default_rng(2024)
    net = init_network(params, rng)
    violations = 0
    t0 = time.perf_counter()
    for episode in range(10_000):
        kind = episode % 3
        if kind == 0:
            lo = np.sort(rng.choice(33, size=rng.integers(1, 6), replace=False))
            sums, fired = spike_o(lo, net.cnx_lo, net.sto, params.tnb_fired_o)
            learn_o(lo, sums, fired, net, rng)
        elif kind == 1:
            oa1 = rng.choice(params.n_o, size=rng.integers(1, 10), replace=False)
            move = MOVES[int(rng.integers(8))]
            if rng.random() < 0.3:
                oa3, actual = [net.failure_row], {FAILURE}
            else:
                oa3, actual = rng.choice(params.n_o, size=rng.integers(1, 10), replace=False), {"OK"}
            pred = [set(), {"OK"}, {"KO"}, {FAILURE}, {"OK", "#3"}][int(rng.integers(5))]
            learn_a(oa1, motor_indices(move), oa3, net, actual, pred, rng)
        else:
            make_predictions(rng.choice(params.n_o, size=rng.integers(0, 10), replace=False), net)
        violations += bool(net.check_conservation())
    elapsed = time.perf_counter() - t0
    accept(1, violations == 0 and elapsed < 10,
           f"{violations} conservation violations in 10000 episodes, {elapsed:.1f} s (< 10 s)")


# ---------------------------------------------------------------- 2, 3

def _early_cc(schedule, series):
    world = load_world().with_events({})
    ccs = []
    for rng in trial_rngs(99, 50):
        res = run_trial(world, schedule, Params(), rng)
        recs = res.records[series]
        ccs.append(100.0 * sum(r.cc for r in recs) / len(recs))
    return float(np.mean(ccs))


def test_first_step_law(accept):
    t0 = time.perf_counter()
    cc = _early_cc([1], 0)
    elapsed = time.perf_counter() - t0
    accept(2, cc == 0.0 and elapsed < 1, f"series-1 CC {cc:.1f}% over 50 trials (= 0.0), {elapsed:.2f} s (< 1 s)")


def test_one_shot_recall(accept):
    t0 = time.perf_counter()
    cc = _early_cc([1, 1], 1)
    elapsed = time.perf_counter() - t0
    accept(3, cc >= 95 and elapsed < 5, f"series-2 CC {cc:.1f}% over 50 trials (>= 95), {elapsed:.2f} s (< 5 s)")


# ---------------------------------------------------------------- 4, 5, 6

@pytest.fixture(scope="module")
def desk_exp1():
    t0 = time.perf_counter()
    result = run_experiment(1, trials=10, seed=1, schedule=doubling_schedule(4096), probes=["hit"])
    return result, time.perf_counter() - t0


def test_desk_scale_experiment1(desk_exp1, accept):
    result, elapsed = desk_exp1
    last = len(result.labels) - 1
    cc = result.global_cc()
    ok_hit, ok_corr = result.hit(last, 1, "OK")
    ko_hit, _ = result.hit(last, 1, "KO")
    good = cc >= 88 and ok_hit >= 88 and ko_hit >= 85 and ok_corr >= 85 and elapsed < 300
    accept(4, good, f"global CC {cc:.1f} (>= 88), room-1 OK hit {ok_hit:.1f} (>= 88), KO hit {ko_hit:.1f} "
                    f"(>= 85), OK correctness {ok_corr:.1f} (>= 85), {elapsed:.0f} s (< 300 s)")


def test_generalisation_to_unseen_room(desk_exp1, accept):
    result, _ = desk_exp1
    last = len(result.labels) - 1
    ok_hit, _ = result.hit(last, 2, "OK")
    sound_hit, _ = result.hit(last, 2, "Sound")
    accept(5, ok_hit >= 70 and sound_hit == 0,
           f"room-2 OK hit {ok_hit:.1f} (>= 70), room-2 Sound hit {sound_hit:.1f} (= 0)")


def test_decision_quality(desk_exp1, accept):
    result, _ = desk_exp1
    checked, bad = 0, []
    for row in result.outcome_rows():
        if row["series"] <= 512 or row["exploitation_steps"] < 20:
            continue
        checked += 1
        if not (row["ok_pct"] > row["ko_pct"] and row["ok_pct"] > row["failure_pct"]):
            bad.append(row["series"])
    accept(6, checked > 0 and not bad,
           f"{checked} series checked after step 512, OK share not dominant in {bad or 'none'}")


# ---------------------------------------------------------------- 7

def test_experiment3_crossover(accept):
    t0 = time.perf_counter()
    result = run_experiment(3, trials=20, seed=3, probes=["sound"])
    elapsed = time.perf_counter() - t0
    rows = result.sound_rows()
    sound_step = EXPERIMENTS[3].events["sound"]
    first_after = next(i for i, label in enumerate(result.labels) if label >= sound_step)
    door_step = EXPERIMENTS[3].events["door"]
    before = [r["northwall_pred_pct"] for r, label in zip(rows, result.labels) if door_step <= label < sound_step]
    peak = max(before)
    window = rows[first_after:first_after + 15]
    hits = [r["series"] for r in window
            if r["southwall_pred_pct"] > r["northwall_pred_pct"] and r["northwall_pred_pct"] <= 0.5 * peak]
    accept(7, bool(hits) and peak > 0 and elapsed < 600,
           f"pre-event NorthWall peak {peak:.0f}%, crossover first at series {hits[0] if hits else None} "
           f"(within 15 series after step {sound_step}), {elapsed:.0f} s (< 600 s)")


# ---------------------------------------------------------------- 8

def test_no_catastrophic_forgetting(accept):
    t0 = time.perf_counter()
    sched = doubling_schedule(8192)
    closed = run_experiment(1, trials=6, seed=8, schedule=sched, probes=["hit"])
    opened = run_experiment(2, trials=6, seed=8, schedule=sched, probes=["hit"])
    elapsed = time.perf_counter() - t0
    last = len(closed.labels) - 1
    drops = {c: closed.hit(last, 1, c)[0] - opened.hit(last, 1, c)[0] for c in ("OK", "KO")}
    accept(8, all(d < 10 for d in drops.values()) and elapsed < 600,
           f"room-1 hit drop after door opening: OK {drops['OK']:.1f}, KO {drops['KO']:.1f} points (< 10), "
           f"{elapsed:.0f} s (< 600 s)")


# ---------------------------------------------------------------- 9

def test_inhibition_properties(accept):
    world = load_world().with_events({"door": 512})
    trained = run_trial(world, doubling_schedule(2048), Params(), np.random.default_rng(9),
                        redo_prediction=False).agent.net
    rng = np.random.default_rng(10)
    nets = [trained, init_network(Params(), rng)]
    names = set(NAMES)
    queries = violations = 0
    t0 = time.perf_counter()
    while queries < 100_000:
        net = nets[queries // 8 % 2]
        if rng.random() < 0.5:
            oa1 = rng.choice(100, size=rng.integers(1, 16), replace=False)
        else:
            feats = rng.choice(33, size=rng.integers(1, 5), replace=False)
            oa1 = spike_o(feats, net.cnx_lo, net.sto)[1]
        for labels in make_predictions(oa1, net).values():
            s = set(labels)
            violations += ({"OK", "KO"} <= s) or len(s & names) > 1 or (FAILURE in s and len(s) > 1)
        queries += len(MOVES)
    elapsed = time.perf_counter() - t0
    accept(9, violations == 0 and elapsed < 30,
           f"{violations} exclusion violations in {queries} queries, {elapsed:.1f} s (< 30 s)")


# ---------------------------------------------------------------- 10, 11

def test_determinism(tmp_path: Path, accept):
    t0 = time.perf_counter()
    for name in ("a", "b"):
        run_experiment(1, trials=1, seed=5, schedule=doubling_schedule(1024), out=tmp_path / name)
    elapsed = time.perf_counter() - t0
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same_csv = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    snaps = [hashlib.sha256((tmp_path / n / "snapshots" / "trial000_final.zip").read_bytes()).hexdigest()
             for n in ("a", "b")]
    accept(10, same_csv and snaps[0] == snaps[1] and len(files) >= 4 and elapsed < 30,
           f"{len(files)} CSVs identical: {same_csv}, snapshot sha256 equal: {snaps[0] == snaps[1]}, "
           f"{elapsed:.1f} s (< 30 s)")


def test_performance_envelope(tmp_path: Path, accept):
    run_experiment(1, trials=1, seed=11, schedule=[2048], out=tmp_path)
    seconds = json.loads((tmp_path / "manifest.json").read_text())["wall_clock_seconds"]["per_trial"][0]
    accept(11, seconds <= 60, f"2048-step trial took {seconds:.1f} s (<= 60 s), recorded in manifest")


# ---------------------------------------------------------------- 12

def _rel_ok(got, want) -> bool:
    return abs(got - want) <= 1e-9 * max(abs(want), 1e-300)


def test_formula_oracles(accept):
    rng = np.random.default_rng(12)
    params = Params()
    t0 = time.perf_counter()
    checked = {k: 0 for k in ("proba_lo", "proba_a", "boost_o", "boost_a", "lr", "modulate", "stm")}
    bad = []
    for _ in range(100):
        # synapse growth probabilities
        for key, shape, curve, fn in (("proba_lo", (33, 100), (300, 150, 2), proba_new_synapses_lo),
                                      ("proba_a", (101, 400), (400, 300, 1.2), proba_new_synapses_a)):
            cnx = rng.integers(0, 40, size=shape)
            rows = sorted(rng.choice(shape[0], size=rng.integers(1, 12), replace=False).tolist())
            rates = [math.tanh((-sum(cnx[r].tolist()) + curve[0]) / curve[1]) + curve[2] for r in rows]
            want = [x / math.fsum(rates) for x in rates]
            got = fn(rows, cnx, params)
            checked[key] += 1
            if not all(_rel_ok(g, w) for g, w in zip(got, want)):
                bad.append(key)
        # boosts
        sums = rng.integers(0, 300, size=100).astype(float)
        last = rng.integers(1, 20000, size=100)
        learning = rng.choice(100, size=rng.integers(0, 8), replace=False).tolist()
        got_o = boost_input_lo(learning, sums, last, 50)
        got_a = boost_input_a(learning, dict(enumerate(sums.tolist())), last, 800)
        for n in range(100):
            if n in learning:
                continue
            if not _rel_ok(got_o[n], sums[n] * (last[n] + 50) / 50):
                bad.append("boost_o")
            if not _rel_ok(got_a[n], sums[n] * (last[n] + 800) / 800):
                bad.append("boost_a")
        checked["boost_o"] += 1
        checked["boost_a"] += 1
        # learning rates
        learn = rng.choice(400, size=rng.integers(2, 10), replace=False).tolist()
        last_a = rng.integers(1, 20000, size=400)
        lo, hi = min(last_a[learn]), max(last_a[learn])
        got = calculate_lr(learn, last_a, 30)
        for a in learn:
            want = 1 if hi == lo else max(1, min(30, math.ceil((int(last_a[a]) - lo) * 30 / (hi - lo))))
            if hi > lo and got[a] != want:
                bad.append("lr")
        checked["lr"] += 1
        # modulation
        cnx = rng.integers(0, 10, size=(100, 400))
        rows = sorted(rng.choice(100, size=rng.integers(2, 14), replace=False).tolist())
        fw = {r: sum(cnx[r].tolist()) for r in rows}
        mn, mx = min(fw.values()), max(fw.values())
        mod = modulate_cnx(rows, cnx, params)
        for r in rows:
            coef = 1.0 if mx == mn else fw[r] * (-1.0 / (mx - mn)) + 2 - mn * (-1.0 / (mx - mn))
            if not all(_rel_ok(g, w * coef) for g, w in zip(mod[r][:50], cnx[r][:50].tolist()) if w):
                bad.append("modulate")
        checked["modulate"] += 1
        # short-term memory coefficient
        fired = rng.choice(400, size=rng.integers(1, 9), replace=False).tolist()
        want = 1 + 1 / (math.fsum(int(last_a[a]) for a in fired) / len(fired))
        if not _rel_ok(short_term_memory_coef(last_a, fired), want):
            bad.append("stm")
        checked["stm"] += 1
    elapsed = time.perf_counter() - t0
    accept(12, not bad and min(checked.values()) >= 100 and elapsed < 5,
           f"{sum(checked.values())} oracle comparisons over {len(checked)} formulas, "
           f"mismatches: {sorted(set(bad)) or 'none'}, {elapsed:.2f} s (< 5 s)")
