"""Querying the network for an action's outcome, and the decision pipeline."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from .action_memory import gated_sums, modulation_coefs
from .features import EXCLUSION, EXCLUSION_LISTS, FAILURE, LOCATION_FEATURES, MOVES, motor_indices
from .network import NetworkState, as_index

log = logging.getLogger(__name__)

EXPLORATION = "Exploration"
EXPLOITATION = "Exploitation"
MODES = (EXPLORATION, EXPLOITATION)


class QueryContext:
    """Matrices derived from a frozen network, shared by the queries of one decision.

    Only connections above the noise thresholds transmit backward input, so
    the denoised copies are computed once here.
    """

    def __init__(self, net: NetworkState, input_oa1):
        p = net.params
        self.net = net
        self.params = p
        self.input_oa1 = as_index(input_oa1)
        if self.input_oa1.size:
            coefs = modulation_coefs(self.input_oa1, net.cnx_oa1, p)
            self.sum_a1 = coefs @ net.cnx_oa1[self.input_oa1]
        else:
            self.sum_a1 = np.zeros(p.n_a)
        self.ma2_forward = net.cnx_ma2.sum(axis=1)
        self.oa3 = np.where(net.cnx_oa3 > p.noise_a, net.cnx_oa3, 0)
        self.lo = np.where(net.cnx_lo > p.noise_o, net.cnx_lo, 0)
        self.oa3_t = np.ascontiguousarray(self.oa3.T)
        self.lo_t = np.ascontiguousarray(self.lo.T)
        self.thresholds = np.append(net.backward_sto, p.st_fail).astype(np.int64)
        self.failure = p.n_o

    def sum_a2(self, input_ma2) -> np.ndarray:
        idx = as_index(input_ma2)
        if idx.size == 0:
            return np.zeros(self.params.n_a)
        return modulation_coefs(idx, self.net.cnx_ma2, self.params) @ self.net.cnx_ma2[idx]


def _run_query_reference(ctx: QueryContext, input_ma2):
    """Plain-Python query, kept as the readable specification of the kernel."""
    p = ctx.params
    keys, values = gated_sums(ctx.sum_a1, ctx.sum_a2(input_ma2), p.noise_a)
    fired_i: dict[int, float] = {}
    if keys.size == 0:
        return fired_i, keys
    failure = ctx.failure
    inhibited: set[int] = set()     # L indices, plus -1 standing for Failure
    backward = np.zeros(p.n_o + 1, dtype=np.int64)
    sum_l = np.zeros(p.n_l, dtype=np.int64)
    fail = False
    fired_a = keys[:0]
    for level in np.unique(values)[::-1]:
        if fired_a.size >= p.tnb_query_a or fail:
            break
        level = float(level)
        fired_a = keys[values >= level]
        # every fired A-neuron spikes again at each lower level
        backward += ctx.oa3[:, fired_a].sum(axis=1)
        over = backward - ctx.thresholds
        cand = np.flatnonzero(over > 0)
        pending = dict(zip(cand.tolist(), over[cand].tolist()))
        n_backward_o = 0
        while n_backward_o < p.tnb_query_o and pending and not fail:
            top = max(pending.values())
            spiking = []
            for n in sorted(k for k, v in pending.items() if v == top):
                del pending[n]
                if n != failure:
                    spiking.append(n)
                    inhibited.add(-1)
                elif -1 not in inhibited:
                    fired_i[-1] = level
                    fail = True
            n_backward_o += len(spiking)
            if not spiking:
                continue
            backward[spiking] = 0
            if fail:
                continue
            sum_l += ctx.lo[:, spiking].sum(axis=1)
            crossing = np.flatnonzero(sum_l > p.stl)
            if crossing.size == 0:
                continue
            above = sum_l[crossing] - p.stl
            sum_l[crossing] = 0
            for i in np.lexsort((crossing, -above)):
                l = int(crossing[i])
                if l in inhibited or l in fired_i:
                    continue
                fired_i[l] = level
                inhibited.update(EXCLUSION_LISTS[l])
    return fired_i, fired_a


@njit(cache=True)
def _query_kernel(combined, valid, oa3_t, lo_t, thresholds, stl, tnb_query_o, tnb_query_a, exclusion):
    """Compiled query loop. ``oa3_t`` is (|A|, |O|+1) and ``lo_t`` is (|O|, |L|),
    both denoised. Returns per-interface firing thresholds (NaN if silent; the
    last slot is Failure) and the final A threshold."""
    n_a = combined.size
    n_of = oa3_t.shape[1]
    n_l = lo_t.shape[1]
    failure = n_of - 1
    fired = np.full(n_l + 1, np.nan)
    inhibited = np.zeros(n_l + 1, dtype=np.bool_)
    backward = np.zeros(n_of, dtype=np.int64)
    sum_l = np.zeros(n_l, dtype=np.int64)
    over = np.zeros(n_of, dtype=np.int64)
    pending = np.zeros(n_of, dtype=np.bool_)
    spiking = np.zeros(n_of, dtype=np.int64)
    above = np.zeros(n_l, dtype=np.int64)
    crossing = np.zeros(n_l, dtype=np.bool_)
    levels = np.sort(combined[valid])
    i = levels.size - 1
    n_fired_a = 0
    last_level = np.inf
    fail = False
    while i >= 0:
        if n_fired_a >= tnb_query_a or fail:
            break
        level = levels[i]
        while i >= 0 and levels[i] == level:
            i -= 1
        last_level = level
        n_fired_a = 0
        for a in range(n_a):
            if valid[a] and combined[a] >= level:
                n_fired_a += 1
                for r in range(n_of):
                    backward[r] += oa3_t[a, r]
        n_pending = 0
        for r in range(n_of):
            over[r] = backward[r] - thresholds[r]
            pending[r] = over[r] > 0
            if pending[r]:
                n_pending += 1
        n_backward_o = 0
        while n_backward_o < tnb_query_o and n_pending > 0 and not fail:
            top = np.iinfo(np.int64).min
            for r in range(n_of):
                if pending[r] and over[r] > top:
                    top = over[r]
            n_spiking = 0
            for r in range(n_of):
                if pending[r] and over[r] == top:
                    pending[r] = False
                    n_pending -= 1
                    if r != failure:
                        spiking[n_spiking] = r
                        n_spiking += 1
                        inhibited[n_l] = True
                    elif not inhibited[n_l]:
                        fired[n_l] = level
                        fail = True
            n_backward_o += n_spiking
            if n_spiking == 0:
                continue
            for k in range(n_spiking):
                backward[spiking[k]] = 0
            if fail:
                continue
            n_cross = 0
            for l in range(n_l):
                for k in range(n_spiking):
                    sum_l[l] += lo_t[spiking[k], l]
                crossing[l] = sum_l[l] > stl
                if crossing[l]:
                    above[l] = sum_l[l] - stl
                    sum_l[l] = 0
                    n_cross += 1
            while n_cross > 0:
                best = np.iinfo(np.int64).min
                for l in range(n_l):
                    if crossing[l] and above[l] > best:
                        best = above[l]
                for l in range(n_l):
                    if crossing[l] and above[l] == best:
                        crossing[l] = False
                        n_cross -= 1
                        if not inhibited[l] and np.isnan(fired[l]):
                            fired[l] = level
                            for m in range(n_l):
                                if exclusion[l, m]:
                                    inhibited[m] = True
    return fired, last_level


def _run_query(ctx: QueryContext, input_ma2):
    p = ctx.params
    sum_a2 = ctx.sum_a2(input_ma2)
    valid = (ctx.sum_a1 > p.noise_a) & (sum_a2 > p.noise_a)
    if not valid.any():
        return {}, np.zeros(0, dtype=np.intp)
    combined = ctx.sum_a1 + sum_a2
    fired, last_level = _query_kernel(combined, valid, ctx.oa3_t, ctx.lo_t, ctx.thresholds,
                                      p.stl, p.tnb_query_o, p.tnb_query_a, EXCLUSION)
    fired_i = {(-1 if i == p.n_l else int(i)): float(fired[i]) for i in np.flatnonzero(~np.isnan(fired))}
    return fired_i, np.flatnonzero(valid & (combined >= last_level))


def _labels(fired_i: dict[int, float]) -> dict[str, float]:
    return {FAILURE if i == -1 else LOCATION_FEATURES[i]: c for i, c in fired_i.items()}


def query(input_oa1, input_ma2, net: NetworkState, ctx: QueryContext | None = None):
    """Ask the network what follows ``(input_oa1, input_ma2)``.

    Returns ``(backward_fired, fired_a)``: a map from predicted feature label
    (``"Failure"`` included) to the A-layer threshold at which it fired, and
    the A-neurons fired by the end of the query.
    """
    if ctx is None:
        ctx = QueryContext(net, input_oa1)
    fired_i, fired_a = _run_query(ctx, as_index(input_ma2))
    return _labels(fired_i), fired_a


def short_term_memory_coef(last_spiked_a, fired_a) -> float:
    return 1.0 + 1.0 / float(np.mean(np.asarray(last_spiked_a)[as_index(fired_a)]))


def predict_move(ctx: QueryContext, move: str) -> dict[str, float]:
    fired_i, fired_a = _run_query(ctx, motor_indices(move))
    if not fired_i:
        return {}
    coef = short_term_memory_coef(ctx.net.last_spiked_a, fired_a)
    return {f: c * coef for f, c in _labels(fired_i).items()}


def make_predictions(input_oa1, net: NetworkState) -> dict[str, dict[str, float]]:
    """Predicted outcome features, with confidences, for each of the eight moves."""
    ctx = QueryContext(net, input_oa1)
    return {move: predict_move(ctx, move) for move in MOVES}


@dataclass
class MoveRating:
    suitable: dict[str, float]
    unsuitable: dict[str, float]
    undecided: list[str]


def rate_predictions(predictions: dict[str, dict[str, float]]) -> MoveRating:
    suitable, unsuitable, undecided = {}, {}, []
    for move in MOVES:
        pred = predictions.get(move, {})
        bad = [pred[f] for f in ("KO", FAILURE) if f in pred]
        if "OK" in pred:
            suitable[move] = pred["OK"]
            if bad:
                log.debug("move %s predicts OK together with KO/Failure; rated suitable", move)
        elif bad:
            unsuitable[move] = min(bad)
        else:
            undecided.append(move)
    return MoveRating(suitable, unsuitable, undecided)


def _pick(rng: np.random.Generator, moves: list[str]) -> str:
    return moves[int(rng.integers(len(moves)))] if len(moves) > 1 else moves[0]


def _arg(scores: dict[str, float], best) -> list[str]:
    target = best(scores.values())
    return [m for m in MOVES if m in scores and scores[m] == target]


def make_a_choice(rating: MoveRating, mode: str, rng: np.random.Generator) -> str:
    if mode == EXPLORATION:
        if rating.undecided:
            return _pick(rng, rating.undecided)
        return _pick(rng, _arg({**rating.unsuitable, **rating.suitable}, min))
    if mode == EXPLOITATION:
        if rating.suitable:
            return _pick(rng, _arg(rating.suitable, max))
        if rating.undecided:
            return _pick(rng, rating.undecided)
        return _pick(rng, _arg(rating.unsuitable, min))
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class Decision:
    move: str
    predicted: frozenset[str]
    mode: str
    predictions: dict[str, dict[str, float]]


def choose_a_move(input_oa1, net: NetworkState, rng: np.random.Generator, mode: str | None = None) -> Decision:
    """Draw a mode (unless given), predict all moves, rate them and pick one."""
    if mode is None:
        mode = MODES[int(rng.integers(2))]
    predictions = make_predictions(input_oa1, net)
    move = make_a_choice(rate_predictions(predictions), mode, rng)
    return Decision(move, frozenset(predictions[move]), mode, predictions)
