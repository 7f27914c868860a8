"""O-layer: forward spiking, backward retrieval, boosting and learning."""

from __future__ import annotations

import numpy as np

from .features import EXCLUSION_LISTS
from .network import (
    NetworkState,
    as_index,
    proba_new_synapses_lo,
    replace_all_inactive_synapses,
    replace_all_synapses,
)


def _take_top_classes(keys: np.ndarray, values: np.ndarray, have: int, target: int) -> np.ndarray:
    """Admit whole argmax tie-classes of ``values`` until ``have`` reaches ``target``."""
    if keys.size == 0 or have >= target:
        return keys[:0]
    order = np.argsort(-values, kind="stable")
    sorted_vals = values[order]
    # class boundaries in descending order
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    ends = np.r_[starts[1:], sorted_vals.size]
    taken = 0
    for end in ends:
        taken = end
        if have + taken >= target:
            break
    return np.sort(keys[order[:taken]])


def spike_o(input_lo, cnx_lo: np.ndarray, sto: np.ndarray, tnb_fired_o: int = 12):
    """Forward firing of O-neurons. Returns ``(input_sum_o, fired_o)``."""
    idx = as_index(input_lo)
    input_sum = cnx_lo[idx].sum(axis=0)
    over = input_sum - sto
    cand = np.flatnonzero(over > 0)
    fired = _take_top_classes(cand, over[cand], 0, tnb_fired_o)
    return input_sum, fired


def _fire_with_inhibition(candidates: np.ndarray, values: np.ndarray, inhibited: set) -> list[int]:
    """Fire candidates by descending value; each firing inhibits its exclusive features.

    Within a tie class neurons are visited in index order, so two mutually
    exclusive neurons tied at the same value never both fire.
    """
    fired = []
    order = np.lexsort((candidates, -values))
    for i in order:
        l = int(candidates[i])
        if l in inhibited:
            continue
        fired.append(l)
        inhibited.update(EXCLUSION_LISTS[l])
    return fired


def backward_spike_l(fired_o, cnx_lo: np.ndarray, noise_o: int = 2, stl: int = 50) -> set[int]:
    """Retrieve the L-neurons (features) encoded by a set of firing O-neurons."""
    idx = as_index(fired_o)
    if idx.size == 0:
        return set()
    w = cnx_lo[:, idx]
    sums = np.where(w > noise_o, w, 0).sum(axis=1)
    cand = np.flatnonzero(sums > stl)
    return set(_fire_with_inhibition(cand, sums[cand] - stl, set()))


def boost_input_lo(learning_o, input_sum_o, last_spiked_o, boost_param_o: float = 50) -> dict[int, float]:
    """Boosted input sums for O-neurons outside ``learning_o``."""
    keys, values = _boosted(learning_o, input_sum_o, last_spiked_o, boost_param_o)
    return dict(zip(keys.tolist(), values.tolist()))


def _boosted(learning, input_sum, last_spiked, boost_param):
    mask = np.ones(len(input_sum), dtype=bool)
    mask[as_index(learning)] = False
    keys = np.flatnonzero(mask)
    return keys, input_sum[keys] * ((last_spiked[keys] + boost_param) / boost_param)


def learn_o(input_lo, input_sum_o, fired_o, net: NetworkState, rng: np.random.Generator) -> np.ndarray:
    """One-shot update of ``net.cnx_lo`` after observing ``input_lo``.

    Returns the O-neurons that learned.
    """
    p = net.params
    inputs = as_index(input_lo)
    if inputs.size == 0:
        raise ValueError("learn_o needs a non-empty observation")
    cnx = net.cnx_lo
    learning = as_index(fired_o)
    if learning.size < p.tnb_learning_o:
        keys, values = _boosted(learning, input_sum_o, net.last_spiked_o, p.boost_param_o)
        added = _take_top_classes(keys, values, learning.size, p.tnb_learning_o)
        learning = np.union1d(learning, added)

    proba = proba_new_synapses_lo(inputs, cnx, p)
    fired_l = backward_spike_l(fired_o, cnx, p.noise_o, p.stl)

    if set(inputs.tolist()) <= fired_l:
        replace_all_inactive_synapses(learning, inputs, cnx, proba, rng)
        return learning

    if learning.size < p.tnb_fired_o:
        keys, values = _boosted(learning, input_sum_o, net.last_spiked_o, p.boost_param_o)
        if keys.size:
            learning = np.union1d(learning, keys[values == values.max()])
    last = net.last_spiked_o[learning]
    oldest = learning[last == last.max()]
    max_learn = int(rng.choice(oldest))
    rest = learning[learning != max_learn]
    replace_all_inactive_synapses(rest, inputs, cnx, proba, rng)
    replace_all_synapses(max_learn, inputs, cnx, proba, p.ws_o, rng)
    return learning
