"""A-layer: three-compartment action neurons.

Compartment 1 receives the initial situation (O-neurons), compartment 2 the
motor features (M-neurons), compartment 3 the outcome (O-neurons or Failure).
"""

from __future__ import annotations

import numpy as np

from .features import FAILURE, L_INDEX
from .network import (
    NetworkState,
    as_index,
    proba_new_synapses_a,
    replace_all_inactive_plus_some_active,
    replace_all_inactive_synapses,
    replace_some_inactive_synapses,
)
from .object_memory import _take_top_classes
from .params import Params


def input_sums_a(input_set, cnx: np.ndarray, coefs: np.ndarray | None = None) -> np.ndarray:
    """Input received by one compartment of every A-neuron."""
    idx = as_index(input_set)
    if idx.size == 0:
        return np.zeros(cnx.shape[1], dtype=float if coefs is not None else cnx.dtype)
    if coefs is None:
        return cnx[idx].sum(axis=0)
    return coefs @ cnx[idx]


def gated_sums(sum_a1: np.ndarray, sum_a2: np.ndarray, noise_a: float = 2):
    """Array form of :func:`sum_inputs_a1a2`: ``(neurons, combined sums)``."""
    keys = np.flatnonzero((sum_a1 > noise_a) & (sum_a2 > noise_a))
    return keys, sum_a1[keys] + sum_a2[keys]


def sum_inputs_a1a2(sum_a1, sum_a2, noise_a: float = 2) -> dict[int, float]:
    keys, values = gated_sums(np.asarray(sum_a1), np.asarray(sum_a2), noise_a)
    return dict(zip(keys.tolist(), values.tolist()))


def spike_a(input_oa1, input_ma2, cnx_oa1, cnx_ma2, params: Params = Params()):
    """Forward spiking with a threshold lowered level by level.

    Returns ``(neurons, combined_sums, fired)`` where the first two describe
    the gated combined-input map. Works on integer or modulated matrices.
    """
    s1 = input_sums_a(input_oa1, cnx_oa1)
    s2 = input_sums_a(input_ma2, cnx_ma2)
    keys, values = gated_sums(s1, s2, params.noise_a)
    fired = _take_top_classes(keys, values, 0, params.tnb_fired_a)
    return keys, values, fired


def select_learning_a(input_oa1, input_ma2, net: NetworkState) -> np.ndarray:
    p = net.params
    keys, values, fired = spike_a(input_oa1, input_ma2, net.cnx_oa1, net.cnx_ma2, p)
    fired_mask = np.isin(keys, fired)
    learning = keys[fired_mask & (values > p.learn_at)]
    if learning.size < p.tnb_learning_a:
        rest = ~np.isin(keys, learning)
        cand = keys[rest]
        boosted = _boost_a(values[rest], net.last_spiked_a[cand], p.boost_param_a)
        added = _take_top_classes(cand, boosted, learning.size, p.tnb_learning_a)
        learning = np.union1d(learning, added)
    return learning


def _boost_a(sums, last, boost_param):
    return sums * ((last + boost_param) / boost_param)


def boost_input_a(learning_a, input_sum_a1a2: dict[int, float], last_spiked_a,
                  boost_param_a: float = 800) -> dict[int, float]:
    """Boosted combined sums of the A-neurons outside ``learning_a``."""
    skip = set(as_index(learning_a).tolist())
    keys = np.array(sorted(k for k in input_sum_a1a2 if k not in skip), dtype=np.intp)
    sums = np.array([input_sum_a1a2[k] for k in keys.tolist()], dtype=float)
    boosted = _boost_a(sums, np.asarray(last_spiked_a)[keys], boost_param_a)
    return dict(zip(keys.tolist(), boosted.tolist()))


def calculate_lr(learning_a, last_spiked_a, ws_a: int = 30, rng: np.random.Generator | None = None) -> dict[int, int]:
    """Learning rate of each learning neuron, scaled on its last-spike rank.

    The least recently active neuron gets ``ws_a``, the most recent gets 1.
    With no spread one neuron drawn at random gets ``ws_a`` and the rest 1.
    """
    learn = as_index(learning_a)
    if learn.size == 0:
        return {}
    last = np.asarray(last_spiked_a)[learn].astype(np.int64)
    mini, maxi = int(last.min()), int(last.max())
    diff = maxi - mini
    if diff > 0:
        # ceil((last - mini) * ws / diff) in exact integer arithmetic
        raw = -((-(last - mini) * ws_a) // diff)
        return {int(a): int(max(1, min(ws_a, r))) for a, r in zip(learn, raw)}
    if rng is None:
        rng = np.random.default_rng()
    chosen = int(rng.choice(learn))
    return {int(a): ws_a if a == chosen else 1 for a in learn}


def modulation_coefs(input_set, cnx: np.ndarray, params: Params = Params()) -> np.ndarray:
    """Per-input multiplier: 2 for the least connected input, 1 for the most."""
    idx = as_index(input_set)
    forward = cnx[idx].sum(axis=1).astype(float)
    if idx.size == 0:
        return forward
    lo, hi = forward.min(), forward.max()
    diff = hi - lo
    if diff <= 0:
        return np.ones(idx.size)
    slope = -(params.max_coef_mod_cnx - params.min_coef_mod_cnx) / diff
    return forward * slope + params.max_coef_mod_cnx - lo * slope


def modulate_cnx(input_set, cnx: np.ndarray, params: Params = Params()) -> np.ndarray:
    """Real-valued copy of ``cnx`` with the rows of ``input_set`` rescaled."""
    out = cnx.astype(float)
    idx = as_index(input_set)
    if idx.size:
        out[idx] *= modulation_coefs(idx, cnx, params)[:, None]
    return out


def interface_labels(features) -> frozenset[str]:
    labels = frozenset(features)
    unknown = [f for f in labels if f != FAILURE and f not in L_INDEX]
    if unknown:
        raise ValueError(f"not interface features: {sorted(unknown)}")
    return labels


def learn_a(input_oa1, input_ma2, input_oa3, net: NetworkState, act_result, pred_feat,
            rng: np.random.Generator) -> np.ndarray:
    """Update the three A compartments after an action.

    ``input_oa3`` holds O-neuron indices, or the Failure row index
    (``net.failure_row``) for a wall bump. ``act_result`` and ``pred_feat``
    are sets of feature labels (``"Failure"`` included). Returns the learning
    neurons.
    """
    p = net.params
    learning = select_learning_a(input_oa1, input_ma2, net)
    if learning.size == 0:
        return learning
    oa1, ma2, oa3 = as_index(input_oa1), as_index(input_ma2), as_index(input_oa3)
    proba1 = proba_new_synapses_a(oa1, net.cnx_oa1, p) if oa1.size else None
    proba2 = proba_new_synapses_a(ma2, net.cnx_ma2, p) if ma2.size else None
    proba3 = proba_new_synapses_a(oa3, net.cnx_oa3, p) if oa3.size else None
    lr = calculate_lr(learning, net.last_spiked_a, p.ws_a, rng)

    actual = interface_labels(act_result)
    predicted = interface_labels(pred_feat)
    errors = predicted - actual
    missed = actual - predicted

    if not errors and not missed:
        replace_all_inactive_synapses(learning, oa1, net.cnx_oa1, proba1, rng)
        replace_all_inactive_synapses(learning, ma2, net.cnx_ma2, proba2, rng)
        replace_some_inactive_synapses(learning, oa3, net.cnx_oa3, proba3, lr, rng)
        return learning
    if errors:
        replace_all_inactive_plus_some_active(learning, oa1, net.cnx_oa1, proba1, lr, rng)
        replace_all_inactive_plus_some_active(learning, ma2, net.cnx_ma2, proba2, lr, rng)
        replace_some_inactive_synapses(learning, oa3, net.cnx_oa3, proba3, lr, rng)
    if missed:
        replace_all_inactive_plus_some_active(learning, oa1, net.cnx_oa1, proba1, lr, rng)
        replace_all_inactive_plus_some_active(learning, ma2, net.cnx_ma2, proba2, lr, rng)
        replace_all_inactive_plus_some_active(learning, oa3, net.cnx_oa3, proba3, lr, rng)
    return learning
