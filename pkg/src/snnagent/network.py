"""Network state and the synapse bookkeeping shared by both hidden layers.

Connections are integer matrices indexed ``[input neuron, output neuron]``; an
entry counts the unit-weight synapses between the two neurons. Every
replacement primitive below deletes synapses from one output column and
redraws exactly as many, so column sums never change.

RNG usage is part of the contract: given the same generator state and the same
call sequence the resulting matrices are bit-identical. Draws happen in
ascending output-neuron order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .params import Params

INT = np.int64


def as_index(neurons) -> np.ndarray:
    """Sorted unique index array from any iterable of neuron indices."""
    if isinstance(neurons, np.ndarray) and neurons.dtype.kind in "iu":
        if neurons.ndim == 1 and (neurons.size < 2 or (neurons[1:] > neurons[:-1]).all()):
            return neurons.astype(np.intp, copy=False)
        return np.unique(neurons).astype(np.intp, copy=False)
    return np.array(sorted({int(n) for n in neurons}), dtype=np.intp)


@dataclass
class NetworkState:
    params: Params
    cnx_lo: np.ndarray    # (|L|, |O|)
    cnx_oa1: np.ndarray   # (|O|, |A|)
    cnx_ma2: np.ndarray   # (|M|, |A|)
    cnx_oa3: np.ndarray   # (|O|+1, |A|); last row is the Failure neuron
    sto: np.ndarray
    backward_sto: np.ndarray
    last_spiked_o: np.ndarray
    last_spiked_a: np.ndarray

    @property
    def failure_row(self) -> int:
        return self.params.n_o

    def copy(self) -> NetworkState:
        return NetworkState(
            self.params, *(getattr(self, k).copy() for k in _ARRAYS)
        )

    def check_conservation(self) -> list[str]:
        """Human-readable list of violated weight invariants (empty if none)."""
        p = self.params
        bad = []
        for name, target in (("cnx_lo", p.ws_o), ("cnx_oa1", p.ws_a),
                             ("cnx_ma2", p.ws_a), ("cnx_oa3", p.ws_a)):
            m = getattr(self, name)
            if (m < 0).any():
                bad.append(f"{name} has negative weights")
            cols = np.flatnonzero(m.sum(axis=0) != target)
            if cols.size:
                bad.append(f"{name} columns {cols[:5].tolist()} do not sum to {target}")
        return bad

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.params.to_dict(), sort_keys=True).encode())
        for k in _ARRAYS:
            a = np.ascontiguousarray(getattr(self, k), dtype=INT)
            h.update(k.encode())
            h.update(str(a.shape).encode())
            h.update(a.tobytes())
        return h.hexdigest()


_ARRAYS = ("cnx_lo", "cnx_oa1", "cnx_ma2", "cnx_oa3", "sto", "backward_sto",
           "last_spiked_o", "last_spiked_a")


def _random_columns(rng: np.random.Generator, n_inputs: int, n_outputs: int, total: int) -> np.ndarray:
    # each synapse lands on an input neuron chosen uniformly
    counts = rng.multinomial(total, np.full(n_inputs, 1.0 / n_inputs), size=n_outputs)
    return counts.T.astype(INT)


def init_network(params: Params, rng: np.random.Generator) -> NetworkState:
    """Random initial network.

    Draw order: STO, lastSpikedO, lastSpikedA, then cnxLO, cnxOA1, cnxMA2,
    cnxOA3 column by column.
    """
    p = params.validate()
    sto = rng.integers(p.sto_min, p.sto_max + 1, size=p.n_o).astype(INT)
    last_o = rng.integers(1, p.last_spiked_o_max + 1, size=p.n_o).astype(INT)
    last_a = rng.integers(1, p.last_spiked_a_max + 1, size=p.n_a).astype(INT)
    return NetworkState(
        params=p,
        cnx_lo=_random_columns(rng, p.n_l, p.n_o, p.ws_o),
        cnx_oa1=_random_columns(rng, p.n_o, p.n_a, p.ws_a),
        cnx_ma2=_random_columns(rng, p.n_m, p.n_a, p.ws_a),
        cnx_oa3=_random_columns(rng, p.n_o + 1, p.n_a, p.ws_a),
        sto=sto,
        backward_sto=sto // 3,
        last_spiked_o=last_o,
        last_spiked_a=last_a,
    )


# ------------------------------------------------------------------ growth rates


def _sgr_proba(input_set, cnx, offset, slope, shift) -> np.ndarray:
    idx = as_index(input_set)
    if idx.size == 0:
        raise ValueError("synapse growth probabilities need a non-empty input set")
    forward = cnx[idx].sum(axis=1)
    sgr = np.tanh((-forward + offset) / slope) + shift
    total = sgr.sum()
    assert total > 0
    return sgr / total


def proba_new_synapses_lo(input_lo, cnx_lo, params: Params = Params()) -> np.ndarray:
    """Probability that each input L-neuron grows the next new synapse onto O.

    Returned vector is aligned with ``as_index(input_lo)``.
    """
    return _sgr_proba(input_lo, cnx_lo, *params.sgr_lo)


def proba_new_synapses_a(input_set, cnx, params: Params = Params()) -> np.ndarray:
    """Same as :func:`proba_new_synapses_lo` for inputs onto an A compartment."""
    return _sgr_proba(input_set, cnx, *params.sgr_a)


# ------------------------------------------------------------------ replacement


def _inactive_rows(n_rows: int, input_idx: np.ndarray, base=None) -> np.ndarray:
    base_mask = np.zeros(n_rows, dtype=bool)
    if base is None:
        base_mask[:] = True
    else:
        base_mask[as_index(base)] = True
    base_mask[input_idx] = False
    return np.flatnonzero(base_mask)


def replace_all_inactive_synapses(learning, input_set, cnx, proba, rng, input_base=None):
    """Move every synapse a learning neuron has from inactive inputs onto active ones.

    New synapses are drawn with replacement over ``input_set`` following
    ``proba``. ``input_base`` defaults to all rows of ``cnx``.
    """
    learn = as_index(learning)
    inputs = as_index(input_set)
    if learn.size == 0 or inputs.size == 0:
        return cnx
    inactive = _inactive_rows(cnx.shape[0], inputs, input_base)
    if inactive.size == 0:
        return cnx
    sub = cnx[np.ix_(inactive, learn)]
    deleted = sub.sum(axis=0)
    cnx[np.ix_(inactive, learn)] = 0
    new = rng.multinomial(deleted, proba)
    cnx[np.ix_(inputs, learn)] += new.T
    return cnx


def replace_all_synapses(neuron: int, input_set, cnx, proba, total: int, rng):
    """Wipe one output column and redraw ``total`` synapses over ``input_set``."""
    inputs = as_index(input_set)
    cnx[:, neuron] = 0
    cnx[inputs, neuron] += rng.multinomial(total, proba)
    return cnx


def _delete_instances(column: np.ndarray, rows: np.ndarray, k: int, rng) -> int:
    """Delete ``k`` synapse instances chosen uniformly without replacement."""
    if k <= 0:
        return 0
    weights = column[rows]
    removed = rng.multivariate_hypergeometric(weights, k)
    column[rows] = weights - removed
    return k


def replace_some_inactive_synapses(learning, input_set, cnx, proba, lr: dict, rng, input_base=None):
    """Replace at most ``lr[a]`` inactive synapses of each learning neuron."""
    learn = as_index(learning)
    inputs = as_index(input_set)
    if learn.size == 0 or inputs.size == 0:
        return cnx
    inactive = _inactive_rows(cnx.shape[0], inputs, input_base)
    for a in learn:
        column = cnx[:, a]
        k = min(int(column[inactive].sum()), int(lr[a]))
        if k == 0:
            continue
        _delete_instances(column, inactive, k, rng)
        column[inputs] += rng.multinomial(k, proba)
    return cnx


def replace_all_inactive_plus_some_active(learning, input_set, cnx, proba, lr: dict, rng, input_base=None):
    """Delete all inactive synapses, topped up with random active ones to reach ``lr[a]``."""
    learn = as_index(learning)
    inputs = as_index(input_set)
    if learn.size == 0 or inputs.size == 0:
        return cnx
    inactive = _inactive_rows(cnx.shape[0], inputs, input_base)
    for a in learn:
        column = cnx[:, a]
        deleted = int(column[inactive].sum())
        column[inactive] = 0
        remains = max(0, int(lr[a]) - deleted)
        remains = min(remains, int(column[inputs].sum()))
        _delete_instances(column, inputs, remains, rng)
        column[inputs] += rng.multinomial(deleted + remains, proba)
    return cnx


def update_last_spikes(last_spikes: np.ndarray, fired) -> np.ndarray:
    out = last_spikes + 1
    out[as_index(fired)] = 1
    return out
