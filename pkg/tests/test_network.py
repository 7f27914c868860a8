from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from snnagent.network import (
    init_network,
    proba_new_synapses_a,
    proba_new_synapses_lo,
    replace_all_inactive_plus_some_active,
    replace_all_inactive_synapses,
    replace_all_synapses,
    replace_some_inactive_synapses,
    update_last_spikes,
)
from snnagent.params import Params


def proba_oracle(rows, cnx, offset, slope, shift):
    rates = []
    for r in sorted(set(rows)):
        total = sum(int(cnx[r][c]) for c in range(len(cnx[r])))
        rates.append(math.tanh((-total + offset) / slope) + shift)
    s = math.fsum(rates)
    return [x / s for x in rates]


def test_init_network_shapes_and_ranges(params, rng):
    net = init_network(params, rng)
    assert net.cnx_lo.shape == (33, 100)
    assert net.cnx_oa1.shape == (100, 400)
    assert net.cnx_ma2.shape == (10, 400)
    assert net.cnx_oa3.shape == (101, 400)
    assert net.check_conservation() == []
    assert net.sto.min() >= 22 and net.sto.max() <= 31
    assert np.array_equal(net.backward_sto, net.sto // 3)
    assert 1 <= net.last_spiked_o.min() and net.last_spiked_o.max() <= 2000
    assert 1 <= net.last_spiked_a.min() and net.last_spiked_a.max() <= 20000


def test_init_network_is_seeded(params):
    a = init_network(params, np.random.default_rng(3))
    b = init_network(params, np.random.default_rng(3))
    assert a.digest() == b.digest()


def test_proba_matches_oracle_on_random_inputs(params):
    rng = np.random.default_rng(0)
    for _ in range(100):
        cnx = rng.integers(0, 60, size=(33, 100))
        rows = rng.choice(33, size=rng.integers(1, 10), replace=False)
        got = proba_new_synapses_lo(rows, cnx, params)
        want = proba_oracle(rows.tolist(), cnx.tolist(), 300, 150, 2)
        assert np.allclose(got, want, rtol=1e-9, atol=0)
        cnx = rng.integers(0, 10, size=(101, 400))
        rows = rng.choice(101, size=rng.integers(1, 14), replace=False)
        got = proba_new_synapses_a(rows, cnx, params)
        want = proba_oracle(rows.tolist(), cnx.tolist(), 400, 300, 1.2)
        assert np.allclose(got, want, rtol=1e-9, atol=0)


def test_proba_favours_less_connected_inputs(params):
    cnx = np.zeros((3, 5), dtype=np.int64)
    cnx[0] = 100
    p = proba_new_synapses_lo([0, 1], cnx, params)
    assert p[1] > p[0]
    assert math.isclose(p.sum(), 1.0)


def test_update_last_spikes():
    out = update_last_spikes(np.array([5, 1, 9]), [2])
    assert out.tolist() == [6, 2, 1]


def _random_case(seed, n_in, n_out, total):
    rng = np.random.default_rng(seed)
    cnx = rng.multinomial(total, np.full(n_in, 1 / n_in), size=n_out).T.astype(np.int64)
    inputs = np.sort(rng.choice(n_in, size=rng.integers(1, n_in), replace=False))
    learning = np.sort(rng.choice(n_out, size=rng.integers(1, n_out + 1), replace=False))
    proba = proba_new_synapses_a(inputs, cnx, Params())
    lr = {int(a): int(rng.integers(1, total + 1)) for a in learning}
    return rng, cnx, inputs, learning, proba, lr


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_in=st.integers(2, 12), n_out=st.integers(1, 10),
       total=st.integers(1, 50))
def test_replacement_conserves_column_sums(seed, n_in, n_out, total):
    rng, cnx, inputs, learning, proba, lr = _random_case(seed, n_in, n_out, total)
    for op in range(4):
        before = cnx.copy()
        if op == 0:
            replace_all_inactive_synapses(learning, inputs, cnx, proba, rng)
        elif op == 1:
            replace_some_inactive_synapses(learning, inputs, cnx, proba, lr, rng)
        elif op == 2:
            replace_all_inactive_plus_some_active(learning, inputs, cnx, proba, lr, rng)
        else:
            replace_all_synapses(int(learning[0]), inputs, cnx, proba, total, rng)
        assert (cnx >= 0).all()
        assert (cnx.sum(axis=0) == total).all()
        untouched = np.setdiff1d(np.arange(n_out), learning)
        assert np.array_equal(cnx[:, untouched], before[:, untouched])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_in=st.integers(2, 12), total=st.integers(1, 50))
def test_replace_all_inactive_empties_inactive_rows(seed, n_in, total):
    rng, cnx, inputs, learning, proba, lr = _random_case(seed, n_in, 6, total)
    replace_all_inactive_synapses(learning, inputs, cnx, proba, rng)
    inactive = np.setdiff1d(np.arange(n_in), inputs)
    assert cnx[np.ix_(inactive, learning)].sum() == 0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_in=st.integers(2, 12), total=st.integers(1, 50))
def test_replace_some_moves_at_most_lr(seed, n_in, total):
    rng, cnx, inputs, learning, proba, lr = _random_case(seed, n_in, 6, total)
    before = cnx.copy()
    replace_some_inactive_synapses(learning, inputs, cnx, proba, lr, rng)
    gained = (cnx[inputs] - before[inputs]).sum(axis=0)
    for a in learning:
        assert 0 <= gained[a] <= lr[int(a)]


def test_replace_all_synapses_only_on_inputs(rng):
    cnx = np.full((5, 3), 8, dtype=np.int64)
    replace_all_synapses(1, [0, 2], cnx, np.array([0.5, 0.5]), 40, rng)
    assert cnx[[1, 3, 4], 1].sum() == 0 and cnx[:, 1].sum() == 40
