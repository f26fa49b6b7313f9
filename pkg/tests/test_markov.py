import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_array_equal

from edcorder.markov import (MarkovFamily, MarkovSpec, markov_fit, markov_gamma, markov_loglik,
                             markov_simulate, read_sequence_csv, transition_counts,
                             write_sequence_csv)
from edcorder.nested import PenaltyRule, select_order

from oracles import brute_force_selection, markov_counts, markov_max_loglik

sequences = st.lists(st.integers(0, 2), min_size=8, max_size=200).map(np.array)


def random_spec(rng, k, s, concentration=1.0):
    return MarkovSpec(rng.dirichlet(np.full(s, concentration), size=s ** k))


def test_spec_validation():
    with pytest.raises(ValueError):
        MarkovSpec([[0.5, 0.6]])
    with pytest.raises(ValueError):
        MarkovSpec([[1.0]])
    with pytest.raises(ValueError):
        MarkovSpec(np.full((3, 2), 0.5))
    spec = MarkovSpec(np.full((9, 3), 1 / 3))
    assert (spec.alphabet, spec.order, spec.gamma) == (3, 2, 18)
    assert MarkovSpec.from_dict(spec.to_dict()).P.tolist() == spec.P.tolist()


def test_gamma():
    assert markov_gamma(0, 2) == 1
    assert markov_gamma(3, 2) == 8
    assert markov_gamma(2, 4) == 48
    assert MarkovFamily(3).gamma((2,)) == 18


def test_simulate_examples():
    x = markov_simulate(MarkovSpec([[0.5, 0.5]]), 50000, seed=1)
    assert abs(x.mean() - 0.5) < 0.02
    flip = MarkovSpec([[0.0, 1.0], [1.0, 0.0]])
    y = markov_simulate(flip, 101, seed=3)
    assert np.all(y[1:] != y[:-1])
    assert_array_equal(markov_simulate(flip, 50, 9), markov_simulate(flip, 50, 9))
    cycle = MarkovSpec(np.eye(3)[[1, 2, 0]])
    z = markov_simulate(cycle, 30, 0)
    assert_array_equal(z[3:], z[:-3])


def test_simulate_prefix_and_seed_dependence():
    spec = random_spec(np.random.default_rng(0), 2, 2)
    a = markov_simulate(spec, 1000, 5)
    assert_array_equal(a[:300], markov_simulate(spec, 300, 5))
    assert not np.array_equal(a, markov_simulate(spec, 1000, 6))


def test_simulated_transition_frequencies():
    spec = random_spec(np.random.default_rng(4), 1, 3, concentration=3.0)
    x = markov_simulate(spec, 200000, 2)
    P, _ = markov_fit(x, 1, 3)
    np.testing.assert_allclose(P, spec.P, atol=0.01)


def test_fit_alternating_sequence():
    x = np.tile([0, 1], 50)
    P, ll = markov_fit(x, 1)
    assert P[0, 1] == 1.0 and P[1, 0] == 1.0
    assert ll == 0.0


def test_fit_order_zero_by_hand():
    x = markov_simulate(MarkovSpec([[0.5, 0.5]]), 1000, 8)
    f = x.mean()
    _, ll = markov_fit(x, 0, 2)
    assert ll == pytest.approx(1000 * (f * math.log(f) + (1 - f) * math.log(1 - f)), rel=1e-12)


def test_unseen_contexts_get_uniform_rows():
    P, ll = markov_fit(np.array([0, 0, 0, 0]), 1, 3)
    assert_array_equal(P[1], [1 / 3] * 3)
    assert ll == 0.0


def test_fit_rejects_symbols_outside_alphabet():
    with pytest.raises(ValueError):
        markov_fit(np.array([0, 1, 2]), 1, 2)
    with pytest.raises(ValueError):
        transition_counts(np.array([0, 1]), 2, 2)


@given(sequences, st.integers(0, 3))
def test_counts_and_loglik_match_oracle(x, k):
    if len(x) <= k:
        return
    N = transition_counts(x, k, 3)
    for (ctx, a), c in markov_counts(x, k).items():
        code = 0
        for v in ctx:
            code = code * 3 + v
        assert N[code, a] == c
    assert N.sum() == len(x) - k
    _, ll = markov_fit(x, k, 3)
    assert ll == pytest.approx(markov_max_loglik(x, k), rel=1e-12, abs=1e-12)


@given(sequences)
def test_loglik_non_decreasing_in_order(x):
    # every order predicts the same targets x[3:]
    fair = [markov_loglik(x[3 - k:], MarkovSpec(markov_fit(x[3 - k:], k, 3)[0])) for k in range(4)]
    for a, b in zip(fair, fair[1:]):
        assert b >= a - 1e-9


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.integers(0, 2))
def test_fit_is_an_exact_maximum(seed, k):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, k, 2)
    x = markov_simulate(spec, 400, seed)
    P, ll = markov_fit(x, k, 2)
    assert markov_loglik(x, MarkovSpec(P)) == pytest.approx(ll, rel=1e-12)
    for row in range(P.shape[0]):
        for j in range(2):
            for eps in (1e-3, -1e-3):
                Q = P.copy()
                Q[row, j] = min(max(Q[row, j] + eps, 0.0), 1.0)
                Q[row] /= Q[row].sum()
                assert markov_loglik(x, MarkovSpec(Q)) <= ll + 1e-12


@given(st.integers(0, 2**31), st.integers(0, 2), st.integers(0, 2))
def test_embedding_keeps_transition_law(seed, r, extra):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng, r, 2)
    big = spec.embed(r + extra)
    x = markov_simulate(spec, 200, seed)
    k = r + extra
    assert markov_loglik(x, big) == pytest.approx(markov_loglik(x[k - r:], spec), rel=1e-12)
    with pytest.raises(ValueError):
        big.embed(r + extra - 1) if r + extra > 0 else spec.embed(-1)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.integers(1, 4),
       st.sampled_from([PenaltyRule.bic(), PenaltyRule.aic(), PenaltyRule.constant(0.3)]))
def test_selection_matches_brute_force(seed, K, rule):
    rng = np.random.default_rng(seed)
    x = markov_simulate(random_spec(rng, int(rng.integers(0, 3)), 2), int(rng.integers(50, 600)), seed)
    rep = select_order(MarkovFamily(2), x, K, rule)
    chosen, rows = brute_force_selection(x, K, 2, rule(len(x)))
    assert rep.chosen == (chosen,)
    for rec, (k, ll, score) in zip(rep.candidates, rows):
        assert rec.order == (k,)
        assert rec.loglik == pytest.approx(ll, rel=1e-12, abs=1e-12)


def test_family_interface_and_csv(tmp_path):
    fam = MarkovFamily(2)
    spec = MarkovSpec([[0.9, 0.1], [0.2, 0.8]])
    x = fam.simulate(spec, 500, 1)
    assert fam.order_of(spec) == (1,)
    out = fam.fit(x, 1)
    assert out.ok and out.status == "exact"
    assert fam.loglik(x, out.theta) == pytest.approx(out.loglik)
    path = tmp_path / "seq.csv"
    write_sequence_csv(x, path)
    assert path.read_text().splitlines()[0] == "symbol"
    assert_array_equal(read_sequence_csv(path), x)
    with pytest.raises(ValueError):
        MarkovFamily(1)
