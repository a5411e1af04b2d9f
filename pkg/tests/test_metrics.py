import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unlearnaudit.errors import DataError
from unlearnaudit.metrics import EvalRecord, auc, deg_count, deg_rate, evaluate

from oracles import brute_force_auc

R = EvalRecord


def test_auc_examples():
    assert auc([0.9, 0.8, 0.3], [1, 0, 1]) == 0.5
    assert auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.4] * 6, [1, 0, 1, 0, 1, 0]) == 0.5


def test_auc_needs_both_labels():
    with pytest.raises(DataError):
        auc([0.1, 0.2], [1, 1])


@st.composite
def scored(draw, max_size=8):
    n = draw(st.integers(2, max_size))
    labels = draw(st.lists(st.booleans(), min_size=n, max_size=n)
                  .filter(lambda b: any(b) and not all(b)))
    # a coarse grid makes ties common
    scores = draw(st.lists(st.integers(0, 5).map(lambda v: v / 5), min_size=n, max_size=n))
    return scores, labels


@given(scored())
def test_auc_matches_pair_enumeration(case):
    scores, labels = case
    assert auc(scores, labels) == float(brute_force_auc(scores, labels))


@given(scored(max_size=30))
def test_auc_complement(case):
    scores, labels = case
    flipped = [not b for b in labels]
    assert auc(scores, labels) + auc(scores, flipped) == pytest.approx(1.0, abs=1e-12)


def test_deg_count_examples():
    assert deg_count([R(True, 0.9, 0.6), R(False, 0.2, 0.3)]) == 1.0
    assert deg_count([R(True, 0.5, 0.5), R(False, 0.3, 0.3)]) == 0.0
    assert deg_count([R(True, 0.4, 0.6)]) == 0.0


def test_deg_rate_examples():
    assert deg_rate([R(True, 0.9, 0.6), R(False, 0.2, 0.3)]) == pytest.approx(0.2)
    assert deg_rate([R(True, 0.5, 0.5), R(False, 0.3, 0.3)]) == 0.0
    assert deg_rate([R(True, 0.0, 1.0)]) == -1.0


def test_deg_hand_computed_mixture():
    records = [R(True, 0.8, 0.5), R(True, 0.3, 0.6), R(False, 0.1, 0.4), R(False, 0.7, 0.7)]
    # indicators: 1, 0, 1, 0 (tie) ; gains: +0.3, -0.3, +0.3, 0
    assert deg_count(records) == 0.5
    assert deg_rate(records) == pytest.approx(0.075)


def test_empty_records():
    with pytest.raises(DataError):
        deg_count([])
    with pytest.raises(DataError):
        deg_rate([])


records_st = st.lists(st.builds(R, st.booleans(), st.floats(0, 1), st.floats(0, 1)),
                      min_size=1, max_size=30)


@given(records_st)
def test_deg_bounds(records):
    assert 0.0 <= deg_count(records) <= 1.0
    assert -1.0 <= deg_rate(records) <= 1.0


@given(records_st, st.data())
def test_raising_member_confidence_never_hurts(records, data):
    members = [i for i, r in enumerate(records) if r.b]
    if not members:
        return
    i = data.draw(st.sampled_from(members))
    bumped = list(records)
    bumped[i] = R(True, data.draw(st.floats(records[i].p_u, 1)), records[i].p_m)
    assert deg_count(bumped) >= deg_count(records)
    assert deg_rate(bumped) >= deg_rate(records) - 1e-12


def test_evaluate_report():
    rep = evaluate([R(True, 0.9, 0.6), R(False, 0.2, 0.3)])
    assert (rep.auc_ours, rep.auc_baseline, rep.deg_count, rep.n) == (1.0, 1.0, 1.0, 2)


def test_auc_oracle_thousand_instances():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        labels = rng.integers(0, 2, n).astype(bool)
        if labels.all() or not labels.any():
            labels[0] = not labels[0]
        scores = rng.integers(0, 4, n) / 4
        assert auc(scores, labels) == float(brute_force_auc(scores.tolist(), labels.tolist()))
