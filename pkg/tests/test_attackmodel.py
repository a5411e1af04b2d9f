import dataclasses

import numpy as np
import pytest

from unlearnaudit.attackfeat import Defense, construct
from unlearnaudit.attackmodel import (MEMBER, baseline_training_set, fit_baseline, infer,
                                      infer_baseline, infer_batch, train_attack,
                                      train_baseline)
from unlearnaudit.data import split_disjoint
from unlearnaudit.errors import DataError
from unlearnaudit.learners import HyperParams
from unlearnaudit.metrics import auc
from unlearnaudit.shadowfarm import (CasePair, FarmConfig, build_farm, case_arrays,
                                     negative_cases, positive_cases)

from conftest import make_dataset

FAST = HyperParams(rf_n_estimators=20, rf_min_samples_leaf=5)


def synthetic_cases(n_pos, n_neg, ell=3, seed=0):
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(n_pos + n_neg):
        po = rng.dirichlet(np.ones(ell))
        pos = i < n_pos
        shift = 0.2 if pos else 0.0
        pu = po.copy()
        top = np.argmax(po)
        pu[top] -= shift * po[top]
        pu /= pu.sum()
        cases.append(CasePair(po, pu, pos, 0, (0, i), i))
    return cases


@pytest.fixture(scope="module")
def world():
    ds = make_dataset(n=6000, d=4, noise=0.5, seed=11)
    target, shadow = split_disjoint(ds, [0.5, 0.5], 0)
    sp, sn = split_disjoint(shadow, [0.8, 0.2], 1)
    tp, tn = split_disjoint(target, [0.8, 0.2], 2)
    cfg = dict(n_originals=5, samples_per_original=400, n_unlearned_per_original=20,
               model_kind="DT")
    sf = build_farm(sp, FarmConfig(seed=3, **cfg))
    tf = build_farm(tp, FarmConfig(seed=4, **cfg))
    s_pos = positive_cases(sf)
    t_pos = positive_cases(tf)
    return dict(sf=sf, sn=sn, tf=tf, tn=tn,
                s_cases=s_pos + negative_cases(sf, sn, len(s_pos), 5),
                t_cases=t_pos + negative_cases(tf, tn, len(t_pos), 6))


def test_attack_dimensions():
    cases = synthetic_cases(6, 6)
    assert train_attack(cases, "SortedDiff", kind="DT").inner.feature_dim == 3
    assert train_attack(cases, "EucDist", kind="DT").inner.feature_dim == 1
    assert train_attack(cases, "SortedConcat", kind="LR").inner.feature_dim == 6


def test_attack_balance_enforced():
    with pytest.raises(DataError, match="unbalanced"):
        train_attack(synthetic_cases(5, 6), "SortedDiff", kind="DT")
    with pytest.raises(DataError, match="both"):
        train_attack(synthetic_cases(6, 0), "SortedDiff", kind="DT")


def test_infer_range_and_determinism():
    cases = synthetic_cases(40, 40)
    attack = train_attack(cases, "SortedDiff", kind="RF", params=FAST, seed=1)
    Po, Pu, _ = case_arrays(synthetic_cases(30, 30, seed=9))
    s = infer_batch(attack, Po, Pu)
    assert np.all((s >= 0) & (s <= 1))
    assert infer(attack, Po[0], Pu[0]) == infer(attack, Po[0], Pu[0])


def test_overfit_dt_scores_training_positive_high():
    pos = CasePair(np.array([0.9, 0.1]), np.array([0.6, 0.4]), True, 0, (0, 0), 0)
    neg = CasePair(np.array([0.9, 0.1]), np.array([0.9, 0.1]), False, 0, (0, 0), 1)
    attack = train_attack([pos, neg], "SortedDiff", kind="DT")
    tree = attack.inner.parameters
    # one split separates the two cases; each leaf holds one case -> (1+1)/(1+2)
    assert tree.n_leaves == 2
    leaf = tree.apply(construct("SortedDiff", pos.posterior_original,
                                pos.posterior_unlearned)[None])[0]
    assert tree.proba[leaf, MEMBER] == pytest.approx(2 / 3)
    assert infer(attack, pos.posterior_original, pos.posterior_unlearned) >= 0.5


def test_feature_pipeline_equality():
    attack = train_attack(synthetic_cases(30, 30), "SortedConcat", kind="LR")
    po, pu = np.array([0.2, 0.5, 0.3]), np.array([0.3, 0.4, 0.3])
    manual = attack.inner.predict_proba(construct("SortedConcat", po, pu))[MEMBER]
    assert infer(attack, po, pu) == manual


def test_infer_dimension_mismatch():
    attack = train_attack(synthetic_cases(6, 6), "DirectDiff", kind="DT")
    with pytest.raises(DataError):
        infer(attack, [0.5, 0.5], [0.5, 0.5])


def test_defended_attack_sees_reconstructed_posteriors():
    cases = synthetic_cases(20, 20)
    attack = train_attack(cases, "DirectDiff", Defense("label"), kind="DT")
    po, pu = np.array([0.5, 0.3, 0.2]), np.array([0.45, 0.35, 0.2])
    manual = attack.inner.predict_proba(np.zeros(3))[MEMBER]
    assert infer(attack, po, pu) == manual


def test_baseline_separates_overfit_posteriors():
    rng = np.random.default_rng(0)
    members = np.array([[0.97, 0.02, 0.01]] * 50) + rng.uniform(0, 0.005, (50, 3))
    members /= members.sum(axis=1, keepdims=True)
    nonmembers = np.full((50, 3), 1 / 3)
    P = np.vstack([members, nonmembers])
    is_member = np.r_[np.ones(50, bool), np.zeros(50, bool)]
    # brute force: the top sorted entry alone separates the two groups
    assert members.max(axis=1).min() > nonmembers.max(axis=1).max()
    base = fit_baseline(P, is_member, "DT")
    assert base.inner.feature_dim == 3
    preds = base.inner.predict_proba(base.features(P))[:, MEMBER] > 0.5
    assert np.mean(preds == is_member) == 1.0
    assert infer_baseline(base, [1 / 3, 1 / 3, 1 / 3]) <= 0.5
    assert infer_baseline(base, [1 / 3, 1 / 3, 1 / 3]) == \
        infer_baseline(base, [1 / 3, 1 / 3, 1 / 3])


def test_baseline_balance_enforced():
    with pytest.raises(DataError, match="unbalanced"):
        fit_baseline(np.full((3, 2), 0.5), [True, True, False], "DT")


def test_baseline_training_set_from_farm(world):
    P, is_member = baseline_training_set(world["sf"], world["sn"], 0)
    assert P.shape == (2 * 5 * 400, 2)
    assert is_member.sum() == (~is_member).sum()
    P2, _ = baseline_training_set(world["sf"], world["sn"], 0, max_members=300)
    assert P2.shape == (600, 2)
    base = train_baseline(world["sf"], world["sn"], "RF", FAST, 0)
    Po, _, _ = case_arrays(world["t_cases"])
    s = np.array([infer_baseline(base, p) for p in Po[:10]])
    assert np.all((s >= 0) & (s <= 1))


def test_attack_learns_on_real_farm(world):
    attack = train_attack(world["s_cases"], "SortedDiff", kind="RF", params=FAST, seed=0)
    Po, Pu, b = case_arrays(world["t_cases"])
    assert auc(infer_batch(attack, Po, Pu), b) > 0.7


def test_label_permutation_sanity(world):
    """Shuffled training labels give chance-level AUC on average.

    Most target negatives share the exact all-zero difference feature, so a
    single shuffled classifier lands far from 0.5 whenever it happens to
    score that one point high or low; the mean over shuffles is the stable
    quantity.
    """
    cases = world["s_cases"]
    labels = np.array([c.is_positive for c in cases])
    Po, Pu, b = case_arrays(world["t_cases"])
    assert b.size >= 200
    scores = []
    for s in range(20):
        shuffled = np.random.default_rng(s).permutation(labels)
        permuted = [dataclasses.replace(c, is_positive=bool(x)) for c, x in zip(cases, shuffled)]
        attack = train_attack(permuted, "SortedDiff", kind="RF", seed=s)
        scores.append(auc(infer_batch(attack, Po, Pu), b))
    assert abs(np.mean(scores) - 0.5) <= 0.1
