"""Featurization, dataset labeling, classifiers, and guidance weights."""

import math
import random

import numpy as np
import pytest

from conacq.core import (
    COMPARISONS,
    Constraint,
    RelKind,
    Relation,
    TensorDecl,
    Var,
    Vocabulary,
    build_bias,
)
from conacq.learning import (
    Classifier,
    ClassifierKind,
    Dataset,
    DuplicateLabelError,
    Featurizer,
    MIN_FIT_ROWS,
    base_weights,
    cross_validate,
    fit,
    load_csv,
    model_M,
    objective_weights,
    prefix_evaluate,
)


@pytest.fixture
def voc():
    return Vocabulary([TensorDecl("grid", (4, 4), 1, 4)])


@pytest.fixture
def language():
    return [Relation(k) for k in COMPARISONS]


@pytest.fixture
def featurizer(voc, language):
    return Featurizer(voc, language)


def _labeled_dataset(featurizer, voc, language, n, seed=0):
    """A dataset of n distinct labeled bias candidates (label: is NEQ)."""
    rng = random.Random(seed)
    bias = list(build_bias(voc, language))
    rng.shuffle(bias)
    ds = Dataset(featurizer)
    for c in bias[:n]:
        ds.record_decision(c, learned=(c.kind is RelKind.NEQ))
    return ds


# -- featurizer ----------------------------------------------------------


def test_feature_vector_matches_schema(featurizer, voc):
    c = voc.constraint(RelKind.LT, (Var("grid", (0, 1)), Var("grid", (2, 3))))
    x = featurizer.featurize(c)
    assert len(x) == len(featurizer.feature_names)
    names = featurizer.feature_names
    # exactly one relation slot is hot and it is the right one
    rel = [x[i] for i, n in enumerate(names) if n.startswith("rel_")]
    assert sum(rel) == 1.0
    assert x[names.index("rel_LT")] == 1.0
    assert x[names.index("arity")] == 2
    assert x[names.index("has_constant")] == 0.0
    assert x[names.index("var_name_same")] == 1.0
    assert x[names.index("dim0_has")] == 1.0
    assert x[names.index("dim0_max")] == 2
    assert x[names.index("dim0_min")] == 0
    assert x[names.index("dim0_avg")] == 1.0
    assert x[names.index("dim0_spread")] == pytest.approx(1.0)
    assert x[names.index("dim1_same")] == 0.0


def test_featurize_param_relation():
    voc = Vocabulary([TensorDecl("slot", (6,), 1, 12)])
    language = [Relation(RelKind.NEQ), Relation(RelKind.FLOORDIV_NEQ, 4)]
    fz = Featurizer(voc, language)
    c = voc.constraint(RelKind.FLOORDIV_NEQ, (Var("slot", (0,)), Var("slot", (5,))), 4)
    x = fz.featurize(c)
    names = fz.feature_names
    assert x[names.index("rel_FLOORDIV_NEQ_4")] == 1.0
    assert x[names.index("has_constant")] == 1.0
    assert x[names.index("constant")] == 4


def test_featurize_rejects_foreign_relation(featurizer, voc):
    c = Constraint(RelKind.FLOORDIV_NEQ, (Var("grid", (0, 0)), Var("grid", (0, 1))), 2)
    with pytest.raises(ValueError):
        featurizer.featurize(c)


def test_feature_vectors_are_deterministic(featurizer, voc, language):
    bias = list(build_bias(voc, language))
    for c in bias[:50]:
        assert np.array_equal(featurizer.featurize(c), featurizer.featurize(c))


# -- dataset -------------------------------------------------------------


def test_duplicate_label_rejected(featurizer, voc):
    ds = Dataset(featurizer)
    c = voc.constraint(RelKind.NEQ, (Var("grid", (0, 0)), Var("grid", (0, 1))))
    ds.record_decision(c, learned=True)
    with pytest.raises(DuplicateLabelError):
        ds.record_decision(c, learned=False)


def test_counting_estimate_matches_recount(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 60, seed=3)
    for kind in (RelKind.NEQ, RelKind.EQ, RelKind.LT):
        probe = next(c for c in build_bias(voc, language) if c.kind is kind)
        pos = sum(
            1 for c, y in zip(ds.constraints, ds.labels) if c.kind is kind and y == 1
        )
        tot = sum(1 for c in ds.constraints if c.kind is kind)
        assert ds.counting_estimate(probe) == pytest.approx((pos + 1) / (tot + 2))


def test_counting_estimate_on_empty_dataset(featurizer, voc):
    ds = Dataset(featurizer)
    c = voc.constraint(RelKind.EQ, (Var("grid", (0, 0)), Var("grid", (1, 1))))
    assert ds.counting_estimate(c) == pytest.approx(0.5)


def test_csv_round_trip(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 25, seed=1)
    X0, y0 = ds.matrix()
    X, y, names = load_csv(ds.to_csv())
    assert names == featurizer.feature_names
    assert np.allclose(X, X0)
    assert np.array_equal(y, y0)


def test_load_csv_rejects_garbage():
    with pytest.raises(ValueError):
        load_csv("not,a,dataset\n1,2,3\n")


# -- classifiers ---------------------------------------------------------


def test_fit_falls_back_below_min_rows(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, MIN_FIT_ROWS - 1)
    clf = fit(ClassifierKind.GNB, ds)
    probe = next(iter(build_bias(voc, language)))
    assert clf.predict_proba(probe) == pytest.approx(ds.counting_estimate(probe))


def test_fit_falls_back_on_single_class(featurizer, voc, language):
    ds = Dataset(featurizer)
    for c in list(build_bias(voc, language))[: MIN_FIT_ROWS + 5]:
        ds.record_decision(c, learned=False)
    clf = fit(ClassifierKind.RF, ds)
    probe = next(iter(build_bias(voc, language)))
    assert clf.predict_proba(probe) == pytest.approx(ds.counting_estimate(probe))


def test_gnb_posterior_matches_closed_form(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 80, seed=7)
    clf = fit(ClassifierKind.GNB, ds)
    X, y = ds.matrix()

    # hand-rolled Gaussian naive Bayes with the same variance smoothing
    eps = 1e-9 * X.var(axis=0).max()
    classes = np.unique(y)
    priors = np.array([(y == k).mean() for k in classes])
    mus = np.array([X[y == k].mean(axis=0) for k in classes])
    sigs = np.array([X[y == k].var(axis=0) + eps for k in classes])

    def posterior_pos(x):
        logp = np.log(priors) + np.array(
            [
                -0.5 * np.sum(np.log(2 * np.pi * sigs[i]))
                - 0.5 * np.sum((x - mus[i]) ** 2 / sigs[i])
                for i in range(len(classes))
            ]
        )
        logp -= logp.max()
        p = np.exp(logp)
        p /= p.sum()
        return p[classes == 1][0]

    for probe in list(build_bias(voc, language))[:40]:
        expected = posterior_pos(featurizer.featurize(probe))
        assert clf.predict_proba(probe) == pytest.approx(expected, abs=1e-6)


def test_rf_is_deterministic_per_seed(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 80, seed=5)
    clf1 = fit(ClassifierKind.RF, ds, seed=11)
    clf2 = fit(ClassifierKind.RF, ds, seed=11)
    probes = list(build_bias(voc, language))[:60]
    assert clf1.predict_proba_many(probes) == clf2.predict_proba_many(probes)
    for p in clf1.predict_proba_many(probes):
        assert 0.0 <= p <= 1.0


def test_predict_proba_many_matches_single(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 80, seed=5)
    for kind in (ClassifierKind.COUNTING, ClassifierKind.GNB, ClassifierKind.RF):
        clf = fit(kind, ds)
        probes = list(build_bias(voc, language))[:20]
        many = clf.predict_proba_many(probes)
        singles = [clf.predict_proba(c) for c in probes]
        assert many == pytest.approx(singles)


# -- guidance signal -----------------------------------------------------


def test_model_m_uses_natural_log():
    # 1/0.5 = 2; ln(8) ~ 2.079 passes, ln(7) ~ 1.946 fails, log2(7) would pass
    assert model_M(0.5, 8) is True
    assert model_M(0.5, 7) is False
    assert model_M(0.0, 100) is False
    assert model_M(1.0, 3) is True
    assert model_M(1.0, 2) is False  # ln(2) < 1


def test_model_m_validates_inputs():
    with pytest.raises(ValueError):
        model_M(1.5, 10)
    with pytest.raises(ValueError):
        model_M(-0.1, 10)
    with pytest.raises(ValueError):
        model_M(0.5, 0)


def test_model_m_monotone_in_probability():
    ps = [i / 20 for i in range(21)]
    for y_size in (2, 10, 100):
        flags = [model_M(p, y_size) for p in ps]
        # once true, stays true as p grows
        assert flags == sorted(flags)


def test_objective_weights_formula(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 80, seed=2)
    clf = fit(ClassifierKind.GNB, ds)
    cands = list(build_bias(voc, language))[:30]
    y_size, gamma = 16, len(language)
    w = objective_weights(cands, clf, y_size, gamma)
    probs = clf.predict_proba_many(cands)
    for c, p in zip(cands, probs):
        expected = 1 - gamma if model_M(p, y_size) else 1
        assert w[c] == expected
    assert any(v == 1 - gamma for v in w.values())  # NEQ is confidently learned


def test_base_weights_all_one(voc, language):
    cands = list(build_bias(voc, language))[:10]
    assert objective_weights(cands, None, 16, 6) == {c: 1 for c in cands}
    assert base_weights(cands) == {c: 1 for c in cands}


# -- offline evaluation --------------------------------------------------


def test_cross_validate_shapes_and_ranges(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 96, seed=9)
    X, y = ds.matrix()
    for kind in (ClassifierKind.GNB, ClassifierKind.RF):
        acc, bacc, f1 = cross_validate(X, y, kind, folds=4)
        for m in (acc, bacc, f1):
            assert 0.0 <= m <= 1.0
        # this labeling is a pure function of the features; both models
        # should beat the 2/3 majority class clearly
        assert bacc > 0.7


def test_cross_validate_requires_both_classes(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 40, seed=1)
    X, y = ds.matrix()
    with pytest.raises(ValueError):
        cross_validate(X, np.zeros_like(y), ClassifierKind.GNB, folds=4)


def test_prefix_evaluate_rows(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 60, seed=4)
    X, y = ds.matrix()
    rows = prefix_evaluate(X, y, ClassifierKind.RF, fractions=(0.25, 0.5, 0.75))
    assert [r[0] for r in rows] == [0.25, 0.5, 0.75]
    for _, acc, bacc, f1 in rows:
        assert 0.0 <= acc <= 1.0 and 0.0 <= bacc <= 1.0 and 0.0 <= f1 <= 1.0


def test_prefix_evaluate_rejects_degenerate_fraction(featurizer, voc, language):
    ds = _labeled_dataset(featurizer, voc, language, 30, seed=4)
    X, y = ds.matrix()
    with pytest.raises(ValueError):
        prefix_evaluate(X, y, ClassifierKind.GNB, fractions=(1.0,))
