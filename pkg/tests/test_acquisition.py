"""End-to-end acquisition behavior: convergence, scope isolation,
relation discrimination, labeling, and the growing outer loop."""

import itertools
import random

import pytest

from conacq.core import (
    COMPARISONS,
    Assignment,
    ConstraintSet,
    RelKind,
    Relation,
    TensorDecl,
    Var,
    Vocabulary,
    build_bias,
    kappa,
)
from conacq.acquisition import (
    CollapseError,
    Equivalence,
    FunctionOracle,
    GuidedLayers,
    Layer,
    OracleFailure,
    Session,
    SimulatedOracle,
    verify_equivalence,
)
from conacq.learning import ClassifierKind


SMALL_VOC = Vocabulary([TensorDecl("x", (4,), 1, 3)])
COMPARISON_LANGUAGE = [Relation(k) for k in COMPARISONS]


def _all_assignments(voc):
    doms = [voc.domain(v) for v in voc.variables]
    for values in itertools.product(*doms):
        yield Assignment(dict(zip(voc.variables, values)))


def _solutions(C, voc):
    return {e for e in _all_assignments(voc) if len(kappa(C, e)) == 0}


def _random_satisfiable_target(voc, rng, n_constraints):
    bias = list(build_bias(voc, COMPARISON_LANGUAGE))
    while True:
        target = ConstraintSet(rng.sample(bias, n_constraints))
        if _solutions(target, voc):
            return target


def _session(target, voc=SMALL_VOC, guidance=None, layers=GuidedLayers.QGEN_ONLY, seed=0):
    return Session(
        voc,
        COMPARISON_LANGUAGE,
        SimulatedOracle(target),
        guidance=guidance,
        guided_layers=layers,
        seed=seed,
    )


# -- whole-run soundness on exhaustively checkable problems ---------------


@pytest.mark.parametrize("seed", range(25))
def test_learned_network_has_exact_solution_set(seed):
    """The learned network must match the target on every complete
    assignment (checked by enumeration, 81 assignments)."""
    rng = random.Random(seed)
    target = _random_satisfiable_target(SMALL_VOC, rng, rng.randint(1, 4))
    sess = _session(target, seed=seed)
    learned = sess.grow_acquire()
    assert _solutions(learned, SMALL_VOC) == _solutions(target, SMALL_VOC)


@pytest.mark.parametrize(
    "guidance,layers",
    [
        (ClassifierKind.COUNTING, GuidedLayers.QGEN_ONLY),
        (ClassifierKind.COUNTING, GuidedLayers.ALL),
        (ClassifierKind.GNB, GuidedLayers.QGEN_ONLY),
        (ClassifierKind.RF, GuidedLayers.ALL),
    ],
)
def test_guided_runs_are_equally_sound(guidance, layers):
    for seed in range(5):
        rng = random.Random(100 + seed)
        target = _random_satisfiable_target(SMALL_VOC, rng, rng.randint(1, 4))
        sess = _session(target, guidance=guidance, layers=layers, seed=seed)
        learned = sess.grow_acquire()
        assert _solutions(learned, SMALL_VOC) == _solutions(target, SMALL_VOC)


def test_empty_target_learns_nothing_binding():
    sess = _session(ConstraintSet())
    learned = sess.grow_acquire()
    assert _solutions(learned, SMALL_VOC) == set(_all_assignments(SMALL_VOC))


# -- scope isolation -------------------------------------------------------


@pytest.mark.parametrize("seed", range(40))
def test_find_scope_returns_scope_of_a_violated_target_constraint(seed):
    """From any rejected example, scope isolation must land exactly on the
    scope of some target constraint the example violates."""
    rng = random.Random(seed)
    target = _random_satisfiable_target(SMALL_VOC, rng, rng.randint(1, 4))
    sess = _session(target, seed=seed)
    sess.B = build_bias(SMALL_VOC, COMPARISON_LANGUAGE)
    rejected = [
        e for e in _all_assignments(SMALL_VOC) if len(kappa(target, e)) > 0
    ]
    for e in rng.sample(rejected, min(5, len(rejected))):
        S = sess.find_scope(e, [], list(SMALL_VOC.variables))
        assert any(
            c.variables == frozenset(S) for c in kappa(target, e)
        ), f"{sorted(S)} is not the scope of any violated target constraint"


def test_find_scope_guided_agrees_on_soundness():
    for seed in range(10):
        rng = random.Random(1000 + seed)
        target = _random_satisfiable_target(SMALL_VOC, rng, 3)
        sess = _session(
            target,
            guidance=ClassifierKind.COUNTING,
            layers=GuidedLayers.ALL,
            seed=seed,
        )
        sess.B = build_bias(SMALL_VOC, COMPARISON_LANGUAGE)
        sess._refit()
        e = next(
            a for a in _all_assignments(SMALL_VOC) if len(kappa(target, a)) > 0
        )
        S = sess.find_scope(e, [], list(SMALL_VOC.variables))
        assert any(c.variables == frozenset(S) for c in kappa(target, e))


# -- relation discrimination -----------------------------------------------


def test_find_c_learns_the_right_relation():
    a, b = Var("x", (0,)), Var("x", (1,))
    target = ConstraintSet([SMALL_VOC.constraint(RelKind.LT, (a, b))])
    sess = _session(target)
    sess.B = build_bias(SMALL_VOC, COMPARISON_LANGUAGE)
    # an example violating the target on exactly that scope
    e = Assignment({a: 3, b: 1})
    sess.find_c({a, b}, e, 2)
    sols = {
        (x, y)
        for x in SMALL_VOC.domain(a)
        for y in SMALL_VOC.domain(b)
        if all(len(kappa(sess.C_L, Assignment({a: x, b: y}))) == 0 for _ in [0])
    }
    assert sols == {(x, y) for x in (1, 2, 3) for y in (1, 2, 3) if x < y}


def test_find_c_collapses_when_scope_unrepresentable():
    a, b = Var("x", (0,)), Var("x", (1,))
    sess = _session(ConstraintSet())
    sess.B = ConstraintSet()  # nothing to discriminate
    with pytest.raises(CollapseError):
        sess.find_c({a, b}, Assignment({a: 1, b: 1}), 2)


def test_unrepresentable_target_is_caught_by_the_equivalence_check():
    """A target outside the session language either collapses mid-run or
    converges to a network the terminal equivalence check can refute."""
    voc = Vocabulary([TensorDecl("x", (3,), 1, 4)])
    a, b = Var("x", (0,)), Var("x", (1,))
    # target: x0 and x1 in different size-2 value buckets — not expressible
    # as a conjunction of plain comparisons
    target = ConstraintSet([voc.constraint(RelKind.FLOORDIV_NEQ, (a, b), 2)])
    sess = Session(voc, COMPARISON_LANGUAGE, SimulatedOracle(target), seed=0)
    try:
        learned = sess.grow_acquire()
    except CollapseError:
        return
    res = verify_equivalence(learned, target, voc)
    assert res.status is Equivalence.WITNESS


def test_contradictory_oracle_terminates_with_unsat_network():
    """An oracle that rejects everything makes the candidates on the first
    pair mutually indistinguishable; the run must still terminate, with a
    learned network that has no solutions rather than an endless loop."""
    sess = Session(
        SMALL_VOC, COMPARISON_LANGUAGE, FunctionOracle(lambda e: False), seed=0
    )
    learned = sess.grow_acquire()
    assert _solutions(learned, SMALL_VOC) == set()


# -- labeling and stats ------------------------------------------------------


def test_every_bias_decision_is_labeled_exactly_once():
    rng = random.Random(7)
    target = _random_satisfiable_target(SMALL_VOC, rng, 3)
    sess = _session(target, guidance=ClassifierKind.COUNTING, seed=7)
    sess.grow_acquire()
    st = sess.stats
    assert st.labels_positive == len(sess.C_L)
    assert st.labels_positive + st.labels_negative == len(sess.dataset)
    assert st.labels_positive + st.labels_negative + st.bias_leftover == st.bias_seen
    assert st.labels_positive == sum(sess.dataset.labels)


def test_stats_count_queries_by_layer():
    rng = random.Random(3)
    target = _random_satisfiable_target(SMALL_VOC, rng, 3)
    sess = _session(target, seed=3)
    sess.record_log = True
    sess.grow_acquire()
    st = sess.stats
    assert st.total_queries == len(sess.query_log)
    for layer in Layer:
        assert st.queries_by_layer[layer] == sum(
            1 for r in sess.query_log if r.layer is layer
        )
    assert st.total_queries > 0
    assert st.total_wait >= 0 and st.max_wait >= 0


def test_oracle_failure_is_reported():
    def boom(e):
        raise RuntimeError("oracle went away")

    sess = Session(
        SMALL_VOC, COMPARISON_LANGUAGE, FunctionOracle(boom), seed=0
    )
    with pytest.raises(OracleFailure):
        sess.grow_acquire()


# -- the growing outer loop ---------------------------------------------------


def test_grow_acquire_sees_the_whole_bias_once():
    sess = _session(ConstraintSet())
    sess.grow_acquire()
    n = len(SMALL_VOC.variables)
    full_bias = len(build_bias(SMALL_VOC, COMPARISON_LANGUAGE))
    assert sess.stats.bias_seen == full_bias
    assert full_bias == 6 * n * (n - 1) // 2


def test_grow_acquire_leaves_no_bias_behind_here():
    # with pure comparisons on independent variables every candidate is
    # decidable, so nothing should remain unresolved
    rng = random.Random(11)
    target = _random_satisfiable_target(SMALL_VOC, rng, 2)
    sess = _session(target, seed=11)
    sess.grow_acquire()
    assert len(sess.B) == 0
    assert sess.stats.unresolved_checks == 0


# -- terminal equivalence check ------------------------------------------------


def test_verify_equivalence_accepts_equal_networks():
    rng = random.Random(5)
    target = _random_satisfiable_target(SMALL_VOC, rng, 3)
    res = verify_equivalence(target.copy(), target, SMALL_VOC)
    assert res.status is Equivalence.EQUIVALENT
    assert res.witness is None


def test_verify_equivalence_finds_a_witness():
    a, b, c, d = SMALL_VOC.variables
    target = ConstraintSet(
        [
            SMALL_VOC.constraint(RelKind.LT, (a, b)),
            SMALL_VOC.constraint(RelKind.NEQ, (c, d)),
        ]
    )
    weaker = ConstraintSet([SMALL_VOC.constraint(RelKind.LT, (a, b))])
    res = verify_equivalence(weaker, target, SMALL_VOC)
    assert res.status is Equivalence.WITNESS
    e = res.witness
    assert e is not None
    # the witness must separate the two solution sets
    assert (len(kappa(weaker, e)) == 0) != (len(kappa(target, e)) == 0)


def test_verify_equivalence_accepts_implied_differences():
    a, b, c, _ = SMALL_VOC.variables
    chain = ConstraintSet(
        [
            SMALL_VOC.constraint(RelKind.LT, (a, b)),
            SMALL_VOC.constraint(RelKind.LT, (b, c)),
        ]
    )
    with_implied = chain.union([SMALL_VOC.constraint(RelKind.LT, (a, c))])
    res = verify_equivalence(chain, with_implied, SMALL_VOC)
    assert res.status is Equivalence.EQUIVALENT
