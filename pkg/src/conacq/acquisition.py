"""The interactive acquisition stack.

A session owns the learned network, the live bias, the guidance
classifier, and the oracle protocol, and runs:

* the generic acquisition template (generate an irredundant query, ask,
  shrink the bias on yes / isolate a constraint on no),
* the growing outer loop (acquire over an increasing variable prefix,
  with the step bias filtered to pairs containing the newest variable),
* scope isolation on negative answers (recursive halving, optionally
  guided by the classifier),
* relation discrimination over the found scope (halving or guided).

Every removal from the bias and every learned constraint is reported to
the dataset with a negative/positive label.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

from conacq.core import (
    Assignment,
    Constraint,
    ConstraintSet,
    Relation,
    Var,
    Vocabulary,
    build_bias,
    kappa,
)
from conacq.learning import (
    Classifier,
    ClassifierKind,
    Dataset,
    Featurizer,
    base_weights,
    fit,
    objective_weights,
    warm_up,
)
from conacq.solver import ObjectiveWeights, SolveOutcome, Solver, Status


class CollapseError(RuntimeError):
    """The bias cannot represent the target constraint implicated by the
    oracle's answers."""


class OracleFailure(RuntimeError):
    """The oracle failed to produce an answer."""


class Layer(Enum):
    TOP = "top"
    FINDSCOPE = "findscope"
    FINDC = "findc"


class GuidedLayers(Enum):
    QGEN_ONLY = "qgen"
    ALL = "all"


class Oracle:
    """Blocking yes/no answers to (partial) membership queries."""

    def ask(self, e: Assignment) -> bool:
        raise NotImplementedError


class SimulatedOracle(Oracle):
    """Answers yes iff the example violates no target constraint."""

    def __init__(self, target: ConstraintSet):
        self.target = target

    def ask(self, e: Assignment) -> bool:
        return len(kappa(self.target, e)) == 0


class FunctionOracle(Oracle):
    def __init__(self, fn: Callable[[Assignment], bool]):
        self.fn = fn

    def ask(self, e: Assignment) -> bool:
        return self.fn(e)


@dataclass
class QueryRecord:
    layer: Layer
    size: int
    answer: bool
    wait_seconds: float


@dataclass
class SessionStats:
    queries_by_layer: dict = field(default_factory=lambda: {l: 0 for l in Layer})
    fits: int = 0
    generations: int = 0
    labels_positive: int = 0
    labels_negative: int = 0
    bias_seen: int = 0
    bias_leftover: int = 0
    max_wait: float = 0.0
    total_wait: float = 0.0
    max_fit_time: float = 0.0
    max_guide_time: float = 0.0  # refit plus candidate-weight prediction
    unresolved_checks: int = 0
    implied_pruned: int = 0

    @property
    def total_queries(self) -> int:
        return sum(self.queries_by_layer.values())

    @property
    def avg_wait(self) -> float:
        n = self.total_queries
        return self.total_wait / n if n else 0.0


class Session:
    """One acquisition run: strictly sequential, owns all mutable state."""

    def __init__(
        self,
        voc: Vocabulary,
        language: Sequence[Relation],
        oracle: Oracle,
        guidance: Optional[ClassifierKind] = None,
        guided_layers: GuidedLayers = GuidedLayers.QGEN_ONLY,
        seed: int = 0,
        cutoff: Optional[float] = 1.0,
        record_log: bool = False,
    ):
        self.voc = voc
        self.language = list(language)
        self.oracle = oracle
        self.guidance = guidance
        self.guided_layers = guided_layers
        self.seed = seed
        self.cutoff = cutoff
        self.solver = Solver(voc, seed)
        self.featurizer = Featurizer(voc, language)
        self.dataset = Dataset(self.featurizer)
        self.C_L = ConstraintSet()
        self.B = ConstraintSet()
        self.stats = SessionStats()
        self.record_log = record_log
        self.query_log: list[QueryRecord] = []
        self.clf: Optional[Classifier] = None
        if guidance is not None:
            warm_up(guidance)
        self._t_ready = time.monotonic()
        # the run seed shuffles FindScope's working variable order once per run
        import random

        order = list(range(len(voc.variables)))
        random.Random(seed).shuffle(order)
        self._shuffle_rank = {v: order[i] for i, v in enumerate(voc.variables)}

    # -- oracle protocol ----------------------------------------------------

    def ask(self, e: Assignment, layer: Layer) -> bool:
        now = time.monotonic()
        wait = now - self._t_ready
        self.stats.max_wait = max(self.stats.max_wait, wait)
        self.stats.total_wait += wait
        self.stats.queries_by_layer[layer] += 1
        try:
            answer = self.oracle.ask(e)
        except Exception as exc:  # oracle protocol failure
            raise OracleFailure(str(exc)) from exc
        if self.record_log:
            self.query_log.append(QueryRecord(layer, len(e), answer, wait))
        self._t_ready = time.monotonic()
        return answer

    # -- labeling -------------------------------------------------------------

    def _remove_from_bias(self, cs: Iterable[Constraint]) -> None:
        for c in cs:
            if c in self.B:
                self.B.discard(c)
                self.dataset.record_decision(c, learned=False)
                self.stats.labels_negative += 1

    def _learn(self, cs: Iterable[Constraint]) -> None:
        for c in cs:
            self.B.discard(c)
            self.C_L.add(c)
            self.dataset.record_decision(c, learned=True)
            self.stats.labels_positive += 1

    # -- guidance -------------------------------------------------------------

    def _refit(self) -> None:
        if self.guidance is None:
            return
        t0 = time.monotonic()
        self.clf = fit(self.guidance, self.dataset, self.seed)
        self.stats.fits += 1
        self.stats.max_fit_time = max(self.stats.max_fit_time, time.monotonic() - t0)

    def _weights(self, cands: Iterable[Constraint], y_size: int) -> ObjectiveWeights:
        if self.guidance is None or self.clf is None:
            return base_weights(cands)
        return objective_weights(cands, self.clf, y_size, len(self.language))

    @property
    def _guide_inner(self) -> bool:
        return self.guidance is not None and self.guided_layers is GuidedLayers.ALL

    # -- Algorithm: the acquisition template ----------------------------------

    def acquire(self, Y: Sequence[Var]) -> ConstraintSet:
        """Run the acquisition loop over Y against the current bias."""
        yset = set(Y)
        skipped: set[Constraint] = set()
        while True:
            t_guide = time.monotonic()
            self._refit()
            self.stats.generations += 1
            cands = [c for c in self.B if yset.issuperset(c.scope)]
            weights = self._weights(cands, len(yset))
            self.stats.max_guide_time = max(
                self.stats.max_guide_time, time.monotonic() - t_guide
            )
            out = self.solver.generate_query(yset, self.C_L, self.B, weights, self.cutoff)
            if out.status is Status.NO_INCUMBENT_TIMEOUT:
                # no feasible incumbent before the cutoff: scan candidates
                # one at a time. A directed feasibility check per candidate
                # is far cheaper than one global proof over the whole step,
                # and all-infeasible is exactly step convergence.
                out = SolveOutcome(Status.INFEASIBLE)
                for c in cands:
                    if c in skipped or c not in self.B:
                        continue
                    single = self.solver.find_violation(yset, self.C_L, c, self.cutoff)
                    if single.feasible:
                        out = single
                        break
                    if single.status is Status.INFEASIBLE:
                        # implied by the learned network: no query can ever
                        # violate it, so it is dead weight in the bias and
                        # (being implied) never changes the solution set
                        self.B.discard(c)
                        self.stats.bias_leftover += 1
                        self.stats.implied_pruned += 1
                    else:
                        # not refuted within the cutoff: treated as
                        # non-violable for the rest of this step; the
                        # terminal equivalence check guards against the
                        # (unlikely) case that it was merely hard to hit
                        skipped.add(c)
                        self.stats.unresolved_checks += 1
            if out.status is Status.INFEASIBLE:
                return self.C_L  # converged on Y
            e = out.assignment
            assert e is not None
            kappa_B = kappa(self.B, e)
            assert len(kappa(self.C_L, e)) == 0 and len(kappa_B) > 0, "query not irredundant"
            if self.ask(e, Layer.TOP):
                self._remove_from_bias(kappa_B)
            else:
                S = self.find_scope(e, [], self._ordered(Y))
                self.find_c(S, e, len(yset))

    def grow_acquire(self) -> ConstraintSet:
        """Acquire over a growing variable prefix in canonical order; each
        step's bias holds exactly the pairs containing the new variable."""
        Y: list[Var] = []
        for x in self.voc.variables:
            Y.append(x)
            if len(Y) < 2:
                continue
            step_bias = build_bias(self.voc, self.language, restrict_to=Y, must_include=x)
            self.stats.bias_seen += len(step_bias)
            self.B = step_bias
            self.acquire(Y)
            self.stats.bias_leftover += len(self.B)
        self.B = ConstraintSet()
        return self.C_L

    # -- FindScope -------------------------------------------------------------

    def _ordered(self, variables: Iterable[Var]) -> list[Var]:
        return sorted(variables, key=self._shuffle_rank.__getitem__)

    def find_scope(self, e: Assignment, R: Sequence[Var], Y: Sequence[Var]) -> set[Var]:
        """Isolate the scope of one violated target constraint from a
        rejected example (recursive halving over Y)."""
        eR = e.project(R)
        if len(kappa(self.B, eR)) > 0:
            if self.ask(eR, Layer.FINDSCOPE):
                self._remove_from_bias(kappa(self.B, eR))
            else:
                return set()
        if len(Y) == 1:
            return set(Y)
        Y = list(Y)
        if self._guide_inner:
            kappa_e = kappa(self.B, e)
            weights = self._weights(list(kappa_e), max(len(R) + len(Y), 2))
            y1_set = self.solver.select_split(Y, R, e, kappa_e, weights, exact_half=False)
            assert 0 < len(y1_set) <= len(Y) // 2
            Y1 = [v for v in Y if v in y1_set]
        else:
            Y1 = Y[: (len(Y) + 1) // 2]
        Y2 = [v for v in Y if v not in set(Y1)]
        RY = list(R) + Y
        kRY = kappa(self.B, e.project(RY))
        if kappa(self.B, e.project(list(R) + Y1)) == kRY:
            S1: set[Var] = set()
        else:
            S1 = self.find_scope(e, list(R) + Y1, Y2)
        if kappa(self.B, e.project(list(R) + sorted(S1, key=self._shuffle_rank.__getitem__))) == kappa(
            self.B, e.project(RY)
        ):
            S2: set[Var] = set()
        else:
            S2 = self.find_scope(e, list(R) + self._ordered(S1), Y1)
        return S1 | S2

    # -- FindC -----------------------------------------------------------------

    def find_c(self, S: set[Var], e: Assignment, y_size: int) -> None:
        """Discriminate which relation over scope S belongs to the target."""
        delta = ConstraintSet(
            c for c in kappa(self.B, e.project(S)) if c.variables == frozenset(S)
        )
        if len(delta) == 0:
            raise CollapseError(
                f"no bias candidate has scope exactly {sorted(S)}; "
                "the target is not representable"
            )
        while True:
            if len(delta) == 1:
                self._learn(list(delta))
                return
            weights = (
                self._weights(list(delta), y_size) if self._guide_inner else None
            )
            out = self.solver.generate_findc_query(
                S,
                self.C_L,
                delta,
                weights=weights,
                deadline=self.cutoff,
                guided=self._guide_inner,
            )
            if out.status is Status.NO_INCUMBENT_TIMEOUT:
                out = self.solver.generate_findc_query(
                    S, self.C_L, delta, weights=weights, deadline=None,
                    guided=self._guide_inner,
                )
            if out.status is Status.INFEASIBLE:
                # mutually indistinguishable on sol(C_L[S]): learn them all
                self._learn(list(delta))
                return
            e2 = out.assignment
            assert e2 is not None
            kd = kappa(delta, e2)
            assert 0 < len(kd) < len(delta)
            if self.ask(e2, Layer.FINDC):
                for c in kd:
                    delta.discard(c)
                self._remove_from_bias(kd)
            else:
                # keep only the still-suspect candidates; the satisfied ones
                # remain ordinary bias candidates
                delta = kd


# -- convergence verification ---------------------------------------------


class Equivalence(Enum):
    EQUIVALENT = "equivalent"
    WITNESS = "witness"
    UNKNOWN = "unknown"


@dataclass
class EquivalenceResult:
    status: Equivalence
    witness: Optional[Assignment] = None


def verify_equivalence(
    C_L: ConstraintSet,
    C_T: ConstraintSet,
    voc: Vocabulary,
    deadline: Optional[float] = None,
    seed: int = 0,
) -> EquivalenceResult:
    """Search for a complete assignment separating sol(C_L) and sol(C_T).

    A separating assignment satisfies one network entirely, so the
    constraint it violates must come from the other side's set difference;
    shared constraints never need checking. Each difference constraint gets
    a directed check (satisfy one network, violate that constraint), which
    propagates much better than a single disjunctive search.
    """
    solver = Solver(voc, seed)
    X = voc.variables
    t0 = time.monotonic()
    unresolved = False
    for haves, violates in ((C_L, C_T), (C_T, C_L)):
        for c in violates:
            if c in haves:
                continue
            remaining = None if deadline is None else deadline - (time.monotonic() - t0)
            if remaining is not None and remaining <= 0:
                return EquivalenceResult(Equivalence.UNKNOWN)
            out = solver.find_violation(X, haves, c, remaining)
            if out.feasible:
                return EquivalenceResult(Equivalence.WITNESS, out.assignment)
            if out.status is not Status.INFEASIBLE:
                unresolved = True
    if unresolved:
        return EquivalenceResult(Equivalence.UNKNOWN)
    return EquivalenceResult(Equivalence.EQUIVALENT)
