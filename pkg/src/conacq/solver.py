"""Anytime constraint solver used by every query-asking layer.

Depth-first branch-and-bound with forward checking over binary
constraints. Hard constraints are the learned network (plus, for query
generation, the requirement that at least one candidate is violated);
candidate constraints are soft and contribute their weight to the
objective when violated. The incumbent objective is non-decreasing over
the search and the best example found is returned when the deadline
fires.

Upper bound at a node: realized objective of decided candidate pairs
plus, per undecided pair, the best contribution still possible. For a
pair with one variable assigned, the bound is tightened by maximizing
over the other variable's current domain.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from conacq import _native
from conacq.core import (
    Assignment,
    Constraint,
    ConstraintSet,
    RelKind,
    Var,
    Vocabulary,
    rel_holds,
)

#: weight per candidate constraint, as produced by learning.objective_weights
ObjectiveWeights = Mapping[Constraint, int]


# complement of each representable relation, used to post "this candidate
# is violated" as an ordinary hard constraint (FLOORDIV_NEQ's complement,
# bucket equality, is not in the language and is handled by substitution-free
# search instead)
_NEGATION = {
    RelKind.EQ: RelKind.NEQ,
    RelKind.NEQ: RelKind.EQ,
    RelKind.LT: RelKind.GEQ,
    RelKind.GEQ: RelKind.LT,
    RelKind.GT: RelKind.LEQ,
    RelKind.LEQ: RelKind.GT,
}


class Status(Enum):
    OPTIMAL = "optimal"
    INCUMBENT = "incumbent"
    INFEASIBLE = "infeasible"
    NO_INCUMBENT_TIMEOUT = "no_incumbent_timeout"


@dataclass
class SolveOutcome:
    status: Status
    assignment: Optional[Assignment] = None
    objective_value: Optional[int] = None

    @property
    def feasible(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.INCUMBENT)


class _Deadline(Exception):
    pass


_NEG_INF = float("-inf")

# sign/bucket outcomes for a variable pair: (sign of a-b, buckets equal)
_PLAIN_OUTCOMES = ((-1, False), (0, True), (1, False))
_BUCKET_OUTCOMES = ((-1, False), (-1, True), (0, True), (1, True), (1, False))


def _violated_under(kind: RelKind, sign: int, same_bucket: bool) -> bool:
    if kind is RelKind.EQ:
        return sign != 0
    if kind is RelKind.NEQ:
        return sign == 0
    if kind is RelKind.LT:
        return sign >= 0
    if kind is RelKind.GT:
        return sign <= 0
    if kind is RelKind.LEQ:
        return sign > 0
    if kind is RelKind.GEQ:
        return sign < 0
    if kind is RelKind.FLOORDIV_NEQ:
        return same_bucket
    raise ValueError(kind)


class _Pair:
    """All candidates sharing one unordered variable pair, with bounds.

    ub_sat is the best contribution among outcomes where the two values
    differ; d = ub - ub_sat is the extra gain only reachable by making
    them equal. Pairs sharing a variable whose other endpoints are
    mutually distinct can realize that extra gain at most once between
    them, which exclusivity groups exploit for a tighter global bound.
    """

    __slots__ = (
        "i", "j", "kinds", "params", "weights", "constraints",
        "ub", "mv", "ub_sat", "d", "group", "decided", "exact", "nviol",
    )

    def __init__(self, i: int, j: int):
        self.i = i
        self.j = j
        self.kinds: list[RelKind] = []
        self.params: list[Optional[int]] = []
        self.weights: list[int] = []
        self.constraints: list[Constraint] = []
        self.decided = False
        self.exact = 0
        self.nviol = 0
        self.ub = 0.0
        self.mv = _NEG_INF
        self.ub_sat = 0.0
        self.d = 0.0
        self.group: Optional["_Group"] = None

    def init_bounds(self) -> None:
        outcomes = (
            _BUCKET_OUTCOMES
            if any(k is RelKind.FLOORDIV_NEQ for k in self.kinds)
            else _PLAIN_OUTCOMES
        )
        ub = _NEG_INF
        mv = _NEG_INF
        ub_sat = _NEG_INF
        for sign, same in outcomes:
            s = 0
            nv = 0
            for k, w in zip(self.kinds, self.weights):
                if _violated_under(k, sign, same):
                    s += w
                    nv += 1
            if s > ub:
                ub = s
            if nv and s > mv:
                mv = s
            if sign != 0 and s > ub_sat:
                ub_sat = s
        self.ub = ub
        self.mv = mv
        self.ub_sat = ub_sat
        self.d = ub - ub_sat

    def eval_pair(self, a: int, b: int) -> tuple[int, int]:
        """(weight sum, violation count) of the candidates under (a, b)."""
        s = 0
        nv = 0
        for k, p, w in zip(self.kinds, self.params, self.weights):
            if not rel_holds(k, p, a, b):
                s += w
                nv += 1
        return s, nv

    def tighten(
        self, fixed_is_i: bool, v: int, other_dom: Sequence[int]
    ) -> tuple[float, float, float]:
        """(ub, mv, ub_sat) maximizing over the unassigned variable's domain."""
        ub = _NEG_INF
        mv = _NEG_INF
        ub_sat = _NEG_INF
        for u in other_dom:
            a, b = (v, u) if fixed_is_i else (u, v)
            s, nv = self.eval_pair(a, b)
            if s > ub:
                ub = s
            if nv and s > mv:
                mv = s
            if u != v and s > ub_sat:
                ub_sat = s
        if ub_sat == _NEG_INF:
            ub_sat = ub  # only the equal-values outcome is left; claim no slack
        return ub, mv, ub_sat


class _Group:
    """Exclusivity group: pairs sharing a variable whose other endpoints
    are pairwise hard-distinct. At most one member can take its
    equal-values outcome, so the group forfeits S - M of optimism, where
    S sums members' d and M is the largest."""

    __slots__ = ("members", "contrib")

    def __init__(self) -> None:
        self.members: list[_Pair] = []
        self.contrib = 0.0


class _Search:
    """One branch-and-bound run over a variable set."""

    def __init__(
        self,
        variables: Sequence[Var],
        domains: Sequence[Sequence[int]],
        hard: Iterable[Constraint],
        candidates: Iterable[tuple[Constraint, int]],
        rng: random.Random,
        deadline: Optional[float],
        decision_only: bool = False,
        first_feasible: bool = False,
    ):
        self.vars = list(variables)
        self.n = len(self.vars)
        self.idx = {v: i for i, v in enumerate(self.vars)}
        self.doms = [list(d) for d in domains]
        for d in self.doms:
            rng.shuffle(d)
        self.dsize = [len(d) for d in self.doms]
        self.val: list[Optional[int]] = [None] * self.n
        self.decision_only = decision_only
        self.first_feasible = first_feasible

        # hard constraint adjacency: var -> [(other, kind, param, self_is_first)]
        self.adj: list[list[tuple[int, RelKind, Optional[int], bool]]] = [
            [] for _ in range(self.n)
        ]
        for c in hard:
            a, b = self.idx[c.scope[0]], self.idx[c.scope[1]]
            self.adj[a].append((b, c.kind, c.param, True))
            self.adj[b].append((a, c.kind, c.param, False))

        # disequality cliques, used two ways: a Hall-style failure check
        # during refutation searches, and exclusivity groups that tighten
        # the optimization bound. Forward checking alone cannot see
        # pigeonholes ("k mutually-distinct variables, fewer than k values
        # left"), which makes refutations of implied candidates
        # exponentially slow on alldifferent-structured problems. The
        # in-search check also speeds up optimization runs once learned
        # networks get tight, where plain forward checking struggles to
        # complete any feasible assignment within the anytime budget.
        self.check_cliques = True
        cliques: list[list[int]] = []
        neq_adj: list[set[int]] = [set() for _ in range(self.n)]
        for c in hard:
            if c.kind is RelKind.NEQ:
                a, b = self.idx[c.scope[0]], self.idx[c.scope[1]]
                neq_adj[a].add(b)
                neq_adj[b].add(a)
        for i in range(self.n):
            placed = False
            for q in cliques:
                if all(j in neq_adj[i] for j in q):
                    q.append(i)
                    placed = True
            if not placed and neq_adj[i]:
                cliques.append([i])
        self.cliques = [q for q in cliques if len(q) >= 3]
        self.cliques_of: list[list[list[int]]] = [[] for _ in range(self.n)]
        for q in self.cliques:
            for i in q:
                self.cliques_of[i].append(q)

        self.pairs: list[_Pair] = []
        bypair: dict[tuple[int, int], _Pair] = {}
        for c, w in candidates:
            a, b = self.idx[c.scope[0]], self.idx[c.scope[1]]
            key = (a, b) if a < b else (b, a)
            pair = bypair.get(key)
            if pair is None:
                pair = bypair[key] = _Pair(*key)
                self.pairs.append(pair)
            swap = a > b
            kind = c.kind
            if swap:
                kind = {
                    RelKind.LT: RelKind.GT, RelKind.GT: RelKind.LT,
                    RelKind.LEQ: RelKind.GEQ, RelKind.GEQ: RelKind.LEQ,
                }.get(kind, kind)
            pair.kinds.append(kind)
            pair.params.append(c.param)
            pair.weights.append(w)
            pair.constraints.append(c)
        self.pairs_of: list[list[_Pair]] = [[] for _ in range(self.n)]
        for p in self.pairs:
            p.init_bounds()
            self.pairs_of[p.i].append(p)
            self.pairs_of[p.j].append(p)
        self.pair_count = [len(ps) for ps in self.pairs_of]

        # exclusivity groups: each pair with equal-values slack joins a
        # group of pairs sharing one variable whose other endpoints lie in
        # a common disequality clique. Fewer groups mean a tighter bound,
        # so per anchor the other endpoints are covered greedily by the
        # clique holding the most of them. Singleton groups carry no
        # correction and are dropped to skip their maintenance.
        self.groups: list[_Group] = []
        self.correction = 0.0
        if self.pairs and self.cliques and not (decision_only or first_feasible):
            clique_sets = [set(q) for q in self.cliques]
            clique_id = {id(q): k for k, q in enumerate(self.cliques)}
            for v in sorted(range(self.n), key=lambda k: -self.pair_count[k]):
                open_pairs = {
                    p: (p.j if p.i == v else p.i)
                    for p in self.pairs_of[v]
                    if p.group is None and p.d > 0
                    and self.cliques_of[p.j if p.i == v else p.i]
                }
                while len(open_pairs) >= 2:
                    counts: dict[int, int] = {}
                    for other in open_pairs.values():
                        for q in self.cliques_of[other]:
                            k = clique_id[id(q)]
                            counts[k] = counts.get(k, 0) + 1
                    k_best = max(counts, key=lambda k: (counts[k], -k))
                    if counts[k_best] < 2:
                        break
                    g = _Group()
                    for p, other in list(open_pairs.items()):
                        if other in clique_sets[k_best]:
                            g.members.append(p)
                            p.group = g
                            del open_pairs[p]
                    self.groups.append(g)
            for g in self.groups:
                self._refresh_group(g)

        self.total_ub = sum(p.ub for p in self.pairs)
        self.realized = 0
        self.violated_cnt = 0
        self.n_undecided = len(self.pairs)

        self.best_value: float = _NEG_INF
        self.best: Optional[list[int]] = None
        self.deadline_t = None if deadline is None else time.monotonic() + deadline
        self.timed_out = False

    def _refresh_group(self, g: _Group) -> None:
        s = 0.0
        m = 0.0
        for p in g.members:
            if not p.decided and p.d > 0:
                s += p.d
                if p.d > m:
                    m = p.d
        new = s - m
        self.correction += new - g.contrib
        g.contrib = new

    # -- search -----------------------------------------------------------

    def run(self) -> None:
        try:
            self._dfs(0)
        except _Deadline:
            self.timed_out = True

    def _select_var(self) -> int:
        best = -1
        best_key = None
        for i in range(self.n):
            if self.val[i] is not None:
                continue
            # objective-relevant variables first: while a variable still sits
            # on an undecided pair with positive potential, deciding it is what
            # tightens the bound; plain MRV would drag unrelated variables in
            # and leave the bound slack across an exponential subtree
            active = 0
            for p in self.pairs_of[i]:
                if not p.decided and p.ub > 0:
                    active = 1
                    break
            key = (-active, self.dsize[i], -self.pair_count[i], i)
            if best_key is None or key < best_key:
                best_key = key
                best = i
        return best

    def _dfs(self, depth: int) -> None:
        if self.deadline_t is not None and time.monotonic() > self.deadline_t:
            raise _Deadline
        if depth == self.n:
            self._leaf()
            return
        i = self._select_var()
        dom = self.doms[i]
        for vi in range(self.dsize[i]):
            v = dom[vi]
            trail = self._assign(i, v)
            if trail is None:
                continue
            if self.decision_only or self._bound_allows():
                self._dfs(depth + 1)
            self._undo(i, trail)
            if (self.decision_only or self.first_feasible) and self.best is not None:
                return

    def _leaf(self) -> None:
        if not self.decision_only and self.violated_cnt < 1:
            return
        value = self.realized
        if self.decision_only or value > self.best_value:
            self.best_value = value
            self.best = list(self.val)  # type: ignore[arg-type]

    def _assign(self, i: int, v: int):
        """Assign var i := v with forward checking; returns a trail or None."""
        trail: list = []
        self.val[i] = v
        # forward check hard constraints
        changed: list[int] = []
        for (j, kind, param, first) in self.adj[i]:
            if self.val[j] is not None:
                continue
            dom = self.doms[j]
            size = self.dsize[j]
            k = 0
            while k < size:
                u = dom[k]
                ok = rel_holds(kind, param, v, u) if first else rel_holds(kind, param, u, v)
                if ok:
                    k += 1
                else:
                    size -= 1
                    dom[k], dom[size] = dom[size], dom[k]
            if size != self.dsize[j]:
                trail.append(("dom", j, self.dsize[j]))
                self.dsize[j] = size
                if j not in changed:
                    changed.append(j)
            if size == 0:
                self._rollback(trail)
                self.val[i] = None
                return None
        # pigeonhole failure check on disequality cliques touched by this
        # assignment or by the domain prunes above
        checked: set[int] = set()
        for src in changed if self.check_cliques else ():
            for q in self.cliques_of[src]:
                if id(q) in checked:
                    continue
                checked.add(id(q))
                avail: set[int] = set()
                m = 0
                for member in q:
                    if self.val[member] is None:
                        m += 1
                        avail.update(self.doms[member][: self.dsize[member]])
                if len(avail) < m:
                    self._rollback(trail)
                    self.val[i] = None
                    return None
        # half-assigned pairs whose open endpoint just lost values would
        # otherwise keep a stale optimistic bound; re-tighten them now
        for j in changed:
            for p in self.pairs_of[j]:
                if p.decided:
                    continue
                other = p.j if p.i == j else p.i
                ov = self.val[other]
                if ov is None or other == i:
                    continue  # pairs touching i are tightened below
                ub, mv, ub_sat = p.tighten(p.i == other, ov, self.doms[j][: self.dsize[j]])
                if ub != p.ub or mv != p.mv or ub_sat != p.ub_sat:
                    trail.append(("ub", p, p.ub, p.mv, p.ub_sat))
                    self._set_bounds(p, ub, mv, ub_sat)
        # update candidate pair bounds
        for p in self.pairs_of[i]:
            if p.decided:
                continue
            other = p.j if p.i == i else p.i
            if self.val[other] is not None:
                a = self.val[p.i]
                b = self.val[p.j]
                s, nv = p.eval_pair(a, b)  # type: ignore[arg-type]
                trail.append(("dec", p, p.ub, p.mv, p.ub_sat))
                self.total_ub -= p.ub
                self.realized += s
                self.violated_cnt += nv
                self.n_undecided -= 1
                p.decided = True
                p.exact = s
                p.nviol = nv
                if p.group is not None:
                    self._refresh_group(p.group)
            else:
                ub, mv, ub_sat = p.tighten(p.i == i, v, self.doms[other][: self.dsize[other]])
                trail.append(("ub", p, p.ub, p.mv, p.ub_sat))
                self._set_bounds(p, ub, mv, ub_sat)
        return trail

    def _set_bounds(self, p: _Pair, ub: float, mv: float, ub_sat: float) -> None:
        self.total_ub += ub - p.ub
        p.ub = ub
        p.mv = mv
        p.ub_sat = ub_sat
        d = ub - ub_sat
        if d != p.d:
            p.d = d
            if p.group is not None:
                self._refresh_group(p.group)

    def _rollback(self, trail: list) -> None:
        for entry in reversed(trail):
            tag = entry[0]
            if tag == "dom":
                self.dsize[entry[1]] = entry[2]
            elif tag == "ub":
                p, ub, mv, ub_sat = entry[1], entry[2], entry[3], entry[4]
                self._set_bounds(p, ub, mv, ub_sat)
            else:  # "dec"
                p, ub, mv, ub_sat = entry[1], entry[2], entry[3], entry[4]
                self.realized -= p.exact
                self.violated_cnt -= p.nviol
                self.n_undecided += 1
                self.total_ub += ub
                p.decided = False
                p.ub = ub
                p.mv = mv
                p.ub_sat = ub_sat
                p.d = ub - ub_sat
                if p.group is not None:
                    self._refresh_group(p.group)

    def _undo(self, i: int, trail: list) -> None:
        self._rollback(trail)
        self.val[i] = None

    def _bound_allows(self) -> bool:
        # the exclusivity correction and the must-violate correction are
        # each sound on their own; they do not stack soundly, so take the
        # better of the two bounds
        bound = self.realized + self.total_ub - self.correction
        if self.violated_cnt == 0:
            # some pair must still produce a violation
            if self.n_undecided == 0:
                return False
            corr = _NEG_INF
            for p in self.pairs:
                if not p.decided and p.mv > _NEG_INF:
                    c = p.mv - p.ub
                    if c > corr:
                        corr = c
                        if c == 0:
                            break
            if corr == _NEG_INF:
                return False
            alt = self.realized + self.total_ub + corr
            if alt < bound:
                bound = alt
        return bound > self.best_value

    def solution(self) -> Assignment:
        assert self.best is not None
        return Assignment({v: self.best[i] for i, v in enumerate(self.vars)})


class Solver:
    """A single-session solver; value orders are shuffled by the run seed."""

    def __init__(self, voc: Vocabulary, seed: int = 0):
        self.voc = voc
        self._rng = random.Random(seed)

    def _call_rng(self) -> random.Random:
        return random.Random(self._rng.getrandbits(64))

    def _ordered(self, Y: Iterable[Var]) -> list[Var]:
        return sorted(set(Y), key=self.voc.ordinal.__getitem__)

    def _run(
        self,
        variables: Sequence[Var],
        domains: Sequence[Sequence[int]],
        hard: Sequence[Constraint],
        candidates: Sequence[tuple[Constraint, int]],
        deadline: Optional[float],
        decision_only: bool = False,
        first_feasible: bool = False,
    ) -> tuple[Optional[dict[Var, int]], int, bool]:
        """One branch-and-bound run: (best binding, value, timed_out).

        Uses the compiled engine when available, else the pure-Python one;
        both implement the same search and bounds."""
        seed = self._rng.getrandbits(64)
        lib = _native.load()
        if lib is not None:
            return _native.run_search(
                lib, variables, domains, hard, candidates, seed,
                deadline, decision_only, first_feasible,
            )
        search = _Search(
            variables, domains, hard, candidates, random.Random(seed),
            deadline, decision_only=decision_only, first_feasible=first_feasible,
        )
        search.run()
        if search.best is None:
            return None, 0, search.timed_out
        binding = {v: search.best[i] for i, v in enumerate(search.vars)}
        return binding, int(search.best_value), search.timed_out

    # -- top-level query generation ---------------------------------------

    def generate_query(
        self,
        Y: Iterable[Var],
        C_L: ConstraintSet,
        B: ConstraintSet,
        weights: ObjectiveWeights,
        deadline: Optional[float] = 1.0,
        first_feasible: bool = False,
    ) -> SolveOutcome:
        """Find e_Y satisfying C_L[Y] and violating >= 1 candidate of B[Y],
        maximizing the violation-weighted objective.

        first_feasible turns this into pure feasibility: stop at the first
        admissible query (reported as INCUMBENT, never OPTIMAL)."""
        ys = self._ordered(Y)
        if not ys:
            raise ValueError("Y must be non-empty")
        yset = set(ys)
        cands = [c for c in B if yset.issuperset(c.scope)]
        if not cands:
            return SolveOutcome(Status.INFEASIBLE)
        hard = [c for c in C_L if yset.issuperset(c.scope)]
        binding, value, timed_out = self._run(
            ys,
            [self.voc.domain(v) for v in ys],
            hard,
            [(c, weights[c]) for c in cands],
            deadline,
            first_feasible=first_feasible,
        )
        if first_feasible and binding is not None:
            return SolveOutcome(Status.INCUMBENT, Assignment(binding), value)
        return self._outcome(binding, value, timed_out)

    def solve_decision(
        self,
        C: ConstraintSet,
        Y: Iterable[Var],
        deadline: Optional[float] = None,
    ) -> SolveOutcome:
        """Find any e_Y in sol(C[Y]) or prove there is none."""
        ys = self._ordered(Y)
        if not ys:
            raise ValueError("Y must be non-empty")
        yset = set(ys)
        hard = [c for c in C if yset.issuperset(c.scope)]
        binding, _, timed_out = self._run(
            ys,
            [self.voc.domain(v) for v in ys],
            hard,
            [],
            deadline,
            decision_only=True,
        )
        if binding is not None:
            return SolveOutcome(Status.OPTIMAL, Assignment(binding), None)
        if timed_out:
            return SolveOutcome(Status.NO_INCUMBENT_TIMEOUT)
        return SolveOutcome(Status.INFEASIBLE)

    def find_violation(
        self,
        Y: Iterable[Var],
        C_L: ConstraintSet,
        c: Constraint,
        deadline: Optional[float] = None,
    ) -> SolveOutcome:
        """Find e_Y in sol(C_L[Y]) violating the single candidate c, or
        prove there is none.

        The complement of c is posted as a hard constraint so forward
        checking (and the pigeonhole check) propagate it. Violating a
        disequality forces its endpoints equal, which plain propagation
        never sees until one endpoint is assigned; that case is handled by
        substituting one endpoint for the other before searching.
        """
        ys = self._ordered(Y)
        if not ys:
            raise ValueError("Y must be non-empty")
        yset = set(ys)
        if not yset.issuperset(c.scope):
            return SolveOutcome(Status.INFEASIBLE)
        neg = _NEGATION.get(c.kind)
        if neg is None:
            return self.generate_query(
                yset, C_L, ConstraintSet([c]), {c: 1}, deadline, first_feasible=True
            )
        hard = [h for h in C_L if yset.issuperset(h.scope)]
        a, b = c.scope
        if neg is RelKind.EQ:
            shared = sorted(set(self.voc.domain(a)) & set(self.voc.domain(b)))
            if not shared:
                return SolveOutcome(Status.INFEASIBLE)
            sub = {b: a}
            red_vars = [v for v in ys if v != b]
            doms = [shared if v == a else self.voc.domain(v) for v in red_vars]
            red_hard = []
            for h in hard:
                u = sub.get(h.scope[0], h.scope[0])
                w = sub.get(h.scope[1], h.scope[1])
                if u == w:
                    # self-loop after substitution: the relation either
                    # always holds on equal values or can never hold
                    if not rel_holds(h.kind, h.param, 0, 0):
                        return SolveOutcome(Status.INFEASIBLE)
                    continue
                red_hard.append(Constraint(h.kind, (u, w), h.param))
            binding, _, timed_out = self._run(
                red_vars, doms, red_hard, [], deadline, decision_only=True
            )
            if binding is not None:
                binding[b] = binding[a]
                return SolveOutcome(Status.INCUMBENT, Assignment(binding), 1)
        else:
            binding, _, timed_out = self._run(
                ys,
                [self.voc.domain(v) for v in ys],
                hard + [Constraint(neg, (a, b), c.param)],
                [],
                deadline,
                decision_only=True,
            )
            if binding is not None:
                return SolveOutcome(Status.INCUMBENT, Assignment(binding), 1)
        if timed_out:
            return SolveOutcome(Status.NO_INCUMBENT_TIMEOUT)
        return SolveOutcome(Status.INFEASIBLE)

    @staticmethod
    def _outcome(
        binding: Optional[dict[Var, int]], value: int, timed_out: bool
    ) -> SolveOutcome:
        if binding is not None:
            status = Status.INCUMBENT if timed_out else Status.OPTIMAL
            return SolveOutcome(status, Assignment(binding), value)
        if timed_out:
            return SolveOutcome(Status.NO_INCUMBENT_TIMEOUT)
        return SolveOutcome(Status.INFEASIBLE)

    # -- FindC query generation -------------------------------------------

    def generate_findc_query(
        self,
        S: Iterable[Var],
        C_L: ConstraintSet,
        Delta: ConstraintSet,
        weights: Optional[ObjectiveWeights] = None,
        deadline: Optional[float] = 1.0,
        guided: bool = False,
    ) -> SolveOutcome:
        """Find e'_S splitting Delta: some but not all candidates violated.

        Objective: guided mode maximizes the violation-weighted sum; the
        default halving mode minimizes |floor(|Delta|/2) - |kappa||
        (objective_value is the negated slack).
        """
        ss = self._ordered(S)
        if not ss:
            raise ValueError("S must be non-empty")
        if len(Delta) < 2:
            raise ValueError("Delta must contain at least 2 candidates to discriminate")
        sset = set(ss)
        for c in Delta:
            if not sset.issuperset(c.scope):
                raise ValueError(f"candidate {c!r} is not within S")
        hard = [c for c in C_L if sset.issuperset(c.scope)]
        delta = list(Delta)
        half = len(delta) // 2
        rng = self._call_rng()
        doms = [list(self.voc.domain(v)) for v in ss]
        for d in doms:
            rng.shuffle(d)
        idx = {v: i for i, v in enumerate(ss)}
        deadline_t = None if deadline is None else time.monotonic() + deadline

        best_val = _NEG_INF
        best_assign: Optional[list[int]] = None
        timed_out = False
        val: list[Optional[int]] = [None] * len(ss)
        adj: list[list[tuple[int, RelKind, Optional[int], bool]]] = [[] for _ in ss]
        for c in hard:
            a, b = idx[c.scope[0]], idx[c.scope[1]]
            adj[a].append((b, c.kind, c.param, True))
            adj[b].append((a, c.kind, c.param, False))
        dscope = [(idx[c.scope[0]], idx[c.scope[1]], c.kind, c.param) for c in delta]

        def leaf() -> None:
            nonlocal best_val, best_assign
            nviol = 0
            wsum = 0
            for k, (a, b, kind, param) in enumerate(dscope):
                if not rel_holds(kind, param, val[a], val[b]):
                    nviol += 1
                    if guided:
                        wsum += weights[delta[k]]  # type: ignore[index]
            if not (0 < nviol < len(delta)):
                return
            value = wsum if guided else -abs(half - nviol)
            if value > best_val:
                best_val = value
                best_assign = list(val)  # type: ignore[arg-type]

        dsize = [len(d) for d in doms]

        def dfs(depth: int) -> None:
            nonlocal timed_out
            if deadline_t is not None and time.monotonic() > deadline_t:
                raise _Deadline
            if depth == len(ss):
                leaf()
                return
            i = depth
            for vi in range(dsize[i]):
                v = doms[i][vi]
                val[i] = v
                saved = []
                dead = False
                for (j, kind, param, first) in adj[i]:
                    if val[j] is not None:
                        continue
                    dom = doms[j]
                    size = dsize[j]
                    k = 0
                    while k < size:
                        u = dom[k]
                        ok = rel_holds(kind, param, v, u) if first else rel_holds(kind, param, u, v)
                        if ok:
                            k += 1
                        else:
                            size -= 1
                            dom[k], dom[size] = dom[size], dom[k]
                    if size != dsize[j]:
                        saved.append((j, dsize[j]))
                        dsize[j] = size
                    if size == 0:
                        dead = True
                        break
                if not dead:
                    dfs(depth + 1)
                for j, s in saved:
                    dsize[j] = s
                val[i] = None

        try:
            dfs(0)
        except _Deadline:
            timed_out = True

        if best_assign is not None:
            status = Status.INCUMBENT if timed_out else Status.OPTIMAL
            e = Assignment({v: best_assign[i] for i, v in enumerate(ss)})
            return SolveOutcome(status, e, int(best_val))
        if timed_out:
            return SolveOutcome(Status.NO_INCUMBENT_TIMEOUT)
        return SolveOutcome(Status.INFEASIBLE)

    # -- FindScope split selection ----------------------------------------

    def select_split(
        self,
        Y: Iterable[Var],
        R: Iterable[Var],
        e: Assignment,
        kappa_e: ConstraintSet,
        weights: ObjectiveWeights,
        exact_half: bool = False,
    ) -> set[Var]:
        """Choose Y1 with 0 < |Y1| <= floor(|Y|/2) maximizing the weight of
        kappa_e constraints falling inside R u Y1 (exact_half pins |Y1|)."""
        ys = self._ordered(Y)
        n = len(ys)
        if n < 2:
            raise ValueError("|Y| must be >= 2 to split")
        cap = n // 2
        rset = set(R)
        yidx = {v: i for i, v in enumerate(ys)}

        singles = [0] * n
        pair_w: dict[tuple[int, int], int] = {}
        for c in kappa_e:
            w = weights[c]
            a, b = c.scope
            ia = yidx.get(a)
            ib = yidx.get(b)
            if ia is None and ib is None:
                continue  # fully in R (constant) or outside R u Y (never counted)
            if ia is None or ib is None:
                inside, outside = (ib, a) if ia is None else (ia, b)
                if outside in rset:
                    singles[inside] += w
                continue
            key = (ia, ib) if ia < ib else (ib, ia)
            pair_w[key] = pair_w.get(key, 0) + w

        pairs_at: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # var -> [(other, w)]
        for (a, b), w in pair_w.items():
            pairs_at[a].append((b, w))
            pairs_at[b].append((a, w))

        pot0 = sum(max(w, 0) for w in singles) + sum(max(w, 0) for w in pair_w.values())

        best: Optional[tuple[int, int, tuple[int, ...]]] = None  # (obj, size, chosen)
        state = [0] * n  # 0 undecided, 1 included, 2 excluded
        chosen: list[int] = []

        def better(obj: int, size: int, tup: tuple[int, ...]) -> bool:
            if best is None:
                return True
            bobj, bsize, btup = best
            return (obj, -size, tuple(-x for x in tup)) > (bobj, -bsize, tuple(-x for x in btup))

        def dfs(i: int, obj: int, pot: int) -> None:
            nonlocal best
            if best is not None:
                bobj, bsize, _ = best
                bound = obj + pot
                if bound < bobj or (bound == bobj and len(chosen) > bsize):
                    return
            if i == n:
                size = len(chosen)
                if exact_half:
                    if size != cap:
                        return
                elif not (0 < size <= cap):
                    return
                tup = tuple(chosen)
                if better(obj, size, tup):
                    best = (obj, size, tup)
                return
            remaining = n - i - 1
            if (not exact_half) or len(chosen) + remaining >= cap:
                dfs_exclude(i, obj, pot)
            if len(chosen) < cap:
                dfs_include(i, obj, pot)

        def dfs_exclude(i: int, obj: int, pot: int) -> None:
            state[i] = 2
            # every pair touching i that has not already died or been
            # counted into obj loses its optimistic contribution
            d = max(singles[i], 0)
            for (o, w) in pairs_at[i]:
                if state[o] != 2:
                    d += max(w, 0)
            dfs(i + 1, obj, pot - d)
            state[i] = 0

        def dfs_include(i: int, obj: int, pot: int) -> None:
            state[i] = 1
            chosen.append(i)
            dobj = singles[i]
            dpot = max(singles[i], 0)
            for (o, w) in pairs_at[i]:
                if state[o] == 1:
                    dobj += w
                    dpot += max(w, 0)
            dfs(i + 1, obj + dobj, pot - dpot)
            chosen.pop()
            state[i] = 0

        dfs(0, 0, pot0)
        assert best is not None
        _, _, tup = best
        return {ys[i] for i in tup}
