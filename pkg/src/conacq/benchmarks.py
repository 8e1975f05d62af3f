"""Builtin benchmark instances: vocabulary, language, target network.

Five families (random, 9x9 Sudoku, Jigsaw Sudoku, exam timetabling,
nurse rostering) plus scaled-down variants for desk-scale tests.
"""

from __future__ import annotations

import itertools
import random as _random
from dataclasses import dataclass, field
from typing import Optional

from conacq.acquisition import SimulatedOracle
from conacq.core import (
    COMPARISONS,
    Constraint,
    ConstraintSet,
    RelKind,
    Relation,
    TensorDecl,
    Var,
    Vocabulary,
    rel_holds,
)
from conacq.solver import Solver, Status


@dataclass
class BenchmarkSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class Benchmark:
    spec: BenchmarkSpec
    voc: Vocabulary
    language: list[Relation]
    target: ConstraintSet


COMPARISON_LANGUAGE = [Relation(k) for k in COMPARISONS]


def make_oracle(target: ConstraintSet) -> SimulatedOracle:
    return SimulatedOracle(target)


# -- Sudoku ------------------------------------------------------------------


def _sudoku(block: int) -> Benchmark:
    n = block * block
    voc = Vocabulary([TensorDecl("grid", (n, n), 1, n)])
    target = ConstraintSet()

    def all_diff(cells: list[Var]) -> None:
        for a, b in itertools.combinations(cells, 2):
            target.add(voc.constraint(RelKind.NEQ, (a, b)))

    for r in range(n):
        all_diff([Var("grid", (r, c)) for c in range(n)])
    for c in range(n):
        all_diff([Var("grid", (r, c)) for r in range(n)])
    for br in range(0, n, block):
        for bc in range(0, n, block):
            all_diff(
                [Var("grid", (r, c)) for r in range(br, br + block) for c in range(bc, bc + block)]
            )
    name = f"sudoku{n}"
    return Benchmark(BenchmarkSpec(name, {"block": block}), voc, COMPARISON_LANGUAGE, target)


# -- Jigsaw Sudoku -------------------------------------------------------------

# A fixed irregular 9-region partition of the 9x9 grid (region ids 0..8,
# each of size 9, orthogonally connected).
JIGSAW_LAYOUT = [
    [0, 0, 1, 1, 2, 2, 2, 2, 2],
    [0, 0, 1, 1, 1, 2, 2, 2, 3],
    [0, 0, 0, 1, 1, 1, 3, 2, 3],
    [0, 0, 4, 4, 4, 1, 3, 3, 3],
    [5, 4, 4, 4, 4, 6, 3, 7, 3],
    [5, 4, 4, 6, 6, 6, 3, 7, 7],
    [5, 5, 5, 8, 8, 6, 6, 6, 7],
    [5, 5, 8, 8, 8, 6, 6, 7, 7],
    [5, 5, 8, 8, 8, 8, 7, 7, 7],
]


def _jigsaw(layout: Optional[list[list[int]]] = None) -> Benchmark:
    layout = layout if layout is not None else JIGSAW_LAYOUT
    n = len(layout)
    counts: dict[int, int] = {}
    for row in layout:
        if len(row) != n:
            raise ValueError("jigsaw layout must be square")
        for r in row:
            counts[r] = counts.get(r, 0) + 1
    if sorted(counts) != list(range(n)) or any(c != n for c in counts.values()):
        raise ValueError("jigsaw layout must partition the grid into n regions of n cells")
    voc = Vocabulary([TensorDecl("grid", (n, n), 1, n)])
    target = ConstraintSet()

    def all_diff(cells: list[Var]) -> None:
        for a, b in itertools.combinations(cells, 2):
            target.add(voc.constraint(RelKind.NEQ, (a, b)))

    for r in range(n):
        all_diff([Var("grid", (r, c)) for c in range(n)])
    for c in range(n):
        all_diff([Var("grid", (r, c)) for r in range(n)])
    for region in range(n):
        all_diff(
            [Var("grid", (r, c)) for r in range(n) for c in range(n) if layout[r][c] == region]
        )
    return Benchmark(BenchmarkSpec("jigsaw", {}), voc, COMPARISON_LANGUAGE, target)


# -- Exam timetabling ----------------------------------------------------------


def _examtt(ns: int = 8, cps: int = 6, d: int = 10, r: int = 3, t: int = 3) -> Benchmark:
    spd = r * t  # slots per day
    voc = Vocabulary([TensorDecl("course", (ns, cps), 1, spd * d)])
    language = COMPARISON_LANGUAGE + [Relation(RelKind.FLOORDIV_NEQ, spd)]
    target = ConstraintSet()
    variables = voc.variables
    for a, b in itertools.combinations(variables, 2):
        if a.index[0] == b.index[0]:  # same semester: different days
            target.add(voc.constraint(RelKind.FLOORDIV_NEQ, (a, b), spd))
        else:
            target.add(voc.constraint(RelKind.NEQ, (a, b)))
    spec = BenchmarkSpec("examtt", {"ns": ns, "cps": cps, "d": d, "r": r, "t": t})
    return Benchmark(spec, voc, language, target)


# -- Nurse rostering -------------------------------------------------------------


def _nurse(d: int = 7, s: int = 3, ns: int = 5, n: int = 18) -> Benchmark:
    voc = Vocabulary([TensorDecl("shift", (d, s, ns), 1, n)])
    target = ConstraintSet()
    for day in range(d):
        day_vars = [Var("shift", (day, sh, k)) for sh in range(s) for k in range(ns)]
        for a, b in itertools.combinations(day_vars, 2):
            target.add(voc.constraint(RelKind.NEQ, (a, b)))
    for day in range(d - 1):
        for i in range(ns):
            for j in range(ns):
                a = Var("shift", (day, s - 1, i))
                b = Var("shift", (day + 1, 0, j))
                target.add(voc.constraint(RelKind.NEQ, (a, b)))
    spec = BenchmarkSpec("nurse", {"d": d, "s": s, "ns": ns, "n": n})
    return Benchmark(spec, voc, COMPARISON_LANGUAGE, target)


# -- Random ----------------------------------------------------------------------


def _random_net(
    n_vars: int = 100,
    domain_size: int = 5,
    n_constraints: int = 495,
    seed: int = 0,
) -> Benchmark:
    """A seeded-random binary target network over the comparison language.

    Satisfiability is guaranteed by construction: a hidden assignment is
    drawn first and (pair, relation) candidates are sampled uniformly
    without replacement among those the hidden assignment satisfies.
    A rejection loop over unrestricted draws is hopeless at this density
    (equality components plus disequalities make almost every draw
    unsatisfiable).
    """
    voc = Vocabulary([TensorDecl("x", (n_vars,), 1, domain_size)])
    rng = _random.Random(seed)
    hidden = {v: rng.randint(1, domain_size) for v in voc.variables}
    pool = [
        (a, b, rel)
        for a, b in itertools.combinations(voc.variables, 2)
        for rel in COMPARISONS
        if rel_holds(rel, None, hidden[a], hidden[b])
    ]
    if n_constraints > len(pool):
        raise ValueError("more constraints requested than satisfiable candidate slots")
    picks = rng.sample(pool, n_constraints)
    target = ConstraintSet(voc.constraint(rel, (a, b)) for a, b, rel in picks)
    spec = BenchmarkSpec(
        "random",
        {"n_vars": n_vars, "domain_size": domain_size,
         "n_constraints": n_constraints, "seed": seed},
    )
    return Benchmark(spec, voc, COMPARISON_LANGUAGE, target)


# -- registry --------------------------------------------------------------------


_BUILDERS = {
    "random": _random_net,
    "sudoku9": lambda **kw: _sudoku(block=kw.get("block", 3)),
    "sudoku4": lambda **kw: _sudoku(block=kw.get("block", 2)),
    "jigsaw": _jigsaw,
    "examtt": _examtt,
    "nurse": _nurse,
}

BUILTIN_NAMES = tuple(_BUILDERS)


def generate_benchmark(spec: BenchmarkSpec | str, **params) -> Benchmark:
    if isinstance(spec, str):
        spec = BenchmarkSpec(spec, params)
    builder = _BUILDERS.get(spec.name)
    if builder is None:
        raise ValueError(f"unknown benchmark {spec.name!r} (choose from {BUILTIN_NAMES})")
    return builder(**spec.params)
