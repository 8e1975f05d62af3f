"""Experiment runner: seeded multi-run acquisition with metrics output.

One row per run, delimited text, header matching the RunRecord fields.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence

from conacq.acquisition import (
    CollapseError,
    Equivalence,
    GuidedLayers,
    Layer,
    OracleFailure,
    Session,
    verify_equivalence,
)
from conacq.benchmarks import Benchmark, BenchmarkSpec, generate_benchmark, make_oracle
from conacq.learning import ClassifierKind

METHODS = ("base", "count", "gnb", "rf")

_METHOD_KINDS = {
    "base": None,
    "count": ClassifierKind.COUNTING,
    "gnb": ClassifierKind.GNB,
    "rf": ClassifierKind.RF,
}


@dataclass
class RunRecord:
    benchmark: str
    method: str
    guided_layers: str
    seed: int
    total_queries: int
    top_level_queries: int
    findscope_queries: int
    findc_queries: int
    max_wait_seconds: float
    avg_wait_seconds: float
    converged: bool
    learned_size: int
    total_runtime_seconds: float

    def __post_init__(self):
        parts = self.top_level_queries + self.findscope_queries + self.findc_queries
        assert self.total_queries == parts
        assert self.max_wait_seconds >= self.avg_wait_seconds - 1e-12


RUN_FIELDS = [f.name for f in fields(RunRecord)]


def run_one(
    bench: Benchmark,
    method: str,
    guided_layers: str,
    seed: int,
    cutoff: Optional[float] = 1.0,
    verify: bool = True,
    verify_deadline: Optional[float] = 60.0,
) -> tuple[RunRecord, Session]:
    """One seeded acquisition run; converged means the learned network was
    verified solution-equivalent to the target."""
    if method not in _METHOD_KINDS:
        raise ValueError(f"unknown method {method!r}")
    layers = GuidedLayers(guided_layers)
    session = Session(
        bench.voc,
        bench.language,
        make_oracle(bench.target),
        guidance=_METHOD_KINDS[method],
        guided_layers=layers,
        seed=seed,
        cutoff=cutoff,
    )
    t0 = time.monotonic()
    converged = False
    try:
        session.grow_acquire()
        if verify:
            res = verify_equivalence(
                session.C_L, bench.target, bench.voc, verify_deadline, seed
            )
            converged = res.status is Equivalence.EQUIVALENT
        else:
            converged = True
    except (CollapseError, OracleFailure):
        converged = False
    runtime = time.monotonic() - t0
    st = session.stats
    # bookkeeping invariants, asserted on every harness run
    assert st.labels_positive + st.labels_negative == st.bias_seen - st.bias_leftover, (
        "label conservation violated"
    )
    if method != "base":
        assert st.fits == st.generations, "refit count != top-level query generations"
    record = RunRecord(
        benchmark=bench.spec.name,
        method=method,
        guided_layers=guided_layers if method != "base" else "qgen",
        seed=seed,
        total_queries=st.total_queries,
        top_level_queries=st.queries_by_layer[Layer.TOP],
        findscope_queries=st.queries_by_layer[Layer.FINDSCOPE],
        findc_queries=st.queries_by_layer[Layer.FINDC],
        max_wait_seconds=st.max_wait,
        avg_wait_seconds=st.avg_wait,
        converged=converged,
        learned_size=len(session.C_L),
        total_runtime_seconds=runtime,
    )
    return record, session


def run_experiment(
    spec: BenchmarkSpec | str,
    method: str,
    guided_layers: str = "qgen",
    seeds: Sequence[int] = range(10),
    cutoff: Optional[float] = 1.0,
    verify: bool = True,
    verify_deadline: Optional[float] = 60.0,
    bench: Optional[Benchmark] = None,
) -> list[RunRecord]:
    if bench is None:
        bench = generate_benchmark(spec)
    records = []
    for seed in seeds:
        rec, _ = run_one(bench, method, guided_layers, seed, cutoff, verify, verify_deadline)
        records.append(rec)
    return records


def to_delimited(records: Iterable[RunRecord], sep: str = ",") -> str:
    lines = [sep.join(RUN_FIELDS)]
    for r in records:
        lines.append(
            sep.join(
                str(getattr(r, f)).lower() if f == "converged" else _cell(getattr(r, f))
                for f in RUN_FIELDS
            )
        )
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def median_queries(records: Sequence[RunRecord]) -> float:
    return statistics.median(r.total_queries for r in records)


def mean_queries(records: Sequence[RunRecord]) -> float:
    return statistics.mean(r.total_queries for r in records)


def eval_classifiers(
    dataset_path: str,
    kinds: Sequence[str] = ("rf", "gnb"),
    folds: int = 10,
    prefix_mode: bool = False,
    seed: int = 0,
) -> list[dict]:
    """Score feature-based classifiers on an exported candidate dataset.

    Plain mode: stratified k-fold CV. Prefix mode: train on growing
    ordered prefixes (10%..90%) and test on the remainder, mimicking the
    mid-acquisition situation where only already-decided candidates carry
    labels.
    """
    from conacq.learning import ClassifierKind, cross_validate, load_csv, prefix_evaluate

    kind_map = {"gnb": ClassifierKind.GNB, "rf": ClassifierKind.RF}
    for k in kinds:
        if k not in kind_map:
            raise ValueError(
                f"no CV mode for classifier {k!r} (feature-based kinds: gnb, rf)"
            )
    with open(dataset_path) as fh:
        X, y, _names = load_csv(fh.read())
    rows: list[dict] = []
    for k in kinds:
        if prefix_mode:
            for frac, acc, bacc, f1 in prefix_evaluate(X, y, kind_map[k], seed=seed):
                rows.append(
                    {"kind": k, "fraction": frac, "accuracy": acc,
                     "balanced_accuracy": bacc, "f1": f1}
                )
        else:
            acc, bacc, f1 = cross_validate(X, y, kind_map[k], folds=folds, seed=seed)
            rows.append(
                {"kind": k, "accuracy": acc, "balanced_accuracy": bacc, "f1": f1}
            )
    return rows
