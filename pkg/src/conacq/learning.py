"""Constraint featurization, the online-labeled dataset, and the
probabilistic classifiers used to guide query generation.

Candidates decided during acquisition are appended to a dataset (label 1
when learned, 0 when removed from the bias); a classifier refit on that
dataset before each top-level query supplies P(c in C_T), which the
guidance signal turns into per-candidate objective weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.metrics import accuracy_score, balanced_accuracy_score, f1_score
from sklearn.model_selection import StratifiedKFold
from sklearn.naive_bayes import GaussianNB

from conacq.core import Constraint, ConstraintSet, Relation, Var, Vocabulary
from conacq.solver import ObjectiveWeights


class ClassifierKind(Enum):
    COUNTING = "count"
    GNB = "gnb"
    RF = "rf"


class DuplicateLabelError(ValueError):
    """A constraint was labeled twice."""


def _rel_key(c: Constraint) -> tuple:
    return (c.kind, c.param)


class Featurizer:
    """Fixed-length numeric feature vectors for constraints.

    Layout: one-hot relation (one slot per language entry), then
    [arity, has_constant, constant, var_name_same, var_ndims_same,
    ndims_max, ndims_min], then per tensor dimension i
    [has, same, max, min, avg, spread] where spread is the population
    standard deviation of the scope variables' index values in that
    dimension.
    """

    def __init__(self, voc: Vocabulary, language: Sequence[Relation]):
        self.voc = voc
        self.language = tuple(language)
        self._rel_slot = {(r.kind, r.param): i for i, r in enumerate(self.language)}
        self.d_max = max(len(t.shape) for t in voc.tensors)
        names = [f"rel_{r.kind.name}" + (f"_{r.param}" if r.param is not None else "")
                 for r in self.language]
        names += ["arity", "has_constant", "constant", "var_name_same",
                  "var_ndims_same", "ndims_max", "ndims_min"]
        for i in range(self.d_max):
            names += [f"dim{i}_{s}" for s in ("has", "same", "max", "min", "avg", "spread")]
        self.feature_names = names

    def __len__(self) -> int:
        return len(self.feature_names)

    def featurize(self, c: Constraint) -> np.ndarray:
        for v in c.scope:
            self.voc.check_var(v)
        out = np.zeros(len(self.feature_names))
        slot = self._rel_slot.get(_rel_key(c))
        if slot is None:
            raise ValueError(f"relation of {c!r} is not in the language")
        out[slot] = 1.0
        base = len(self.language)
        out[base + 0] = len(c.scope)
        out[base + 1] = 1.0 if c.param is not None else 0.0
        out[base + 2] = c.param if c.param is not None else 0
        out[base + 3] = 1.0 if len({v.tensor for v in c.scope}) == 1 else 0.0
        ndims = [len(v.index) for v in c.scope]
        out[base + 4] = 1.0 if len(set(ndims)) == 1 else 0.0
        out[base + 5] = max(ndims)
        out[base + 6] = min(ndims)
        for i in range(self.d_max):
            off = base + 7 + 6 * i
            if all(len(v.index) > i for v in c.scope):
                vals = [v.index[i] for v in c.scope]
                mean = sum(vals) / len(vals)
                spread = math.sqrt(sum((x - mean) ** 2 for x in vals) / len(vals))
                out[off + 0] = 1.0
                out[off + 1] = 1.0 if len(set(vals)) == 1 else 0.0
                out[off + 2] = max(vals)
                out[off + 3] = min(vals)
                out[off + 4] = mean
                out[off + 5] = spread
        return out


class Dataset:
    """Online-labeled (feature vector, label) rows, one per decided candidate."""

    def __init__(self, featurizer: Featurizer):
        self.featurizer = featurizer
        self.rows: list[np.ndarray] = []
        self.labels: list[int] = []
        self.constraints: list[Constraint] = []
        self._seen: set[Constraint] = set()
        # per-relation tallies for the counting estimator
        self.learned_by_rel: dict[tuple, int] = {}
        self.removed_by_rel: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def record_decision(self, c: Constraint, learned: bool) -> None:
        if c in self._seen:
            raise DuplicateLabelError(f"{c!r} already labeled")
        self._seen.add(c)
        self.rows.append(self.featurizer.featurize(c))
        self.labels.append(1 if learned else 0)
        self.constraints.append(c)
        key = _rel_key(c)
        self.removed_by_rel[key] = self.removed_by_rel.get(key, 0) + 1
        if learned:
            self.learned_by_rel[key] = self.learned_by_rel.get(key, 0) + 1

    def counting_estimate(self, c: Constraint) -> float:
        """(learned + 1) / (removed + 2) for the constraint's relation."""
        key = _rel_key(c)
        pos = self.learned_by_rel.get(key, 0)
        tot = self.removed_by_rel.get(key, 0)
        return (pos + 1) / (tot + 2)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.rows), np.array(self.labels)

    def to_csv(self) -> str:
        header = "constraint_id," + ",".join(self.featurizer.feature_names) + ",label"
        lines = [header]
        for c, row, y in zip(self.constraints, self.rows, self.labels):
            cid = repr(c).replace(",", ";").replace(" ", "")
            lines.append(cid + "," + ",".join(_fmt(x) for x in row) + f",{y}")
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def load_csv(text: str) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Parse a dataset export back into (X, y, feature names)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("constraint_id,") or not lines[0].endswith(",label"):
        raise ValueError("not a dataset export (bad header)")
    names = lines[0].split(",")[1:-1]
    X, y = [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(names) + 2:
            raise ValueError(f"bad row: {ln!r}")
        X.append([float(p) for p in parts[1:-1]])
        y.append(int(parts[-1]))
    return np.array(X), np.array(y), names


MIN_FIT_ROWS = 10


@dataclass
class Classifier:
    """A fitted probability source for P(c in C_T).

    Falls back to the counting estimate while the dataset is too small or
    single-class, so guidance is available from the first query.
    """

    kind: ClassifierKind
    dataset: Dataset
    seed: int = 0
    _model: Optional[object] = None
    _positive_col: int = 0

    def predict_proba(self, c: Constraint) -> float:
        if self._model is None:
            return self.dataset.counting_estimate(c)
        p = float(
            self._model.predict_proba(self.dataset.featurizer.featurize(c).reshape(1, -1))[
                0, self._positive_col
            ]
        )
        return min(1.0, max(0.0, p))

    def predict_proba_many(self, cs: Sequence[Constraint]) -> list[float]:
        if self._model is None:
            return [self.dataset.counting_estimate(c) for c in cs]
        if not cs:
            return []
        X = np.array([self.dataset.featurizer.featurize(c) for c in cs])
        probs = self._model.predict_proba(X)[:, self._positive_col]
        return [min(1.0, max(0.0, float(p))) for p in probs]


def warm_up(kind: ClassifierKind) -> None:
    """Trigger the estimator library's lazy initialization so the first
    real refit does not pay it; called once at session start."""
    if kind in (ClassifierKind.GNB, ClassifierKind.RF):
        m = make_estimator(kind, 0)
        m.fit(np.zeros((2, 1)), np.array([0, 1]))
        m.predict_proba(np.zeros((1, 1)))


def make_estimator(kind: ClassifierKind, seed: int):
    if kind is ClassifierKind.GNB:
        return GaussianNB()
    if kind is ClassifierKind.RF:
        return RandomForestClassifier(n_estimators=100, random_state=seed)
    raise ValueError(f"{kind} is not a feature-based classifier")


def fit(kind: ClassifierKind, dataset: Dataset, seed: int = 0) -> Classifier:
    """Fit a classifier on the current dataset (refit before every
    top-level query generation)."""
    clf = Classifier(kind, dataset, seed)
    if kind is ClassifierKind.COUNTING:
        return clf
    if len(dataset) < MIN_FIT_ROWS or len(set(dataset.labels)) < 2:
        return clf  # counting fallback
    X, y = dataset.matrix()
    model = make_estimator(kind, seed)
    model.fit(X, y)
    clf._model = model
    clf._positive_col = int(np.where(model.classes_ == 1)[0][0])
    return clf


def model_M(p: float, Y_size: int) -> bool:
    """The guidance signal: 1/P(c in C_T) <= ln|Y| (false when p = 0)."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"probability out of range: {p}")
    if Y_size < 1:
        raise ValueError("Y_size must be >= 1")
    if p == 0.0:
        return False
    return 1.0 / p <= math.log(Y_size)


def objective_weights(
    B: Iterable[Constraint],
    clf: Optional[Classifier],
    Y_size: int,
    gamma_size: int,
) -> ObjectiveWeights:
    """weight(c) = 1 - |Gamma| * [M(c)]; all 1 when clf is None (base mode)."""
    cs = list(B)
    if clf is None:
        return {c: 1 for c in cs}
    probs = clf.predict_proba_many(cs)
    return {
        c: (1 - gamma_size) if model_M(p, Y_size) else 1
        for c, p in zip(cs, probs)
    }


def base_weights(B: Iterable[Constraint]) -> ObjectiveWeights:
    return {c: 1 for c in B}


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    kind: ClassifierKind,
    folds: int = 10,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Stratified k-fold (accuracy, balanced accuracy, f1), fold-averaged."""
    if len(y) < folds:
        raise ValueError(f"need at least {folds} rows for {folds}-fold CV")
    if len(set(y.tolist())) < 2:
        raise ValueError("cross-validation needs both classes present")
    est = make_estimator(kind, seed)
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    accs, baccs, f1s = [], [], []
    for train, test in skf.split(X, y):
        est.fit(X[train], y[train])
        pred = est.predict(X[test])
        accs.append(accuracy_score(y[test], pred))
        baccs.append(balanced_accuracy_score(y[test], pred))
        f1s.append(f1_score(y[test], pred, zero_division=0))
    return float(np.mean(accs)), float(np.mean(baccs)), float(np.mean(f1s))


def prefix_evaluate(
    X: np.ndarray,
    y: np.ndarray,
    kind: ClassifierKind,
    fractions: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    seed: int = 0,
) -> list[tuple[float, float, float, float]]:
    """Train on growing ordered prefixes, test on the remainder.

    Returns rows (fraction, accuracy, balanced_accuracy, f1). Mirrors the
    situation during acquisition, where only the already-decided
    candidates are labeled.
    """
    out = []
    n = len(y)
    for frac in fractions:
        k = int(round(frac * n))
        if k < 1 or k >= n:
            raise ValueError(f"prefix fraction {frac} leaves an empty train or test set")
        Xtr, ytr, Xte, yte = X[:k], y[:k], X[k:], y[k:]
        if len(set(ytr.tolist())) < 2:
            pred = np.full(len(yte), ytr[0])
        else:
            est = make_estimator(kind, seed)
            est.fit(Xtr, ytr)
            pred = est.predict(Xte)
        out.append(
            (
                frac,
                float(accuracy_score(yte, pred)),
                float(balanced_accuracy_score(yte, pred)),
                float(f1_score(yte, pred, zero_division=0)),
            )
        )
    return out
