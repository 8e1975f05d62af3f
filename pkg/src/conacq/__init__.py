"""Interactive constraint acquisition workbench.

Learns a user's constraint network from yes/no answers to (partial)
membership queries, optionally guiding every query-asking layer with an
online-trained probabilistic classifier.
"""

from conacq.core import (
    Assignment,
    Constraint,
    ConstraintSet,
    Outcome,
    RelKind,
    Var,
    Vocabulary,
    build_bias,
    evaluate_constraint,
    kappa,
)

__all__ = [
    "Assignment",
    "Constraint",
    "ConstraintSet",
    "Outcome",
    "RelKind",
    "Var",
    "Vocabulary",
    "build_bias",
    "evaluate_constraint",
    "kappa",
]
