"""Problem-definition documents: a YAML key/value tree describing a
vocabulary, a constraint language, and optionally an explicit target
network.

Format:

    tensors:
      - name: grid
        shape: [9, 9]
        domain: {lb: 1, ub: 9}     # optional, falls back to the global domain
    domain: {lb: 1, ub: 9}         # global default domain
    language:
      - kind: NEQ
      - kind: FLOORDIV_NEQ
        param: 9
    target:                        # optional
      - relation: NEQ
        scope: ["grid[0,0]", "grid[0,1]"]
      - relation: FLOORDIV_NEQ
        param: 9
        scope: ["grid[1,0]", "grid[1,3]"]

Variable references use the form ``name[i]`` / ``name[i,j]`` / etc.
"""

from __future__ import annotations

import re
from typing import Optional

import yaml

from conacq.core import (
    Constraint,
    ConstraintSet,
    RelKind,
    Relation,
    TensorDecl,
    ValidationError,
    Var,
    Vocabulary,
)


class ParseError(ValueError):
    """Malformed problem-definition document."""


_VAR_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\[([0-9,\s]+)\]\s*$")


def parse_var(text: str) -> Var:
    m = _VAR_RE.match(text)
    if not m:
        raise ParseError(f"bad variable reference {text!r} (expected name[i,j,...])")
    index = tuple(int(p) for p in m.group(2).split(","))
    return Var(m.group(1), index)


def render_var(var: Var) -> str:
    return f"{var.tensor}[{','.join(map(str, var.index))}]"


def _domain_bounds(node, where: str) -> tuple[int, int]:
    if not isinstance(node, dict) or "lb" not in node or "ub" not in node:
        raise ParseError(f"{where}: domain must be a mapping with 'lb' and 'ub'")
    lb, ub = node["lb"], node["ub"]
    if not isinstance(lb, int) or not isinstance(ub, int) or lb > ub:
        raise ParseError(f"{where}: bad domain bounds ({lb!r}, {ub!r})")
    return lb, ub


def parse_problem(text: str) -> tuple[Vocabulary, list[Relation], Optional[ConstraintSet]]:
    """Parse a problem-definition document.

    Returns (vocabulary, language, target-or-None). Raises ParseError on
    structural problems and ValidationError when a constraint references
    an unknown variable or out-of-range index.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("document root must be a mapping")

    global_dom = None
    if "domain" in doc:
        global_dom = _domain_bounds(doc["domain"], "domain")

    tensors_node = doc.get("tensors")
    if not isinstance(tensors_node, list) or not tensors_node:
        raise ParseError("'tensors' must be a non-empty list")
    decls = []
    for i, t in enumerate(tensors_node):
        where = f"tensors[{i}]"
        if not isinstance(t, dict) or "name" not in t or "shape" not in t:
            raise ParseError(f"{where}: need 'name' and 'shape'")
        shape = t["shape"]
        if not isinstance(shape, list) or not all(isinstance(s, int) and s > 0 for s in shape):
            raise ParseError(f"{where}: shape must be a list of positive integers")
        if "domain" in t:
            lb, ub = _domain_bounds(t["domain"], where)
        elif global_dom is not None:
            lb, ub = global_dom
        else:
            raise ParseError(f"{where}: no domain given and no global domain")
        decls.append(TensorDecl(str(t["name"]), tuple(shape), lb, ub))
    try:
        voc = Vocabulary(decls)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc

    lang_node = doc.get("language")
    if not isinstance(lang_node, list) or not lang_node:
        raise ParseError("'language' must be a non-empty list")
    language = []
    for i, r in enumerate(lang_node):
        where = f"language[{i}]"
        if isinstance(r, str):
            r = {"kind": r}
        if not isinstance(r, dict) or "kind" not in r:
            raise ParseError(f"{where}: need a relation 'kind'")
        try:
            kind = RelKind[r["kind"]]
        except KeyError:
            raise ParseError(f"{where}: unknown relation kind {r['kind']!r}") from None
        try:
            language.append(Relation(kind, r.get("param")))
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from exc

    target = None
    if "target" in doc:
        tgt_node = doc["target"]
        if not isinstance(tgt_node, list):
            raise ParseError("'target' must be a list")
        target = ConstraintSet()
        for i, c in enumerate(tgt_node):
            where = f"target[{i}]"
            if not isinstance(c, dict) or "relation" not in c or "scope" not in c:
                raise ParseError(f"{where}: need 'relation' and 'scope'")
            try:
                kind = RelKind[c["relation"]]
            except KeyError:
                raise ParseError(f"{where}: unknown relation kind {c['relation']!r}") from None
            scope = c["scope"]
            if not isinstance(scope, list) or len(scope) != 2:
                raise ParseError(f"{where}: scope must be a list of 2 variable references")
            vars_ = tuple(parse_var(s) for s in scope)
            try:
                target.add(voc.constraint(kind, vars_, c.get("param")))
            except ValidationError:
                # unknown variable / out-of-range index: semantic, not syntactic
                raise
            except ValueError as exc:
                raise ParseError(f"{where}: {exc}") from exc
    return voc, language, target


def serialize_problem(
    voc: Vocabulary,
    language: list[Relation],
    target: Optional[ConstraintSet] = None,
) -> str:
    """Render a problem definition that parse_problem round-trips."""
    doc: dict = {
        "tensors": [
            {
                "name": t.name,
                "shape": list(t.shape),
                "domain": {"lb": t.lower, "ub": t.upper},
            }
            for t in voc.tensors
        ],
        "language": [
            {"kind": r.kind.name} if r.param is None else {"kind": r.kind.name, "param": r.param}
            for r in language
        ],
    }
    if target is not None:
        doc["target"] = [constraint_to_dict(c) for c in target]
    return yaml.safe_dump(doc, sort_keys=False)


def constraint_to_dict(c: Constraint) -> dict:
    d = {"relation": c.kind.name, "scope": [render_var(v) for v in c.scope]}
    if c.param is not None:
        d["param"] = c.param
    return d


def constraint_from_dict(d: dict, voc: Vocabulary) -> Constraint:
    kind = RelKind[d["relation"]]
    scope = tuple(parse_var(s) for s in d["scope"])
    return voc.constraint(kind, scope, d.get("param"))
