import pytest

from conacq.core import RelKind, Relation, Var
from conacq.problem import (
    ParseError,
    constraint_from_dict,
    constraint_to_dict,
    parse_problem,
    parse_var,
    render_var,
    serialize_problem,
)

GOOD = """
tensors:
  - name: grid
    shape: [3, 3]
    domain: {lb: 1, ub: 9}
language:
  - kind: NEQ
  - kind: FLOORDIV_NEQ
    param: 3
target:
  - relation: NEQ
    scope: ["grid[0,0]", "grid[0,1]"]
"""


def test_parse_good_definition():
    voc, lang, target = parse_problem(GOOD)
    assert len(voc.variables) == 9
    assert [r.kind for r in lang] == [RelKind.NEQ, RelKind.FLOORDIV_NEQ]
    assert lang[1].param == 3
    assert len(target) == 1
    (c,) = target
    assert c.scope == (Var("grid", (0, 0)), Var("grid", (0, 1)))


def test_target_is_optional():
    text = GOOD.split("target:")[0]
    _voc, _lang, target = parse_problem(text)
    assert target is None


def test_round_trip():
    voc, lang, target = parse_problem(GOOD)
    text = serialize_problem(voc, lang, target)
    voc2, lang2, target2 = parse_problem(text)
    assert voc2.variables == voc.variables
    assert [(r.kind, r.param) for r in lang2] == [(r.kind, r.param) for r in lang]
    assert set(target2) == set(target)


@pytest.mark.parametrize(
    "mangle,exc_match",
    [
        (lambda t: t.replace("kind: NEQ", "kind: WAT"), "relation"),
        (lambda t: t.replace("lb: 1", "lb: 99"), "domain"),
        (lambda t: "tensors: [", "YAML"),
        (lambda t: t.replace("shape: [3, 3]", "shape: [0]"), "shape"),
        (lambda t: t.replace("grid[0,1]", "grid[0,0]"), "scope"),
    ],
)
def test_malformed_definitions(mangle, exc_match):
    with pytest.raises(ParseError, match=exc_match):
        parse_problem(mangle(GOOD))


def test_out_of_range_index_is_validation_error():
    from conacq.core import ValidationError

    with pytest.raises(ValidationError, match="index"):
        parse_problem(GOOD.replace("grid[0,1]", "grid[0,9]"))


def test_var_rendering_round_trip():
    v = Var("shifts", (1, 0, 4))
    assert parse_var(render_var(v)) == v
    with pytest.raises(ParseError):
        parse_var("shifts[1, oops]")


def test_constraint_dict_round_trip():
    voc, _lang, target = parse_problem(GOOD)
    (c,) = target
    d = constraint_to_dict(c)
    assert constraint_from_dict(d, voc) == c


def test_floordiv_param_required():
    bad = GOOD.replace("    param: 3\n", "")
    with pytest.raises(ParseError):
        parse_problem(bad)
