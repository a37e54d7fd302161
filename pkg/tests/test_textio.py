import json
from fractions import Fraction

import pytest

from conetrace.errors import InvalidInput
from conetrace.gaussian import GaussRational
from conetrace.homog import HomogeneousFunction
from conetrace.poly import Poly
from conetrace.symp import ConeFunction
from conetrace.textio import (expr_to_cone, expr_to_homogeneous, expr_to_operator,
                              expr_to_symbol, load_problem, parse_expression, parse_inline,
                              payload_object)


def test_parse_inline_params_and_names():
    params, exprs = parse_inline("n=3; a=-1; xi1*|xi|^-4; g = cos(x1)")
    assert params == {"n": "3", "a": "-1"}
    assert exprs == {"f": "xi1*|xi|^-4", "g": "cos(x1)"}


def test_homogeneous_from_text():
    f = expr_to_homogeneous(parse_expression("3*xi1*xi2*|xi|^(-7/2) + |xi|^(-3/2)", 2))
    v = [Poly.var(2, 0), Poly.var(2, 1)]
    ref = HomogeneousFunction.from_raw(2, Fraction(-3, 2),
                                       [v[0] * v[1] * 3, Poly.const(2, 1)])
    assert f == ref


def test_gaussian_rational_coefficients():
    f = expr_to_homogeneous(parse_expression("(1/2 + i/3)*|xi|^-2", 2))
    c = GaussRational(Fraction(1, 2), Fraction(1, 3))
    assert f == HomogeneousFunction.radial(2, -2, c)


def test_cone_from_text():
    f = expr_to_cone(parse_expression("cos(x1)*|xi|^-2 + exp(i*(x1-x2))*xi1*|xi|^-3", 2))
    assert f.degree == -2
    assert set(f.modes) == {(1, 0), (-1, 0), (1, -1)}
    assert f == ConeFunction.cos(2, 0, HomogeneousFunction.radial(2, -2)) + ConeFunction.fiber(
        HomogeneousFunction.coordinate(2, 0).times_radial(-3), (1, -1))


def test_symbol_and_operator_ladders():
    e = parse_expression("|xi|^-1 + xi1*|xi|^-3 + |xi|^-3", 2)
    s = expr_to_symbol(e)
    assert s.order == -1 and s.depth == 2
    A = expr_to_operator(e, depth=3)
    assert A.order == -1 and A.depth == 3
    with pytest.raises(InvalidInput):
        expr_to_symbol(parse_expression("|xi|^-1 + |xi|^(-3/2)", 2))


@pytest.mark.parametrize("bad", ["x1*|xi|^-2", "foo(xi1)", "xi1 +", "xi3", "import os"])
def test_rejections(bad):
    with pytest.raises(InvalidInput):
        e = parse_expression(bad, 2)
        expr_to_cone(e)


def test_homogeneous_rejects_x_dependence():
    with pytest.raises(InvalidInput):
        expr_to_homogeneous(parse_expression("cos(x1)*|xi|^-2", 2))
    with pytest.raises(InvalidInput):
        expr_to_homogeneous(parse_expression("|xi|^-2 + |xi|^-3", 2))


def test_problem_file(tmp_path):
    p = tmp_path / "prob.json"
    p.write_text(json.dumps({"kind": "homogeneous", "payload": {"expr": "|xi|^-3", "dim": 3},
                             "task": {"operation": "residue"}}))
    doc = load_problem(p)
    f = payload_object(doc["kind"], doc["payload"])
    assert f == HomogeneousFunction.radial(3, -3)
    g = payload_object("homogeneous", f.to_json())
    assert g == f
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "nope"}')
    with pytest.raises(InvalidInput):
        load_problem(bad)
    with pytest.raises(InvalidInput):
        load_problem(tmp_path / "missing.json")
