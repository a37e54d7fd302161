"""Parsing of inline expressions and problem files.

Inline syntax: ``"n=2; a=-1; <expr>"``. Assignments of plain numbers are
parameters; the last non-assignment item (or ``f = ...``/``g = ...``) is an
expression in

    xi1 .. xin      fiber coordinates (``xi_1`` also accepted)
    |xi|            the Euclidean norm, any rational power
    x1 .. xn        base coordinates, only inside cos, sin and exp(i*...)
    i               the imaginary unit

with ``+ - * / ^ **`` and rational or Gaussian-rational coefficients. The
expression is expanded into sums of e^{i k.x} P(xi) |xi|^s, which are then
grouped by total homogeneity degree.
"""
from __future__ import annotations

import ast
import json
import re
from fractions import Fraction

from .errors import InvalidInput
from .gaussian import GaussRational, to_fraction
from .homog import HomogeneousFunction, LogHomogeneousFunction
from .poly import Poly
from .psido import TorusPsiDO
from .symbols import ClassicalSymbol, PolyGaussian, ScaledHomogeneous
from .symp import ConeFunction

_VAR = re.compile(r"^(xi|x)_?(\d+)$")


class _Expr:
    """Finite sum over (mode k, radial power s) of polynomials in xi."""

    def __init__(self, n, terms=None):
        self.n = n
        self.terms = {key: P for key, P in (terms or {}).items() if not P.is_zero()}

    @classmethod
    def const(cls, n, c):
        return cls(n, {((0,) * n, Fraction(0)): Poly.const(n, c)})

    def constant_value(self):
        if not self.terms:
            return GaussRational(0)
        if len(self.terms) == 1:
            (k, s), P = next(iter(self.terms.items()))
            if not any(k) and s == 0 and P.degree() == 0:
                return P.coefficient((0,) * self.n)
        return None

    def __add__(self, other):
        out = dict(self.terms)
        for key, P in other.terms.items():
            out[key] = out[key] + P if key in out else P
        return _Expr(self.n, out)

    def scale(self, c):
        return _Expr(self.n, {key: P.scale(c) for key, P in self.terms.items()})

    def __mul__(self, other):
        out = {}
        for (k1, s1), P in self.terms.items():
            for (k2, s2), Q in other.terms.items():
                key = (tuple(a + b for a, b in zip(k1, k2)), s1 + s2)
                t = P * Q
                out[key] = out[key] + t if key in out else t
        return _Expr(self.n, out)

    def power(self, e: Fraction):
        if len(self.terms) == 1:
            (k, s), P = next(iter(self.terms.items()))
            if not any(k) and P.degree() == 0 and len(P.terms) == 1:
                c = P.coefficient((0,) * self.n)
                if c == GaussRational(1) or e.denominator == 1:
                    cc = c ** int(e) if e.denominator == 1 else c
                    return _Expr(self.n, {(k, s * e): Poly.const(self.n, cc)})
        if e.denominator != 1 or e < 0:
            raise InvalidInput("only |xi| may carry negative or fractional powers")
        out = _Expr.const(self.n, 1)
        for _ in range(int(e)):
            out = out * self
        return out

    def by_degree(self):
        """degree -> {mode: [polys]} with each poly homogeneous."""
        out = {}
        for (k, s), P in self.terms.items():
            for d, Pd in P.homogeneous_parts().items():
                out.setdefault(s + d, {}).setdefault(k, []).append(Pd)
        return out


def _linear_x(node, n):
    """Integer vector k for an argument k.x of a trigonometric function."""
    if isinstance(node, ast.Name):
        m = _VAR.match(node.id)
        if m and m.group(1) == "x":
            j = int(m.group(2)) - 1
            if not 0 <= j < n:
                raise InvalidInput(f"x index out of range in {node.id}")
            k = [0] * n
            k[j] = 1
            return k
        raise InvalidInput(f"unexpected name {node.id!r} inside a trigonometric argument")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        k = _linear_x(node.operand, n)
        return [-v for v in k] if isinstance(node.op, ast.USub) else k
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub)):
        a, b = _linear_x(node.left, n), _linear_x(node.right, n)
        sg = 1 if isinstance(node.op, ast.Add) else -1
        return [u + sg * v for u, v in zip(a, b)]
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
        for c, v in ((node.left, node.right), (node.right, node.left)):
            if isinstance(c, ast.Constant) and isinstance(c.value, int):
                return [c.value * t for t in _linear_x(v, n)]
    raise InvalidInput("trigonometric arguments must be integer combinations of x1..xn")


def _strip_i(node):
    """For exp(i*(k.x)) return the k.x node."""
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
        if isinstance(node.left, ast.Name) and node.left.id in ("i", "I"):
            return node.right
        if isinstance(node.right, ast.Name) and node.right.id in ("i", "I"):
            return node.left
    raise InvalidInput("exp is only accepted as exp(i*(k.x))")


def _eval(node, n) -> _Expr:
    if isinstance(node, ast.Expression):
        return _eval(node.body, n)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise InvalidInput(f"unsupported constant {node.value!r}")
        return _Expr.const(n, to_fraction(str(node.value)))
    if isinstance(node, ast.Name):
        if node.id in ("i", "I"):
            return _Expr.const(n, GaussRational(0, 1))
        if node.id == "r":
            return _Expr(n, {((0,) * n, Fraction(1)): Poly.const(n, 1)})
        m = _VAR.match(node.id)
        if m and m.group(1) == "xi":
            j = int(m.group(2)) - 1
            if not 0 <= j < n:
                raise InvalidInput(f"xi index out of range in {node.id}")
            return _Expr(n, {((0,) * n, Fraction(0)): Poly.var(n, j)})
        raise InvalidInput(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, n)
        if isinstance(node.op, ast.USub):
            return v.scale(-1)
        if isinstance(node.op, ast.UAdd):
            return v
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            e = _eval(node.right, n).constant_value()
            if e is None or e.im:
                raise InvalidInput("exponents must be rational constants")
            return _eval(node.left, n).power(e.re)
        left, right = _eval(node.left, n), _eval(node.right, n)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left + right.scale(-1)
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            c = right.constant_value()
            if c is not None and c:
                return left.scale(GaussRational(1) / c)
            if len(right.terms) == 1:
                (k, s), P = next(iter(right.terms.items()))
                if not any(k) and P.degree() == 0:
                    c = P.coefficient((0,) * n)
                    return left * _Expr(n, {(k, -s): Poly.const(n, GaussRational(1) / c)})
            raise InvalidInput("division only by constants or powers of |xi|")
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and len(node.args) == 1:
        name = node.func.id
        if name in ("cos", "sin"):
            k = tuple(_linear_x(node.args[0], n))
            m = tuple(-v for v in k)
            s0 = Fraction(0)
            half = Fraction(1, 2)
            if name == "cos":
                return _Expr(n, {(k, s0): Poly.const(n, half)}) + \
                    _Expr(n, {(m, s0): Poly.const(n, half)})
            return _Expr(n, {(k, s0): Poly.const(n, GaussRational(0, -half))}) + \
                _Expr(n, {(m, s0): Poly.const(n, GaussRational(0, half))})
        if name == "exp":
            k = tuple(_linear_x(_strip_i(node.args[0]), n))
            return _Expr(n, {(k, Fraction(0)): Poly.const(n, 1)})
    raise InvalidInput(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse_expression(text: str, n: int) -> _Expr:
    src = text.replace("|xi|", "r").replace("^", "**")
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise InvalidInput(f"cannot parse expression {text!r}: {exc.msg}") from exc
    return _eval(tree, n)


def parse_inline(text: str):
    """Split ``"n=2; a=-1; f = expr; g = expr"`` into (params, expressions).

    Unnamed expressions are collected under "f", then "g".
    """
    params, exprs = {}, {}
    for item in (t.strip() for t in text.split(";")):
        if not item:
            continue
        if "=" in item and not item.startswith("="):
            key, val = (s.strip() for s in item.split("=", 1))
            if re.fullmatch(r"[A-Za-z_]\w*", key):
                if key in ("f", "g", "h", "expr"):
                    exprs["f" if key == "expr" else key] = val
                else:
                    params[key] = val
                continue
        exprs["g" if "f" in exprs else "f"] = item
    return params, exprs


def _dim(params, default=2):
    try:
        n = int(params.get("n", default))
    except ValueError as exc:
        raise InvalidInput("n must be an integer") from exc
    if n < 2:
        raise InvalidInput("n must be at least 2")
    return n


def expr_to_homogeneous(e: _Expr) -> HomogeneousFunction:
    groups = e.by_degree()
    if len(groups) > 1:
        raise InvalidInput("expression is not homogeneous")
    if not groups:
        return HomogeneousFunction.zero(e.n, 0)
    (d, modes), = groups.items()
    if set(modes) - {(0,) * e.n}:
        raise InvalidInput("homogeneous functions cannot depend on x")
    return HomogeneousFunction.from_raw(e.n, d, modes[(0,) * e.n])


def expr_to_cone(e: _Expr) -> ConeFunction:
    groups = e.by_degree()
    if len(groups) > 1:
        raise InvalidInput("expression is not homogeneous in xi")
    if not groups:
        return ConeFunction.zero(e.n)
    (d, modes), = groups.items()
    return ConeFunction(e.n, d, {k: HomogeneousFunction.from_raw(e.n, d, ps)
                                 for k, ps in modes.items()})


def _check_ladder(degrees, order):
    for d in degrees:
        j = order - d
        if j < 0 or j.denominator != 1:
            raise InvalidInput("component degrees must be order - j for integers j >= 0")


def expr_to_symbol(e: _Expr, order=None) -> ClassicalSymbol:
    groups = e.by_degree()
    if not groups:
        return ClassicalSymbol(e.n, to_fraction(order or 0), [])
    order = max(groups) if order is None else to_fraction(order)
    _check_ladder(groups, order)
    comps = []
    for j in range(int(order - min(groups)) + 1):
        modes = groups.get(order - j, {})
        if set(modes) - {(0,) * e.n}:
            raise InvalidInput("symbols on R^n cannot depend on x")
        comps.append(ScaledHomogeneous.of(HomogeneousFunction.from_raw(
            e.n, order - j, modes.get((0,) * e.n, []))))
    return ClassicalSymbol(e.n, order, comps)


def expr_to_operator(e: _Expr, order=None, depth=None) -> TorusPsiDO:
    groups = e.by_degree()
    order = (max(groups) if groups else Fraction(0)) if order is None else to_fraction(order)
    _check_ladder(groups, order)
    J = int(order - min(groups)) if groups else 0
    depth = J if depth is None else max(int(depth), J)
    comps = []
    for j in range(depth + 1):
        modes = groups.get(order - j, {})
        comps.append(ConeFunction(e.n, order - j, {
            k: HomogeneousFunction.from_raw(e.n, order - j, ps) for k, ps in modes.items()}))
    return TorusPsiDO(e.n, order, comps)


# problem files

KINDS = ("homogeneous", "log", "symbol", "cone", "operator", "matrix-operator", "functional",
         "gaussian")


def load_problem(path):
    """Read a JSON problem file: {kind, payload, task: {operation, params, tol, seed}}."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("kind") not in KINDS:
        raise InvalidInput(f"problem file needs 'kind' in {KINDS}")
    doc.setdefault("payload", {})
    doc.setdefault("task", {})
    if not isinstance(doc["task"], dict) or not isinstance(doc["payload"], (dict, list)):
        raise InvalidInput("'payload' and 'task' must be objects")
    return doc


def payload_object(kind, payload):
    """Build the library object for a problem-file payload."""
    if isinstance(payload, dict) and "expr" in payload:
        n = int(payload.get("dim", payload.get("n", 2)))
        e = parse_expression(str(payload["expr"]), n)
        if kind == "homogeneous":
            return expr_to_homogeneous(e)
        if kind == "cone":
            return expr_to_cone(e)
        if kind == "symbol":
            return expr_to_symbol(e, payload.get("order"))
        if kind == "operator":
            return expr_to_operator(e, payload.get("order"), payload.get("depth"))
        raise InvalidInput(f"kind {kind!r} does not accept 'expr'")
    try:
        if kind == "homogeneous":
            return HomogeneousFunction.from_json(payload)
        if kind == "log":
            return LogHomogeneousFunction.from_json(payload)
        if kind == "symbol":
            return ClassicalSymbol.from_json(payload)
        if kind == "cone":
            return ConeFunction.from_json(payload)
        if kind == "operator":
            return TorusPsiDO.from_json(payload)
        if kind == "gaussian":
            return PolyGaussian.from_json(int(payload["dim"]), payload)
        if kind == "matrix-operator":
            from .bundle import MatrixPsiDO
            N = int(payload["N"])
            ents = [TorusPsiDO.from_json(e) for e in payload["entries"]]
            if len(ents) != N * N:
                raise InvalidInput("matrix operator needs N*N entries")
            return MatrixPsiDO([ents[i * N:(i + 1) * N] for i in range(N)])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"bad {kind} payload: {exc}") from exc
    return payload
