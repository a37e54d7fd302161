"""Command-line driver: ``conetrace <subcommand> [--inline TEXT | --input FILE] [flags]``.

Reports go to stdout, one JSON object per line with ``--json`` and as
``key: value`` text otherwise. Exit codes: 0 success, 1 usage or schema
errors, 2 mathematical obstructions (the violated condition is printed),
3 failed verification checks.
"""
from __future__ import annotations

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse  # noqa: E402
import hashlib  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from fractions import Fraction  # noqa: E402

import mpmath  # noqa: E402
import numpy as np  # noqa: E402

from . import precision  # noqa: E402
from .errors import ConetraceError, InvalidInput, Obstruction  # noqa: E402
from .gaussian import frac_str, to_fraction  # noqa: E402
from .homog import (HomogeneousFunction, LogHomogeneousFunction, decompose_derivatives,  # noqa: E402
                    log_decompose_derivatives, log_residue, residue)
from .poly import Poly  # noqa: E402
from .psido import TorusPsiDO  # noqa: E402
from .symbols import (ClassicalSymbol, PolyGaussian, classical_decompose, cutoff_integral,  # noqa: E402
                      schwartz_decompose, schwartz_decompose_zero_integral)
from .symbols import residue as symbol_residue  # noqa: E402
from .symp import ConeFunction  # noqa: E402
from . import textio  # noqa: E402

EXIT_OK, EXIT_USAGE, EXIT_OBSTRUCTION, EXIT_FAILED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------------
# value rendering


def _digits():
    return precision.output_digits()


def num(v):
    """JSON rendering of a scalar: mp values as decimal strings, floats as numbers."""
    if isinstance(v, (mpmath.mpf, mpmath.mpc)):
        d = _digits()
        v = mpmath.mpc(v)
        return [mpmath.nstr(v.real, d), mpmath.nstr(v.imag, d)]
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (float, int, np.floating, np.integer)):
        return [float(v), 0.0]
    return v


def _canon(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def digest(operation, inputs, params):
    h = hashlib.sha256(_canon({"op": operation, "in": inputs, "params": params}).encode())
    return h.hexdigest()[:16]


# ----------------------------------------------------------------------------
# inputs


class Problem:
    """Parsed input: payload objects by name plus scalar parameters."""

    def __init__(self, params, objects, record):
        self.params = params
        self.objects = objects
        self.record = record

    def param(self, key, default=None, conv=str):
        v = self.params.get(key, default)
        if v is None:
            return None
        try:
            return conv(v)
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"parameter {key}={v!r} is invalid") from exc


def _frac(v):
    return to_fraction(str(v))


def load(args, kind):
    """Build a Problem from --inline or --input for the given payload kind."""
    if bool(args.inline) == bool(args.input):
        raise UsageError("exactly one of --inline or --input is required")
    if args.inline:
        params, exprs = textio.parse_inline(args.inline)
        n = textio._dim(params)
        objects = {}
        for name, text in exprs.items():
            e = textio.parse_expression(text, n)
            objects[name] = _convert(e, kind, params)
        if not objects and kind not in ("functional", "none") and "gaussian" not in params:
            raise InvalidInput("inline input has no expression")
        record = {"inline": args.inline}
        return Problem(params, objects, record)
    doc = textio.load_problem(args.input)
    params = dict(doc["task"].get("params", {}))
    for key in ("tol", "seed"):
        if key in doc["task"] and getattr(args, key, None) is None:
            setattr(args, key, doc["task"][key])
    payload = doc["payload"]
    objects = {}
    if isinstance(payload, dict) and ("f" in payload or "g" in payload) and doc["kind"] == "cone":
        for name in ("f", "g"):
            if name in payload:
                objects[name] = textio.payload_object(doc["kind"], payload[name])
    elif doc["kind"] == "functional":
        params.update(payload)
    else:
        objects["f"] = textio.payload_object(doc["kind"], payload)
    return Problem(params, objects, {"file": doc})


def _convert(e, kind, params):
    if kind == "homogeneous":
        groups = e.by_degree()
        if len(groups) > 1 or any(set(m) - {(0,) * e.n} for m in groups.values()):
            return textio.expr_to_symbol(e, params.get("order"))
        return textio.expr_to_homogeneous(e)
    if kind == "symbol":
        return textio.expr_to_symbol(e, params.get("order"))
    if kind == "cone":
        return textio.expr_to_cone(e)
    if kind == "operator":
        return textio.expr_to_operator(e, params.get("order"), params.get("depth"))
    return e


def _get(prob, name, types, what):
    obj = prob.objects.get(name)
    if not isinstance(obj, types):
        raise InvalidInput(f"expected {what} as input {name!r}")
    return obj


# ----------------------------------------------------------------------------
# subcommands (each returns (inputs json, params, result dict))


def cmd_residue(args, prob):
    f = prob.objects.get("f")
    if isinstance(f, HomogeneousFunction):
        r = residue(f)
    elif isinstance(f, ClassicalSymbol):
        r = symbol_residue(f)
    elif isinstance(f, LogHomogeneousFunction):
        r = log_residue(f)
    else:
        raise InvalidInput("residue needs a homogeneous function, log function or symbol")
    with precision.working():
        return f.to_json(), {}, {"value": num(r.value()), "exact": r.to_json(_digits())["exact"],
                                 "unit": f"Area_{r.dim}", "certified_error": 0.0}


def cmd_cutoff(args, prob):
    f = prob.objects.get("f")
    if isinstance(f, HomogeneousFunction):
        f = ClassicalSymbol.from_homogeneous(f)
    if not isinstance(f, ClassicalSymbol):
        raise InvalidInput("cutoff-int needs a symbol")
    v, logc = cutoff_integral(f)
    return f.to_json(), {}, {"value": num(v), "log_coefficient": logc.to_json(_digits()),
                             "certified_error": 0.0}


def _gaussian_param(prob):
    """PolyGaussian from ``gaussian=<polynomial in xi>`` and optional ``pi=<h>``."""
    n = textio._dim(prob.params)
    e = textio.parse_expression(prob.params["gaussian"], n)
    P = Poly.zero(n)
    for (k, s), Q in e.terms.items():
        if any(k) or s:
            raise InvalidInput("the gaussian prefactor must be a polynomial in xi")
        P = P + Q
    return PolyGaussian(n, P, prob.param("pi", 0, int))


def cmd_decompose(args, prob):
    f = _gaussian_param(prob) if "gaussian" in prob.params else prob.objects.get("f")
    if isinstance(f, HomogeneousFunction):
        sig = decompose_derivatives(f)
        out = [s.to_json() for s in sig]
    elif isinstance(f, LogHomogeneousFunction):
        out = [s.to_json() for s in log_decompose_derivatives(f)]
    elif isinstance(f, ClassicalSymbol):
        out = [s.to_json() for s in classical_decompose(f)]
    elif isinstance(f, PolyGaussian):
        fn = schwartz_decompose_zero_integral if prob.param("zero_integral") else schwartz_decompose
        out = [s.to_json() for s in fn(f)]
    else:
        raise InvalidInput("decompose-deriv needs a homogeneous, log, symbol or gaussian input")
    return f.to_json(), {}, {"values": out, "certified_error": 0.0}


def cmd_poisson(args, prob):
    from .symp import poisson_bracket
    f = _get(prob, "f", ConeFunction, "a cone function")
    g = _get(prob, "g", ConeFunction, "a cone function")
    return [f.to_json(), g.to_json()], {}, {"value": poisson_bracket(f, g).to_json(),
                                            "certified_error": 0.0}


def cmd_symp_residue(args, prob):
    from .symp import symplectic_residue
    f = _get(prob, "f", ConeFunction, "a cone function")
    r = symplectic_residue(f)
    with precision.working():
        return f.to_json(), {}, {"value": num(r.value()), "exact": r.to_json(_digits())["exact"],
                                 "certified_error": 0.0}


def cmd_bracket(args, prob):
    from .symp import bracket_decompose
    f = _get(prob, "f", ConeFunction, "a cone function")
    l, m = prob.param("l", None, _frac), prob.param("m", None, _frac)
    if l is None:
        raise InvalidInput("bracket-decompose needs l")
    if m is None:
        m = f.degree - l + 1
    tol = args.tol if args.tol is not None else 1e-6
    pairs, err = bracket_decompose(f, l, m, args.grid, tol=tol)
    return f.to_json(), {"l": frac_str(l), "m": frac_str(m), "grid": args.grid or "32x64"}, {
        "values": [{"g": g.to_json(), "f_sup_norm": F.sup_norm()} for g, F in pairs],
        "certified_error": err}


def _operator(prob):
    return _get(prob, "f", TorusPsiDO, "an operator")


def _trace_report(A, r):
    out = {"value": num(r.value), "certified_error": r.error, "R": r.R}
    return A.to_json(), {}, out


def cmd_trace(args, prob):
    from .psido import op_trace
    A = _operator(prob)
    return _trace_report(A, op_trace(A, tol=args.tol))


def cmd_res_trace(args, prob):
    from .psido import residue_trace
    A = _operator(prob)
    r = residue_trace(A)
    with precision.working():
        return A.to_json(), {}, {"value": num(r.value()), "exact": r.to_json(_digits())["exact"],
                                 "certified_error": 0.0}


def cmd_tr_reg(args, prob):
    from .psido import reg_trace_TR
    A = _operator(prob)
    return _trace_report(A, reg_trace_TR(A, tol=args.tol))


def cmd_trb(args, prob):
    from .psido import TRb, trb_branch
    A = _operator(prob)
    a = prob.param("a", A.order, _frac)
    r = TRb(A, a, tol=args.tol)
    inp, _, out = _trace_report(A, r)
    out["branch"] = trb_branch(a, A.dim)
    return inp, {"a": frac_str(a)}, out


def cmd_commutator_rep(args, prob):
    from .psido import commutator_representation
    A = _operator(prob)
    m = prob.param("m", Fraction(1, 2), _frac)
    J = prob.param("J", 2, int)
    tol = args.tol if args.tol is not None else 1e-4
    rep = commutator_representation(A, m, J=J, grid=args.grid, tol=tol)
    with precision.working():
        res = {"value": num(rep.res_coeff.value()), "exact": rep.res_coeff.to_json()["exact"]}
    return A.to_json(), {"m": frac_str(m), "J": J}, {
        "values": {"res_coeff": res, "level_errors": rep.level_errors,
                   "P": [p.component(0).to_json() for p in rep.P]},
        "certified_error": max(rep.level_errors.values(), default=0.0)}


def _leading_T(spec):
    from .classify import point_evaluation, sphere_mean
    kind = spec.get("T", "mean") if isinstance(spec, dict) else spec
    if isinstance(kind, dict):
        x, w = kind.get("x", [0.0, 0.0]), kind.get("omega", [1.0, 0.0])
        return point_evaluation(x, w), {"type": "point", "x": x, "omega": w}
    if kind == "mean":
        return sphere_mean, {"type": "mean"}
    if kind == "point":
        x = [float(v) for v in str(spec.get("x", "0.3,1.1")).split(",")]
        w = [float(v) for v in str(spec.get("omega", "1,0.5")).split(",")]
        return point_evaluation(x, w), {"type": "point", "x": x, "omega": w}
    raise InvalidInput(f"unknown leading-symbol functional {kind!r}")


def cmd_classify_fit(args, prob):
    from .classify import fit_hypertrace, make_leading_symbol_trace, probe_basis
    from .psido import TRb, residue_trace
    p = prob.params
    a = prob.param("a", 0, _frac)
    lam = complex(prob.param("lam", 1, lambda v: complex(str(v).replace("i", "j"))))
    T, Tdesc = _leading_T(p)
    lead = make_leading_symbol_trace(T, a)
    if a == -1:
        def tau(A):
            return lam * complex(residue_trace(A.as_order(a)).value()) + lead(A)
    else:
        def tau(A):
            return lam * complex(TRb(A, a).value) + lead(A)
    fit = fit_hypertrace(tau, a)
    dT = max(abs(fit.samples[lab] - T(s)) for lab, s in probe_basis(2, a))
    return {"lam": num(lam), "T": Tdesc}, {"a": frac_str(a)}, {
        "values": {"lam": num(fit.lam), "branch": fit.branch,
                   "probes": {k: num(v) for k, v in fit.samples.items()}},
        "certified_error": max(abs(fit.lam - lam), dT)}


def cmd_bundle_reduce(args, prob):
    from .bundle import reduce_hypertrace, tau_tensor_trN
    from .psido import op_trace, residue_trace
    N = prob.param("N", 2, int)
    a = prob.param("a", -2, _frac)
    name = prob.param("tau", "res")
    trials = prob.param("trials", 10, int)
    if name == "res":
        def base(X):
            return complex(residue_trace(X).value())
    elif name == "l2":
        def base(X):
            return op_trace(X).value
    elif name != "entry12":
        raise InvalidInput("tau must be one of res, l2, entry12")
    if name == "entry12":
        def T(M):
            return complex(residue_trace(M[0, 1]).value())
    else:
        def T(M):
            return tau_tensor_trN(base, M)
    tol = args.tol if args.tol is not None else 1e-8
    red = reduce_hypertrace(T, a, N=N, trials=trials, tol=tol, seed=args.seed or 0)
    dev = max(red.report["delta_deviation"], red.report["tensor_deviation"])
    return {"tau": name}, {"N": N, "a": frac_str(a), "trials": trials}, {
        "values": red.report, "certified_error": dev}


def run_verify(args):
    from .suites import SUITES, run_suite
    name = args.suite
    if name != "all" and name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    seed = args.seed if args.seed is not None else 0
    recs = run_suite(name, seed=seed, size="full" if args.full else "quick")
    ok = all(r["passed"] for r in recs)
    lines = []
    for r in recs:
        lines.append({"operation": "verify", "inputs_digest": digest("verify", r["suite"],
                                                                     {"seed": seed}),
                      "suite": r["suite"], "check": r["check"], "passed": r["passed"],
                      "value": r.get("metric"), "tol": r.get("tol"), "certified_error": None,
                      "seed": seed})
    summary = {"operation": "verify", "inputs_digest": digest("verify", name, {"seed": seed}),
               "suite": name, "value": {"passed": sum(r["passed"] for r in recs),
                                        "total": len(recs)},
               "passed": ok, "certified_error": None, "seed": seed}
    lines.append(summary)
    for obj in lines:
        _emit(args, obj)
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "residue": (cmd_residue, "homogeneous", "residue of a homogeneous function or symbol"),
    "cutoff-int": (cmd_cutoff, "symbol", "cut-off integral of a classical symbol"),
    "decompose-deriv": (cmd_decompose, "homogeneous", "write f as a sum of derivatives"),
    "poisson": (cmd_poisson, "cone", "Poisson bracket {f, g} on the cone"),
    "symp-residue": (cmd_symp_residue, "cone", "symplectic residue on the cosphere bundle"),
    "bracket-decompose": (cmd_bracket, "cone", "f as a sum of Poisson brackets (n = 2)"),
    "trace": (cmd_trace, "operator", "L2 trace of an operator of order < -n"),
    "res-trace": (cmd_res_trace, "operator", "residue trace"),
    "tr-reg": (cmd_tr_reg, "operator", "regularized (canonical) trace"),
    "trb": (cmd_trb, "operator", "dispatch trace TRb_a on the declared order a"),
    "commutator-rep": (cmd_commutator_rep, "operator", "sum-of-commutators representation"),
    "classify-fit": (cmd_classify_fit, "functional", "fit a synthetic hypertrace"),
    "bundle-reduce": (cmd_bundle_reduce, "functional", "reduce a matrix hypertrace to scalars"),
}


def _emit(args, obj):
    if args.json:
        print(_canon_out(obj))
    else:
        parts = [f"{k}: {json.dumps(v, default=str)}" for k, v in obj.items()
                 if k not in ("inputs_digest",)]
        print("  ".join(parts))


def _canon_out(obj):
    return json.dumps(obj, sort_keys=False, separators=(", ", ": "), default=str)


def build_parser():
    p = _Parser(prog="conetrace", description="Symbol calculus, residues and trace functionals.")
    sub = p.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    def common(sp):
        sp.add_argument("--input", help="problem file (JSON)")
        sp.add_argument("--inline", help='inline problem, e.g. "n=2; |xi|^-2"')
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--grid", default=None, help="cosphere grid, e.g. 32x64")
        sp.add_argument("--json", action="store_true", help="emit JSON lines")
        sp.add_argument("--precision", type=int, default=None, help="output digits")

    for name, (_, _, help_) in COMMANDS.items():
        common(sub.add_parser(name, help=help_))
    v = sub.add_parser("verify", help="run property suites")
    v.add_argument("suite", help="suite name or 'all'")
    v.add_argument("--full", action="store_true", help="acceptance-size instance counts")
    common(v)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.precision is not None:
        if args.precision < 15:
            parser.error("--precision must be at least 15")
        os.environ["CONETRACE_PRECISION"] = str(args.precision)
    try:
        if args.command == "verify":
            return run_verify(args)
        fn, kind, _ = COMMANDS[args.command]
        t0 = time.perf_counter()
        prob = load(args, "none" if kind == "functional" else kind)
        inputs, params, result = fn(args, prob)
        params = {**prob.params, **params}
        obj = {"operation": args.command, "inputs_digest": digest(args.command, inputs, params)}
        if "values" in result:
            obj["values"] = result.pop("values")
        else:
            obj["value"] = result.pop("value")
        obj["certified_error"] = result.pop("certified_error", None)
        obj.update(result)
        obj["wall_time"] = round(time.perf_counter() - t0, 6)
        obj["seed"] = args.seed
        _emit(args, obj)
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Obstruction as exc:
        msg = {"operation": args.command, "error": type(exc).__name__,
               "condition": exc.condition, "message": str(exc)}
        if args.json:
            print(_canon_out(msg))
        print(f"obstruction ({type(exc).__name__}): {exc}\nviolated condition: {exc.condition}",
              file=sys.stderr)
        return EXIT_OBSTRUCTION
    except (InvalidInput, ConetraceError, KeyError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
