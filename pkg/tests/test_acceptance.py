"""Acceptance criteria, one test each, at the stated tolerances and budgets.

Every test prints one ``ACCEPTANCE <id> PASS|FAIL`` line (uncaptured) with the
worst metric next to the tolerance, then asserts.
"""
import json
import os
import subprocess
import sys
import time

from conetrace.suites import BRACKET_CASES, run_suite


def report(capsys, cid, title, passed, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {cid:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}")


def run_full(name, seed=0):
    t0 = time.perf_counter()
    recs = run_suite(name, seed=seed, size="full")
    return recs, time.perf_counter() - t0


def summarize(recs):
    return "; ".join(f"{r['check']}={r.get('metric')}" + (f"<= {r['tol']}" if 'tol' in r else "")
                     for r in recs)


def test_01_exact_layer(capsys):
    recs, dt = run_full("exact")
    ok = all(r["passed"] for r in recs) and all(r["instances"] >= 200 for r in recs) and dt <= 60
    report(capsys, 1, "exact identities (200 instances, n=2,3, <=60 s)", ok,
           f"failures per identity {[r['metric'] for r in recs]}, {dt:.1f} s")
    assert ok


def test_02_derivative_decompositions(capsys):
    recs, dt = run_full("decompose")
    ok = all(r["passed"] for r in recs) and dt <= 30
    report(capsys, 2, "derivative decompositions (<=30 s)", ok, f"{summarize(recs)}, {dt:.1f} s")
    assert ok


def test_03_residue_constants(capsys):
    recs, _ = run_full("residue")
    ok = all(r["passed"] for r in recs)
    report(capsys, 3, "residue constants 2pi, 4pi, res(d sigma)=0", ok, summarize(recs))
    assert ok


def test_04_schwartz_closed_form(capsys):
    recs, _ = run_full("schwartz")
    ok = all(r["passed"] for r in recs)
    report(capsys, 4, "Schwartz primitive closed form at 20 points", ok, summarize(recs))
    assert ok


def test_05_symplectic_residue(capsys):
    recs, _ = run_full("symplectic")
    ok = all(r["passed"] for r in recs)
    n_pairs = next(r["instances"] for r in recs if r["check"] == "residue_of_bracket")
    ok = ok and n_pairs >= 100
    report(capsys, 5, "symplectic residue 16pi^3, quadrature, res({f,g})=0", ok, summarize(recs))
    assert ok


def test_06_bracket_decomposition(capsys):
    recs, dt = run_full("bracket")
    ok = all(r["passed"] for r in recs) and dt <= 120
    cases = {(l, m) for l, m in BRACKET_CASES}
    ok = ok and (0, 0) in cases and any(l + m - 1 == -2 for l, m in cases)
    report(capsys, 6, "bracket decomposition on 32^2x64 (<=120 s)", ok,
           f"{summarize(recs)}, {dt:.1f} s")
    assert ok


def test_07_operator_layer(capsys):
    recs, _ = run_full("operator")
    ok = all(r["passed"] for r in recs)
    lead = next(r for r in recs if r["check"] == "commutator_leading")
    ok = ok and lead["instances"] >= 100
    report(capsys, 7, "commutator leading symbol, Tr and Res of commutators", ok, summarize(recs))
    assert ok


def test_08_regularized_trace(capsys):
    recs, _ = run_full("regtrace")
    ok = all(r["passed"] for r in recs)
    report(capsys, 8, "regularized trace", ok, summarize(recs))
    assert ok


def test_09_classification(capsys):
    from fractions import Fraction

    from conetrace.classify import fit_hypertrace
    from conetrace.suites import CLASSIFY_ORDERS, _synthetic_hypertrace
    recs, _ = run_full("classify")
    ok = all(r["passed"] for r in recs)
    assert {Fraction(0), Fraction(-1), Fraction(-2), Fraction(-3, 2),
            Fraction(-5, 2)} <= set(CLASSIFY_ORDERS)
    slowest = 0.0
    for a in CLASSIFY_ORDERS:
        tau, _ = _synthetic_hypertrace(a, 2 + 1j)
        t0 = time.perf_counter()
        fit_hypertrace(tau, a)
        slowest = max(slowest, time.perf_counter() - t0)
    ok = ok and slowest <= 60
    report(capsys, 9, "classification round trips (each fit <=60 s)", ok,
           f"{summarize(recs)}, slowest fit {slowest:.1f} s")
    assert ok


def test_10_commutator_representation(capsys):
    recs, dt = run_full("commrep")
    ok = all(r["passed"] for r in recs) and dt <= 300
    report(capsys, 10, "commutator representation J=2 (<=300 s)", ok,
           f"{summarize(recs)}, {dt:.1f} s")
    assert ok


def test_11_bundle_layer(capsys):
    recs, _ = run_full("bundle")
    ok = all(r["passed"] for r in recs)
    red = next(r for r in recs if r["check"] == "reduce_hypertrace")
    ok = ok and red["instances"] >= 50
    report(capsys, 11, "bundle layer", ok, summarize(recs))
    assert ok


def _cli(*args):
    env = dict(os.environ)
    return subprocess.run([sys.executable, "-m", "conetrace.cli", *args], capture_output=True,
                          env=env)


def test_12_cli_determinism(capsys):
    a = _cli("verify", "all", "--seed", "7")
    b = _cli("verify", "all", "--seed", "7")
    same = a.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    obstructions = [("decompose-deriv", "n=2; |xi|^-2"), ("decompose-deriv", "n=3; |xi|^-3"),
                    ("bracket-decompose", "l=1; m=-2; |xi|^-2")]
    cited = []
    for cmd, inline in obstructions:
        p = _cli(cmd, "--inline", inline, "--json")
        msg = json.loads(p.stdout.decode() or "{}")
        cited.append(p.returncode == 2 and bool(msg.get("condition"))
                     and b"violated condition" in p.stderr)
    ok = same and all(cited)
    report(capsys, 12, "CLI determinism and obstruction exit code 2", ok,
           f"byte-identical={same} ({len(a.stdout)} bytes), obstructions cited={cited}")
    assert ok
