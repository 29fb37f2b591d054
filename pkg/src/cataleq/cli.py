"""Command-line driver: load an equation (builtin name or DSL file), run a
strategy at a chosen order, and emit series tables, root expansions,
certificates, and traces.

Exit codes: 0 certified success, 2 parse failure, 3 non-generic or strategy
failure, 4 ambiguous candidate, 5 verification failure.
"""

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import sympy as sp

from . import corpus, oracle
from .equations import ParseError, SolveError, parse_equation, solve_series
from .newton import expand_roots
from .strategy import (
    AmbiguousError,
    NonGenericError,
    OrderTooLowError,
    StrategyError,
    VerificationError,
    build_2k_system,
    build_3k_system,
    determinant_route,
    eliminate,
    factorization_ansatz,
    kernel_method,
    multiplicity_path,
    quadratic_method,
    _composed_x0_derivative,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NONGENERIC = 3
EXIT_AMBIGUOUS = 4
EXIT_VERIFICATION = 5

SCHEMA_VERSION = 1

STRATEGIES = ("auto", "kernel", "quadratic", "system3k", "system2k",
              "determinants", "ansatz")

WALK_MODELS = {"dyck": [1, -1], "walk_3_2": [3, -2]}
CONSTELLATION_DEGREE = {"bipartite": 2, "const3": 3}


def build_parser():
    p = argparse.ArgumentParser(
        prog="cataleq",
        description="solve a polynomial equation with one catalytic variable")
    p.add_argument("input", help="builtin name or path to a DSL file")
    p.add_argument("--strategy", choices=STRATEGIES, default="auto")
    p.add_argument("--order", type=int, default=16,
                   help="series truncation order (default 16)")
    p.add_argument("--max-order", type=int, default=64,
                   help="ceiling for automatic order escalation")
    p.add_argument("--target", default="x1",
                   help="unknown to eliminate down to: x1, F1, or an index")
    p.add_argument("--emit", choices=("text", "structured"), default="text")
    p.add_argument("--trace", action="store_true",
                   help="include the elimination trace in the report")
    p.add_argument("--list", action="store_true",
                   help="list builtin equation names and exit")
    return p


def load_input(spec):
    if spec in corpus.builtin_names():
        return corpus.load_builtin(spec)
    path = Path(spec)
    if not path.exists():
        raise ParseError(f"no builtin or file named {spec!r}")
    return parse_equation(path.read_text(), name=path.stem)


def resolve_target(eq, text):
    """Accept x3, F3, or a bare index."""
    text = str(text)
    if text.isdigit():
        idx = int(text)
    elif text[:1] in ("x", "F") and text[1:].isdigit():
        idx = int(text[1:])
    else:
        raise ParseError(f"cannot parse target {text!r}")
    if not 1 <= idx <= eq.k:
        raise ParseError(f"target index {idx} out of range 1..{eq.k}")
    return eq.x[idx], idx


def series_table(eq, sol, rows):
    table = []
    u = sp.Symbol("u")
    for n in range(rows):
        expr = sp.expand(sol.F.slice_expr(Fraction(n), eq.v)).subs(eq.v, u)
        table.append({"t_power": n, "coefficient": str(expr)})
    return table


def unknown_table(eq, sol):
    out = []
    for i, b in enumerate(eq.bindings, start=1):
        out.append({"index": i, "label": b.label(),
                    "series": sol.unknown(i).text()})
    return out


def root_expansions(eq, sol, N):
    try:
        Phi = _composed_x0_derivative(eq, sol, N)
        bundle = expand_roots(Phi, N)
    except Exception:
        return []
    roots = sorted(bundle.roots, key=lambda r: r.series.text())
    return [{"series": r.series.text(), "multiplicity": r.multiplicity,
             "conjectured": bool(r.conjectured)} for r in roots]


def certificate_report(cert):
    out = {"target": str(cert.target),
           "relation": cert.candidate.text(),
           "residual_valuation": str(cert.residual_valuation),
           "n_min": cert.n_min}
    if getattr(cert, "per_root_relation", None) is not None:
        out["per_root_relation"] = str(sp.expand(cert.per_root_relation))
    if getattr(cert, "root_relation", None) is not None:
        out["root_relation"] = str(sp.expand(cert.root_relation))
    return out


def oracle_checks(eq, sol, N):
    checks = []
    if eq.name in WALK_MODELS:
        model = oracle.WalkModel(WALK_MODELS[eq.name])
        n_max = min(N - 1, 12)
        ok = True
        for n in range(n_max + 1):
            prof = oracle.walk_profile(model, n)
            for e in range(0, max(prof) + 1 if prof else 1):
                if sol.F.coeff(Fraction(n), e) != prof.get(e, 0):
                    ok = False
        checks.append({"oracle": f"walk DP {WALK_MODELS[eq.name]}",
                       "through_order": n_max,
                       "result": "agree" if ok else "DISAGREE"})
    if eq.name in CONSTELLATION_DEGREE:
        m = CONSTELLATION_DEGREE[eq.name]
        f1 = sol.unknown(1)
        ok = all(f1.coeff(Fraction(n)) == oracle.constellation_count(m, n)
                 for n in range(1, min(N, 9)))
        checks.append({"oracle": f"closed-form counts (degree {m})",
                       "through_order": min(N, 9) - 1,
                       "result": "agree" if ok else "DISAGREE"})
    return checks


def pick_auto(eq, sol, N):
    """Routing: linear -> kernel; quadratic single unknown -> quadratic;
    simple roots -> discriminant system (determinant fallback); repeated
    root -> multiplicity path."""
    if eq.x0_degree == 1:
        return "kernel"
    if eq.x0_degree == 2 and eq.k == 1:
        return "quadratic"
    Phi = _composed_x0_derivative(eq, sol, N)
    bundle = expand_roots(Phi, N)
    if any(r.multiplicity > 1 for r in bundle.roots):
        return "multiplicity"
    return "system2k"


def execute(eq, strategy_name, N, target_text):
    """Returns (strategy_used, report_fragment). Raises strategy errors."""
    sol = solve_series(eq, N)
    target, _ = resolve_target(eq, target_text)
    used = strategy_name
    if strategy_name == "auto":
        used = pick_auto(eq, sol, N)
    frag = {"strategy": used}
    if used == "multiplicity":
        rep = multiplicity_path(eq, N)
        frag["root_candidates"] = [A.text() for A in rep.root_candidates]
        frag["assignments"] = {str(k): str(v)
                               for k, v in sorted(rep.assignments.items(),
                                                  key=lambda kv: str(kv[0]))}
        frag["specialized_equation"] = rep.specialized.text()
        frag["verified_order"] = rep.verified_order
        frag["verification"] = "PASSED"
        frag["certificates"] = [certificate_report(c)
                                for c in rep.certificates]
        frag["trace"] = rep.trace
        return sol, frag
    if used == "kernel":
        sys_ = kernel_method(eq, N)
        cert = eliminate(sys_, target)
        frag["system"] = {"kind": sys_.kind,
                          "equations": len(sys_.equations)}
        frag["trace"] = cert.trace
    elif used == "quadratic":
        cert = quadratic_method(eq, N)
        frag["trace"] = cert.trace
    elif used == "system3k":
        sys_ = build_3k_system(eq, N)
        cert = eliminate(sys_, target)
        frag["system"] = {"kind": sys_.kind,
                          "equations": len(sys_.equations)}
        frag["trace"] = cert.trace
    elif used == "system2k":
        sys_ = build_2k_system(eq, N)
        try:
            cert = eliminate(sys_, target)
        except StrategyError:
            if strategy_name != "auto":
                raise
            used = "determinants"
            frag["strategy"] = used
            cert = determinant_route(sys_, target)
        frag["system"] = {"kind": sys_.kind,
                          "equations": len(sys_.equations)}
        frag["trace"] = cert.trace
    elif used == "determinants":
        sys_ = build_2k_system(eq, N)
        cert = determinant_route(sys_, target)
        frag["system"] = {"kind": sys_.kind,
                          "equations": len(sys_.equations)}
        frag["trace"] = cert.trace
    elif used == "ansatz":
        cert = factorization_ansatz(eq, N=N, target=target)
        frag["trace"] = cert.trace
    else:
        raise StrategyError(f"unknown strategy {used!r}")
    frag["certificates"] = [certificate_report(cert)]
    return sol, frag


def run(args):
    eq = load_input(args.input)
    resolve_target(eq, args.target)
    N = args.order
    while True:
        try:
            sol, frag = execute(eq, args.strategy, N, args.target)
            break
        except OrderTooLowError:
            if 2 * N > args.max_order:
                raise
            N = 2 * N
    report = {
        "schema_version": SCHEMA_VERSION,
        "name": eq.name,
        "input": args.input,
        "order": N,
        "main_degree": eq.x0_degree,
        "unknowns": [b.label() for b in eq.bindings],
        "series": series_table(eq, sol, min(N, 8)),
        "unknown_series": unknown_table(eq, sol),
        "roots": root_expansions(eq, sol, N),
        "oracle_checks": oracle_checks(eq, sol, N),
    }
    report.update(frag)
    if not args.trace:
        report.pop("trace", None)
    else:
        report["trace"] = [
            {k: str(v) for k, v in step.items()} if isinstance(step, dict)
            else str(step)
            for step in report.get("trace", [])]
    return report


def emit_text(report, out):
    w = out.write
    w(f"equation: {report['name']}  "
      f"(degree {report['main_degree']} in F(u), "
      f"unknowns {', '.join(report['unknowns'])})\n")
    w(f"strategy: {report['strategy']}   order: {report['order']}\n")
    w("\nseries F(t, u):\n")
    for row in report["series"]:
        w(f"  [t^{row['t_power']}] {row['coefficient']}\n")
    w("\nunknown series:\n")
    for row in report["unknown_series"]:
        w(f"  {row['label']} = {row['series']}\n")
    if report["roots"]:
        w("\nroots of the composed derivative:\n")
        for r in report["roots"]:
            mark = " (conjectured)" if r["conjectured"] else ""
            w(f"  U = {r['series']}  multiplicity {r['multiplicity']}"
              f"{mark}\n")
    if "root_candidates" in report:
        w("\nmultiple-root closed forms:\n")
        for txt in report["root_candidates"]:
            w(f"  {txt} = 0\n")
        for k, v in report["assignments"].items():
            w(f"  {k} = {v}\n")
        w(f"specialized equation: {report['specialized_equation']}\n")
        w(f"verification: {report['verification']} "
          f"(order {report['verified_order']})\n")
    for cert in report.get("certificates", []):
        w(f"\ncertificate for {cert['target']}:\n")
        w(f"  {cert['relation']} = 0\n")
        w(f"  residual valuation >= {cert['residual_valuation']} "
          f"(required {cert['n_min']})\n")
        if "per_root_relation" in cert:
            w(f"  per-root relation: {cert['per_root_relation']}\n")
        if "root_relation" in cert:
            w(f"  root relation: {cert['root_relation']}\n")
    for check in report["oracle_checks"]:
        w(f"\noracle [{check['oracle']}] through t^"
          f"{check['through_order']}: {check['result']}\n")
    if "trace" in report:
        w("\ntrace:\n")
        for step in report["trace"]:
            w(f"  {step}\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.list:
        for name in corpus.builtin_names():
            print(name)
        return EXIT_OK
    try:
        report = run(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except SolveError as e:
        print(f"parse/solve error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except AmbiguousError as e:
        print(f"ambiguous: {e}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except VerificationError as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (NonGenericError, StrategyError) as e:
        print(f"strategy failed: {e}", file=sys.stderr)
        return EXIT_NONGENERIC
    if args.emit == "structured":
        json.dump(report, sys.stdout, indent=2, sort_keys=True, default=str)
        sys.stdout.write("\n")
    else:
        emit_text(report, sys.stdout)
    for check in report["oracle_checks"]:
        if check["result"] != "agree":
            return EXIT_VERIFICATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
