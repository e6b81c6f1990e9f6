"""Command-line front end.

Exit codes: 0 success or accepted, 1 checked and rejected (or a law failed
under ``--expect pass``), 2 usage or parse error, 3 numeric or environment
error. JSON reports go to stdout with sorted keys; one-line summaries go
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from .calculus import check_derivation, make_ruleset
from .corpus import EXPECTED, corpus_names, load_corpus, replay_named
from .duality import perp_dual, perp_prime_dual, star_dual
from .errors import LqError, NumericError
from .evaluation import GradeEnv, evaluate, md_check
from .lattice import BUILDERS, build, check_laws, hasse_dot
from .syntax import DeclarationSet, parse_env_block, parse_script, parse_sequent, render

EXIT_OK, EXIT_REJECTED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageExit(message)


def _dump(obj, out: TextIO):
    out.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageExit(f"cannot read {path}: {exc.strerror}") from exc


def _load_env(path: str) -> tuple[DeclarationSet, GradeEnv]:
    decls = parse_env_block(_read(path))
    if not decls.bindings:
        raise NumericError(f"{path} binds no grades")
    return decls, GradeEnv.from_decls(decls)


def _cmd_check(args, out, err) -> int:
    _, derivations = parse_script(_read(args.script))
    if args.proof:
        derivations = [d for d in derivations if d.name == args.proof]
        if not derivations:
            raise _UsageExit(f"no proof named {args.proof!r}")
    if args.ruleset:
        make_ruleset(args.ruleset)
    reports = [check_derivation(args.ruleset or d.ruleset, d) for d in derivations]
    for r in reports:
        err.write(f"{r.name} [{r.ruleset}]: {r.verdict}\n")
    payload = reports[0].to_dict() if len(reports) == 1 else {"reports": [r.to_dict() for r in reports]}
    _dump(payload, out)
    return EXIT_OK if all(r.accepted for r in reports) else EXIT_REJECTED


def _cmd_eval(args, out, err) -> int:
    decls, env = _load_env(args.env)
    report = md_check(env)
    base = DeclarationSet.default().merge(decls)
    seq = parse_sequent(args.sequent, base)
    result = {
        "sequent": render(seq, base),
        "md": {
            "mode": report.mode,
            "norm_residual": report.norm_residual,
            "cross_residual": report.cross_residual,
            "pass": report.passed,
        },
    }
    if not report.passed:
        _dump(result, out)
        err.write(f"environment fails {report.mode} Meta Data\n")
        return EXIT_NUMERIC
    value = evaluate(seq, env, base.atom_grades() or None).value
    result["value"] = value
    _dump(result, out)
    err.write(f"{result['sequent']} evaluates to {value:.12g}\n")
    return EXIT_OK


def _cmd_dual(args, out, err) -> int:
    decls = DeclarationSet.default()
    if args.preamble:
        decls = decls.merge(parse_env_block(_read(args.preamble)))
    seq = parse_sequent(args.sequent, decls)
    if args.kind == "star":
        dual = star_dual(seq)
    elif args.kind == "perp":
        dual = perp_dual(seq)
    else:
        dual = perp_prime_dual(seq, decls)
    _dump({"input": render(seq, decls), "kind": args.kind, "dual": render(dual, decls)}, out)
    err.write(f"{render(dual, decls)}\n")
    return EXIT_OK


def _cmd_lattice(args, out, err) -> int:
    env = _load_env(args.env)[1] if args.env else None
    env2 = _load_env(args.env2)[1] if args.env2 else None
    lat = build(args.builder, env, env2)
    payload = {
        "lattice": lat.name,
        "elements": list(lat.elements),
        "covers": [list(c) for c in lat.covers()],
    }
    failed = False
    if args.laws or args.expect:
        report = check_laws(lat)
        payload["laws"] = report.to_dict()["laws"]
        for law, result in report.laws.items():
            verdict = "pass" if result.passed else f"fail {list(result.witness)}"
            err.write(f"{lat.name} {law}: {verdict}\n")
        failed = any(not r.passed for r in report.laws.values())
    if args.dot:
        Path(args.dot).write_text(hasse_dot(lat), encoding="utf-8")
    _dump(payload, out)
    return EXIT_REJECTED if args.expect == "pass" and failed else EXIT_OK


def _cmd_replay(args, out, err) -> int:
    names = corpus_names() if args.name == "all" else [args.name]
    reports = [replay_named(n) for n in names]
    for r in reports:
        mark = "ok" if r.expected == r.verdict else "MISMATCH"
        err.write(f"{r.name}: {r.verdict} (expected {r.expected}) {mark}\n")
    if len(reports) == 1:
        _dump(reports[0].to_dict(), out)
    else:
        _dump({"reports": [r.to_dict() for r in reports]}, out)
    return EXIT_OK if all(r.expected == r.verdict for r in reports) else EXIT_REJECTED


def _cmd_corpus_list(args, out, err) -> int:
    entries = load_corpus()
    _dump([
        {"name": n, "ruleset": entries[n].ruleset, "expected": EXPECTED.get(n)}
        for n in corpus_names()
    ], out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lq", description="Graded sequent calculi for qubits.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="check the proofs of a script")
    p.add_argument("script")
    p.add_argument("--ruleset", help="override the ruleset declared by each proof")
    p.add_argument("--proof", help="check only the named proof")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("eval", help="evaluate a two-sided sequent")
    p.add_argument("sequent")
    p.add_argument("--env", required=True, help="file of bind and md statements")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("dual", help="compute a dual sequent")
    p.add_argument("sequent")
    p.add_argument("--kind", required=True, choices=("star", "perp", "perpprime"))
    p.add_argument("--preamble", help="file of declarations for atoms, grades and qubits")
    p.set_defaults(func=_cmd_dual)

    p = sub.add_parser("lattice", help="build a lattice and audit its laws")
    p.add_argument("builder", choices=BUILDERS)
    p.add_argument("--env")
    p.add_argument("--env2", help="second environment for l2q4")
    p.add_argument("--laws", action="store_true")
    p.add_argument("--dot", help="write the Hasse diagram to this path")
    p.add_argument("--expect", choices=("pass",), help="exit 1 unless every law passes")
    p.set_defaults(func=_cmd_lattice)

    p = sub.add_parser("replay", help="replay a built-in corpus entry or all of them")
    p.add_argument("name")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("corpus-list", help="list the built-in corpus")
    p.set_defaults(func=_cmd_corpus_list)
    return parser


def run(argv: Sequence[str], stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    try:
        args = build_parser().parse_args(list(argv))
        return args.func(args, out, err)
    except _UsageExit as exc:
        err.write(f"lq: {exc}\n")
        return EXIT_USAGE
    except NumericError as exc:
        err.write(f"lq: {exc}\n")
        return EXIT_NUMERIC
    except LqError as exc:
        err.write(f"lq: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))
