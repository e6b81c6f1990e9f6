"""The built-in proof corpus and its expected verdicts."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .calculus import CheckReport, check_derivation
from .errors import UsageError
from .syntax import DeclarationSet, Derivation, parse_script

EXPECTED = {
    "qubit_theorem": "accepted",
    "at_noncommutativity_via_exchange": "rejected",
    "at_commutativity_with_exchange": "accepted",
    "bell_self_entanglement": "accepted",
    "cut_over_entanglement": "accepted",
    "epr_rule": "accepted",
    "epr_from_cut": "rejected",
    "epr_in_context": "rejected",
    "at_idempotence_contraction": "rejected",
    "at_idempotence_with_contraction": "accepted",
    "at_idempotence_weakening": "rejected",
    "at_idempotence_with_weakening": "accepted",
}


def corpus_files() -> list[str]:
    root = resources.files("lq").joinpath("proofs")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".lq"))


def corpus_text(filename: str) -> str:
    return resources.files("lq").joinpath("proofs").joinpath(filename).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load_corpus() -> dict[str, Derivation]:
    entries: dict[str, Derivation] = {}
    for filename in corpus_files():
        _, derivations = parse_script(corpus_text(filename))
        for d in derivations:
            if d.name in entries:
                raise UsageError(f"duplicate corpus entry {d.name!r}")
            entries[d.name] = d
    return entries


def corpus_names() -> list[str]:
    return sorted(load_corpus())


def replay_named(name: str) -> CheckReport:
    """Check a corpus entry under its declared ruleset against its expected verdict."""
    entries = load_corpus()
    if name not in entries:
        raise UsageError(f"unknown corpus entry {name!r}")
    d = entries[name]
    report = check_derivation(d.ruleset, d)
    return CheckReport(
        name=report.name,
        ruleset=report.ruleset,
        verdict=report.verdict,
        nodes=report.nodes,
        first_failure=report.first_failure,
        root=report.root,
        root_evaluation=report.root_evaluation,
        expected=EXPECTED.get(name),
    )


def corpus_decls(name: str) -> DeclarationSet:
    return load_corpus()[name].decls
