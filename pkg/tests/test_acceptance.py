"""Acceptance criteria 1 to 11, each reported as one PASS or FAIL line.

Random samples come from a seeded generator so every run checks the same
1000 cases. Tolerances are 1e-9 throughout.
"""

from __future__ import annotations

import cmath
import itertools
import math
import random

from lq.calculus import check_derivation
from lq.corpus import corpus_files, corpus_text, load_corpus, replay_named
from lq.evaluation import T_NORMS, GradeEnv, evaluate, h_combine, t_norm
from lq.gates import exact_sqrt_not_squared_is_not, gate_apply
from lq.hilbert import StateVector, cut_probability, from_bloch, interpret_state, measure, to_bloch
from lq.lattice import build_l2q4, build_lm2, build_lq2, build_proj2, build_proj_closure, check_laws
from lq.search import Exhausted, bounded_search
from lq.syntax import (
    And,
    Atom,
    CoImplies,
    DeclarationSet,
    Ent,
    EntDual,
    GradedAnd,
    GradedOr,
    GradeRef,
    Implies,
    Not,
    Or,
    Par,
    Times,
    parse_formula,
    parse_script,
    parse_sequent,
    qubit,
    render,
    render_script,
)

TOL = 1e-9
SAMPLES = 1000
SEED = 20240611

RESULTS: dict[int, tuple[bool, str]] = {}


def report(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def _norm_env(rng: random.Random, mode: str) -> GradeEnv:
    t = rng.uniform(0, math.pi / 2)
    a = rng.uniform(0, 2 * math.pi)
    if mode == "strict":
        b = a + rng.choice((1, -1)) * math.pi / 2
    else:
        b = rng.uniform(0, 2 * math.pi)
    return GradeEnv({"z0": math.cos(t) * cmath.exp(1j * a), "z1": math.sin(t) * cmath.exp(1j * b)}, mode)


def test_criterion_01_qubit_theorem():
    r = replay_named("qubit_theorem")
    ok = r.verdict == "accepted" and r.ruleset == "Lq" and abs(r.root_evaluation - 1.0) <= TOL
    report(1, ok, f"verdict={r.verdict} ruleset={r.ruleset} root={r.root_evaluation!r}")


def _no_weakening_variants():
    flags = ("exchange", "contraction", "left-contexts", "right-contexts")
    for k in range(len(flags) + 1):
        for chosen in itertools.combinations(flags, k):
            yield "+".join(("L2q",) + chosen)


def test_criterion_02_negative_corpus():
    corpus = load_corpus()
    problems = []
    for name, rule, flag in (("at_idempotence_contraction", "contr-r", "contraction"),
                             ("at_idempotence_weakening", "weak-r", "weakening")):
        r = check_derivation("L2q", corpus[name])
        named = {n.rule for n in r.failures}
        if r.verdict != "rejected" or named != {rule}:
            problems.append(f"{name} under L2q: {r.verdict} {sorted(named)}")
        if not check_derivation(f"L2q+{flag}", corpus[name]).accepted:
            problems.append(f"{name} under L2q+{flag} not accepted")
    variants = list(_no_weakening_variants())
    for name in ("epr_from_cut", "epr_in_context"):
        for rs in variants:
            if check_derivation(rs, corpus[name]).accepted:
                problems.append(f"{name} accepted under {rs}")
    report(2, not problems, "; ".join(problems) or f"structural steps named; cut trees rejected under {len(variants)} variants")


def test_criterion_03_commutativity():
    corpus = load_corpus()
    bell = check_derivation("L2q", corpus["bell_self_entanglement"]).verdict
    plain = check_derivation("L2q", corpus["at_noncommutativity_via_exchange"]).verdict
    exch = check_derivation("L2q+exchange", corpus["at_noncommutativity_via_exchange"]).verdict
    ok = (bell, plain, exch) == ("accepted", "rejected", "accepted")
    report(3, ok, f"self-entanglement={bell} swap/L2q={plain} swap/L2q+exchange={exch}")


def test_criterion_04_gluing_normalization_and_phase():
    rng = random.Random(SEED + 4)
    gamma = parse_sequent("p0, p1 |- p0, p1")
    worst = 0.0
    for _ in range(SAMPLES):
        env = _norm_env(rng, "strict")
        v = evaluate(gamma, env).value
        shifted = evaluate(gamma, env.scaled(cmath.exp(1j * rng.uniform(0, 2 * math.pi)))).value
        worst = max(worst, abs(v - 1.0), abs(shifted - v))
    report(4, worst <= TOL, f"max deviation {worst:.3e} over {SAMPLES} strict envs")


def test_criterion_05_cut_is_measurement():
    rng = random.Random(SEED + 5)
    qubit_formula = parse_formula("p0 &[z0,z1] p1")
    worst = 0.0
    for _ in range(SAMPLES):
        env = _norm_env(rng, "norm")
        state = interpret_state(qubit_formula, env)
        for i in (0, 1):
            p = measure(state, i)[0] if abs(state.amplitudes[i]) ** 2 > TOL else abs(state.amplitudes[i]) ** 2
            worst = max(worst, abs(cut_probability(i, env) - p))
    report(5, worst <= TOL, f"max deviation {worst:.3e} over {SAMPLES} norm envs")


def test_criterion_06_lattice_law_matrix():
    cat = GradeEnv({"z0": 1 / math.sqrt(2), "z1": 1 / math.sqrt(2)})
    problems = []
    proj2 = check_laws(build_proj2())
    if not all(r.passed for r in proj2.laws.values()):
        problems.append("proj2 not all-pass")
    d = check_laws(build_proj_closure())["distributive"]
    if d.passed or (d.lhs, d.rhs) != ("P0", "0"):
        problems.append(f"proj_closure distributive {d}")
    lq2 = check_laws(build_lq2(cat))
    if not all(lq2[law].passed for law in ("orthomodular", "modular", "distributive")):
        problems.append("lq2 law failure")
    d = check_laws(build_lm2(cat))["distributive"]
    if (d.passed, d.witness, d.lhs, d.rhs) != (False, ("P0", "O0", "O1"), "P0", "O0"):
        problems.append(f"lm2 distributive {d}")
    d = check_laws(build_l2q4())["distributive"]
    if (d.passed, d.witness, d.lhs, d.rhs) != (False, ("O0", "O0'", "O1'"), "O0", "O0'"):
        problems.append(f"l2q4 distributive {d}")
    report(6, not problems, "; ".join(problems) or "all five lattices match the verdict table")


def test_criterion_07_gates():
    exact = all(exact_sqrt_not_squared_is_not(n) for n in (1, 2, 3))
    amps = [complex(z) for z in gate_apply("SQRT_NOT", StateVector.basis(0)).amplitudes]
    shown = amps == [complex(0.5, 0.5), complex(0.5, -0.5)]
    report(7, exact and shown, f"exact square={exact} amplitudes={amps}")


def test_criterion_08_t_norm_exclusion():
    values = {k: t_norm(k, 0.5, 0.5) for k in T_NORMS}
    h = h_combine(0.5, 0.5).value
    ok = all(v != 1.0 for v in values.values()) and h == 1.0
    report(8, ok, f"t-norms={values} h={h}")


def test_criterion_09_bounded_search():
    decls = DeclarationSet.default()
    first = bounded_search("L2q", parse_sequent("Q_A @ Q_A |- Q_A", decls), 8)
    second = bounded_search("L2q", parse_sequent("Q_A |- Q_A @ Q_A", decls), 8)
    found = bounded_search("L2q+weakening+contraction", parse_sequent("Q_A |- Q_A @ Q_A", decls), 8)
    ok = isinstance(first, Exhausted) and isinstance(second, Exhausted) and not isinstance(found, Exhausted)
    report(9, ok, f"L2q: {first}, {second}; with weakening+contraction: "
                  f"{'found' if not isinstance(found, Exhausted) else found}")


def test_criterion_10_bloch_roundtrip():
    rng = random.Random(SEED + 10)
    bad = 0
    for _ in range(SAMPLES):
        v = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(2)]
        n = math.sqrt(sum(abs(z) ** 2 for z in v))
        s = StateVector([z / n for z in v])
        if not from_bloch(to_bloch(s)).equal_up_to_phase(s, TOL):
            bad += 1
    report(10, bad == 0, f"{bad} failures over {SAMPLES} random qubits")


ATOM_NAMES = ("p0", "p1", "A", "B")
PLAIN = (And, Or, Times, Par, Implies, CoImplies)


def _random_formula(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        return Atom(rng.choice(ATOM_NAMES), rng.random() < 0.5)
    roll = rng.random()
    if roll < 0.45:
        return rng.choice(PLAIN)(_random_formula(rng, depth - 1), _random_formula(rng, depth - 1))
    if roll < 0.7:
        g0 = GradeRef(rng.choice(("z0", "z1")), rng.random() < 0.5)
        g1 = GradeRef(rng.choice(("z0", "z1")), rng.random() < 0.5)
        kind = rng.choice((GradedAnd, GradedOr))
        return kind(_random_formula(rng, depth - 1), _random_formula(rng, depth - 1), g0, g1)
    if roll < 0.85 or depth < 2:
        return Not(_random_formula(rng, depth - 1))

    def operand():
        a = Atom(rng.choice(ATOM_NAMES), rng.random() < 0.5)
        return qubit(Atom(a.name)) if rng.random() < 0.5 else a

    return rng.choice((Ent, EntDual))(operand(), operand())


def _depth(f) -> int:
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return 1 + _depth(f.operand)
    return 1 + max(_depth(f.left), _depth(f.right))


def test_criterion_11_parser_roundtrip():
    rng = random.Random(SEED + 11)
    decls = DeclarationSet.default()
    bad = []
    for _ in range(SAMPLES):
        f = _random_formula(rng, 6)
        assert _depth(f) <= 6
        if parse_formula(render(f, decls), decls) != f:
            bad.append(render(f, decls))
    unstable = []
    for filename in corpus_files():
        decls_, ds = parse_script(corpus_text(filename))
        once = render_script(decls_, ds)
        decls2, ds2 = parse_script(once)
        if ds2 != ds or render_script(decls2, ds2) != once:
            unstable.append(filename)
    ok = not bad and not unstable
    report(11, ok, f"{len(bad)} AST failures over {SAMPLES}; unstable corpus files {unstable}")

