"""Rulesets, rule schemas and the derivation checker.

Every rule is a function that rebuilds the conclusion of one application
from its premises. When a schema leaves a choice open (which disjunct was
introduced, which grades label a graded connective, where a weakened
formula sits) the choice is read from ``params`` or, when checking, from
the conclusion the derivation claims. The rebuilt sequent is then compared
with the claim, so a choice taken from the claim can never make a wrong
step pass.

Contexts are concrete formula lists. Without the context flags the side of
the principal formula must contain that formula alone. With
``left_contexts`` a list may precede it in the antecedent, and with
``right_contexts`` a list may follow it in the consequent.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .config import tolerance
from .errors import ParseError, RuleError, RulesetError
from .evaluation import GradeEnv, h_combine, md_check
from .syntax import (
    And,
    Atom,
    CoImplies,
    DeclarationSet,
    Derivation,
    Ent,
    EntDual,
    Evaluation,
    GradedAnd,
    GradedOr,
    GradedSequent,
    GradeExpr,
    GradeRef,
    Implies,
    Label,
    Not,
    Or,
    Par,
    Times,
    qubit,
    render,
    valid_ent_operand,
)

# ---------------------------------------------------------------------------
# Rulesets

B_RULES = frozenset({
    "and-form", "and-refl", "or-form", "or-refl", "neg-form", "neg-refl",
    "imp-form", "imp-refl", "coimp-form", "coimp-refl",
    "times-form", "times-refl", "par-form", "par-refl", "id-axiom",
})
LQ_RULES = frozenset({
    "gand-form", "gand-refl", "gand-axiom", "gor-form", "gor-refl",
    "gor-axiom", "neg-form", "neg-refl", "id-axiom",
})
L2Q_RULES = frozenset({
    "and-form", "and-refl", "or-form", "or-refl", "neg-form", "neg-refl",
    "times-form", "times-refl", "par-form", "par-refl",
    "at-form", "at-refl", "at-axiom", "sect-form", "sect-refl", "id-axiom",
})

STRUCTURAL = {
    "exch-l": "exchange", "exch-r": "exchange",
    "weak-l": "weakening", "weak-r": "weakening",
    "contr-l": "contraction", "contr-r": "contraction",
}
META = {"qcut": "quantum-cut", "cut": "classical-cut", "epr": "epr"}
FLAG_NAMES = ("exchange", "weakening", "contraction", "left-contexts", "right-contexts")


@dataclass(frozen=True)
class RuleSet:
    name: str
    rules: frozenset
    exchange: bool = False
    weakening: bool = False
    contraction: bool = False
    left_contexts: bool = False
    right_contexts: bool = False
    meta_rules: frozenset = frozenset()

    def allows(self, rule: str) -> bool:
        if rule == "assume":
            return True
        if rule in STRUCTURAL:
            return getattr(self, STRUCTURAL[rule])
        if rule in META:
            return META[rule] in self.meta_rules
        return rule in self.rules

    def flags(self) -> dict[str, bool]:
        return {
            "exchange": self.exchange,
            "weakening": self.weakening,
            "contraction": self.contraction,
            "left-contexts": self.left_contexts,
            "right-contexts": self.right_contexts,
        }


def _base(name: str) -> RuleSet:
    if name == "B":
        return RuleSet("B", B_RULES, exchange=True, meta_rules=frozenset({"classical-cut"}))
    if name == "Lq":
        return RuleSet("Lq", LQ_RULES, meta_rules=frozenset({"quantum-cut"}))
    if name == "L2q":
        return RuleSet("L2q", L2Q_RULES, meta_rules=frozenset({"classical-cut", "epr"}))
    cube = {"L": "left-contexts", "R": "right-contexts", "S": "structural"}
    if name.startswith("B") and len(name) > 1 and all(c in cube for c in name[1:]) \
            and len(set(name[1:])) == len(name) - 1:
        flags = {}
        for c in name[1:]:
            if c == "S":
                flags["weakening"] = flags["contraction"] = True
            else:
                flags[cube[c]] = True
        return _with_flags(_base("B"), flags, name)
    raise RulesetError(f"unknown ruleset {name!r}")


def _with_flags(rs: RuleSet, flags: Mapping[str, bool], name: str) -> RuleSet:
    values = rs.flags()
    for key, value in flags.items():
        if key not in FLAG_NAMES:
            raise RulesetError(f"unknown flag {key!r}")
        values[key] = bool(value)
    return RuleSet(
        name, rs.rules,
        exchange=values["exchange"],
        weakening=values["weakening"],
        contraction=values["contraction"],
        left_contexts=values["left-contexts"],
        right_contexts=values["right-contexts"],
        meta_rules=rs.meta_rules,
    )


PRESETS = ("B", "BL", "BR", "BLR", "BS", "BSL", "BSR", "BSRL", "Lq", "L2q")


def make_ruleset(spec) -> RuleSet:
    """Build a ruleset from a preset name or a flag mapping.

    Strings may append flags to a preset: ``"L2q+exchange"`` or
    ``"L2q+weakening+contraction"``. A mapping needs a ``base`` key and any
    of the five flag names with boolean values.
    """
    if isinstance(spec, RuleSet):
        return spec
    if isinstance(spec, Mapping):
        spec = dict(spec)
        base = _base(spec.pop("base", "B"))
        name = base.name + "".join(f"+{k}" for k, v in sorted(spec.items()) if v)
        return _with_flags(base, spec, name)
    if not isinstance(spec, str) or not spec:
        raise RulesetError(f"bad ruleset spec {spec!r}")
    head, *extra = spec.split("+")
    base = _base(head)
    if not extra:
        return base
    for flag in extra:
        if flag not in FLAG_NAMES:
            raise RulesetError(f"unknown flag {flag!r} in {spec!r}")
    return _with_flags(base, {f: True for f in extra}, spec)


# ---------------------------------------------------------------------------
# Rule engine


@dataclass
class _Ctx:
    ruleset: RuleSet
    decls: DeclarationSet
    env: Optional[GradeEnv]
    md_mode: Optional[str]
    tol: float
    notes: list = field(default_factory=list)


def _fail(message: str):
    raise RuleError("shape-mismatch", message)


def _label_fail(message: str):
    raise RuleError("label-mismatch", message)


def _arity(prem: Sequence, *counts: int):
    if len(prem) not in counts:
        want = " or ".join(str(c) for c in counts)
        _fail(f"expected {want} premise(s), got {len(prem)}")


def _one(side: tuple, where: str):
    if len(side) != 1:
        _fail(f"{where} must hold exactly one formula")
    return side[0]


def _mk(ante, cons, label) -> GradedSequent:
    try:
        return GradedSequent(tuple(ante), tuple(cons), label)
    except ParseError as exc:
        _label_fail(str(exc))


def labels_equal(a: Label, b: Label, tol: float) -> bool:
    if isinstance(a, Evaluation) and isinstance(b, Evaluation):
        return abs(a.value - b.value) <= tol
    return a == b


def _shared_label(prem: Sequence[GradedSequent], ctx: _Ctx) -> Label:
    if not prem:
        return None
    first = prem[0].label
    for p in prem[1:]:
        if not labels_equal(first, p.label, ctx.tol):
            _label_fail("premises carry different labels")
    return first


def _choice(params: Mapping, key: str, target: Optional[GradedSequent], pick: Callable):
    if key in params:
        return params[key]
    if target is None:
        _fail(f"parameter {key!r} is required without a target conclusion")
    return pick(target)


def _principal(target: GradedSequent, side: str, kind) -> object:
    seq = target.antecedent if side == "left" else target.consequent
    f = _one(seq, "the principal side of the conclusion")
    if not isinstance(f, kind):
        _fail(f"conclusion does not introduce {kind.__name__}")
    return f


def _atom(f, where: str) -> Atom:
    if not isinstance(f, Atom):
        _fail(f"{where} must be an atom")
    return f


def _grade_value(ref: GradeRef, ctx: _Ctx) -> Optional[complex]:
    if ctx.env is None:
        return None
    if ref.symbol not in ctx.env.symbols:
        return None
    return ctx.env.value(ref)


def _check_axiom_value(label: Label, expected: Optional[float], ctx: _Ctx, what: str):
    if isinstance(label, GradeExpr):
        _label_fail("axioms are two-sided and take no grade label")
    if isinstance(label, Evaluation) and expected is not None:
        if abs(label.value - expected) > ctx.tol:
            _label_fail(f"{what}: label {label.value!r} but the grade gives {expected!r}")
        ctx.notes.append(f"{what} = {expected:.12g}")


def _atom_value(atom: Atom, ctx: _Ctx) -> Optional[float]:
    grade = ctx.decls.atom_grade(atom.name)
    if grade is None or atom.negated:
        return None
    z = _grade_value(GradeRef(grade), ctx)
    return None if z is None else abs(z) ** 2


# -- axioms -----------------------------------------------------------------

def r_assume(prem, target, params, ctx):
    _arity(prem, 0)
    if target is None:
        _fail("an assumption needs its sequent")
    ctx.notes.append("assumed premise")
    return target


def r_id_axiom(prem, target, params, ctx):
    _arity(prem, 0)
    f = _choice(params, "formula", target, lambda t: _one(t.antecedent, "antecedent"))
    label = params.get("label", target.label if target is not None else None)
    expected = None
    if isinstance(f, Atom):
        expected = _atom_value(f, ctx)
    elif isinstance(f, GradedAnd):
        z0, z1 = _grade_value(f.g0, ctx), _grade_value(f.g1, ctx)
        if z0 is not None and z1 is not None:
            expected = abs(z0 + z1) ** 2
    _check_axiom_value(label, expected, ctx, "identity value")
    return _mk((f,), (f,), label)


def _graded_axiom(kind, prem, target, params, ctx):
    _arity(prem, 0)
    left_side = kind is GradedAnd
    g = _choice(params, "formula", target,
                lambda t: _principal(t, "left" if left_side else "right", kind))
    operand = _choice(params, "operand", target,
                      lambda t: _one(t.consequent if left_side else t.antecedent, "component side"))
    if operand == g.left:
        ref = g.g0
    elif operand == g.right:
        ref = g.g1
    else:
        _fail("component is not an operand of the graded connective")
    label = params.get("label", target.label if target is not None else None)
    z = _grade_value(ref, ctx)
    _check_axiom_value(label, None if z is None else abs(z) ** 2, ctx, "reflection value")
    if left_side:
        return _mk((g,), (operand,), label)
    return _mk((operand,), (g,), label)


def r_gand_axiom(prem, target, params, ctx):
    return _graded_axiom(GradedAnd, prem, target, params, ctx)


def r_gor_axiom(prem, target, params, ctx):
    return _graded_axiom(GradedOr, prem, target, params, ctx)


def r_at_axiom(prem, target, params, ctx):
    _arity(prem, 0)
    ent = _choice(params, "formula", target, lambda t: _principal(t, "left", Ent))
    if not all(isinstance(x, And) for x in (ent.left, ent.right)):
        _fail("reflection axiom of @ needs qubit operands")
    options = [(ent.left.left, ent.right.left), (ent.left.right, ent.right.right)]
    if "negated" in params:
        cons = options[1 if params["negated"] else 0]
    elif target is not None:
        if target.consequent not in options:
            _fail("consequent must list matching components of both qubits")
        cons = target.consequent
    else:
        cons = options[0]
    label = params.get("label", target.label if target is not None else None)
    if label is not None:
        _label_fail("the entanglement axioms are unlabelled")
    return _mk((ent,), cons, None)


# -- Lq graded connectives -----------------------------------------------------

def _grades(params, target, side, kind):
    return _choice(params, "grades", target,
                   lambda t: (lambda f: (f.g0, f.g1))(_principal(t, side, kind)))


def _combine(l0: Label, l1: Label, grades: tuple, ctx: _Ctx) -> Label:
    if l0 is None and l1 is None:
        return None
    if not (isinstance(l0, Evaluation) and isinstance(l1, Evaluation)):
        _label_fail("both premises need evaluation labels")
    v0, v1 = l0.value, l1.value
    if ctx.md_mode in ("norm", "strict"):
        residual = abs(v0 + v1 - 1.0)
        ctx.notes.append(f"MD v0+v1=1 residual {residual:.3g}")
        if residual > ctx.tol:
            raise RuleError("side-condition", f"Meta Data fails: v0+v1 = {v0 + v1!r}")
        if ctx.env is not None and len(ctx.env.symbols) >= 2:
            report = md_check(ctx.env, (grades[0].symbol, grades[1].symbol)) \
                if all(g.symbol in ctx.env.symbols for g in grades) else md_check(ctx.env)
            ctx.notes.append(
                f"MD[{report.mode}] norm residual {report.norm_residual:.3g}, "
                f"cross residual {report.cross_residual:.3g}"
            )
            if not report.passed:
                raise RuleError("side-condition", f"grade environment fails {report.mode} Meta Data")
    for v, g in zip((v0, v1), grades):
        z = _grade_value(g, ctx)
        if z is not None and abs(abs(z) ** 2 - v) > ctx.tol:
            raise RuleError("side-condition", f"label {v!r} differs from |{g.symbol}|^2 = {abs(z) ** 2!r}")
    h = h_combine(v0, v1)
    return Evaluation(min(h.value, 1.0))


def r_gand_form(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.antecedent != p1.antecedent:
        _fail("premises must share the antecedent")
    phi = _one(p0.consequent, "first premise consequent")
    psi = _one(p1.consequent, "second premise consequent")
    g0, g1 = _grades(params, target, "right", GradedAnd)
    label = _combine(p0.label, p1.label, (g0, g1), ctx)
    return _mk(p0.antecedent, (GradedAnd(phi, psi, g0, g1),), label)


def r_gor_form(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.consequent != p1.consequent:
        _fail("premises must share the consequent")
    phi = _one(p0.antecedent, "first premise antecedent")
    psi = _one(p1.antecedent, "second premise antecedent")
    g0, g1 = _grades(params, target, "left", GradedOr)
    label = _combine(p0.label, p1.label, (g0, g1), ctx)
    return _mk((GradedOr(phi, psi, g0, g1),), p0.consequent, label)


def _refl_left(kind, prem, target, params, ctx):
    """One-premise rule building ``kind`` on the left from one operand."""
    _arity(prem, 1)
    (p,) = prem
    f = _choice(params, "formula", target, lambda t: _principal(t, "left", kind))
    if not isinstance(f, kind):
        _fail(f"formula is not a {kind.__name__}")
    a = _one(p.antecedent, "premise antecedent")
    if a not in (f.left, f.right):
        _fail("premise antecedent is not an operand of the introduced formula")
    return _mk((f,), p.consequent, p.label)


def _refl_right(kind, prem, target, params, ctx):
    _arity(prem, 1)
    (p,) = prem
    f = _choice(params, "formula", target, lambda t: _principal(t, "right", kind))
    if not isinstance(f, kind):
        _fail(f"formula is not a {kind.__name__}")
    a = _one(p.consequent, "premise consequent")
    if a not in (f.left, f.right):
        _fail("premise consequent is not an operand of the introduced formula")
    return _mk(p.antecedent, (f,), p.label)


def r_gand_refl(prem, target, params, ctx):
    return _refl_left(GradedAnd, prem, target, params, ctx)


def r_gor_refl(prem, target, params, ctx):
    return _refl_right(GradedOr, prem, target, params, ctx)


def _swap_label(label: Label, atom, ctx: _Ctx, premise_conjugated: bool) -> Label:
    if label is None:
        return None
    if not isinstance(label, GradeExpr):
        _label_fail("negation rules take grade labels")
    grade = ctx.decls.atom_grade(atom.name) if isinstance(atom, Atom) else None
    if grade is not None:
        expect = GradeExpr.of(GradeRef(grade, premise_conjugated))
        if label != expect:
            _label_fail("premise grade does not match the negated atom")

    def swap(ref: GradeRef) -> GradeRef:
        partner = ctx.decls.partner(ref.symbol)
        if partner is None:
            _label_fail(f"grade {ref.symbol!r} has no partner")
        return GradeRef(partner, not ref.conjugated)

    return label.map_refs(swap)


def r_neg_form(prem, target, params, ctx):
    _arity(prem, 1)
    (p,) = prem
    if p.consequent:
        _fail("premise consequent must be empty")
    a = _one(p.antecedent, "premise antecedent")
    return _mk((), (Not(a),), _swap_label(p.label, a, ctx, True))


def r_neg_refl(prem, target, params, ctx):
    _arity(prem, 1)
    (p,) = prem
    if p.antecedent:
        _fail("premise antecedent must be empty")
    a = _one(p.consequent, "premise consequent")
    return _mk((Not(a),), (), _swap_label(p.label, a, ctx, False))


# -- Basic logic connectives ------------------------------------------------------

def r_and_form(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.antecedent != p1.antecedent:
        _fail("premises must share the antecedent")
    a = _one(p0.consequent, "first premise consequent")
    b = _one(p1.consequent, "second premise consequent")
    return _mk(p0.antecedent, (And(a, b),), _shared_label(prem, ctx))


def r_and_refl(prem, target, params, ctx):
    return _refl_left(And, prem, target, params, ctx)


def r_or_form(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.consequent != p1.consequent:
        _fail("premises must share the consequent")
    a = _one(p0.antecedent, "first premise antecedent")
    b = _one(p1.antecedent, "second premise antecedent")
    return _mk((Or(a, b),), p0.consequent, _shared_label(prem, ctx))


def r_or_refl(prem, target, params, ctx):
    return _refl_right(Or, prem, target, params, ctx)


def r_imp_form(prem, target, params, ctx):
    _arity(prem, 1)
    (p,) = prem
    a = _one(p.antecedent, "premise antecedent")
    b = _one(p.consequent, "premise consequent")
    return _mk((), (Implies(a, b),), p.label)


def r_imp_refl(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.antecedent:
        _fail("first premise antecedent must be empty")
    a = _one(p0.consequent, "first premise consequent")
    b = _one(p1.antecedent, "second premise antecedent")
    return _mk((Implies(a, b),), p1.consequent, _shared_label(prem, ctx))


def r_coimp_form(prem, target, params, ctx):
    _arity(prem, 1)
    (p,) = prem
    y = _one(p.antecedent, "premise antecedent")
    x = _one(p.consequent, "premise consequent")
    return _mk((CoImplies(x, y),), (), p.label)


def r_coimp_refl(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.consequent:
        _fail("first premise consequent must be empty")
    x = _one(p0.antecedent, "first premise antecedent")
    y = _one(p1.consequent, "second premise consequent")
    return _mk(p1.antecedent, (CoImplies(x, y),), _shared_label(prem, ctx))


def r_times_form(prem, target, params, ctx):
    _arity(prem, 1)
    (p,) = prem
    if len(p.antecedent) != 2:
        _fail("premise antecedent must hold exactly two formulas")
    a, b = p.antecedent
    return _mk((Times(a, b),), p.consequent, p.label)


def r_times_refl(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    a = _one(p0.consequent, "first premise consequent")
    b = _one(p1.consequent, "second premise consequent")
    return _mk(p0.antecedent + p1.antecedent, (Times(a, b),), _shared_label(prem, ctx))


def r_par_form(prem, target, params, ctx):
    _arity(prem, 1)
    (p,) = prem
    if len(p.consequent) != 2:
        _fail("premise consequent must hold exactly two formulas")
    a, b = p.consequent
    return _mk(p.antecedent, (Par(a, b),), p.label)


def r_par_refl(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    a = _one(p0.antecedent, "first premise antecedent")
    b = _one(p1.antecedent, "second premise antecedent")
    return _mk((Par(a, b),), p0.consequent + p1.consequent, _shared_label(prem, ctx))


# -- entanglement ------------------------------------------------------------------

def r_at_form(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.antecedent != p1.antecedent:
        _fail("premises must share the antecedent")
    if len(p0.consequent) != 2 or len(p1.consequent) != 2:
        _fail("premise consequents must hold exactly two formulas")
    a = _atom(p0.consequent[0], "first component")
    b = _atom(p0.consequent[1], "second component")
    if p1.consequent != (a.negate(), b.negate()):
        _fail("second premise must list the primitive negations of the first")
    return _mk(p0.antecedent, (Ent(qubit(a), qubit(b)),), _shared_label(prem, ctx))


def r_at_refl(prem, target, params, ctx):
    _arity(prem, 2, 4)
    label = _shared_label(prem, ctx)
    x = _atom(_one(prem[0].antecedent, "first premise antecedent"), "first premise antecedent")
    y = _atom(_one(prem[1].antecedent, "second premise antecedent"), "second premise antecedent")
    delta = prem[0].consequent + prem[1].consequent
    if len(prem) == 4:
        if prem[2].antecedent != (x.negate(),) or prem[3].antecedent != (y.negate(),):
            _fail("third and fourth premises must start from the negated components")
        if prem[2].consequent != prem[0].consequent or prem[3].consequent != prem[1].consequent:
            _fail("negated-component premises must share the consequents")
        return _mk((Ent(qubit(x), qubit(y)),), delta, label)
    # Two premises: either the plain components (A, B) or the negated ones
    # (A^, B^) of the two qubits.
    plain = Ent(qubit(x), qubit(y))
    negated = Ent(qubit(x.negate()), qubit(y.negate()))
    if "negated" in params:
        ent = negated if params["negated"] else plain
    elif target is not None and target.antecedent == (negated,):
        ent = negated
    else:
        ent = plain
    return _mk((ent,), delta, label)


def r_sect_form(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if p0.consequent != p1.consequent:
        _fail("premises must share the consequent")
    if len(p0.antecedent) != 2:
        _fail("premise antecedents must hold exactly two formulas")
    a = _atom(p0.antecedent[0], "first component")
    b = _atom(p0.antecedent[1], "second component")
    if p1.antecedent != (a.negate(), b.negate()):
        _fail("second premise must list the primitive negations of the first")
    return _mk((EntDual(qubit(a), qubit(b)),), p0.consequent, _shared_label(prem, ctx))


def r_sect_refl(prem, target, params, ctx):
    _arity(prem, 4)
    p0, p1, p2, p3 = prem
    a = _atom(_one(p0.consequent, "first premise consequent"), "first component")
    b = _atom(_one(p1.consequent, "second premise consequent"), "second component")
    if p2.consequent != (a.negate(),) or p3.consequent != (b.negate(),):
        _fail("third and fourth premises must assert the negated components")
    if p2.antecedent != p0.antecedent or p3.antecedent != p1.antecedent:
        _fail("negated-component premises must share the antecedents")
    return _mk(p0.antecedent + p1.antecedent, (EntDual(qubit(a), qubit(b)),),
               _shared_label(prem, ctx))


# -- cuts and EPR ---------------------------------------------------------------------

def r_qcut(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    phi = _one(p0.consequent, "first premise consequent")
    if p1.antecedent != (phi,):
        _fail("second premise must start from the cut formula alone")
    if not labels_equal(p0.label, p1.label, ctx.tol):
        _label_fail("quantum cut needs equal evaluations on both premises")
    ctx.notes.append("cut evaluation preserved")
    return _mk(p0.antecedent, p1.consequent, p0.label)


def r_cut(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    if not p0.consequent or not p1.antecedent:
        _fail("cut needs a formula on the right of the first premise and the left of the second")
    a = p0.consequent[-1]
    if p1.antecedent[0] != a:
        _fail("cut formulas differ")
    rest_right = p0.consequent[:-1]
    rest_left = p1.antecedent[1:]
    if rest_right and not ctx.ruleset.right_contexts:
        _fail("cut formula is not alone on the right (visibility)")
    if rest_left and not ctx.ruleset.left_contexts:
        _fail("cut formula is not alone on the left (visibility)")
    return _mk(p0.antecedent + rest_left, rest_right + p1.consequent, _shared_label(prem, ctx))


def r_epr(prem, target, params, ctx):
    _arity(prem, 2)
    p0, p1 = prem
    ent = _one(p0.consequent, "first premise consequent")
    if not isinstance(ent, Ent):
        _fail("first premise must assert an entangled formula")
    if p1.antecedent != (ent.left,):
        _fail("second premise must start from the first qubit")
    comp = _one(p1.consequent, "second premise consequent")
    result = Ent(comp, ent.right)
    if not valid_ent_operand(comp):
        _fail("component is not an atom")
    return _mk(p0.antecedent, (result,), _shared_label(prem, ctx))


def r_epr_ctx(prem, target, params, ctx):
    raise RuleError("not-a-rule", "EPR with side contexts is not a rule of any calculus")


# -- structural rules ---------------------------------------------------------------

def _side(seq: GradedSequent, right: bool) -> tuple:
    return seq.consequent if right else seq.antecedent


def _rebuild(seq: GradedSequent, right: bool, items: tuple) -> GradedSequent:
    if right:
        return _mk(seq.antecedent, items, seq.label)
    return _mk(items, seq.consequent, seq.label)


def _candidates_exchange(items: tuple):
    for k in range(len(items) - 1):
        yield k, items[:k] + (items[k + 1], items[k]) + items[k + 2:]


def _candidates_contract(items: tuple):
    for k in range(len(items) - 1):
        if items[k] == items[k + 1]:
            yield k, items[:k + 1] + items[k + 2:]


def _structural(kind: str, right: bool):
    def rule(prem, target, params, ctx):
        _arity(prem, 1)
        (p,) = prem
        items = _side(p, right)
        if kind == "weak":
            if "formula" in params:
                k = params.get("index", 0 if right else len(items))
                return _rebuild(p, right, items[:k] + (params["formula"],) + items[k:])
            if target is None:
                _fail("weakening needs the added formula")
            want = _side(target, right)
            for k in range(len(want)):
                if want[:k] + want[k + 1:] == items:
                    return _rebuild(p, right, want)
            _fail("conclusion is not the premise plus one formula")
        gen = _candidates_exchange(items) if kind == "exch" else _candidates_contract(items)
        options = list(gen)
        if not options:
            _fail(f"nothing to {'exchange' if kind == 'exch' else 'contract'}")
        if "index" in params:
            for k, out in options:
                if k == params["index"]:
                    return _rebuild(p, right, out)
            _fail("index does not name an applicable position")
        if target is not None:
            want = _side(target, right)
            for _, out in options:
                if out == want:
                    return _rebuild(p, right, out)
        return _rebuild(p, right, options[0][1])

    return rule


# -- registry ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleSpec:
    fn: Callable
    side: Optional[str] = None   # side of the principal formula
    mode: Optional[str] = None   # additive or multiplicative context split


RULES: dict[str, RuleSpec] = {
    "assume": RuleSpec(r_assume),
    "id-axiom": RuleSpec(r_id_axiom),
    "gand-axiom": RuleSpec(r_gand_axiom),
    "gor-axiom": RuleSpec(r_gor_axiom),
    "at-axiom": RuleSpec(r_at_axiom),
    "gand-form": RuleSpec(r_gand_form, "right", "additive"),
    "gand-refl": RuleSpec(r_gand_refl, "left", "additive"),
    "gor-form": RuleSpec(r_gor_form, "left", "additive"),
    "gor-refl": RuleSpec(r_gor_refl, "right", "additive"),
    "neg-form": RuleSpec(r_neg_form, "right", "additive"),
    "neg-refl": RuleSpec(r_neg_refl, "left", "additive"),
    "and-form": RuleSpec(r_and_form, "right", "additive"),
    "and-refl": RuleSpec(r_and_refl, "left", "additive"),
    "or-form": RuleSpec(r_or_form, "left", "additive"),
    "or-refl": RuleSpec(r_or_refl, "right", "additive"),
    "imp-form": RuleSpec(r_imp_form, "right", "additive"),
    "imp-refl": RuleSpec(r_imp_refl, "left", "additive"),
    "coimp-form": RuleSpec(r_coimp_form, "left", "additive"),
    "coimp-refl": RuleSpec(r_coimp_refl, "right", "additive"),
    "times-form": RuleSpec(r_times_form, "left", "additive"),
    "times-refl": RuleSpec(r_times_refl, "right", "multiplicative"),
    "par-form": RuleSpec(r_par_form, "right", "additive"),
    "par-refl": RuleSpec(r_par_refl, "left", "multiplicative"),
    "at-form": RuleSpec(r_at_form, "right", "additive"),
    "at-refl": RuleSpec(r_at_refl, "left", "multiplicative"),
    "sect-form": RuleSpec(r_sect_form, "left", "additive"),
    "sect-refl": RuleSpec(r_sect_refl),
    "qcut": RuleSpec(r_qcut),
    "cut": RuleSpec(r_cut),
    "epr": RuleSpec(r_epr),
    "epr-ctx": RuleSpec(r_epr_ctx),
    "exch-l": RuleSpec(_structural("exch", False)),
    "exch-r": RuleSpec(_structural("exch", True)),
    "weak-l": RuleSpec(_structural("weak", False)),
    "weak-r": RuleSpec(_structural("weak", True)),
    "contr-l": RuleSpec(_structural("contr", False)),
    "contr-r": RuleSpec(_structural("contr", True)),
}

RULE_IDS = tuple(RULES)
NOT_RULES = frozenset({"epr-ctx"})


def _strip(seq: GradedSequent, right: bool, context: tuple) -> Optional[GradedSequent]:
    items = _side(seq, right)
    n = len(context)
    if right:
        if n and items[len(items) - n:] != context:
            return None
        core = items[:len(items) - n]
    else:
        if items[:n] != context:
            return None
        core = items[n:]
    try:
        if right:
            return GradedSequent(seq.antecedent, core, seq.label)
        return GradedSequent(core, seq.consequent, seq.label)
    except ParseError:
        return None


def _splits(context: tuple, parts: int):
    if parts == 1:
        yield (context,)
        return
    for k in range(len(context) + 1):
        yield (context[:k], context[k:])


def _apply(rule: str, prem: Sequence[GradedSequent], target, params, ctx: _Ctx) -> GradedSequent:
    spec = RULES[rule]
    right = spec.side == "right"
    enabled = (spec.side == "left" and ctx.ruleset.left_contexts) or \
              (right and ctx.ruleset.right_contexts)
    context = ()
    if enabled and target is not None:
        side = _side(target, right)
        if len(side) > 1:
            context = side[1:] if right else side[:-1]
    if not context:
        return spec.fn(list(prem), target, params, ctx)
    core_target = _strip(target, right, context)
    parts = 2 if spec.mode == "multiplicative" and len(prem) == 2 else 1
    last_error: Optional[RuleError] = None
    for split in _splits(context, parts):
        if parts == 1:
            stripped = [_strip(p, right, context) for p in prem]
        else:
            stripped = [_strip(p, right, c) for p, c in zip(prem, split)]
        if any(s is None for s in stripped):
            continue
        try:
            core = spec.fn(stripped, core_target, params, ctx)
        except RuleError as exc:
            last_error = exc
            continue
        if right:
            out = _mk(core.antecedent, core.consequent + context, core.label)
        else:
            out = _mk(context + core.antecedent, core.consequent, core.label)
        if out == target or parts == 1:
            return out
    if last_error is not None:
        raise last_error
    _fail("premises do not carry the side context of the conclusion")


def _context_for(ruleset: RuleSet, decls: Optional[DeclarationSet], env: Optional[GradeEnv]) -> _Ctx:
    decls = decls or DeclarationSet.default()
    if env is None and decls.bindings:
        env = GradeEnv.from_decls(decls)
    md_mode = env.md_mode if env is not None else decls.md
    return _Ctx(ruleset, decls, env, md_mode, tolerance())


def apply_rule(
    ruleset,
    rule: str,
    premises: Sequence[GradedSequent],
    params: Optional[Mapping] = None,
    *,
    target: Optional[GradedSequent] = None,
    decls: Optional[DeclarationSet] = None,
    env: Optional[GradeEnv] = None,
) -> GradedSequent:
    """Rebuild the conclusion of ``rule`` applied to ``premises``.

    Raises :class:`RuleError` with code ``rule-absent`` when the ruleset
    does not contain the rule and ``shape-mismatch``, ``label-mismatch`` or
    ``side-condition`` when the premises do not fit the schema.
    """
    rs = make_ruleset(ruleset)
    if rule not in RULES:
        raise RuleError("not-a-rule", f"unknown rule {rule!r}")
    if rule in NOT_RULES:
        r_epr_ctx([], None, {}, None)
    if not rs.allows(rule):
        raise RuleError("rule-absent", f"rule not in ruleset: {rule} is not part of {rs.name}")
    ctx = _context_for(rs, decls, env)
    return _apply(rule, premises, target, dict(params or {}), ctx)


# ---------------------------------------------------------------------------
# Derivation checking


@dataclass(frozen=True)
class NodeDiagnostic:
    id: str
    rule: str
    status: str
    message: str
    side_conditions: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "rule": self.rule,
            "status": self.status,
            "message": self.message,
            "side_conditions": list(self.side_conditions),
        }


@dataclass(frozen=True)
class CheckReport:
    name: str
    ruleset: str
    verdict: str
    nodes: tuple[NodeDiagnostic, ...]
    first_failure: Optional[str]
    root: str
    root_evaluation: Optional[float]
    expected: Optional[str] = None

    @property
    def accepted(self) -> bool:
        return self.verdict == "accepted"

    @property
    def failures(self) -> list[NodeDiagnostic]:
        return [n for n in self.nodes if n.status != "ok"]

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "ruleset": self.ruleset,
            "verdict": self.verdict,
            "nodes": [n.to_dict() for n in self.nodes],
            "first_failure": self.first_failure,
            "root": self.root,
            "root_evaluation": self.root_evaluation,
        }
        if self.expected is not None:
            out["expected"] = self.expected
            out["matches"] = self.expected == self.verdict
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def sequents_match(a: GradedSequent, b: GradedSequent, tol: float) -> bool:
    return (
        a.antecedent == b.antecedent
        and a.consequent == b.consequent
        and labels_equal(a.label, b.label, tol)
    )


def check_derivation(ruleset, d: Derivation, env: Optional[GradeEnv] = None) -> CheckReport:
    """Replay every step of ``d`` and report each failure."""
    rs = make_ruleset(ruleset)
    nodes: list[NodeDiagnostic] = []
    by_id = {s.id: s for s in d.steps}
    for step in d.steps:
        ctx = _context_for(rs, d.decls, env)
        status, message = "ok", ""
        try:
            missing = [p for p in step.premises if p not in by_id]
            if missing:
                raise RuleError("shape-mismatch", f"unknown premise {missing[0]}")
            if step.rule not in RULES:
                raise RuleError("not-a-rule", f"unknown rule {step.rule!r}")
            if step.rule in NOT_RULES:
                r_epr_ctx([], None, {}, None)
            if not rs.allows(step.rule):
                raise RuleError("rule-absent", f"rule not in ruleset: {step.rule} is not part of {rs.name}")
            prem = [by_id[p].sequent for p in step.premises]
            result = _apply(step.rule, prem, step.sequent, {}, ctx)
            if not sequents_match(result, step.sequent, ctx.tol):
                same_shape = (result.antecedent, result.consequent) == \
                    (step.sequent.antecedent, step.sequent.consequent)
                status = "label-mismatch" if same_shape else "shape-mismatch"
                message = f"{step.rule} yields {render(result, d.decls)}"
        except RuleError as exc:
            status, message = exc.code, exc.message
        if status == "ok" and not message:
            message = "assumed premise" if step.rule == "assume" else "ok"
        nodes.append(NodeDiagnostic(step.id, step.rule, status, message, tuple(ctx.notes)))
    first = next((n.id for n in nodes if n.status != "ok"), None)
    root_label = d.root.sequent.label
    return CheckReport(
        name=d.name,
        ruleset=rs.name,
        verdict="accepted" if first is None else "rejected",
        nodes=tuple(nodes),
        first_failure=first,
        root=render(d.root.sequent, d.decls),
        root_evaluation=root_label.value if isinstance(root_label, Evaluation) else None,
    )
