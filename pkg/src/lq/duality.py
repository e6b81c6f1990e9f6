"""The three dualities on formulas and sequents.

``star_dual`` reverses a one-sided graded sequent and conjugates its
grades. ``perp_dual`` negates atoms, swaps every connective with its
symmetric partner and mirrors the sequent. ``perp_prime_dual`` acts on
graded material only: it exchanges the two atoms and the two grades of the
qubit, and turns a graded conjunction into a graded disjunction.
"""
from __future__ import annotations

from typing import Optional

from .errors import UsageError
from .syntax import (
    And,
    Atom,
    Binary,
    CoImplies,
    DeclarationSet,
    Ent,
    EntDual,
    Evaluation,
    GradedAnd,
    GradedOr,
    GradedSequent,
    GradeExpr,
    GradeRef,
    Implies,
    Not,
    Or,
    Par,
    Times,
)


def _toggle_refs(f):
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(_toggle_refs(f.operand))
    left, right = _toggle_refs(f.left), _toggle_refs(f.right)
    if isinstance(f, (GradedAnd, GradedOr)):
        return type(f)(left, right, f.g0.conjugate(), f.g1.conjugate())
    return type(f)(left, right)


def star_dual(s: GradedSequent) -> GradedSequent:
    """Reverse a one-sided graded sequent, conjugating every grade reference."""
    if not isinstance(s, GradedSequent) or not isinstance(s.label, GradeExpr):
        raise UsageError("star duality needs a grade-labelled sequent")
    if s.antecedent and s.consequent:
        raise UsageError("star duality needs a one-sided sequent")
    ante = tuple(_toggle_refs(f) for f in s.consequent)
    cons = tuple(_toggle_refs(f) for f in s.antecedent)
    return GradedSequent(ante, cons, s.label.conjugate())


_PERP_SWAP = {
    And: Or, Or: And,
    Times: Par, Par: Times,
    Ent: EntDual, EntDual: Ent,
}


def _perp_formula(f):
    if isinstance(f, Atom):
        return f.negate()
    if isinstance(f, Not):
        return Not(_perp_formula(f.operand))
    if isinstance(f, (GradedAnd, GradedOr)):
        raise UsageError("graded connectives take the primed duality")
    if isinstance(f, (Ent, EntDual)):
        # The qubit operands name the same two qubits on both sides.
        return _PERP_SWAP[type(f)](f.left, f.right)
    if isinstance(f, Implies):
        return CoImplies(_perp_formula(f.right), _perp_formula(f.left))
    if isinstance(f, CoImplies):
        return Implies(_perp_formula(f.right), _perp_formula(f.left))
    if isinstance(f, Binary):
        return _PERP_SWAP[type(f)](_perp_formula(f.left), _perp_formula(f.right))
    raise UsageError(f"cannot dualize {f!r}")


def perp_dual(x):
    """Symmetric dual: negate atoms, swap connectives, mirror the sequent."""
    if isinstance(x, GradedSequent):
        if isinstance(x.label, GradeExpr):
            raise UsageError("grade-labelled sequents take the star or primed duality")
        ante = tuple(_perp_formula(f) for f in reversed(x.consequent))
        cons = tuple(_perp_formula(f) for f in reversed(x.antecedent))
        return GradedSequent(ante, cons, x.label)
    return _perp_formula(x)


def _pair_atom(a: Atom, decls: DeclarationSet) -> Atom:
    partner = decls.partner(a.name)
    if partner is None:
        raise UsageError(f"atom {a.name!r} has no partner for the primed duality")
    return Atom(partner, a.negated)


def _pair_ref(g: GradeRef, decls: DeclarationSet) -> GradeRef:
    partner = decls.partner(g.symbol)
    if partner is None:
        raise UsageError(f"grade {g.symbol!r} has no partner for the primed duality")
    return GradeRef(partner, not g.conjugated)


def _prime_formula(f, decls: DeclarationSet):
    if not isinstance(f, (GradedAnd, GradedOr)):
        raise UsageError("the primed duality needs a graded connective")
    if not (isinstance(f.left, Atom) and isinstance(f.right, Atom)):
        raise UsageError("the primed duality needs atomic operands")
    kind = GradedOr if isinstance(f, GradedAnd) else GradedAnd
    return kind(_pair_atom(f.right, decls), _pair_atom(f.left, decls), f.g0, f.g1)


def perp_prime_dual(x, decls: Optional[DeclarationSet] = None):
    """Primed dual of a graded atomic sequent or a graded connective."""
    decls = decls or DeclarationSet.default()
    if not isinstance(x, GradedSequent):
        return _prime_formula(x, decls)
    side = x.consequent or x.antecedent
    if len(side) != 1 or (x.antecedent and x.consequent):
        raise UsageError("the primed duality needs a one-sided sequent with one formula")
    (f,) = side
    if isinstance(f, Atom):
        if not isinstance(x.label, GradeExpr):
            raise UsageError("an atomic sequent needs a grade label for the primed duality")
        moved = (_pair_atom(f, decls),)
        label = x.label.map_refs(lambda g: _pair_ref(g, decls))
    elif isinstance(f, (GradedAnd, GradedOr)):
        moved = (_toggle_refs(_prime_formula(f, decls)),)
        if isinstance(x.label, Evaluation):
            raise UsageError("evaluation labels are two-sided")
        label = x.label.conjugate() if isinstance(x.label, GradeExpr) else None
    else:
        raise UsageError("the primed duality needs graded input")
    if x.consequent:
        return GradedSequent(moved, (), label)
    return GradedSequent((), moved, label)
