"""Bounded backward proof search.

The search runs rule schemas from conclusion to premises, deepening the
depth bound one level at a time, and memoizes failed goals per depth. It
is cut-free: cut, quantum cut and EPR need an invented cut formula, so
they are never tried. Goals are searched without labels. A found tree is
re-checked by :func:`lq.calculus.check_derivation` before it is returned.
An exhausted search is evidence that no cut-free derivation exists within
the bound, not a proof of underivability.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .calculus import RuleSet, check_derivation, make_ruleset
from .errors import UsageError
from .syntax import (
    And,
    Atom,
    CoImplies,
    DeclarationSet,
    Derivation,
    Ent,
    EntDual,
    GradedAnd,
    GradedOr,
    GradedSequent,
    Implies,
    Not,
    Or,
    Par,
    Step,
    Times,
    qubit,
)

MAX_DEPTH = 12


@dataclass(frozen=True)
class Exhausted:
    depth: int

    def __str__(self) -> str:
        return f"exhausted({self.depth})"


@dataclass(frozen=True)
class _Node:
    sequent: GradedSequent
    rule: str
    children: tuple


Premises = tuple  # tuple of GradedSequent


def _seq(ante, cons) -> GradedSequent:
    return GradedSequent(tuple(ante), tuple(cons), None)


def _splits(items: tuple) -> Iterator[tuple[tuple, tuple]]:
    for k in range(len(items) + 1):
        yield items[:k], items[k:]


def _qubit_atom(f) -> Optional[Atom]:
    if isinstance(f, And) and isinstance(f.left, Atom) and f == qubit(f.left):
        return f.left
    return None


def _left_core(rs: RuleSet, f, delta: tuple) -> Iterator[tuple[str, Premises, bool]]:
    """Backward steps for a goal ``f |- delta``; the flag marks multiplicative rules."""
    if isinstance(f, And) and "and-refl" in rs.rules:
        yield "and-refl", (_seq((f.left,), delta),), False
        yield "and-refl", (_seq((f.right,), delta),), False
    if isinstance(f, GradedAnd) and "gand-refl" in rs.rules:
        yield "gand-refl", (_seq((f.left,), delta),), False
        yield "gand-refl", (_seq((f.right,), delta),), False
    if isinstance(f, Or) and "or-form" in rs.rules:
        yield "or-form", (_seq((f.left,), delta), _seq((f.right,), delta)), False
    if isinstance(f, GradedOr) and "gor-form" in rs.rules:
        yield "gor-form", (_seq((f.left,), delta), _seq((f.right,), delta)), False
    if isinstance(f, Not) and not delta and "neg-refl" in rs.rules:
        yield "neg-refl", (_seq((), (f.operand,)),), False
    if isinstance(f, Implies) and "imp-refl" in rs.rules:
        yield "imp-refl", (_seq((), (f.left,)), _seq((f.right,), delta)), False
    if isinstance(f, CoImplies) and not delta and "coimp-form" in rs.rules:
        yield "coimp-form", (_seq((f.right,), (f.left,)),), False
    if isinstance(f, Times) and "times-form" in rs.rules:
        yield "times-form", (_seq((f.left, f.right), delta),), False
    if isinstance(f, Par) and "par-refl" in rs.rules:
        for d1, d2 in _splits(delta):
            yield "par-refl", (_seq((f.left,), d1), _seq((f.right,), d2)), True
    if isinstance(f, Ent) and "at-refl" in rs.rules:
        a, b = _qubit_atom(f.left), _qubit_atom(f.right)
        if a is not None and b is not None:
            for d1, d2 in _splits(delta):
                yield "at-refl", (_seq((a,), d1), _seq((b,), d2)), True
                yield "at-refl", (_seq((a.negate(),), d1), _seq((b.negate(),), d2)), True
    if isinstance(f, EntDual) and "sect-form" in rs.rules:
        a, b = _qubit_atom(f.left), _qubit_atom(f.right)
        if a is not None and b is not None:
            yield "sect-form", (_seq((a, b), delta), _seq((a.negate(), b.negate()), delta)), False


def _right_core(rs: RuleSet, gamma: tuple, f) -> Iterator[tuple[str, Premises, bool]]:
    """Backward steps for a goal ``gamma |- f``."""
    if isinstance(f, And) and "and-form" in rs.rules:
        yield "and-form", (_seq(gamma, (f.left,)), _seq(gamma, (f.right,))), False
    if isinstance(f, GradedAnd) and "gand-form" in rs.rules:
        yield "gand-form", (_seq(gamma, (f.left,)), _seq(gamma, (f.right,))), False
    if isinstance(f, Or) and "or-refl" in rs.rules:
        yield "or-refl", (_seq(gamma, (f.left,)),), False
        yield "or-refl", (_seq(gamma, (f.right,)),), False
    if isinstance(f, GradedOr) and "gor-refl" in rs.rules:
        yield "gor-refl", (_seq(gamma, (f.left,)),), False
        yield "gor-refl", (_seq(gamma, (f.right,)),), False
    if isinstance(f, Not) and not gamma and "neg-form" in rs.rules:
        yield "neg-form", (_seq((f.operand,), ()),), False
    if isinstance(f, Implies) and not gamma and "imp-form" in rs.rules:
        yield "imp-form", (_seq((f.left,), (f.right,)),), False
    if isinstance(f, CoImplies) and "coimp-refl" in rs.rules:
        yield "coimp-refl", (_seq((f.left,), ()), _seq(gamma, (f.right,))), False
    if isinstance(f, Times) and "times-refl" in rs.rules:
        for g1, g2 in _splits(gamma):
            yield "times-refl", (_seq(g1, (f.left,)), _seq(g2, (f.right,))), True
    if isinstance(f, Par) and "par-form" in rs.rules:
        yield "par-form", (_seq(gamma, (f.left, f.right)),), False
    if isinstance(f, Ent) and "at-form" in rs.rules:
        a, b = _qubit_atom(f.left), _qubit_atom(f.right)
        if a is not None and b is not None:
            yield "at-form", (_seq(gamma, (a, b)), _seq(gamma, (a.negate(), b.negate()))), False
    if isinstance(f, EntDual) and "sect-refl" in rs.rules and len(gamma) <= 2:
        a, b = _qubit_atom(f.left), _qubit_atom(f.right)
        if a is not None and b is not None:
            for g1, g2 in _splits(gamma):
                yield "sect-refl", (
                    _seq(g1, (a,)), _seq(g2, (b,)),
                    _seq(g1, (a.negate(),)), _seq(g2, (b.negate(),)),
                ), False


def _axioms(rs: RuleSet, goal: GradedSequent) -> Iterator[str]:
    ante, cons = goal.antecedent, goal.consequent
    if "id-axiom" in rs.rules and len(ante) == 1 and ante == cons:
        yield "id-axiom"
    if len(ante) == 1 and len(cons) == 1:
        f, g = ante[0], cons[0]
        if "gand-axiom" in rs.rules and isinstance(f, GradedAnd) and g in (f.left, f.right):
            yield "gand-axiom"
        if "gor-axiom" in rs.rules and isinstance(g, GradedOr) and f in (g.left, g.right):
            yield "gor-axiom"
    if "at-axiom" in rs.rules and len(ante) == 1 and isinstance(ante[0], Ent):
        e = ante[0]
        if isinstance(e.left, And) and isinstance(e.right, And):
            if cons in ((e.left.left, e.right.left), (e.left.right, e.right.right)):
                yield "at-axiom"


def _with_context(core, context: tuple, left: bool, multiplicative: bool):
    """Re-attach a side context to core premises."""
    rule, prems, _ = core
    if not context:
        yield rule, prems
        return
    if multiplicative and len(prems) == 2:
        for c1, c2 in _splits(context):
            parts = (c1, c2)
            yield rule, tuple(_attach(p, c, left) for p, c in zip(prems, parts))
    else:
        yield rule, tuple(_attach(p, context, left) for p in prems)


def _attach(p: GradedSequent, context: tuple, left: bool) -> GradedSequent:
    if left:
        return _seq(context + p.antecedent, p.consequent)
    return _seq(p.antecedent, p.consequent + context)


class _Searcher:
    def __init__(self, rs: RuleSet, size_cap: int):
        self.rs = rs
        self.size_cap = size_cap
        self.failed: dict[GradedSequent, int] = {}

    def moves(self, goal: GradedSequent) -> Iterator[tuple[str, Premises]]:
        rs = self.rs
        ante, cons = goal.antecedent, goal.consequent
        # Logical rules, with the principal formula last on the left or
        # first on the right when contexts are enabled.
        if len(ante) == 1 or (rs.left_contexts and ante):
            context = ante[:-1]
            for core in _left_core(rs, ante[-1], cons):
                yield from _with_context(core, context, True, core[2])
        if len(cons) == 1 or (rs.right_contexts and cons):
            context = cons[1:]
            for core in _right_core(rs, ante, cons[0]):
                yield from _with_context(core, context, False, core[2])
        for right, items in ((False, ante), (True, cons)):
            tag = "r" if right else "l"

            def rebuild(new):
                return _seq(ante, new) if right else _seq(new, cons)

            if rs.weakening:
                for k in range(len(items)):
                    yield f"weak-{tag}", (rebuild(items[:k] + items[k + 1:]),)
            if rs.contraction and len(items) < self.size_cap:
                for k in range(len(items)):
                    yield f"contr-{tag}", (rebuild(items[:k + 1] + items[k:]),)
            if rs.exchange:
                for k in range(len(items) - 1):
                    swapped = items[:k] + (items[k + 1], items[k]) + items[k + 2:]
                    if swapped != items:
                        yield f"exch-{tag}", (rebuild(swapped),)

    def prove(self, goal: GradedSequent, depth: int) -> Optional[_Node]:
        if depth <= 0 or self.failed.get(goal, -1) >= depth:
            return None
        for rule in _axioms(self.rs, goal):
            return _Node(goal, rule, ())
        for rule, prems in self.moves(goal):
            children = []
            for p in prems:
                child = self.prove(p, depth - 1)
                if child is None:
                    break
                children.append(child)
            else:
                return _Node(goal, rule, tuple(children))
        self.failed[goal] = max(self.failed.get(goal, -1), depth)
        return None


def _flatten(node: _Node, steps: list[Step]) -> str:
    refs = tuple(_flatten(c, steps) for c in node.children)
    sid = str(len(steps) + 1)
    steps.append(Step(sid, node.sequent, node.rule, refs))
    return sid


def bounded_search(
    ruleset,
    goal: GradedSequent,
    depth: int,
    decls: Optional[DeclarationSet] = None,
    max_depth: int = MAX_DEPTH,
) -> Union[Derivation, Exhausted]:
    """Search for a cut-free derivation of ``goal`` of height at most ``depth``."""
    if depth > max_depth:
        raise UsageError(f"search depth {depth} exceeds the cap {max_depth}")
    if depth < 0:
        raise UsageError("search depth must be non-negative")
    rs = make_ruleset(ruleset)
    goal = _seq(goal.antecedent, goal.consequent)
    cap = max(len(goal.antecedent), len(goal.consequent), 1) + 2
    searcher = _Searcher(rs, cap)
    decls = decls or DeclarationSet.default()
    for bound in range(1, depth + 1):
        node = searcher.prove(goal, bound)
        if node is None:
            continue
        steps: list[Step] = []
        _flatten(node, steps)
        d = Derivation("search", rs.name, tuple(steps), decls)
        report = check_derivation(rs, d)
        if not report.accepted:
            raise AssertionError(f"search produced an unchecked tree: {report.to_json()}")
        return d
    return Exhausted(depth)
