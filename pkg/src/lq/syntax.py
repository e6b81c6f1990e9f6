"""Abstract syntax, concrete grammar, parser and canonical printer.

Formulas are immutable dataclasses, so structural equality is plain ``==``.
The concrete grammar is deliberately flat: every binary connective has the
same precedence and a parenthesized group holds at most one of them, so
``A & B par C`` is rejected and must be written ``(A & B) par C``.

    formula  := unary [binop unary]
    unary    := "not" unary | "(" formula ")" | NAME "^"*
    binop    := "&" ["[" gref "," gref "]"] | "v" ["[" gref "," gref "]"]
              | "*" | "par" | "@" | "sect" | "->" | "<-"
    gref     := NAME ["*"]
    sequent  := [formula {"," formula}] "|-" [label] [formula {"," formula}]
    label    := "{" gexpr "}" | "[" number "]"

A proof script is a sequence of ``;``-terminated preamble statements
(``atom``, ``grade``, ``qubit``, ``bind``, ``md``) and ``proof`` blocks.
``%`` starts a comment that runs to the end of the line.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import ParseError

# ---------------------------------------------------------------------------
# Abstract syntax


@dataclass(frozen=True)
class Atom:
    name: str
    negated: bool = False

    def negate(self) -> "Atom":
        return Atom(self.name, not self.negated)


@dataclass(frozen=True)
class GradeRef:
    symbol: str
    conjugated: bool = False

    def conjugate(self) -> "GradeRef":
        return GradeRef(self.symbol, not self.conjugated)


@dataclass(frozen=True)
class Binary:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class And(Binary):
    pass


@dataclass(frozen=True)
class Or(Binary):
    pass


@dataclass(frozen=True)
class Times(Binary):
    pass


@dataclass(frozen=True)
class Par(Binary):
    pass


@dataclass(frozen=True)
class Ent(Binary):
    """Entanglement of two qubit formulas (``@``)."""


@dataclass(frozen=True)
class EntDual(Binary):
    """The symmetric partner of ``@`` (``sect``)."""


@dataclass(frozen=True)
class Implies(Binary):
    pass


@dataclass(frozen=True)
class CoImplies(Binary):
    pass


@dataclass(frozen=True)
class GradedAnd(Binary):
    g0: GradeRef
    g1: GradeRef


@dataclass(frozen=True)
class GradedOr(Binary):
    g0: GradeRef
    g1: GradeRef


@dataclass(frozen=True)
class Not:
    operand: "Formula"


Formula = Union[Atom, Binary, Not]

GRADED = (GradedAnd, GradedOr)


def qubit(atom: Atom) -> And:
    """The qubit formula ``X & X^`` built on ``atom``."""
    return And(atom, atom.negate())


def is_qubit_formula(f: Formula) -> bool:
    return (
        isinstance(f, And)
        and isinstance(f.left, Atom)
        and isinstance(f.right, Atom)
        and f.right == f.left.negate()
    )


def valid_ent_operand(f: Formula) -> bool:
    # Atoms are admitted so that the conclusion of the EPR rule, which
    # replaces one qubit operand by a single component, stays expressible.
    return is_qubit_formula(f) or isinstance(f, Atom)


def grade_refs(f: Formula) -> list[GradeRef]:
    if isinstance(f, Atom):
        return []
    if isinstance(f, Not):
        return grade_refs(f.operand)
    refs = grade_refs(f.left) + grade_refs(f.right)
    if isinstance(f, GRADED):
        refs = [f.g0, f.g1] + refs
    return refs


def atoms_of(f: Formula) -> list[Atom]:
    if isinstance(f, Atom):
        return [f]
    if isinstance(f, Not):
        return atoms_of(f.operand)
    return atoms_of(f.left) + atoms_of(f.right)


# ---------------------------------------------------------------------------
# Labels and sequents


@dataclass(frozen=True)
class GradeExpr:
    """A formal sum of signed grade references, e.g. ``z0* + z1*``."""

    terms: tuple[tuple[int, GradeRef], ...]

    @classmethod
    def of(cls, *refs: GradeRef) -> "GradeExpr":
        return cls(tuple((1, r) for r in refs))

    def conjugate(self) -> "GradeExpr":
        return GradeExpr(tuple((s, r.conjugate()) for s, r in self.terms))

    def map_refs(self, fn) -> "GradeExpr":
        return GradeExpr(tuple((s, fn(r)) for s, r in self.terms))


@dataclass(frozen=True)
class Evaluation:
    value: float


Label = Union[GradeExpr, Evaluation, None]


@dataclass(frozen=True)
class GradedSequent:
    antecedent: tuple = ()
    consequent: tuple = ()
    label: Label = None

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple(self.antecedent))
        object.__setattr__(self, "consequent", tuple(self.consequent))
        one_sided = (not self.antecedent) != (not self.consequent)
        if isinstance(self.label, GradeExpr) and not one_sided:
            raise ParseError("grade label requires exactly one empty side")
        if isinstance(self.label, Evaluation):
            if not (self.antecedent and self.consequent):
                raise ParseError("evaluation label requires both sides non-empty")
            if not (-1e-9 <= self.label.value <= 1 + 1e-9):
                raise ParseError(f"evaluation {self.label.value!r} outside [0,1]")

    def with_label(self, label: Label) -> "GradedSequent":
        return GradedSequent(self.antecedent, self.consequent, label)


# ---------------------------------------------------------------------------
# Declarations and derivations


MD_MODES = ("norm", "strict", "none")


@dataclass(frozen=True)
class DeclarationSet:
    atoms: tuple[str, ...] = ()
    grades: tuple[str, ...] = ()
    qubits: tuple[tuple[str, Atom], ...] = ()
    bindings: tuple[tuple[str, complex], ...] = ()
    md: Optional[str] = None

    @classmethod
    def default(cls) -> "DeclarationSet":
        """Atoms p0, p1, A, B; grades z0, z1; qubits Q_A and Q_B."""
        return cls(
            atoms=("p0", "p1", "A", "B"),
            grades=("z0", "z1"),
            qubits=(("Q_A", Atom("A")), ("Q_B", Atom("B"))),
        )

    def merge(self, other: "DeclarationSet") -> "DeclarationSet":
        def union(a, b):
            return tuple(a) + tuple(x for x in b if x not in a)

        return DeclarationSet(
            atoms=union(self.atoms, other.atoms),
            grades=union(self.grades, other.grades),
            qubits=union(self.qubits, other.qubits),
            bindings=tuple((dict(self.bindings) | dict(other.bindings)).items()),
            md=other.md if other.md is not None else self.md,
        )

    def qubit_map(self) -> dict[str, Atom]:
        return dict(self.qubits)

    def atom_grade(self, atom: str) -> Optional[str]:
        """Grade attached to an atom: the i-th grade belongs to the i-th atom."""
        if atom in self.atoms:
            i = self.atoms.index(atom)
            if i < len(self.grades):
                return self.grades[i]
        return None

    def atom_grades(self) -> dict[str, str]:
        return {a: g for a in self.atoms if (g := self.atom_grade(a)) is not None}

    def partner(self, symbol: str) -> Optional[str]:
        """Index swap i <-> j used by the grade-exchanging duality.

        The first two declared atoms are partners, and so are the first two
        declared grades.
        """
        for pool in (self.atoms, self.grades):
            if len(pool) >= 2 and symbol in pool[:2]:
                return pool[1] if symbol == pool[0] else pool[0]
        return None


@dataclass(frozen=True)
class Step:
    id: str
    sequent: GradedSequent
    rule: str
    premises: tuple[str, ...] = ()


@dataclass(frozen=True)
class Derivation:
    name: str
    ruleset: str
    steps: tuple[Step, ...]
    decls: DeclarationSet = field(default_factory=DeclarationSet)

    @property
    def root(self) -> Step:
        return self.steps[-1]

    def step(self, step_id: str) -> Step:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise KeyError(step_id)

    def tree(self, step_id: Optional[str] = None) -> dict:
        """Nested view of the derivation rooted at ``step_id`` (default root)."""
        s = self.root if step_id is None else self.step(step_id)
        return {
            "id": s.id,
            "rule": s.rule,
            "conclusion": render(s.sequent, self.decls),
            "premises": [self.tree(p) for p in s.premises],
        }


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<turnstile>\|-)
  | (?P<arrow>->|<-)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?i?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[&*@^(){}\[\],;:=+\-\#])
    """,
    re.VERBOSE,
)

KEYWORDS = {"v", "par", "sect", "not", "by", "in", "atom", "grade", "qubit",
            "bind", "md", "proof"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, decls: DeclarationSet):
        self.tokens = tokenize(text)
        self.i = 0
        self.decls = decls
        self.qubits = decls.qubit_map()

    # -- token helpers -----------------------------------------------------
    def peek(self, offset: int = 0) -> Optional[Token]:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.text == text

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r} but found {tok.text!r} at offset {tok.pos}")
        return tok

    def expect_name(self) -> Token:
        tok = self.next()
        if tok.kind != "name":
            raise ParseError(f"expected a name but found {tok.text!r} at offset {tok.pos}")
        return tok

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    # -- formulas ----------------------------------------------------------
    def grade_ref(self) -> GradeRef:
        tok = self.expect_name()
        if tok.text not in self.decls.grades:
            raise ParseError(f"undeclared grade symbol {tok.text!r}")
        conj = False
        if self.at("*"):
            self.next()
            conj = True
        return GradeRef(tok.text, conj)

    def grade_pair(self) -> tuple[GradeRef, GradeRef]:
        self.expect("[")
        g0 = self.grade_ref()
        self.expect(",")
        g1 = self.grade_ref()
        self.expect("]")
        return g0, g1

    def formula(self) -> Formula:
        left = self.unary()
        tok = self.peek()
        if tok is None:
            return left
        ctor = None
        grades = None
        if tok.text == "&":
            self.next()
            if self.at("["):
                grades = self.grade_pair()
                ctor = GradedAnd
            else:
                ctor = And
        elif tok.text == "v" and tok.kind == "name":
            self.next()
            if self.at("["):
                grades = self.grade_pair()
                ctor = GradedOr
            else:
                ctor = Or
        elif tok.text in _SIMPLE_BINOPS:
            self.next()
            ctor = _SIMPLE_BINOPS[tok.text]
        else:
            return left
        right = self.unary()
        nxt = self.peek()
        if nxt is not None and (nxt.text in _SIMPLE_BINOPS or nxt.text in ("&", "v")):
            raise ParseError(
                f"connective {nxt.text!r} at offset {nxt.pos} needs parentheses; "
                "binary connectives do not chain"
            )
        if ctor in (Ent, EntDual):
            if not (valid_ent_operand(left) and valid_ent_operand(right)):
                raise ParseError(f"{tok.text} applied to non-qubit-shaped operands")
        if grades is not None:
            return ctor(left, right, grades[0], grades[1])
        return ctor(left, right)

    def unary(self) -> Formula:
        tok = self.next()
        if tok.kind == "name" and tok.text == "not":
            return Not(self.unary())
        if tok.text == "(":
            inner = self.formula()
            self.expect(")")
            return inner
        if tok.kind != "name" or tok.text in KEYWORDS:
            raise ParseError(f"expected a formula but found {tok.text!r} at offset {tok.pos}")
        if tok.text in self.qubits:
            base: Formula = qubit(self.qubits[tok.text])
            if self.at("^"):
                raise ParseError("primitive negation applies to atoms only")
            return base
        if tok.text not in self.decls.atoms:
            raise ParseError(f"undeclared atom {tok.text!r}")
        atom = Atom(tok.text)
        while self.at("^"):
            self.next()
            atom = atom.negate()
        return atom

    def formula_list(self, stop: Iterable[str]) -> tuple:
        items: list[Formula] = []
        stop = set(stop)
        tok = self.peek()
        if tok is None or tok.text in stop:
            return ()
        items.append(self.formula())
        while self.at(","):
            self.next()
            items.append(self.formula())
        return tuple(items)

    # -- sequents ----------------------------------------------------------
    def grade_expr(self) -> GradeExpr:
        terms = []
        sign = 1
        if self.at("-"):
            self.next()
            sign = -1
        elif self.at("+"):
            self.next()
        terms.append((sign, self.grade_ref()))
        while self.at("+") or self.at("-"):
            sign = 1 if self.next().text == "+" else -1
            terms.append((sign, self.grade_ref()))
        return GradeExpr(tuple(terms))

    def sequent(self, stop: Iterable[str] = ()) -> GradedSequent:
        ante = self.formula_list({"|-"})
        self.expect("|-")
        label: Label = None
        if self.at("{"):
            self.next()
            label = self.grade_expr()
            self.expect("}")
        elif self.at("["):
            self.next()
            tok = self.next()
            if tok.kind != "number" or tok.text.endswith("i"):
                raise ParseError(f"expected a real evaluation but found {tok.text!r}")
            value = float(tok.text)
            if not 0.0 <= value <= 1.0:
                raise ParseError(f"evaluation {value!r} outside [0,1]")
            label = Evaluation(value)
            self.expect("]")
        cons = self.formula_list(set(stop))
        if isinstance(label, GradeExpr) and ante and cons:
            raise ParseError("grade label on a two-sided sequent")
        if isinstance(label, Evaluation) and not (ante and cons):
            raise ParseError("evaluation label on a one-sided sequent")
        return GradedSequent(ante, cons, label)


_SIMPLE_BINOPS = {
    "*": Times,
    "par": Par,
    "@": Ent,
    "sect": EntDual,
    "->": Implies,
    "<-": CoImplies,
}


def _finish(p: _Parser, value):
    if not p.done():
        tok = p.peek()
        raise ParseError(f"unexpected {tok.text!r} at offset {tok.pos}")
    return value


def parse_formula(text: str, decls: Optional[DeclarationSet] = None) -> Formula:
    p = _Parser(text, decls or DeclarationSet.default())
    return _finish(p, p.formula())


def parse_sequent(text: str, decls: Optional[DeclarationSet] = None) -> GradedSequent:
    p = _Parser(text, decls or DeclarationSet.default())
    return _finish(p, p.sequent())


# ---------------------------------------------------------------------------
# Scripts


def _parse_complex(text: str) -> complex:
    cleaned = text.replace(" ", "")
    if not cleaned:
        raise ParseError("empty complex literal")
    try:
        return complex(cleaned.replace("i", "j"))
    except ValueError as exc:
        raise ParseError(f"bad complex literal {text!r}") from exc


def _known_rule(name: str) -> bool:
    from .calculus import RULE_IDS  # local import: calculus depends on syntax

    return name in RULE_IDS


def parse_script(document: str) -> tuple[DeclarationSet, list[Derivation]]:
    """Parse a proof script into its declarations and derivations."""
    p = _Parser(document, DeclarationSet())
    atoms: list[str] = []
    grades: list[str] = []
    qubits: list[tuple[str, Atom]] = []
    bindings: dict[str, complex] = {}
    md: Optional[str] = None
    proofs: list[tuple[str, str, list]] = []

    def refresh():
        p.decls = DeclarationSet(tuple(atoms), tuple(grades), tuple(qubits),
                                 tuple(bindings.items()), md)
        p.qubits = p.decls.qubit_map()

    while not p.done():
        head = p.expect_name()
        word = head.text
        if word in ("atom", "grade"):
            pool = atoms if word == "atom" else grades
            while True:
                name = p.expect_name().text
                if name in KEYWORDS:
                    raise ParseError(f"{name!r} is reserved")
                if name not in pool:
                    pool.append(name)
                if p.at(","):
                    p.next()
                    continue
                break
            p.expect(";")
        elif word == "qubit":
            name = p.expect_name().text
            p.expect("=")
            base = p.expect_name().text
            if base not in atoms:
                raise ParseError(f"undeclared atom {base!r} in qubit abbreviation")
            atom = Atom(base)
            while p.at("^"):
                p.next()
                atom = atom.negate()
            qubits.append((name, atom))
            p.expect(";")
        elif word == "bind":
            sym = p.expect_name().text
            if sym not in grades:
                grades.append(sym)
            p.expect("=")
            start = p.i
            while not p.at(";"):
                p.next()
            bindings[sym] = _parse_complex("".join(t.text for t in p.tokens[start:p.i]))
            p.expect(";")
        elif word == "md":
            mode = p.expect_name().text
            if mode not in MD_MODES:
                raise ParseError(f"unknown md mode {mode!r}")
            md = mode
            p.expect(";")
        elif word == "proof":
            refresh()
            name = p.expect_name().text
            p.expect("in")
            ruleset = p.expect_name().text
            while p.at("+"):
                p.next()
                ruleset += "+" + p.expect_name().text
                while p.at("-"):
                    p.next()
                    ruleset += "-" + p.expect_name().text
            p.expect("{")
            steps: list[Step] = []
            seen: set[str] = set()
            while not p.at("}"):
                tok = p.next()
                if tok.kind != "number" or not tok.text.isdigit():
                    raise ParseError(f"expected a step number but found {tok.text!r}")
                sid = tok.text
                if sid in seen:
                    raise ParseError(f"duplicate step {sid} in proof {name}")
                p.expect(":")
                seq = p.sequent(stop={"by"})
                p.expect("by")
                rule = p.expect_name().text
                while p.at("-"):
                    p.next()
                    rule += "-" + p.expect_name().text
                if not _known_rule(rule):
                    raise ParseError(f"unknown rule {rule!r}")
                p.expect("(")
                refs: list[str] = []
                while not p.at(")"):
                    if p.at("#"):
                        p.next()
                    ref = p.next().text
                    if ref not in seen:
                        raise ParseError(f"dangling premise reference #{ref} in step {sid}")
                    refs.append(ref)
                    if p.at(","):
                        p.next()
                p.expect(")")
                p.expect(";")
                seen.add(sid)
                steps.append(Step(sid, seq, rule, tuple(refs)))
            p.expect("}")
            if not steps:
                raise ParseError(f"proof {name} has no steps")
            proofs.append((name, ruleset, steps))
        else:
            raise ParseError(f"unexpected {word!r} at offset {head.pos}")
    refresh()
    decls = p.decls
    derivations = [Derivation(n, r, tuple(s), decls) for n, r, s in proofs]
    return decls, derivations


def parse_env_block(text: str) -> DeclarationSet:
    """Parse preamble-only text such as an env file."""
    decls, derivations = parse_script(text)
    if derivations:
        raise ParseError("env files may not contain proofs")
    return decls


# ---------------------------------------------------------------------------
# Rendering

_BINOP_TEXT = {
    And: "&",
    Or: "v",
    Times: "*",
    Par: "par",
    Ent: "@",
    EntDual: "sect",
    Implies: "->",
    CoImplies: "<-",
}


def render_grade_ref(g: GradeRef) -> str:
    return g.symbol + ("*" if g.conjugated else "")


def render_grade_expr(e: GradeExpr) -> str:
    out = []
    for k, (sign, ref) in enumerate(e.terms):
        text = render_grade_ref(ref)
        if k == 0:
            out.append(("-" if sign < 0 else "") + text)
        else:
            out.append(("-" if sign < 0 else "+") + text)
    return "".join(out)


def render_number(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def render_complex(z: complex) -> str:
    re_, im = z.real, z.imag
    if im == 0:
        return render_number(re_)
    if re_ == 0:
        return render_number(im) + "i"
    return f"{render_number(re_)}{'-' if im < 0 else '+'}{render_number(abs(im))}i"


def _render_formula(f: Formula, abbrev: Mapping[Formula, str], top: bool) -> str:
    if f in abbrev:
        return abbrev[f]
    if isinstance(f, Atom):
        return f.name + ("^" if f.negated else "")
    if isinstance(f, Not):
        return "not " + _render_formula(f.operand, abbrev, False)
    left = _render_formula(f.left, abbrev, False)
    right = _render_formula(f.right, abbrev, False)
    if isinstance(f, GRADED):
        op = ("&" if isinstance(f, GradedAnd) else "v") + \
            f"[{render_grade_ref(f.g0)},{render_grade_ref(f.g1)}]"
    else:
        op = _BINOP_TEXT[type(f)]
    text = f"{left} {op} {right}"
    return text if top else f"({text})"


def _abbreviations(decls: Optional[DeclarationSet]) -> dict:
    if decls is None:
        return {}
    table: dict = {}
    for name, atom in decls.qubits:
        table.setdefault(qubit(atom), name)
    return table


def render_formula(f: Formula, decls: Optional[DeclarationSet] = None) -> str:
    return _render_formula(f, _abbreviations(decls), True)


def render_sequent(s: GradedSequent, decls: Optional[DeclarationSet] = None) -> str:
    abbrev = _abbreviations(decls)
    ante = ", ".join(_render_formula(f, abbrev, True) for f in s.antecedent)
    cons = ", ".join(_render_formula(f, abbrev, True) for f in s.consequent)
    turn = "|-"
    if isinstance(s.label, GradeExpr):
        turn += "{" + render_grade_expr(s.label) + "}"
    elif isinstance(s.label, Evaluation):
        turn += "[" + render_number(s.label.value) + "]"
    parts = [x for x in (ante, turn, cons) if x]
    return " ".join(parts)


def render_preamble(decls: DeclarationSet) -> str:
    lines = []
    if decls.atoms:
        lines.append("atom " + ", ".join(decls.atoms) + ";")
    if decls.grades:
        lines.append("grade " + ", ".join(decls.grades) + ";")
    for name, atom in decls.qubits:
        lines.append(f"qubit {name} = {atom.name}{'^' if atom.negated else ''};")
    for sym, value in decls.bindings:
        lines.append(f"bind {sym} = {render_complex(value)};")
    if decls.md is not None:
        lines.append(f"md {decls.md};")
    return "\n".join(lines)


def render_derivation(d: Derivation) -> str:
    lines = [f"proof {d.name} in {d.ruleset} {{"]
    for s in d.steps:
        refs = ", ".join(s.premises)
        lines.append(f"  {s.id}: {render_sequent(s.sequent, d.decls)} by {s.rule}({refs});")
    lines.append("}")
    return "\n".join(lines)


def render_script(decls: DeclarationSet, derivations: Sequence[Derivation]) -> str:
    blocks = []
    pre = render_preamble(decls)
    if pre:
        blocks.append(pre)
    blocks.extend(render_derivation(d) for d in derivations)
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def render(x, decls: Optional[DeclarationSet] = None) -> str:
    """Canonical text for a formula, sequent or derivation."""
    if isinstance(x, Derivation):
        return render_derivation(x)
    if isinstance(x, GradedSequent):
        return render_sequent(x, decls)
    return render_formula(x, decls)
