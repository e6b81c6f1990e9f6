"""Grade environments, Meta Data checks, gluing and sequent evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from .config import tolerance
from .errors import NumericError, UsageError
from .syntax import (
    Atom,
    DeclarationSet,
    GradedAnd,
    GradedSequent,
    GradeExpr,
    GradeRef,
    MD_MODES,
)


@dataclass(frozen=True)
class GradeEnv:
    bindings: tuple[tuple[str, complex], ...]
    md_mode: str = "norm"

    def __post_init__(self):
        if isinstance(self.bindings, Mapping):
            object.__setattr__(self, "bindings", tuple(self.bindings.items()))
        object.__setattr__(
            self, "bindings", tuple((k, complex(v)) for k, v in self.bindings)
        )
        if self.md_mode not in MD_MODES:
            raise UsageError(f"unknown md mode {self.md_mode!r}")

    @classmethod
    def from_decls(cls, decls: DeclarationSet) -> "GradeEnv":
        return cls(decls.bindings, decls.md or "norm")

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.bindings)

    def value(self, ref: GradeRef | str) -> complex:
        symbol = ref if isinstance(ref, str) else ref.symbol
        for k, v in self.bindings:
            if k == symbol:
                break
        else:
            raise NumericError(f"unbound grade symbol {symbol!r}")
        if isinstance(ref, GradeRef) and ref.conjugated:
            return v.conjugate()
        return v

    def scaled(self, phase: complex) -> "GradeEnv":
        return GradeEnv(tuple((k, v * phase) for k, v in self.bindings), self.md_mode)


@dataclass(frozen=True)
class MdReport:
    mode: str
    norm_residual: float
    cross_residual: float
    passed: bool


def md_check(env: GradeEnv, pair: Optional[tuple[str, str]] = None) -> MdReport:
    """Residuals of the normalization and cross-term constraints.

    ``pair`` names the two grades of the qubit; it defaults to the first two
    bindings of the environment.
    """
    if pair is None:
        if len(env.symbols) < 2:
            raise NumericError("Meta Data needs two bound grades")
        pair = env.symbols[0], env.symbols[1]
    z0, z1 = env.value(pair[0]), env.value(pair[1])
    norm = abs(abs(z0) ** 2 + abs(z1) ** 2 - 1.0)
    cross = abs(z0.conjugate() * z1 + z1.conjugate() * z0)
    tol = tolerance()
    if env.md_mode == "none":
        ok = True
    elif env.md_mode == "norm":
        ok = norm <= tol
    else:
        ok = norm <= tol and cross <= tol
    return MdReport(env.md_mode, norm, cross, ok)


def eval_expr(expr: GradeExpr, env: GradeEnv) -> complex:
    return sum((sign * env.value(ref) for sign, ref in expr.terms), 0j)


def glue(f: GradeExpr, g: GradeExpr, env: GradeEnv) -> complex:
    """Product of the dual-side expression ``f`` and the assertion side ``g``."""
    return eval_expr(f, env) * eval_expr(g, env)


@dataclass(frozen=True)
class TruthValue:
    value: float


DEFAULT_ATOM_GRADES = {"p0": "z0", "p1": "z1"}


def _side_expr(side: tuple, atom_grades: Mapping[str, str]) -> GradeExpr:
    def atom_ref(f) -> GradeRef:
        if not isinstance(f, Atom) or f.negated or f.name not in atom_grades:
            raise UsageError("only graded atoms, atom lists and graded conjunctions are evaluated")
        return GradeRef(atom_grades[f.name])

    if len(side) == 1 and isinstance(side[0], GradedAnd):
        f = side[0]
        atom_ref(f.left)
        atom_ref(f.right)
        return GradeExpr.of(f.g0, f.g1)
    if len(side) == 1:
        return GradeExpr.of(atom_ref(side[0]))
    refs = [atom_ref(f) for f in side]
    if len(set(refs)) != len(refs):
        raise UsageError("a list endpoint must not repeat an atom")
    return GradeExpr.of(*refs)


def evaluate(
    s: GradedSequent,
    env: GradeEnv,
    atom_grades: Optional[Mapping[str, str]] = None,
) -> TruthValue:
    """Truth value of a two-sided sequent: the modulus of the glued grades.

    Each endpoint is reduced to a grade expression. A single atom gives its
    own grade, a list of atoms or a graded conjunction gives the sum of the
    grades. The antecedent expression is conjugated before gluing.
    """
    if not (s.antecedent and s.consequent):
        raise UsageError("evaluation needs a two-sided sequent")
    grades = dict(DEFAULT_ATOM_GRADES if atom_grades is None else atom_grades)
    f = _side_expr(s.antecedent, grades).conjugate()
    g = _side_expr(s.consequent, grades)
    value = abs(glue(f, g, env))
    if env.md_mode != "none" and value > 1.0 + tolerance():
        raise NumericError(
            f"glued value {value!r} exceeds 1; the cross term does not vanish "
            "(strict Meta Data is needed for this sequent)"
        )
    return TruthValue(value)


T_NORMS = ("lukasiewicz", "goedel", "product")


def t_norm(kind: str, x: float, y: float) -> float:
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise UsageError("t-norm arguments must lie in [0,1]")
    if kind == "lukasiewicz":
        return max(x + y - 1.0, 0.0)
    if kind == "goedel":
        return min(x, y)
    if kind == "product":
        return x * y
    raise UsageError(f"unknown t-norm {kind!r}")


@dataclass(frozen=True)
class HResult:
    value: float
    regime: str


def h_combine(v0: float, v1: float) -> HResult:
    """Saturating sum 1 - max(1 - (v0 + v1), 0) and its regime.

    The regime is read off v0 + v1 before saturation: below 1 is a qumix,
    1 is a qubit, above 1 lies outside the Bloch sphere.
    """
    if v0 < 0 or v1 < 0:
        raise UsageError("h_combine needs non-negative inputs")
    total = v0 + v1
    value = 1.0 - max(1.0 - total, 0.0)
    tol = tolerance()
    if math.isclose(total, 1.0, rel_tol=0.0, abs_tol=tol):
        regime = "qubit"
    elif total < 1.0:
        regime = "qumix"
    else:
        regime = "outside"
    return HResult(value, regime)
