"""Dense linear algebra on qubit registers and the map from formulas to it.

States and operators wrap numpy arrays. Atomic propositions become weak
measurement operators (a grade times a basis projector), a graded
conjunction becomes a one-qubit superposition, and an entangled pair of
qubit formulas becomes a Bell state.
"""
from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np

from .config import tolerance
from .errors import NumericError, UsageError
from .evaluation import GradeEnv
from .syntax import And, Atom, DeclarationSet, Ent, EntDual, GradedAnd, Par

SQRT_HALF = 1.0 / math.sqrt(2.0)
OPERATOR_KINDS = ("projector", "weak", "hermitian", "unitary", "general")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _to_pairs(values) -> list:
    return [[float(z.real), float(z.imag)] for z in values]


class StateVector:
    """A unit vector in a register of qubits."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if not _is_power_of_two(amps.size) or amps.size < 2:
            raise UsageError(f"state dimension {amps.size} is not a power of two")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > tolerance():
            raise NumericError(f"state norm {norm!r} is not 1")
        amps.setflags(write=False)
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def basis(cls, index: int, dim: int = 2) -> "StateVector":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls(v)

    def close_to(self, other: "StateVector", tol: Optional[float] = None) -> bool:
        tol = tolerance() if tol is None else tol
        return self.dim == other.dim and bool(np.allclose(self.amplitudes, other.amplitudes, atol=tol, rtol=0))

    def equal_up_to_phase(self, other: "StateVector", tol: Optional[float] = None) -> bool:
        tol = tolerance() if tol is None else tol
        if self.dim != other.dim:
            return False
        overlap = abs(np.vdot(self.amplitudes, other.amplitudes))
        return abs(overlap - 1.0) <= tol

    def to_json(self) -> list:
        return _to_pairs(self.amplitudes)

    @classmethod
    def from_json(cls, pairs) -> "StateVector":
        return cls([complex(re, im) for re, im in pairs])

    def __repr__(self) -> str:
        return f"StateVector({self.amplitudes.tolist()!r})"


def _is_projector(m: np.ndarray, tol: float) -> bool:
    return bool(np.allclose(m @ m, m, atol=tol, rtol=0) and np.allclose(m.conj().T, m, atol=tol, rtol=0))


class Operator:
    """A square matrix on a register, tagged with the property it must have."""

    __slots__ = ("matrix", "kind")

    def __init__(self, matrix, kind: str = "general"):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or not _is_power_of_two(m.shape[0]):
            raise UsageError(f"operator shape {m.shape} is not a square power of two")
        if kind not in OPERATOR_KINDS:
            raise UsageError(f"unknown operator kind {kind!r}")
        tol = tolerance()
        if kind == "projector" and not _is_projector(m, tol):
            raise NumericError("matrix is not an orthogonal projector")
        if kind == "hermitian" and not np.allclose(m.conj().T, m, atol=tol, rtol=0):
            raise NumericError("matrix is not self-adjoint")
        if kind == "unitary" and not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0):
            raise NumericError("matrix is not unitary")
        if kind == "weak" and weak_factor(m) is None:
            raise NumericError("matrix is not a scalar multiple of a projector")
        m.setflags(write=False)
        self.matrix = m
        self.kind = kind

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, s: StateVector) -> np.ndarray:
        if s.dim != self.dim:
            raise UsageError("operator and state dimensions differ")
        return self.matrix @ s.amplitudes

    def close_to(self, other: "Operator", tol: Optional[float] = None) -> bool:
        tol = tolerance() if tol is None else tol
        return self.dim == other.dim and bool(np.allclose(self.matrix, other.matrix, atol=tol, rtol=0))

    def to_json(self) -> list:
        return [_to_pairs(row) for row in self.matrix]

    @classmethod
    def from_json(cls, rows, kind: str = "general") -> "Operator":
        return cls([[complex(re, im) for re, im in row] for row in rows], kind)

    def __repr__(self) -> str:
        return f"Operator({self.kind}, {self.matrix.tolist()!r})"


def weak_factor(m: np.ndarray) -> Optional[tuple[complex, np.ndarray]]:
    """Split ``m`` as ``c * P`` with ``P`` a projector, or return None."""
    tol = tolerance()
    if np.allclose(m, 0, atol=tol, rtol=0):
        return 0j, np.zeros_like(m)
    diag = np.diag(m)
    k = int(np.argmax(np.abs(diag)))
    c = complex(diag[k])
    if abs(c) <= tol:
        return None
    p = m / c
    return (c, p) if _is_projector(p, tol) else None


class DensityOperator:
    """Self-adjoint, positive semidefinite, unit trace."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or not _is_power_of_two(m.shape[0]) or m.shape[0] < 2:
            raise UsageError(f"density shape {m.shape} is not a square power of two")
        problem = density_problem(m)
        if problem:
            raise NumericError(problem)
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, s: StateVector) -> "DensityOperator":
        return cls(np.outer(s.amplitudes, s.amplitudes.conj()))

    def to_json(self) -> list:
        return [_to_pairs(row) for row in self.matrix]


def density_problem(m: np.ndarray) -> Optional[str]:
    """Describe why ``m`` is not a density operator, or return None."""
    tol = tolerance()
    if not np.allclose(m.conj().T, m, atol=tol, rtol=0):
        return "density is not self-adjoint"
    if abs(np.trace(m) - 1.0) > tol:
        return f"density trace {np.trace(m).real!r} is not 1"
    if float(np.linalg.eigvalsh(m).min()) < -tol:
        return "density has a negative eigenvalue"
    return None


def is_density(m) -> bool:
    return density_problem(np.asarray(m, dtype=complex)) is None


def qumix_from_bloch(r) -> np.ndarray:
    """The matrix (I + r . sigma) / 2; a density operator iff |r| <= 1."""
    r1, r2, r3 = (float(x) for x in r)
    return 0.5 * np.array([[1 + r3, r1 - 1j * r2], [r1 + 1j * r2, 1 - r3]], dtype=complex)


# ---------------------------------------------------------------------------
# Basics

P0 = Operator(np.diag([1.0, 0.0]), "projector")
P1 = Operator(np.diag([0.0, 1.0]), "projector")
IDENTITY2 = Operator(np.eye(2), "projector")


def projector(i: int, dim: int = 2) -> Operator:
    m = np.zeros((dim, dim), dtype=complex)
    m[i, i] = 1.0
    return Operator(m, "projector")


def tensor(x, y):
    """Kronecker product of two states or two operators."""
    if isinstance(x, StateVector) and isinstance(y, StateVector):
        return StateVector(np.kron(x.amplitudes, y.amplitudes))
    if isinstance(x, Operator) and isinstance(y, Operator):
        kind = x.kind if x.kind == y.kind and x.kind in ("projector", "unitary", "hermitian") else "general"
        return Operator(np.kron(x.matrix, y.matrix), kind)
    raise UsageError("tensor needs two states or two operators")


def bell(kind: str, sign: str) -> StateVector:
    if kind not in ("phi", "psi") or sign not in ("+", "-"):
        raise UsageError("bell needs kind phi|psi and sign +|-")
    s = 1.0 if sign == "+" else -1.0
    v = np.zeros(4, dtype=complex)
    if kind == "phi":
        v[0], v[3] = SQRT_HALF, s * SQRT_HALF
    else:
        v[1], v[2] = SQRT_HALF, s * SQRT_HALF
    return StateVector(v)


def is_separable(s: StateVector) -> bool:
    """Whether a two-qubit pure state is a product state."""
    if s.dim != 4:
        raise UsageError("separability is decided for two-qubit states")
    a = s.amplitudes
    det = a[0] * a[3] - a[1] * a[2]
    return abs(det) <= tolerance()


def _phase_normalize(v: np.ndarray) -> np.ndarray:
    tol = tolerance()
    for z in v:
        if abs(z) > tol:
            return v * (abs(z) / z)
    return v


def measure(s: StateVector, i: int) -> tuple[float, StateVector]:
    """Probability of basis outcome ``i`` and the collapsed state."""
    if not 0 <= i < s.dim:
        raise UsageError(f"basis index {i} out of range for dimension {s.dim}")
    amp = s.amplitudes[i]
    p = float(abs(amp) ** 2)
    if p <= tolerance():
        raise NumericError(f"outcome {i} has zero probability")
    collapsed = np.zeros(s.dim, dtype=complex)
    collapsed[i] = amp / math.sqrt(p)
    return p, StateVector(_phase_normalize(collapsed))


def weak_value(a: Operator, initial: StateVector, final: StateVector) -> complex:
    overlap = np.vdot(final.amplitudes, initial.amplitudes)
    if abs(overlap) <= tolerance():
        raise NumericError("pre- and post-selected states are orthogonal")
    return complex(np.vdot(final.amplitudes, a.apply(initial)) / overlap)


# ---------------------------------------------------------------------------
# Interpretation of formulas


def _grade_symbol(env: GradeEnv, i: int) -> str:
    if i >= len(env.symbols):
        raise NumericError(f"environment binds no grade for index {i}")
    return env.symbols[i]


def _atom_index(a: Atom, decls: DeclarationSet) -> int:
    if a.negated or a.name not in decls.atoms[:2]:
        raise UsageError(f"atom {a.name!r} is not one of the two graded atoms")
    return decls.atoms.index(a.name)


def weak_operator(i: int, env: GradeEnv) -> Operator:
    lam = env.value(_grade_symbol(env, i))
    return Operator(lam * projector(i).matrix, "weak")


def interpret_operator(f, env: GradeEnv, decls: Optional[DeclarationSet] = None) -> Operator:
    """Atoms go to weak operators, the graded conjunction to their sum."""
    decls = decls or DeclarationSet.default()
    if isinstance(f, Atom):
        i = _atom_index(f, decls)
        grade = decls.atom_grade(f.name)
        lam = env.value(grade) if grade in env.symbols else env.value(_grade_symbol(env, i))
        return Operator(lam * projector(i).matrix, "weak")
    if isinstance(f, GradedAnd) and isinstance(f.left, Atom) and isinstance(f.right, Atom):
        i, j = _atom_index(f.left, decls), _atom_index(f.right, decls)
        if {i, j} != {0, 1}:
            raise UsageError("graded conjunction must join the two graded atoms")
        m = env.value(f.g0) * projector(i).matrix + env.value(f.g1) * projector(j).matrix
        return Operator(m, "general")
    raise UsageError("only graded atoms and their graded conjunction are interpreted as operators")


def _bit(a) -> int:
    if not isinstance(a, Atom):
        raise UsageError("entangled components must be atoms")
    return 0 if a.negated else 1


def _pair_state(pairs) -> StateVector:
    v = np.zeros(4, dtype=complex)
    for a, b in pairs:
        v[2 * _bit(a) + _bit(b)] += SQRT_HALF
    if abs(np.linalg.norm(v) - 1.0) > tolerance():
        raise UsageError("the two components coincide; no Bell state")
    return StateVector(v)


def interpret_state(f, env: Optional[GradeEnv] = None) -> StateVector:
    """States for a graded qubit or a maximally entangled pair.

    A graded conjunction needs an environment satisfying normalization.
    Entangled pairs map their two matching components to basis kets,
    reading a positive atom as 1 and a negated atom as 0.
    """
    if isinstance(f, GradedAnd):
        if env is None:
            raise UsageError("a graded qubit needs a grade environment")
        l0, l1 = env.value(f.g0), env.value(f.g1)
        norm = abs(l0) ** 2 + abs(l1) ** 2
        if abs(norm - 1.0) > tolerance():
            raise NumericError(f"grades violate normalization: sum of squares {norm!r}")
        return StateVector([l0, l1])
    if isinstance(f, (Ent, EntDual)):
        x, y = f.left, f.right
        if not (isinstance(x, And) and isinstance(y, And)):
            raise UsageError("entangled operands must be qubit formulas")
        return _pair_state([(x.left, y.left), (x.right, y.right)])
    if isinstance(f, And) and isinstance(f.left, Par) and isinstance(f.right, Par):
        return _pair_state([(f.left.left, f.left.right), (f.right.left, f.right.right)])
    raise UsageError("formula has no state interpretation")


def weak_expectation(i: int, env: GradeEnv) -> float:
    """<i| O_i^dagger O_i |i>, cross-checked against |lambda_i|^2."""
    o = weak_operator(i, env).matrix
    ket = StateVector.basis(i).amplitudes
    via_matrix = complex(np.vdot(ket, o.conj().T @ o @ ket))
    shortcut = abs(env.value(_grade_symbol(env, i))) ** 2
    if abs(via_matrix - shortcut) > 1e-12:
        raise NumericError(f"weak expectation routes disagree: {via_matrix!r} vs {shortcut!r}")
    return float(via_matrix.real)


def cut_probability(i: int, env: GradeEnv) -> float:
    """Expectation of the scaled projector |lambda_i|^2 P_i on basis ket i."""
    l0 = env.value(_grade_symbol(env, 0))
    l1 = env.value(_grade_symbol(env, 1))
    if abs(abs(l0) ** 2 + abs(l1) ** 2 - 1.0) > tolerance():
        raise NumericError("cut probability needs normalized grades")
    lam = (l0, l1)[i]
    op = (abs(lam) ** 2) * projector(i).matrix
    ket = StateVector.basis(i).amplitudes
    return float(np.vdot(ket, op @ ket).real)


# ---------------------------------------------------------------------------
# Bloch sphere


class BlochPoint:
    __slots__ = ("theta", "phi")

    def __init__(self, theta: float, phi: float):
        if not (-tolerance() <= theta <= math.pi + tolerance()):
            raise UsageError("theta must lie in [0, pi]")
        self.theta = float(min(max(theta, 0.0), math.pi))
        self.phi = float(phi) % (2 * math.pi)

    def __repr__(self) -> str:
        return f"BlochPoint(theta={self.theta!r}, phi={self.phi!r})"


def to_bloch(s: StateVector) -> BlochPoint:
    if s.dim != 2:
        raise UsageError("Bloch coordinates need a single qubit")
    a, b = s.amplitudes
    theta = 2.0 * math.atan2(abs(b), abs(a))
    tol = tolerance()
    if abs(a) <= tol or abs(b) <= tol:
        phi = 0.0
    else:
        phi = (np.angle(b) - np.angle(a)) % (2 * math.pi)
    return BlochPoint(theta, phi)


def from_bloch(p: BlochPoint) -> StateVector:
    return StateVector([math.cos(p.theta / 2), np.exp(1j * p.phi) * math.sin(p.theta / 2)])


StateOrOperator = Union[StateVector, Operator]
