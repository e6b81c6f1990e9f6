"""Quantum logic gates on registers and the qumix pre-orders.

Gates act on the last qubit of a register (negation and its square root)
or on the last qubits of two registers plus a target (the Petri-Toffoli
gate). The exact check of the square-root identity uses sympy matrices
with Gaussian rational entries so no rounding is involved.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import sympy

from .config import tolerance
from .errors import UsageError
from .hilbert import DensityOperator, Operator, StateVector, tensor

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SQRT_X = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)


def _on_last(n: int, u: np.ndarray) -> np.ndarray:
    if n < 1:
        raise UsageError("a register needs at least one qubit")
    return np.kron(np.eye(2 ** (n - 1)), u)


@lru_cache(maxsize=None)
def not_gate(n: int) -> Operator:
    """Negation of the last qubit of an n-qubit register."""
    return Operator(_on_last(n, _X), "unitary")


@lru_cache(maxsize=None)
def sqrt_not_gate(n: int) -> Operator:
    return Operator(_on_last(n, _SQRT_X), "unitary")


@lru_cache(maxsize=None)
def petri_toffoli_gate(n: int, m: int) -> Operator:
    """|x, y, z> -> |x, y, x_n y_m xor z> on n + m + 1 qubits."""
    if n < 1 or m < 1:
        raise UsageError("Petri-Toffoli registers need at least one qubit each")
    total = n + m + 1
    dim = 2 ** total
    mat = np.zeros((dim, dim), dtype=complex)
    for index in range(dim):
        z = index & 1
        y_last = (index >> 1) & 1
        x_last = (index >> (m + 1)) & 1
        out = (index & ~1) | ((x_last & y_last) ^ z)
        mat[out, index] = 1.0
    return Operator(mat, "unitary")


def _register(s: StateVector) -> int:
    return s.qubits


def gate_apply(gate: str, *args: StateVector) -> StateVector:
    """Apply NOT, SQRT_NOT, PETRI_TOFFOLI, AND or OR to states."""
    if gate in ("NOT", "SQRT_NOT"):
        if len(args) != 1:
            raise UsageError(f"{gate} takes one state")
        (s,) = args
        op = not_gate(_register(s)) if gate == "NOT" else sqrt_not_gate(_register(s))
        return StateVector(op.apply(s))
    if gate == "PETRI_TOFFOLI":
        if len(args) != 3 or args[2].dim != 2:
            raise UsageError("PETRI_TOFFOLI takes two registers and one target qubit")
        x, y, z = args
        op = petri_toffoli_gate(_register(x), _register(y))
        return StateVector(op.apply(tensor(tensor(x, y), z)))
    if gate == "AND":
        if len(args) != 2:
            raise UsageError("AND takes two states")
        x, y = args
        return gate_apply("PETRI_TOFFOLI", x, y, StateVector.basis(0))
    if gate == "OR":
        if len(args) != 2:
            raise UsageError("OR takes two states")
        x, y = args
        inner = gate_apply("AND", gate_apply("NOT", x), gate_apply("NOT", y))
        return gate_apply("NOT", inner)
    raise UsageError(f"unknown gate {gate!r}")


# ---------------------------------------------------------------------------
# Exact arithmetic


def exact_not(n: int) -> sympy.Matrix:
    x = sympy.Matrix([[0, 1], [1, 0]])
    return sympy.kronecker_product(sympy.eye(2 ** (n - 1)), x) if n > 1 else x


def exact_sqrt_not(n: int) -> sympy.Matrix:
    half = sympy.Rational(1, 2)
    s = sympy.Matrix([[half + half * sympy.I, half - half * sympy.I],
                      [half - half * sympy.I, half + half * sympy.I]])
    return sympy.kronecker_product(sympy.eye(2 ** (n - 1)), s) if n > 1 else s


def exact_sqrt_not_squared_is_not(n: int) -> bool:
    """Entrywise-exact check of SQRT_NOT(SQRT_NOT(e)) = NOT(e) on every basis ket."""
    s, x = exact_sqrt_not(n), exact_not(n)
    for k in range(2 ** n):
        e = sympy.zeros(2 ** n, 1)
        e[k] = 1
        lhs = (s * (s * e)).applyfunc(sympy.expand)
        if lhs != x * e:
            return False
    return True


# ---------------------------------------------------------------------------
# Qumixes


def qumix_prob(rho: DensityOperator) -> float:
    """Probability that the last qubit is 1: tr(P1 rho) with P1 on the last qubit."""
    n = rho.dim.bit_length() - 1
    p1 = _on_last(n, np.diag([0.0, 1.0]).astype(complex))
    return float(np.trace(p1 @ rho.matrix).real)


def sqrt_not_density(rho: DensityOperator) -> DensityOperator:
    u = sqrt_not_gate(rho.dim.bit_length() - 1).matrix
    return DensityOperator(u @ rho.matrix @ u.conj().T)


def pre_order(kind: str, rho: DensityOperator, sigma: DensityOperator) -> bool:
    """Weak: p(rho) <= p(sigma). Strong adds p(sqrtNOT sigma) <= p(sqrtNOT rho)."""
    if rho.dim != sigma.dim:
        raise UsageError("pre-order compares qumixes of the same register")
    tol = tolerance()
    weak = qumix_prob(rho) <= qumix_prob(sigma) + tol
    if kind == "weak":
        return weak
    if kind == "strong":
        return weak and qumix_prob(sqrt_not_density(sigma)) <= qumix_prob(sqrt_not_density(rho)) + tol
    raise UsageError(f"unknown pre-order {kind!r}")


def basis_states(n: int):
    for bits in itertools.product((0, 1), repeat=n):
        index = int("".join(map(str, bits)), 2) if bits else 0
        yield StateVector.basis(index, 2 ** n)
