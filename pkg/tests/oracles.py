"""Independent reference computations for frozen test values.

Nothing here imports the package or numpy. Complex arithmetic uses the
builtin ``complex`` type, exact gate arithmetic uses pairs of Fractions,
and lattice bounds are computed from explicit order relations by brute
force. The tests freeze the numbers these functions produce and then
compare the package against the frozen numbers.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

# ---------------------------------------------------------------------------
# Grades, gluing, Meta Data


def md_residuals(z0: complex, z1: complex) -> tuple[float, float]:
    norm = abs(abs(z0) ** 2 + abs(z1) ** 2 - 1.0)
    cross = abs(z0.conjugate() * z1 + z1.conjugate() * z0)
    return norm, cross


def glue_list(z0: complex, z1: complex) -> float:
    """|(z0 + z1)* (z0 + z1)| for a full list on both sides."""
    s = z0 + z1
    return abs(s.conjugate() * s)


def glue_atom(z: complex) -> float:
    return abs(z.conjugate() * z)


def lukasiewicz(x: float, y: float) -> float:
    return max(x + y - 1.0, 0.0)


def goedel(x: float, y: float) -> float:
    return min(x, y)


def product(x: float, y: float) -> float:
    return x * y


def h_value(v0: float, v1: float) -> float:
    return 1.0 - max(1.0 - (v0 + v1), 0.0)


# ---------------------------------------------------------------------------
# States


def probability(amplitudes: list[complex], i: int) -> float:
    return abs(amplitudes[i]) ** 2


def inner(u: list[complex], v: list[complex]) -> complex:
    return sum(a.conjugate() * b for a, b in zip(u, v))


def weak_value_p0(initial: list[complex], final: list[complex]) -> complex:
    projected = [initial[0], 0j]
    return inner(final, projected) / inner(final, initial)


def two_qubit_det(a: list[complex]) -> complex:
    return a[0] * a[3] - a[1] * a[2]


def bloch_angles(a: complex, b: complex) -> tuple[float, float]:
    theta = 2.0 * math.atan2(abs(b), abs(a))
    if abs(a) < 1e-12 or abs(b) < 1e-12:
        return theta, 0.0
    phi = (math.atan2(b.imag, b.real) - math.atan2(a.imag, a.real)) % (2 * math.pi)
    return theta, phi


# ---------------------------------------------------------------------------
# Exact Gaussian rationals for the square root of negation

Gauss = tuple[Fraction, Fraction]


def g_mul(x: Gauss, y: Gauss) -> Gauss:
    return (x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0])


def g_add(x: Gauss, y: Gauss) -> Gauss:
    return (x[0] + y[0], x[1] + y[1])


HALF = Fraction(1, 2)
SQRT_NOT_1 = [
    [(HALF, HALF), (HALF, -HALF)],
    [(HALF, -HALF), (HALF, HALF)],
]


def sqrt_not_on_basis(n: int, index: int) -> list[Gauss]:
    """Exact image of basis ket ``index`` under SQRT_NOT on the last of n qubits."""
    dim = 2 ** n
    zero: Gauss = (Fraction(0), Fraction(0))
    out = [zero] * dim
    last = index & 1
    high = index & ~1
    for bit in (0, 1):
        out[high | bit] = g_add(out[high | bit], SQRT_NOT_1[bit][last])
    return out


def apply_sqrt_not(n: int, vec: list[Gauss]) -> list[Gauss]:
    dim = 2 ** n
    zero: Gauss = (Fraction(0), Fraction(0))
    out = [zero] * dim
    for index, amp in enumerate(vec):
        image = sqrt_not_on_basis(n, index)
        for k in range(dim):
            out[k] = g_add(out[k], g_mul(amp, image[k]))
    return out


# ---------------------------------------------------------------------------
# Lattices from explicit orders


def closure(elements: list[str], covers: list[tuple[str, str]]) -> set[tuple[str, str]]:
    rel = {(a, a) for a in elements} | set(covers)
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(rel), repeat=2):
            if b == c and (a, d) not in rel:
                rel.add((a, d))
                changed = True
    return rel


def glb(rel, elements, a, b):
    lower = [x for x in elements if (x, a) in rel and (x, b) in rel]
    return next(x for x in lower if all((y, x) in rel for y in lower))


def lub(rel, elements, a, b):
    upper = [x for x in elements if (a, x) in rel and (b, x) in rel]
    return next(x for x in upper if all((x, y) in rel for y in upper))


def distributive_sides(rel, elements, a, b, c) -> tuple[str, str]:
    lhs = glb(rel, elements, a, lub(rel, elements, b, c))
    rhs = lub(rel, elements, glb(rel, elements, a, b), glb(rel, elements, a, c))
    return lhs, rhs


def first_distributive_failure(rel, elements):
    for a, b, c in itertools.product(elements, repeat=3):
        lhs, rhs = distributive_sides(rel, elements, a, b, c)
        if lhs != rhs:
            return (a, b, c), lhs, rhs
    return None


def orthomodular_holds(rel, elements, ortho) -> bool:
    for a, c in itertools.product(elements, repeat=2):
        if (a, c) in rel:
            if lub(rel, elements, a, glb(rel, elements, ortho[a], c)) != c:
                return False
    return True


def modular_holds(rel, elements) -> bool:
    for a, b, c in itertools.product(elements, repeat=3):
        if (a, c) in rel:
            if lub(rel, elements, a, glb(rel, elements, b, c)) != glb(rel, elements, lub(rel, elements, a, b), c):
                return False
    return True


# Orders written down by hand from the subspace and range-measure
# definitions; the tests compare the package's covers with these.
PROJ2 = (["0", "P0", "P1", "I"], [("0", "P0"), ("0", "P1"), ("P0", "I"), ("P1", "I")])
LQ2 = (["0", "O0", "O1", "I"], [("0", "O0"), ("0", "O1"), ("O0", "I"), ("O1", "I")])
LM2 = (
    ["0", "O0", "O1", "P0", "P1", "I2"],
    [("0", "O0"), ("0", "O1"), ("O0", "P0"), ("O1", "P1"), ("P0", "I2"), ("P1", "I2")],
)
L2Q4 = (
    ["0", "O0'", "O0", "O1'", "O1", "I4"],
    [("0", "O0'"), ("O0'", "O0"), ("O0", "I4"), ("0", "O1"), ("O1", "O1'"), ("O1'", "I4")],
)
MO3 = (
    ["0", "P0", "P1", "P+", "P+^", "I"],
    [("0", x) for x in ("P0", "P1", "P+", "P+^")] + [(x, "I") for x in ("P0", "P1", "P+", "P+^")],
)
