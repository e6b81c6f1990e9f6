"""Finite lattices: order validation, bounds, law audits and Hasse export.

Meets and joins always come from the order (greatest lower bound and
least upper bound). Operator payloads ride along so the matrix-level
operations can be cross-checked against the order, but they never decide
the lattice structure.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .config import tolerance
from .errors import NumericError, UsageError
from .evaluation import GradeEnv
from .hilbert import Operator, projector, weak_expectation

LAWS = ("complemented", "orthocomplemented", "modular", "orthomodular", "distributive")


class FiniteLattice:
    """A validated finite lattice whose element ids double as labels."""

    def __init__(
        self,
        name: str,
        elements: Sequence[str],
        leq: Callable[[str, str], bool] | Iterable[tuple[str, str]],
        ortho: Optional[Mapping[str, str]] = None,
        payloads: Optional[Mapping[str, Operator]] = None,
        components: Optional[Mapping[str, tuple]] = None,
    ):
        self.name = name
        self.elements = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise UsageError("lattice elements must be distinct")
        index = {e: k for k, e in enumerate(self.elements)}
        if callable(leq):
            rel = {(a, b) for a in self.elements for b in self.elements if a == b or leq(a, b)}
        else:
            rel = set(leq) | {(a, a) for a in self.elements}
            for a, b in rel:
                if a not in index or b not in index:
                    raise UsageError(f"order mentions unknown element {a if a not in index else b!r}")
        self._leq = frozenset(rel)
        self._validate_order()
        self._meet = {}
        self._join = {}
        for a in self.elements:
            for b in self.elements:
                self._meet[a, b] = self._bound(a, b, lower=True)
                self._join[a, b] = self._bound(a, b, lower=False)
        self.bottom = next(e for e in self.elements if all(self.leq(e, x) for x in self.elements))
        self.top = next(e for e in self.elements if all(self.leq(x, e) for x in self.elements))
        self.ortho = dict(ortho) if ortho is not None else None
        if self.ortho is not None:
            self._validate_ortho()
        self.payloads = dict(payloads or {})
        self.components = dict(components or {})

    # -- order ------------------------------------------------------------------

    def leq(self, a: str, b: str) -> bool:
        return (a, b) in self._leq

    def _validate_order(self):
        els = self.elements
        for a in els:
            for b in els:
                if a != b and self.leq(a, b) and self.leq(b, a):
                    raise UsageError(f"order is not antisymmetric on ({a}, {b})")
        for a, b, c in itertools.product(els, repeat=3):
            if self.leq(a, b) and self.leq(b, c) and not self.leq(a, c):
                raise UsageError(f"order is not transitive on ({a}, {b}, {c})")

    def _bound(self, a: str, b: str, lower: bool) -> str:
        if lower:
            cands = [x for x in self.elements if self.leq(x, a) and self.leq(x, b)]
            best = [x for x in cands if all(self.leq(y, x) for y in cands)]
        else:
            cands = [x for x in self.elements if self.leq(a, x) and self.leq(b, x)]
            best = [x for x in cands if all(self.leq(x, y) for y in cands)]
        if len(best) != 1:
            kind = "greatest lower" if lower else "least upper"
            raise UsageError(f"pair ({a}, {b}) has no {kind} bound")
        return best[0]

    def _validate_ortho(self):
        for a in self.elements:
            if a not in self.ortho or self.ortho[a] not in self.elements:
                raise UsageError(f"orthocomplement undefined on {a!r}")
            if self.ortho[self.ortho[a]] != a:
                raise UsageError(f"orthocomplement is not involutive on {a!r}")
        for a in self.elements:
            for b in self.elements:
                if self.leq(a, b) and not self.leq(self.ortho[b], self.ortho[a]):
                    raise UsageError(f"orthocomplement does not reverse the order on ({a}, {b})")

    def meet(self, a: str, b: str) -> str:
        return self._meet[a, b]

    def join(self, a: str, b: str) -> str:
        return self._join[a, b]

    def covers(self) -> list[tuple[str, str]]:
        """Cover pairs (lower, upper) of the order, sorted by label."""
        out = []
        for a in self.elements:
            for b in self.elements:
                if a == b or not self.leq(a, b):
                    continue
                if any(c not in (a, b) and self.leq(a, c) and self.leq(c, b) for c in self.elements):
                    continue
                out.append((a, b))
        return sorted(out)

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        return f"FiniteLattice({self.name!r}, {list(self.elements)!r})"


# ---------------------------------------------------------------------------
# Subspace arithmetic for projector lattices


def _range_basis(m: np.ndarray) -> np.ndarray:
    if not m.size:
        return m
    u, s, _ = np.linalg.svd(m)
    rank = int(np.sum(s > 1e-9))
    return u[:, :rank]


def _proj_from(basis: np.ndarray, dim: int) -> np.ndarray:
    if basis.shape[1] == 0:
        return np.zeros((dim, dim), dtype=complex)
    q = _range_basis(basis)
    return q @ q.conj().T


def span_projector(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return _proj_from(np.hstack([_range_basis(p), _range_basis(q)]), p.shape[0])


def intersect_projector(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    eye = np.eye(p.shape[0], dtype=complex)
    return eye - span_projector(eye - p, eye - q)


def _subspace_leq(p: np.ndarray, q: np.ndarray) -> bool:
    return bool(np.allclose(q @ p, p, atol=1e-9, rtol=0))


def _same(p: np.ndarray, q: np.ndarray) -> bool:
    return bool(np.allclose(p, q, atol=1e-9, rtol=0))


def _projector_lattice(name: str, named: list[tuple[str, np.ndarray]]) -> FiniteLattice:
    mats = dict(named)
    ortho = {}
    for a, pa in named:
        comp = np.eye(pa.shape[0]) - pa
        ortho[a] = next(b for b, pb in named if _same(pb, comp))
    return FiniteLattice(
        name,
        [n for n, _ in named],
        lambda a, b: _subspace_leq(mats[a], mats[b]),
        ortho=ortho,
        payloads={n: Operator(m, "projector") for n, m in named},
    )


def build_proj2() -> FiniteLattice:
    return _projector_lattice("proj2", [
        ("0", np.zeros((2, 2))),
        ("P0", projector(0).matrix),
        ("P1", projector(1).matrix),
        ("I", np.eye(2)),
    ])


def plus_projector() -> np.ndarray:
    v = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return np.outer(v, v).astype(complex)


def build_proj_closure(projectors: Optional[Sequence[tuple[str, np.ndarray]]] = None) -> FiniteLattice:
    """Close a set of projectors under intersection, span and complement.

    Complements of generators are added because the result is audited as an
    orthocomplemented lattice; a new complement is named after its
    generator with a trailing ``^``.
    """
    if projectors is None:
        projectors = [("P0", projector(0).matrix), ("P1", projector(1).matrix), ("P+", plus_projector())]
    gens = [(n, np.asarray(m, dtype=complex)) for n, m in projectors]
    dim = gens[0][1].shape[0]
    for n, m in gens:
        if m.shape != (dim, dim) or not (np.allclose(m @ m, m, atol=1e-9) and np.allclose(m.conj().T, m, atol=1e-9)):
            raise UsageError(f"{n} is not a projector of dimension {dim}")
    found: list[tuple[str, np.ndarray]] = [("0", np.zeros((dim, dim), dtype=complex))]

    def add(name: str, m: np.ndarray) -> str:
        for n, p in found:
            if _same(p, m):
                return n
        found.append((name, m))
        return name

    for n, m in gens:
        add(n, m)
    add("I", np.eye(dim, dtype=complex))
    changed = True
    while changed:
        changed = False
        snapshot = list(found)
        for n, m in snapshot:
            before = len(found)
            add(n + "^", np.eye(dim) - m)
            changed |= len(found) != before
        for (a, pa), (b, pb) in itertools.combinations(snapshot, 2):
            before = len(found)
            add(f"({a} & {b})", intersect_projector(pa, pb))
            add(f"({a} v {b})", span_projector(pa, pb))
            changed |= len(found) != before
        if len(found) > 64:
            raise UsageError("projector closure exceeds 64 elements")
    # Bottom first, top last, generated elements in discovery order.
    top = next(x for x in found if x[0] == "I")
    ordered = [x for x in found if x[0] != "I"] + [top]
    return _projector_lattice("proj_closure", ordered)


def build_benzene(p: Optional[np.ndarray] = None, q: Optional[np.ndarray] = None) -> FiniteLattice:
    """Hexagon {0, P, Q, Q^, P^, I} for two orthogonal projectors P and Q.

    The default pair is P0 x P0 and P0 x P1 on two qubits; the six
    subspaces are distinct because P + Q is not the identity.
    """
    if p is None:
        p = np.diag([1.0, 0.0, 0.0, 0.0])
    if q is None:
        q = np.diag([0.0, 1.0, 0.0, 0.0])
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    tol = 1e-9
    for m in (p, q):
        if not (np.allclose(m @ m, m, atol=tol) and np.allclose(m.conj().T, m, atol=tol)):
            raise UsageError("benzene inputs must be projectors")
    if not np.allclose(p @ q, 0, atol=tol):
        raise UsageError("benzene inputs must be orthogonal (PQ = 0)")
    eye = np.eye(p.shape[0], dtype=complex)
    named = [("0", 0 * eye), ("P", p), ("Q", q), ("Q^", eye - q), ("P^", eye - p), ("I", eye)]
    for (a, ma), (b, mb) in itertools.combinations(named, 2):
        if _same(ma, mb):
            raise UsageError(f"benzene elements {a} and {b} coincide; use a larger space")
    return _projector_lattice("benzene", named)


# ---------------------------------------------------------------------------
# Weak-operator lattices


def _lambdas(env: GradeEnv) -> tuple[complex, complex]:
    if len(env.symbols) < 2:
        raise NumericError("the environment must bind two grades")
    return env.value(env.symbols[0]), env.value(env.symbols[1])


def range_measure(i: int, env: GradeEnv) -> float:
    return weak_expectation(i, env)


def weak_meet(env: GradeEnv, i: int, j: int) -> Operator:
    """Scaled product O_i O_j / (sqrt(l_i) sqrt(l_j)) with principal roots."""
    lam = _lambdas(env)
    oi = lam[i] * projector(i).matrix
    oj = lam[j] * projector(j).matrix
    prod = oi @ oj
    if i != j:
        return Operator(prod, "general")
    if abs(lam[i]) <= tolerance():
        raise NumericError(f"grade {i} is zero; the scaled meet is undefined")
    denom = np.sqrt(complex(lam[i])) * np.sqrt(complex(lam[j]))
    return Operator(prod / denom, "general")


def weak_join(env: GradeEnv, i: int, j: int) -> Operator:
    """The sum minus the scaled meet."""
    lam = _lambdas(env)
    total = lam[i] * projector(i).matrix + lam[j] * projector(j).matrix
    return Operator(total - weak_meet(env, i, j).matrix, "general")


def build_lq2(env: GradeEnv) -> FiniteLattice:
    lam = _lambdas(env)
    o0 = lam[0] * projector(0).matrix
    o1 = lam[1] * projector(1).matrix
    order = {("0", "O0"), ("0", "O1"), ("0", "I"), ("O0", "I"), ("O1", "I")}
    return FiniteLattice(
        "lq2",
        ["0", "O0", "O1", "I"],
        order,
        ortho={"0": "I", "I": "0", "O0": "O1", "O1": "O0"},
        payloads={
            "0": Operator(np.zeros((2, 2)), "general"),
            "O0": Operator(o0, "weak"),
            "O1": Operator(o1, "weak"),
            "I": Operator(o0 + o1, "general"),
        },
        components={"0": (), "O0": (0,), "O1": (1,), "I": (0, 1)},
    )


def _measure_below(mu_a: float, mu_b: float) -> bool:
    """Strictly smaller range measure; ties stay incomparable."""
    return mu_a < mu_b - tolerance()


def build_lm2(env: GradeEnv) -> FiniteLattice:
    """Weak operators below the projectors with the same range."""
    lam = _lambdas(env)
    mu = {"O0": range_measure(0, env), "O1": range_measure(1, env), "P0": 1.0, "P1": 1.0}
    rng = {"O0": 0, "O1": 1, "P0": 0, "P1": 1}
    els = ["0", "O0", "O1", "P0", "P1", "I2"]

    def leq(a: str, b: str) -> bool:
        if a == "0" or b == "I2":
            return True
        if a == "I2" or b == "0":
            return False
        return rng[a] == rng[b] and _measure_below(mu[a], mu[b])

    return FiniteLattice(
        "lm2",
        els,
        leq,
        payloads={
            "0": Operator(np.zeros((2, 2)), "general"),
            "O0": Operator(lam[0] * projector(0).matrix, "weak"),
            "O1": Operator(lam[1] * projector(1).matrix, "weak"),
            "P0": projector(0),
            "P1": projector(1),
            "I2": Operator(np.eye(2), "projector"),
        },
        components={"O0": (0,), "O1": (1,)},
    )


DEFAULT_L2Q4 = (
    GradeEnv({"z0": 0.8, "z1": 0.6}),
    GradeEnv({"z0": 0.5, "z1": math.sqrt(0.75)}),
)


def build_l2q4(env: Optional[GradeEnv] = None, env2: Optional[GradeEnv] = None) -> FiniteLattice:
    """Two weak-operator chains on C^4 ordered by range measure.

    ``env`` grades O0, O1 and ``env2`` grades the primed pair. Each operator
    acts on the first tensor factor: O_i = l_i (P_i x I).
    """
    env = env or DEFAULT_L2Q4[0]
    env2 = env2 or DEFAULT_L2Q4[1]
    lam, lam2 = _lambdas(env), _lambdas(env2)
    mu = {
        "O0": range_measure(0, env), "O1": range_measure(1, env),
        "O0'": range_measure(0, env2), "O1'": range_measure(1, env2),
    }
    if mu["O0'"] > mu["O0"] + tolerance():
        raise UsageError("l2q4 needs |l0'|^2 <= |l0|^2; swap the two environments")
    rng = {"O0": 0, "O0'": 0, "O1": 1, "O1'": 1}
    els = ["0", "O0'", "O0", "O1'", "O1", "I4"]

    def leq(a: str, b: str) -> bool:
        if a == "0" or b == "I4":
            return True
        if a == "I4" or b == "0":
            return False
        return rng[a] == rng[b] and _measure_below(mu[a], mu[b])

    eye2 = np.eye(2)

    def embed(c: complex, i: int) -> Operator:
        return Operator(c * np.kron(projector(i).matrix, eye2), "weak")

    return FiniteLattice(
        "l2q4",
        els,
        leq,
        ortho={"0": "I4", "I4": "0", "O0": "O1", "O1": "O0", "O0'": "O1'", "O1'": "O0'"},
        payloads={
            "0": Operator(np.zeros((4, 4)), "general"),
            "O0": embed(lam[0], 0), "O1": embed(lam[1], 1),
            "O0'": embed(lam2[0], 0), "O1'": embed(lam2[1], 1),
            "I4": Operator(np.eye(4), "projector"),
        },
    )


BUILDERS = ("proj2", "proj_closure", "benzene", "lq2", "lm2", "l2q4")


def build(kind: str, env: Optional[GradeEnv] = None, env2: Optional[GradeEnv] = None) -> FiniteLattice:
    if kind == "proj2":
        return build_proj2()
    if kind == "proj_closure":
        return build_proj_closure()
    if kind == "benzene":
        return build_benzene()
    if kind in ("lq2", "lm2"):
        if env is None:
            raise UsageError(f"{kind} needs a grade environment")
        return build_lq2(env) if kind == "lq2" else build_lm2(env)
    if kind == "l2q4":
        return build_l2q4(env, env2)
    raise UsageError(f"unknown lattice builder {kind!r}")


def payload_meet(lat: FiniteLattice, env: GradeEnv, a: str, b: str) -> Optional[np.ndarray]:
    """Matrix-level meet of two payloads, or None where none is defined.

    Weak-operator components meet with the scaled product; a projector
    meets any diagonal payload by plain multiplication.
    """
    if a in lat.components and b in lat.components:
        dim = lat.payloads[a].dim
        total = np.zeros((dim, dim), dtype=complex)
        for i in lat.components[a]:
            for j in lat.components[b]:
                total = total + weak_meet(env, i, j).matrix
        return total
    pa, pb = lat.payloads.get(a), lat.payloads.get(b)
    if pa is None or pb is None:
        return None
    if pa.kind == "projector" or pb.kind == "projector":
        return pa.matrix @ pb.matrix
    return None


def payload_mismatches(lat: FiniteLattice, env: GradeEnv) -> list[tuple[str, str, str]]:
    """Pairs whose matrix-level meet differs from the payload of the order meet."""
    bad = []
    for a in lat.elements:
        for b in lat.elements:
            m = payload_meet(lat, env, a, b)
            target = lat.payloads.get(lat.meet(a, b))
            if m is None or target is None:
                continue
            if not np.allclose(m, target.matrix, atol=1e-9, rtol=0):
                bad.append((a, b, lat.meet(a, b)))
    return bad


# ---------------------------------------------------------------------------
# Law audits


@dataclass(frozen=True)
class LawResult:
    passed: bool
    witness: tuple[str, ...] = ()
    lhs: Optional[str] = None
    rhs: Optional[str] = None
    form: Optional[str] = None
    note: Optional[str] = None

    def to_dict(self) -> dict:
        out: dict = {"pass": self.passed, "witness": list(self.witness)}
        for key in ("lhs", "rhs", "form", "note"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class LawReport:
    lattice: str
    laws: dict = field(default_factory=dict)

    def __getitem__(self, law: str) -> LawResult:
        return self.laws[law]

    def to_dict(self) -> dict:
        return {"lattice": self.lattice, "laws": {k: v.to_dict() for k, v in self.laws.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _sides(lat: FiniteLattice, law: str, w: tuple, form: Optional[str] = None) -> tuple:
    m, j, o = lat.meet, lat.join, lat.ortho
    if law == "distributive":
        a, b, c = w
        if form == "join-over-meet":
            return j(a, m(b, c)), m(j(a, b), j(a, c))
        return m(a, j(b, c)), j(m(a, b), m(a, c))
    if law == "modular":
        a, b, c = w
        return j(a, m(b, c)), m(j(a, b), c)
    if law == "orthomodular":
        a, c = w
        return j(a, m(o[a], c)), c
    raise UsageError(f"law {law!r} has no two-sided form")


def verify_witness(lat: FiniteLattice, law: str, result: LawResult) -> bool:
    """True when substituting the witness gives unequal sides."""
    if law in ("complemented", "orthocomplemented"):
        (a,) = result.witness
        if law == "complemented":
            return not any(lat.meet(a, b) == lat.bottom and lat.join(a, b) == lat.top for b in lat.elements)
        o = lat.ortho[a]
        return lat.meet(a, o) != lat.bottom or lat.join(a, o) != lat.top
    lhs, rhs = _sides(lat, law, result.witness, result.form)
    return lhs != rhs


def check_laws(lat: FiniteLattice) -> LawReport:
    """Exhaustive audit; each failed law records its first counterexample."""
    els = lat.elements
    laws: dict[str, LawResult] = {}

    fail = next((a for a in els if not any(
        lat.meet(a, b) == lat.bottom and lat.join(a, b) == lat.top for b in els)), None)
    laws["complemented"] = LawResult(True) if fail is None else LawResult(False, (fail,))

    no_ortho = "lattice has no orthocomplementation"
    if lat.ortho is None:
        laws["orthocomplemented"] = LawResult(False, note=no_ortho)
    else:
        fail = next((a for a in els if lat.meet(a, lat.ortho[a]) != lat.bottom
                     or lat.join(a, lat.ortho[a]) != lat.top), None)
        laws["orthocomplemented"] = LawResult(True) if fail is None else LawResult(False, (fail,))

    laws["modular"] = LawResult(True)
    for a, b, c in itertools.product(els, repeat=3):
        if lat.leq(a, c):
            lhs, rhs = _sides(lat, "modular", (a, b, c))
            if lhs != rhs:
                laws["modular"] = LawResult(False, (a, b, c), lhs, rhs)
                break

    if lat.ortho is None:
        laws["orthomodular"] = LawResult(False, note=no_ortho)
    else:
        laws["orthomodular"] = LawResult(True)
        for a, c in itertools.product(els, repeat=2):
            if lat.leq(a, c):
                lhs, rhs = _sides(lat, "orthomodular", (a, c))
                if lhs != rhs:
                    laws["orthomodular"] = LawResult(False, (a, c), lhs, rhs)
                    break

    laws["distributive"] = LawResult(True)
    for form in ("meet-over-join", "join-over-meet"):
        hit = None
        for w in itertools.product(els, repeat=3):
            lhs, rhs = _sides(lat, "distributive", w, form)
            if lhs != rhs:
                hit = LawResult(False, w, lhs, rhs, form)
                break
        if hit is not None:
            laws["distributive"] = hit
            break
    return LawReport(lat.name, laws)


def hasse_dot(lat: FiniteLattice) -> str:
    """Graphviz text of the cover relation, bottom element on the sink rank."""
    lines = [f'digraph "{lat.name}" {{', "  edge [dir=back];"]
    for e in sorted(lat.elements):
        lines.append(f'  "{e}";')
    lines.append(f'  {{ rank=source; "{lat.top}"; }}')
    lines.append(f'  {{ rank=sink; "{lat.bottom}"; }}')
    for lower, upper in lat.covers():
        lines.append(f'  "{upper}" -> "{lower}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
