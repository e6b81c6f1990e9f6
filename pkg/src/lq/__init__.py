"""Graded sequent calculi for qubits: parser, proof checker, evaluator,
Hilbert-space interpretation and finite lattice auditor."""

__version__ = "0.1.0"
