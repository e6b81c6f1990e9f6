"""Bounded cut-free backward search."""

from __future__ import annotations

import pytest

from lq.calculus import check_derivation
from lq.errors import UsageError
from lq.search import MAX_DEPTH, Exhausted, bounded_search
from lq.syntax import Derivation, DeclarationSet, parse_sequent

DECLS = DeclarationSet.default()


def goal(text):
    return parse_sequent(text, DECLS)


def test_identity_is_found_at_depth_one():
    d = bounded_search("B", goal("p0 |- p0"), 1)
    assert isinstance(d, Derivation)
    assert [s.rule for s in d.steps] == ["id-axiom"]


@pytest.mark.parametrize("text", ["Q_A @ Q_A |- Q_A", "Q_A |- Q_A @ Q_A"])
def test_idempotence_goals_exhaust_without_structural_rules(text):
    result = bounded_search("L2q", goal(text), 8)
    assert isinstance(result, Exhausted)
    assert str(result) == "exhausted(8)"


@pytest.mark.parametrize("text", ["Q_A @ Q_A |- Q_A", "Q_A |- Q_A @ Q_A"])
def test_idempotence_goals_are_found_with_weakening_and_contraction(text):
    d = bounded_search("L2q+weakening+contraction", goal(text), 8)
    assert isinstance(d, Derivation)
    assert check_derivation("L2q+weakening+contraction", d).accepted
    assert d.steps[-1].sequent == goal(text)


def test_commutativity_needs_exchange():
    text = "Q_A @ Q_B |- Q_B @ Q_A"
    assert isinstance(bounded_search("L2q", goal(text), 6), Exhausted)
    d = bounded_search("L2q+exchange", goal(text), 6)
    assert isinstance(d, Derivation)
    assert any(s.rule.startswith("exch") for s in d.steps)


def test_found_proofs_contain_no_cut():
    d = bounded_search("L2q+weakening+contraction", goal("Q_A |- Q_A @ Q_A"), 8)
    assert not {s.rule for s in d.steps} & {"cut", "qcut", "epr"}


def test_search_is_deterministic():
    g = goal("Q_A @ Q_B |- Q_B @ Q_A")
    assert bounded_search("L2q+exchange", g, 6) == bounded_search("L2q+exchange", g, 6)


def test_depth_is_capped():
    with pytest.raises(UsageError):
        bounded_search("L2q", goal("p0 |- p0"), MAX_DEPTH + 1)
    with pytest.raises(UsageError):
        bounded_search("L2q", goal("p0 |- p0"), -1)


def test_unprovable_goal_exhausts():
    assert isinstance(bounded_search("B", goal("p0 |- p1"), 4), Exhausted)
